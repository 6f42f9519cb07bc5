//! Task execution.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use chainqed_core::dynamics::{
    eom_identity_report, propagate, verify_compact_form, ModeState, ProductState, COMPACT_METRIC,
    IDENTITY_METRIC,
};
use chainqed_core::hamiltonian::{Generator, Operators, SystemParams};
use chainqed_core::hilbert::{build_space, SpaceSpec};
use chainqed_core::meanfield::{
    mf_propagate, volterra_diagnostics, FieldTreatment, MeanFieldState, VolterraSettings,
};
use chainqed_core::trajectory::Trajectory;
use chainqed_core::transition_ops::{check_algebra_closure, check_pauli_isomorphism};
use chainqed_core::C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{config_hash, Config, OutputFormat, Task};
use crate::export::{write_csv, write_json};
use crate::report::{Check, PointSummary, Report};

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub workers: usize,
    /// Overrides the seed from the configuration.
    pub seed: Option<u64>,
}

/// Validates the configuration, runs the task, writes `report.json` into the
/// output directory and returns the report.
pub fn run(cfg: &Config, config_text: &str, task: Task, opts: &RunOptions) -> Result<Report> {
    cfg.validate(task)?;
    std::fs::create_dir_all(&opts.out_dir).with_context(|| format!("creating {}", opts.out_dir.display()))?;
    let seed = opts.seed.unwrap_or(cfg.seed);
    let start = Instant::now();
    let mut report = match task {
        Task::Sweep => run_sweep(cfg, seed, opts)?,
        t => run_task(cfg, t, seed, &opts.out_dir)?,
    };
    report.config_hash = config_hash(config_text);
    report.timing_seconds = start.elapsed().as_secs_f64();
    report.finalize();
    report.write(&opts.out_dir.join("report.json"))?;
    Ok(report)
}

fn save(traj: &Trajectory, stem: &str, cfg: &Config, dir: &Path, report: &mut Report) -> Result<()> {
    let fmt = cfg.output.format;
    if matches!(fmt, OutputFormat::Csv | OutputFormat::Both) {
        let name = format!("{stem}.csv");
        write_csv(traj, &dir.join(&name))?;
        report.files.push(name);
    }
    if matches!(fmt, OutputFormat::Json | OutputFormat::Both) {
        let name = format!("{stem}.json");
        write_json(traj, &dir.join(&name))?;
        report.files.push(name);
    }
    Ok(())
}

fn space_spec(cfg: &Config) -> SpaceSpec {
    cfg.space.spec()
}

/// Site-only space with a classical field `a_k(t) = α_k e^{−iω_k t}`.
fn classical_amplitudes(cfg: &Config) -> Option<Vec<C64>> {
    match &cfg.meanfield.field {
        FieldTreatment::Prescribed(a) if cfg.classical_drive() => {
            Some(a.iter().map(|[re, im]| C64::new(*re, *im)).collect())
        }
        _ => None,
    }
}

fn exact_trajectory(cfg: &Config, report: &mut Report) -> Result<Trajectory> {
    let space = build_space(&space_spec(cfg))?;
    let ops = Operators::new(&space);
    let generator = match classical_amplitudes(cfg) {
        Some(amps) => Generator::classical_drive(&ops, &cfg.params, &amps),
        None => Generator::from_model(&ops, &cfg.params),
    };
    let mut init = cfg.initial_state();
    if ops.field.is_empty() {
        init.field.clear();
    }
    let psi0 = init.build(&space)?;
    let traj = propagate(&ops, &generator, &psi0, &cfg.propagation.settings())?;
    report.check(Check::at_most("norm_drift", traj.meta.max_norm_drift, cfg.checks.norm_tolerance));
    report.metric("max_top_population", traj.meta.max_top_population);
    report.metric("steps_accepted", traj.meta.steps_accepted as f64);
    report.metric("hilbert_dimension", space.dim() as f64);
    if traj.meta.truncation_flagged {
        report.flags.push(format!(
            "truncation: top Fock population reached {:e}",
            traj.meta.max_top_population
        ));
    }
    Ok(traj)
}

fn mean_field_initial(cfg: &Config) -> MeanFieldState {
    let init = cfg.initial_state();
    let n_modes = cfg.params.field_modes.len();
    let field = if init.field.len() == n_modes {
        init.field.clone()
    } else {
        vec![ModeState::Vacuum; n_modes]
    };
    let mut mf = MeanFieldState::from_product(&ProductState {
        sites: init.sites.clone(),
        field,
        phonons: init.phonons.clone(),
    });
    if let FieldTreatment::Prescribed(a) = &cfg.meanfield.field {
        for (slot, [re, im]) in mf.field.iter_mut().zip(a) {
            let v = C64::new(*re, *im);
            *slot = [v, v.conj()];
        }
    }
    mf
}

fn mean_field_trajectory(cfg: &Config, report: &mut Report) -> Result<Trajectory> {
    let mf0 = mean_field_initial(cfg);
    let traj = mf_propagate(&mf0, &cfg.params, &cfg.meanfield.field, &cfg.propagation.settings())?;
    report.check(Check::at_most(
        "bloch_invariant_drift",
        traj.meta.max_invariant_drift.unwrap_or(0.0),
        cfg.checks.invariant_tolerance,
    ));
    Ok(traj)
}

/// The configured parameters followed by `random_draws` seeded draws with the
/// same boundary and coupling conventions.
fn parameter_draws(cfg: &Config, seed: u64) -> Vec<SystemParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![cfg.params.clone()];
    for _ in 0..cfg.checks.random_draws {
        let mut p = SystemParams::random(
            cfg.space.n_sites,
            cfg.space.field_cutoffs.len(),
            cfg.space.phonon_cutoffs.len(),
            &mut rng,
        );
        p.boundary = cfg.params.boundary;
        p.coupling_mode = cfg.params.coupling_mode;
        out.push(p);
    }
    out
}

/// Runs a single (non-sweep) task, writing its files into `dir`.
pub fn run_task(cfg: &Config, task: Task, seed: u64, dir: &Path) -> Result<Report> {
    let mut report = Report::new(task.name(), seed);
    match task {
        Task::Propagate => {
            let traj = exact_trajectory(cfg, &mut report)?;
            save(&traj, "trajectory", cfg, dir, &mut report)?;
        }
        Task::VerifyEom => {
            let space = build_space(&space_spec(cfg))?;
            let ops = Operators::new(&space);
            let algebra = check_algebra_closure(&ops.sites[0]);
            report.check(Check::at_most("algebra_closure", algebra.max_residual, 1e-13));
            let pauli = check_pauli_isomorphism(&ops.sites[0]);
            report.check(Check::at_most("pauli_isomorphism", pauli.max_residual, 1e-13));
            let mut worst: f64 = 0.0;
            for (i, p) in parameter_draws(cfg, seed).iter().enumerate() {
                let mut draw_max: f64 = 0.0;
                for &t in &cfg.checks.times {
                    draw_max = draw_max.max(eom_identity_report(&ops, p, t).max_residual());
                }
                report.metric(format!("eom_residual_draw_{i:03}"), draw_max);
                worst = worst.max(draw_max);
            }
            report.check(Check::at_most("eom_identity", worst, cfg.checks.eom_tolerance));
        }
        Task::VerifyCompact => {
            let space = build_space(&space_spec(cfg))?;
            let ops = Operators::new(&space);
            let (mut worst, mut control): (f64, f64) = (0.0, f64::INFINITY);
            for p in parameter_draws(cfg, seed) {
                for &t in &cfg.checks.times {
                    worst = worst.max(verify_compact_form(&ops, &p, t, COMPACT_METRIC).max_residual());
                    control = control.min(verify_compact_form(&ops, &p, t, IDENTITY_METRIC).max_residual());
                }
            }
            report.check(Check::at_most("compact_form", worst, cfg.checks.compact_tolerance));
            report.check(Check::exceeds("identity_metric_control", control, cfg.checks.control_threshold));
        }
        Task::Meanfield => {
            let traj = mean_field_trajectory(cfg, &mut report)?;
            save(&traj, "meanfield", cfg, dir, &mut report)?;
            if cfg.meanfield.diagnostics {
                let settings = VolterraSettings {
                    t_end: cfg.propagation.t_end,
                    dt_out: cfg.propagation.dt_out,
                    ..Default::default()
                };
                let d = volterra_diagnostics(&mean_field_initial(cfg), &cfg.params, &cfg.meanfield.field, &settings)?;
                report.metric("lyapunov", d.lyapunov);
                report.metric("lyapunov_stderr", d.lyapunov_stderr);
                let flat = d.flatness.iter().map(|(_, f)| *f).fold(0.0, f64::max);
                report.metric("max_spectral_flatness", flat);
                report.flags.push(format!("regime: {:?}", d.regime).to_lowercase());
            }
        }
        Task::Compare => {
            let exact = exact_trajectory(cfg, &mut report)?;
            let mf = mean_field_trajectory(cfg, &mut report)?;
            let mut worst: f64 = 0.0;
            for l in 0..cfg.space.n_sites {
                let col = format!("s{l}_z");
                let a = exact.column(&col).context("exact trajectory lacks site column")?;
                let b = mf.column(&col).context("mean-field trajectory lacks site column")?;
                let dev = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
                report.metric(format!("max_sz_deviation_site_{l}"), dev);
                worst = worst.max(dev);
            }
            report.check(Check::at_most("meanfield_vs_exact_sz", worst, cfg.checks.compare_tolerance));
            save(&exact, "exact", cfg, dir, &mut report)?;
            save(&mf, "meanfield", cfg, dir, &mut report)?;
        }
        Task::Sweep => anyhow::bail!("nested sweeps are not supported"),
    }
    report.finalize();
    Ok(report)
}

fn run_sweep(cfg: &Config, seed: u64, opts: &RunOptions) -> Result<Report> {
    let sweep = cfg.sweep.as_ref().context("sweep section missing")?;
    let grid = sweep.grid();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.max(1))
        .build()
        .context("building worker pool")?;
    log::info!("sweep over {} points with {} workers", grid.len(), opts.workers.max(1));
    let points: Vec<PointSummary> = pool.install(|| {
        grid.par_iter()
            .enumerate()
            .map(|(i, values)| {
                let dir_name = format!("point_{i:03}");
                let dir = opts.out_dir.join(&dir_name);
                let mut point_cfg = cfg.clone();
                point_cfg.sweep = None;
                let mut labels = BTreeMap::new();
                for (axis, &v) in sweep.axes.iter().zip(values) {
                    axis.parameter.apply(&mut point_cfg.params, v);
                    labels.insert(axis.parameter.label(), v);
                }
                let outcome = std::fs::create_dir_all(&dir)
                    .map_err(anyhow::Error::from)
                    .and_then(|_| {
                        point_cfg.validate(sweep.base_task)?;
                        run_task(&point_cfg, sweep.base_task, seed, &dir)
                    })
                    .and_then(|mut r| {
                        r.finalize();
                        r.write(&dir.join("report.json"))?;
                        Ok(r)
                    });
                match outcome {
                    Ok(r) => PointSummary {
                        index: i,
                        values: labels,
                        dir: dir_name,
                        passed: r.passed,
                        error: None,
                    },
                    Err(e) => PointSummary {
                        index: i,
                        values: labels,
                        dir: dir_name,
                        passed: false,
                        error: Some(format!("{e:#}")),
                    },
                }
            })
            .collect()
    });
    let mut report = Report::new(Task::Sweep.name(), seed);
    report.metric("points", points.len() as f64);
    report.points = points;
    Ok(report)
}
