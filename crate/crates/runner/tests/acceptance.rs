//! Acceptance gate. Every criterion prints one PASS/FAIL line with its
//! measured value, tolerance and runtime; the process exits non-zero when any
//! criterion fails.

use std::f64::consts::PI;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use chainqed_core::dynamics::{
    commutator_rhs, ehrenfest_check, eom_identity_report, memory_kernel, phonon_correction_direct,
    propagate, verify_compact_form, Branch, ModeState, Observable, ProductState, PropagateSettings,
    SiteState, COMPACT_METRIC, IDENTITY_METRIC,
};
use chainqed_core::hamiltonian::{build_hcp, Generator, Operators, SystemParams};
use chainqed_core::hilbert::{build_space, SpaceSpec};
use chainqed_core::meanfield::{mf_propagate, rabi_oracle, FieldTreatment, MeanFieldState};
use chainqed_core::transition_ops::{check_algebra_closure, check_pauli_isomorphism, exact_named_relations};
use chainqed_core::C64;
use chainqed_runner::{run, Config, RunOptions, Task};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ALGEBRA_TOL: f64 = 1e-13;
const PAULI_TOL: f64 = 1e-13;
const EOM_TOL: f64 = 1e-11;
const COMPACT_TOL: f64 = 1e-10;
const CONTROL_MIN: f64 = 1e-3;
const EHRENFEST_TOL: f64 = 1e-5;
const CONSERVATION_TOL: f64 = 1e-8;
const INVERSION_TOL: f64 = 1e-9;
const RABI_INVERSION_TOL: f64 = 0.01;
const RABI_DETUNED_REL_TOL: f64 = 0.02;
const CLOSURE_GAP_TOL: f64 = 0.05;
const KERNEL_TOL: f64 = 1e-8;
const DIRECT_TOL: f64 = 1e-12;
const MF_INVARIANT_TOL: f64 = 1e-8;

/// Seed of the random parameter draws in criteria 3, 4, 9 and 10.
const DRAW_SEED: u64 = 20_240_917;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn draws(n: usize, nf: usize, nph: usize, count: usize) -> Vec<SystemParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(DRAW_SEED);
    (0..count).map(|_| SystemParams::random(n, nf, nph, &mut rng)).collect()
}

fn c1_algebra() -> Outcome {
    let space = build_space(&SpaceSpec::new(2, &[4], &[])).unwrap();
    let ops = Operators::new(&space);
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for site in &ops.sites {
        let r = check_algebra_closure(site);
        worst = worst.max(r.max_residual);
        failures += r.failures.len();
    }
    let exact = exact_named_relations();
    outcome(
        worst <= ALGEBRA_TOL && failures == 0 && exact,
        format!("max residual {worst:.2e} (tol {ALGEBRA_TOL:e}), exact 2x2 relations {}", if exact { "hold" } else { "violated" }),
    )
}

fn c2_pauli() -> Outcome {
    let space = build_space(&SpaceSpec::new(2, &[4], &[])).unwrap();
    let ops = Operators::new(&space);
    let worst = ops
        .sites
        .iter()
        .map(|s| check_pauli_isomorphism(s).max_residual)
        .fold(0.0, f64::max);
    outcome(worst <= PAULI_TOL, format!("max residual {worst:.2e} (tol {PAULI_TOL:e})"))
}

fn c3_eom() -> Outcome {
    let space = build_space(&SpaceSpec::new(3, &[4], &[3])).unwrap();
    let ops = Operators::new(&space);
    let mut worst: f64 = 0.0;
    let mut worst_label = String::new();
    for p in draws(3, 1, 1, 10) {
        let rep = eom_identity_report(&ops, &p, 0.0);
        if let Some(e) = rep.worst() {
            if e.residual > worst {
                worst = e.residual;
                worst_label = e.label.clone();
            }
        }
    }
    outcome(
        worst <= EOM_TOL,
        format!("10 draws (seed {DRAW_SEED}), max residual {worst:.2e} at {worst_label} (tol {EOM_TOL:e})"),
    )
}

fn c4_compact() -> Outcome {
    let space = build_space(&SpaceSpec::new(3, &[4], &[3])).unwrap();
    let ops = Operators::new(&space);
    let mut worst: f64 = 0.0;
    let mut control = f64::INFINITY;
    for p in draws(3, 1, 1, 10) {
        worst = worst.max(verify_compact_form(&ops, &p, 0.0, COMPACT_METRIC).max_residual());
        control = control.min(verify_compact_form(&ops, &p, 0.0, IDENTITY_METRIC).max_residual());
    }
    outcome(
        worst <= COMPACT_TOL && control > CONTROL_MIN,
        format!(
            "max residual {worst:.2e} (tol {COMPACT_TOL:e}); identity-metric control min residual {control:.2e} (must exceed {CONTROL_MIN:e})"
        ),
    )
}

fn c5_ehrenfest() -> Outcome {
    let space = build_space(&SpaceSpec::new(2, &[16], &[])).unwrap();
    let ops = Operators::new(&space);
    let params = SystemParams::uniform_chain(2, 1.0, 0.02).with_field_mode(1.0, 0.3, 0.05, 1.0);
    let gen = Generator::from_model(&ops, &params);
    let psi0 = ProductState {
        sites: vec![SiteState::Upper, SiteState::Angles { theta: 1.2, phi: 0.4 }],
        field: vec![ModeState::coherent(C64::new(2.0, 0.0))],
        phonons: vec![],
    }
    .build(&space)
    .unwrap();
    let period = 2.0 * PI / params.fastest_frequency();
    let dt = 1e-3 * period;
    let settings = PropagateSettings::new(2000.0 * dt, dt)
        .with_tolerances(1e-12, 1e-14)
        .recording_states();
    let tr = propagate(&ops, &gen, &psi0, &settings).unwrap();
    let mut worst: f64 = 0.0;
    let mut fd_bound: f64 = 0.0;
    for l in 0..2 {
        let r = ehrenfest_check(&tr, &ops, &params, Observable::SigmaZ(l)).unwrap();
        worst = worst.max(r.max_deviation);
        fd_bound = fd_bound.max(r.fd_truncation_bound.unwrap_or(0.0));
    }
    outcome(
        worst <= EHRENFEST_TOL,
        format!(
            "max |FD − ⟨RHS⟩| {worst:.2e} (tol {EHRENFEST_TOL:e}), FD bound {fd_bound:.1e}, top Fock population {:.2e}{}",
            tr.meta.max_top_population,
            if tr.meta.truncation_flagged { " (flagged; σᶻ identity is exact in the truncated space)" } else { "" }
        ),
    )
}

fn c6_conservation() -> Outcome {
    let space = build_space(&SpaceSpec::new(2, &[8], &[3])).unwrap();
    let ops = Operators::new(&space);
    let params = SystemParams::uniform_chain(2, 1.0, 0.03)
        .with_field_mode(1.1, 0.5, 0.04, 0.9)
        .with_phonon_mode(0.3, 0.02);
    let gen = Generator::from_model(&ops, &params);
    let psi0 = ProductState {
        sites: vec![SiteState::Upper, SiteState::Angles { theta: 0.7, phi: 1.0 }],
        field: vec![ModeState::coherent(C64::new(0.8, 0.3))],
        phonons: vec![ModeState::Vacuum],
    }
    .build(&space)
    .unwrap();
    let t_end = 50.0 * 2.0 * PI;
    let tr = propagate(&ops, &gen, &psi0, &PropagateSettings::new(t_end, 0.5).with_tolerances(1e-13, 1e-15)).unwrap();
    let e = tr.column("energy").unwrap();
    let n = tr.column("norm").unwrap();
    let e_drift = e.iter().map(|x| ((x - e[0]) / e[0]).abs()).fold(0.0, f64::max);
    let n_drift = n.iter().map(|x| ((x - n[0]) / n[0]).abs()).fold(0.0, f64::max);

    let space3 = build_space(&SpaceSpec::new(4, &[], &[])).unwrap();
    let ops3 = Operators::new(&space3);
    let ex = SystemParams::uniform_chain(4, 1.0, 0.15);
    let psi3 = ProductState {
        sites: vec![
            SiteState::Upper,
            SiteState::Angles { theta: 1.0, phi: 0.0 },
            SiteState::Lower,
            SiteState::Angles { theta: 2.5, phi: 2.0 },
        ],
        field: vec![],
        phonons: vec![],
    }
    .build(&space3)
    .unwrap();
    let tr3 = propagate(
        &ops3,
        &Generator::from_model(&ops3, &ex),
        &psi3,
        &PropagateSettings::new(t_end, 0.5).with_tolerances(1e-13, 1e-15),
    )
    .unwrap();
    let s = tr3.total_inversion();
    let s_drift = s.iter().map(|x| (x - s[0]).abs()).fold(0.0, f64::max);
    outcome(
        n_drift <= CONSERVATION_TOL && e_drift <= CONSERVATION_TOL && s_drift <= INVERSION_TOL,
        format!(
            "norm drift {n_drift:.2e}, energy drift {e_drift:.2e} (tol {CONSERVATION_TOL:e}); exchange-only Σσᶻ drift {s_drift:.2e} (tol {INVERSION_TOL:e})"
        ),
    )
}

/// `(sᶻ at π/Ω_R from exact classical drive, from mean field, oracle)` and
/// the peak-to-peak amplitudes over one generalized Rabi period.
fn rabi_runs(omega0: f64) -> ((f64, f64, f64), (f64, f64, f64)) {
    let amplitude = 0.01;
    let alpha = C64::new(1.0, 0.0);
    let params = SystemParams::uniform_chain(1, omega0, 0.0).with_field_mode(1.0, 0.0, amplitude, 1.0);
    let sol = rabi_oracle(&params, alpha).unwrap();
    let t_inv = sol.inversion_time();
    let settings = PropagateSettings::new(2.0 * t_inv, t_inv / 200.0).with_tolerances(1e-11, 1e-13);

    let space = build_space(&SpaceSpec::new(1, &[], &[])).unwrap();
    let ops = Operators::new(&space);
    let gen = Generator::classical_drive(&ops, &params, &[alpha]);
    let psi0 = ProductState::ground(1, 0, 0).build(&space).unwrap();
    let exact = propagate(&ops, &gen, &psi0, &settings).unwrap();

    let mut mf0 = MeanFieldState::from_product(&ProductState::ground(1, 1, 0));
    mf0.field[0] = [alpha, alpha.conj()];
    let mf = mf_propagate(&mf0, &params, &FieldTreatment::Prescribed(vec![[1.0, 0.0]]), &settings).unwrap();

    let at = |tr: &chainqed_core::trajectory::Trajectory| {
        let i = tr.times.iter().position(|t| (t - t_inv).abs() < 1e-9 * t_inv).unwrap();
        tr.column("s0_z").unwrap()[i]
    };
    let span = |tr: &chainqed_core::trajectory::Trajectory| {
        let z = tr.column("s0_z").unwrap();
        z.iter().copied().fold(f64::MIN, f64::max) - z.iter().copied().fold(f64::MAX, f64::min)
    };
    (
        (at(&exact), at(&mf), sol.sz(t_inv)),
        (span(&exact), span(&mf), sol.sz_amplitude()),
    )
}

fn c7_rabi() -> Outcome {
    let ((ex, mf, oracle), _) = rabi_runs(1.0);
    let res_ok = (ex - oracle).abs() <= RABI_INVERSION_TOL && (mf - oracle).abs() <= RABI_INVERSION_TOL;
    // detuning equal to the drive Rabi frequency
    let (_, (ex_amp, mf_amp, amp)) = rabi_runs(1.02);
    let ex_rel = (ex_amp - amp).abs() / amp;
    let mf_rel = (mf_amp - amp).abs() / amp;
    let det_ok = ex_rel <= RABI_DETUNED_REL_TOL && mf_rel <= RABI_DETUNED_REL_TOL;
    outcome(
        res_ok && det_ok,
        format!(
            "resonant sᶻ(π/Ω_R): exact {ex:.5}, mean field {mf:.5}, oracle {oracle:.5} (tol {RABI_INVERSION_TOL}); detuned amplitude rel. error exact {ex_rel:.2e}, mean field {mf_rel:.2e} (tol {RABI_DETUNED_REL_TOL})"
        ),
    )
}

fn c8_closure_gap() -> Outcome {
    let space = build_space(&SpaceSpec::new(1, &[30], &[])).unwrap();
    let ops = Operators::new(&space);
    let q = 0.01;
    let params = SystemParams::uniform_chain(1, 1.0, 0.0).with_field_mode(1.0, 0.0, q, 1.0);
    let alpha = C64::new(3.0, 0.0);
    let state = ProductState {
        sites: vec![SiteState::Lower],
        field: vec![ModeState::coherent(alpha)],
        phonons: vec![],
    };
    let rabi_period = 2.0 * PI / (2.0 * q * alpha.norm());
    let settings = PropagateSettings::new(3.0 * rabi_period, rabi_period / 400.0).with_tolerances(1e-11, 1e-13);
    let exact = propagate(&ops, &Generator::from_model(&ops, &params), &state.build(&space).unwrap(), &settings).unwrap();
    let mf = mf_propagate(&MeanFieldState::from_product(&state), &params, &FieldTreatment::Dynamical, &settings).unwrap();
    let (ze, zm) = (exact.column("s0_z").unwrap(), mf.column("s0_z").unwrap());
    let gap = |t_max: f64| {
        exact
            .times
            .iter()
            .zip(ze.iter().zip(&zm))
            .filter(|(t, _)| **t <= t_max * (1.0 + 1e-12))
            .map(|(_, (a, b))| (a - b).abs())
            .fold(0.0, f64::max)
    };
    let first = gap(rabi_period);
    let half = gap(rabi_period / 2.0);
    let later: Vec<String> = [2.0, 3.0].iter().map(|k| format!("{:.3}", gap(k * rabi_period))).collect();
    outcome(
        first <= CLOSURE_GAP_TOL,
        format!(
            "max |sᶻ_MF − ⟨σᶻ⟩| over first Rabi period {first:.4} (tol {CLOSURE_GAP_TOL}, {:.1}% of the σᶻ range); first half-period {half:.4}; through periods 2, 3: {}; top Fock population {:.1e}",
            50.0 * first,
            later.join(", "),
            exact.meta.max_top_population
        ),
    )
}

fn c9_phonon() -> Outcome {
    let nu = 0.37;
    let s0 = -1.3;
    let history: Vec<(f64, f64)> = (0..=4000).map(|i| (i as f64 * 0.01, s0)).collect();
    let mut kernel_err: f64 = 0.0;
    for i in 0..=400 {
        let t = i as f64 * 0.1;
        let k = memory_kernel(&history, nu, t).unwrap();
        kernel_err = kernel_err.max((k - s0 * (1.0 - (nu * t).cos()) / nu).abs());
    }
    let space = build_space(&SpaceSpec::new(3, &[4], &[3])).unwrap();
    let ops = Operators::new(&space);
    let mut direct_err: f64 = 0.0;
    for p in draws(3, 1, 1, 10) {
        let hcp = build_hcp(&ops, &p);
        for l in 0..3 {
            for (branch, op) in [(Branch::Plus, &ops.sites[l].plus), (Branch::Minus, &ops.sites[l].minus)] {
                let diff = &phonon_correction_direct(&ops, &p, l, branch) - &commutator_rhs(&hcp, op);
                direct_err = direct_err.max(diff.norm_op_bound());
            }
        }
    }
    outcome(
        kernel_err <= KERNEL_TOL && direct_err <= DIRECT_TOL,
        format!(
            "kernel vs S₀(1−cos νt)/ν {kernel_err:.2e} (tol {KERNEL_TOL:e}); direct vs commutator {direct_err:.2e} (tol {DIRECT_TOL:e})"
        ),
    )
}

fn c10_mf_invariant() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(DRAW_SEED + 10);
    let mut worst: f64 = 0.0;
    for p in draws(3, 1, 1, 5) {
        let state = ProductState {
            sites: (0..3)
                .map(|_| SiteState::Angles {
                    theta: rng.gen_range(0.0..PI),
                    phi: rng.gen_range(0.0..2.0 * PI),
                })
                .collect(),
            field: vec![ModeState::coherent(C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))],
            phonons: vec![ModeState::coherent(C64::new(rng.gen_range(-0.5..0.5), 0.0))],
        };
        let slowest = p.omegas().into_iter().fold(f64::INFINITY, f64::min);
        let t_end = 100.0 * 2.0 * PI / slowest;
        let settings = PropagateSettings::new(t_end, 1.0).with_tolerances(1e-12, 1e-14);
        let tr = mf_propagate(&MeanFieldState::from_product(&state), &p, &FieldTreatment::Dynamical, &settings).unwrap();
        worst = worst.max(tr.meta.max_invariant_drift.unwrap());
    }
    outcome(
        worst <= MF_INVARIANT_TOL,
        format!("5 draws, max drift {worst:.2e} (tol {MF_INVARIANT_TOL:e})"),
    )
}

const DETERMINISM_CONFIG: &str = r#"
seed = 11

[space]
n_sites = 2
field_cutoffs = [5]
phonon_cutoffs = [2]

[params]
site_energies = [[0.0, 1.0], [-0.1, 1.05]]
exchange_j = 0.04
dipole = [1.0, 0.8]
site_positions = [0.0, 1.0]

[[params.field_modes]]
omega = 1.0
wavevector = 0.4
amplitude = 0.05
polarization_overlap = [1.0, 0.9]

[[params.phonon_modes]]
nu = 0.3
lambda = 0.02

[initial]
sites = ["upper", { angles = { theta = 1.0, phi = 0.5 } }]
field = [{ coherent = { re = 0.7, im = 0.1 } }]
phonons = ["vacuum"]

[propagation]
t_end = 40.0
dt_out = 0.25

[sweep]
base_task = "compare"

[[sweep.axes]]
parameter = "exchange_j"
values = [0.0, 0.05]

[[sweep.axes]]
parameter = { field_amplitude = { mode = 0 } }
linspace = [0.02, 0.06, 2]
"#;

fn files_under(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().unwrap() != "report.json" {
                let rel = p.strip_prefix(dir).unwrap().display().to_string();
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn c11_determinism() -> Outcome {
    let cfg = Config::from_toml_str(DETERMINISM_CONFIG).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let mut snapshots = Vec::new();
    for (task, workers, run_id) in [
        (Task::Propagate, 1, "a"),
        (Task::Propagate, 1, "b"),
        (Task::Meanfield, 1, "a"),
        (Task::Meanfield, 1, "b"),
        (Task::Sweep, 1, "a"),
        (Task::Sweep, 3, "b"),
    ] {
        let out = tmp.path().join(format!("{}_{run_id}", task.name()));
        let opts = RunOptions {
            out_dir: out.clone(),
            workers,
            seed: None,
        };
        run(&cfg, DETERMINISM_CONFIG, task, &opts).unwrap();
        snapshots.push(files_under(&out));
    }
    let pairs_equal: Vec<bool> = snapshots.chunks(2).map(|p| !p[0].is_empty() && p[0] == p[1]).collect();
    let n_files: usize = snapshots.iter().step_by(2).map(Vec::len).sum();
    outcome(
        pairs_equal.iter().all(|&b| b),
        format!("{n_files} trajectory files compared byte for byte across propagate, meanfield and sweep (1 vs 3 workers): {pairs_equal:?}"),
    )
}

fn main() -> ExitCode {
    type Criterion = (&'static str, &'static str, Option<f64>, fn() -> Outcome);
    let criteria: [Criterion; 11] = [
        ("1", "algebra closure", Some(1.0), c1_algebra),
        ("2", "Pauli isomorphism", Some(1.0), c2_pauli),
        ("3", "Heisenberg EOM identity", Some(60.0), c3_eom),
        ("4", "compact vector form", Some(30.0), c4_compact),
        ("5", "Ehrenfest consistency", Some(120.0), c5_ehrenfest),
        ("6", "conservation", None, c6_conservation),
        ("7", "Rabi limit", Some(10.0), c7_rabi),
        ("8", "quantum-classical closure gap", Some(300.0), c8_closure_gap),
        ("9", "phonon memory kernel", None, c9_phonon),
        ("10", "mean-field invariant", None, c10_mf_invariant),
        ("11", "determinism", None, c11_determinism),
    ];
    let mut failed = Vec::new();
    for (id, name, limit, f) in criteria {
        let start = Instant::now();
        let o = f();
        let secs = start.elapsed().as_secs_f64();
        let in_time = limit.is_none_or(|l| secs < l);
        let passed = o.passed && in_time;
        let timing = match limit {
            Some(l) => format!("{secs:.2} s (limit {l} s)"),
            None => format!("{secs:.2} s"),
        };
        println!("{} criterion {id} {name}: {}; {timing}", if passed { "PASS" } else { "FAIL" }, o.detail);
        if !passed {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 11 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {}", failed.join(", "));
        ExitCode::FAILURE
    }
}
