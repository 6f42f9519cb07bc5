//! Exact propagation of the Schrödinger equation, Heisenberg equations of
//! motion and their consistency checks.

mod ehrenfest;
pub mod eom;
pub mod integrate;
mod state;

pub use ehrenfest::{ehrenfest_check, EhrenfestReport, Observable};
pub use eom::{
    build_g_vector, commutator_rhs, compact_rhs, eom_identity_report, heisenberg_rhs_field,
    heisenberg_rhs_phonon, heisenberg_rhs_sigma, memory_kernel, phonon_correction_direct,
    phonon_correction_memory, phonon_displacement_memory, verify_compact_form, Branch, IdentityEntry,
    IdentityReport, COMPACT_METRIC, IDENTITY_METRIC,
};
pub use integrate::{integrate, IntegratorSettings, StepStats};
pub use state::{norm, ModeState, ProductState, SiteState};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hamiltonian::{Generator, Operators, ParamsError};
use crate::hilbert::HilbertError;
use crate::trajectory::{standard_columns, Trajectory, TrajectoryKind};

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid settings: {0}")]
    InvalidSettings(String),
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("step limit reached at t = {t}")]
    MaxSteps { t: f64 },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
    #[error("memory kernel needs at least two history points, got {0}")]
    InsufficientHistory(usize),
    #[error("need at least {needed} time points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("output grid is not uniform")]
    NonUniformGrid,
    #[error("trajectory has no stored states")]
    NoStoredStates,
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
}

/// Populations above this in any top Fock level flag the truncation.
pub const TOP_POPULATION_THRESHOLD: f64 = 1e-6;
/// Norm drift above this raises a warning.
pub const NORM_DRIFT_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagateSettings {
    pub t_end: f64,
    pub dt_out: f64,
    #[serde(flatten)]
    pub integrator: IntegratorSettings,
    #[serde(default)]
    pub record_states: bool,
}

impl PropagateSettings {
    pub fn new(t_end: f64, dt_out: f64) -> Self {
        Self {
            t_end,
            dt_out,
            integrator: IntegratorSettings::default(),
            record_states: false,
        }
    }

    pub fn with_tolerances(mut self, rtol: f64, atol: f64) -> Self {
        self.integrator.rtol = rtol;
        self.integrator.atol = atol;
        self
    }

    pub fn recording_states(mut self) -> Self {
        self.record_states = true;
        self
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        let mut errs = Vec::new();
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            errs.push("t_end must be finite and non-negative".to_string());
        }
        if !(self.dt_out > 0.0) {
            errs.push("dt_out must be positive".to_string());
        }
        if !(self.integrator.rtol > 0.0) || !(self.integrator.atol > 0.0) {
            errs.push("tolerances must be positive".to_string());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(DynamicsError::InvalidSettings(errs.join("; ")))
        }
    }

    /// `0, dt, 2dt, …` up to `t_end`, with `t_end` itself appended when the
    /// grid does not land on it.
    pub fn output_times(&self) -> Vec<f64> {
        let n = (self.t_end / self.dt_out + 1e-9).floor() as usize;
        let mut times: Vec<f64> = (0..=n).map(|i| i as f64 * self.dt_out).collect();
        let last = *times.last().unwrap();
        if self.t_end - last > 1e-9 * self.dt_out {
            times.push(self.t_end);
        }
        times
    }
}

/// Observable row in the [`standard_columns`] layout.
pub fn observe_state(ops: &Operators, generator: &Generator, t: f64, psi: &[C64]) -> Vec<f64> {
    let mut row = Vec::with_capacity(5 * ops.sites.len() + 4 * ops.field.len() + 3 * ops.phonons.len() + 2);
    for s in &ops.sites {
        let m = s.minus.expectation(psi);
        let p = s.plus.expectation(psi);
        row.extend([m.re, m.im, p.re, p.im, s.z.expectation(psi).re]);
    }
    for f in &ops.field {
        let a = f.a.expectation(psi);
        row.extend([a.re, a.im, f.number.expectation(psi).re, f.top.expectation(psi).re]);
    }
    for b in &ops.phonons {
        let a = b.a.expectation(psi);
        row.extend([a.re, a.im, b.top.expectation(psi).re]);
    }
    row.push(norm(psi));
    row.push(generator.energy(t, psi));
    row
}

/// Integrates `i dψ/dt = H(t) ψ` and records the standard observables on the
/// output grid.
pub fn propagate(
    ops: &Operators,
    generator: &Generator,
    psi0: &[C64],
    settings: &PropagateSettings,
) -> Result<Trajectory, DynamicsError> {
    settings.validate()?;
    if psi0.len() != ops.dim() || generator.dim() != ops.dim() {
        return Err(DynamicsError::InvalidState(format!(
            "state length {} / generator dimension {} do not match space dimension {}",
            psi0.len(),
            generator.dim(),
            ops.dim()
        )));
    }
    let kind = if ops.field.is_empty() && generator.is_time_dependent() {
        TrajectoryKind::ClassicalDrive
    } else {
        TrajectoryKind::Exact
    };
    let mut traj = Trajectory::new(
        kind,
        standard_columns(ops.sites.len(), ops.field.len(), ops.phonons.len()),
    );
    let mut states = settings.record_states.then(Vec::new);
    let norm_col = traj.columns.len() - 2;
    let top_cols: Vec<usize> = traj
        .columns
        .iter()
        .enumerate()
        .filter(|(_, c)| c.starts_with("top") || c.starts_with("phtop"))
        .map(|(i, _)| i)
        .collect();

    let times = settings.output_times();
    let mut psi = psi0.to_vec();
    let mut rows = Vec::with_capacity(times.len());
    // the first grid point is the initial time itself
    rows.push((times[0], observe_state(ops, generator, times[0], &psi)));
    if let Some(s) = states.as_mut() {
        s.push(psi.clone());
    }
    let minus_i = C64::new(0.0, -1.0);
    let stats = integrate(
        |t, y, dy| {
            generator.apply(t, y, dy);
            dy.iter_mut().for_each(|v| *v *= minus_i);
        },
        times[0],
        &mut psi,
        &times[1..],
        &settings.integrator,
        |t, y| {
            if y.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                return Err(DynamicsError::NonFinite { t });
            }
            rows.push((t, observe_state(ops, generator, t, y)));
            if let Some(s) = states.as_mut() {
                s.push(y.to_vec());
            }
            Ok(())
        },
    )?;

    let norm0 = rows[0].1[norm_col];
    for (t, row) in rows {
        traj.meta.max_norm_drift = traj.meta.max_norm_drift.max((row[norm_col] - norm0).abs());
        for &c in &top_cols {
            traj.meta.max_top_population = traj.meta.max_top_population.max(row[c]);
        }
        traj.push(t, row);
    }
    traj.meta.truncation_flagged = traj.meta.max_top_population > TOP_POPULATION_THRESHOLD;
    traj.meta.norm_warning = traj.meta.max_norm_drift > NORM_DRIFT_THRESHOLD;
    if traj.meta.truncation_flagged {
        log::warn!(
            "top Fock population reached {:.3e}; increase the cutoff",
            traj.meta.max_top_population
        );
    }
    if traj.meta.norm_warning {
        log::warn!("norm drift {:.3e} exceeds {NORM_DRIFT_THRESHOLD:e}", traj.meta.max_norm_drift);
    }
    traj.meta.steps_accepted = stats.accepted;
    traj.meta.steps_rejected = stats.rejected;
    traj.states = states;
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::SystemParams;
    use crate::hilbert::{build_space, SpaceSpec};
    use std::f64::consts::PI;

    #[test]
    fn output_grid() {
        let s = PropagateSettings::new(1.0, 0.25);
        assert_eq!(s.output_times(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let s = PropagateSettings::new(1.1, 0.5);
        assert_eq!(s.output_times(), vec![0.0, 0.5, 1.0, 1.1]);
        assert!(PropagateSettings::new(1.0, 0.0).validate().is_err());
    }

    #[test]
    fn free_precession() {
        let space = build_space(&SpaceSpec::new(1, &[], &[])).unwrap();
        let ops = Operators::new(&space);
        let omega = 1.3;
        let params = SystemParams::uniform_chain(1, omega, 0.0);
        let gen = Generator::from_model(&ops, &params);
        let psi0 = ProductState {
            sites: vec![SiteState::Angles { theta: PI / 2.0, phi: 0.0 }],
            field: vec![],
            phonons: vec![],
        }
        .build(&space)
        .unwrap();
        let tr = propagate(&ops, &gen, &psi0, &PropagateSettings::new(10.0, 0.5).with_tolerances(1e-12, 1e-14))
            .unwrap();
        let sm = tr.complex_column("s0_minus").unwrap();
        for (t, v) in tr.times.iter().zip(sm) {
            // ⟨σ⁻⟩(t) = ½ e^{−iωt}
            assert!((v - C64::from_polar(0.5, -omega * t)).norm() < 1e-10);
        }
        assert_eq!(tr.kind, TrajectoryKind::Exact);
        assert!(tr.meta.max_norm_drift < 1e-10);
    }

    #[test]
    fn dimension_mismatch() {
        let space = build_space(&SpaceSpec::new(1, &[], &[])).unwrap();
        let ops = Operators::new(&space);
        let gen = Generator::from_model(&ops, &SystemParams::uniform_chain(1, 1.0, 0.0));
        let r = propagate(&ops, &gen, &[C64::new(1.0, 0.0)], &PropagateSettings::new(1.0, 0.1));
        assert!(matches!(r, Err(DynamicsError::InvalidState(_))));
    }
}
