use serde::{Deserialize, Serialize};

use super::eom::{heisenberg_rhs_field, heisenberg_rhs_phonon, heisenberg_rhs_sigma};
use super::DynamicsError;
use crate::hamiltonian::{CouplingMode, Operators, SystemParams};
use crate::hilbert::Operator;
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "index")]
pub enum Observable {
    SigmaMinus(usize),
    SigmaPlus(usize),
    SigmaZ(usize),
    Field(usize),
    FieldDag(usize),
    Phonon(usize),
    PhononDag(usize),
}

impl Observable {
    fn operator<'a>(&self, ops: &'a Operators) -> &'a Operator {
        match *self {
            Observable::SigmaMinus(l) => &ops.sites[l].minus,
            Observable::SigmaPlus(l) => &ops.sites[l].plus,
            Observable::SigmaZ(l) => &ops.sites[l].z,
            Observable::Field(k) => &ops.field[k].a,
            Observable::FieldDag(k) => &ops.field[k].a_dag,
            Observable::Phonon(q) => &ops.phonons[q].a,
            Observable::PhononDag(q) => &ops.phonons[q].a_dag,
        }
    }

    fn rhs(&self, ops: &Operators, params: &SystemParams, t: f64) -> Operator {
        match *self {
            Observable::SigmaMinus(l) => heisenberg_rhs_sigma(ops, params, l, t).minus,
            Observable::SigmaPlus(l) => heisenberg_rhs_sigma(ops, params, l, t).plus,
            Observable::SigmaZ(l) => heisenberg_rhs_sigma(ops, params, l, t).z,
            Observable::Field(k) => heisenberg_rhs_field(ops, params, k, t).0,
            Observable::FieldDag(k) => heisenberg_rhs_field(ops, params, k, t).1,
            Observable::Phonon(q) => heisenberg_rhs_phonon(ops, params, q).0,
            Observable::PhononDag(q) => heisenberg_rhs_phonon(ops, params, q).1,
        }
    }

    fn in_range(&self, ops: &Operators) -> bool {
        match *self {
            Observable::SigmaMinus(l) | Observable::SigmaPlus(l) | Observable::SigmaZ(l) => l < ops.sites.len(),
            Observable::Field(k) | Observable::FieldDag(k) => k < ops.field.len(),
            Observable::Phonon(q) | Observable::PhononDag(q) => q < ops.phonons.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EhrenfestReport {
    pub observable: Observable,
    pub points: usize,
    /// `max_i |FD(⟨O⟩)(t_i) − ⟨ψ(t_i)|RHS|ψ(t_i)⟩|` over interior points.
    pub max_deviation: f64,
    pub time_of_max: f64,
    /// `h²/6 · max|d³⟨O⟩/dt³|`, the leading centered-difference error, when
    /// at least five points are available.
    pub fd_truncation_bound: Option<f64>,
}

/// Compares the centered finite difference of `⟨O⟩` along a stored trajectory
/// with the expectation of the explicit Heisenberg right-hand side.
pub fn ehrenfest_check(
    traj: &Trajectory,
    ops: &Operators,
    params: &SystemParams,
    observable: Observable,
) -> Result<EhrenfestReport, DynamicsError> {
    let states = traj.states.as_ref().ok_or(DynamicsError::NoStoredStates)?;
    let n = states.len();
    if n < 3 {
        return Err(DynamicsError::TooFewPoints { needed: 3, got: n });
    }
    if !observable.in_range(ops) {
        return Err(DynamicsError::InvalidSettings(format!("{observable:?} is not part of the model")));
    }
    let times = &traj.times;
    let h = times[1] - times[0];
    if times.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h) {
        return Err(DynamicsError::NonUniformGrid);
    }

    let op = observable.operator(ops);
    let vals: Vec<_> = states.iter().map(|psi| op.expectation(psi)).collect();
    let fixed_rhs = match params.coupling_mode {
        CouplingMode::StaticPhaseAtT0 => Some(observable.rhs(ops, params, 0.0)),
        CouplingMode::LiteralTimeDependent => None,
    };

    let mut max_dev = 0.0;
    let mut t_max = times[1];
    for i in 1..n - 1 {
        let fd = (vals[i + 1] - vals[i - 1]) / (2.0 * h);
        let expected = match &fixed_rhs {
            Some(r) => r.expectation(&states[i]),
            None => observable.rhs(ops, params, times[i]).expectation(&states[i]),
        };
        let dev = (fd - expected).norm();
        if dev > max_dev {
            max_dev = dev;
            t_max = times[i];
        }
    }
    let fd_bound = (n >= 5).then(|| {
        let third = (2..n - 2)
            .map(|i| ((vals[i + 2] - vals[i + 1] * 2.0 + vals[i - 1] * 2.0 - vals[i - 2]) / (2.0 * h.powi(3))).norm())
            .fold(0.0, f64::max);
        h * h / 6.0 * third
    });
    Ok(EhrenfestReport {
        observable,
        points: n,
        max_deviation: max_dev,
        time_of_max: t_max,
        fd_truncation_bound: fd_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{propagate, ModeState, ProductState, PropagateSettings, SiteState};
    use crate::hamiltonian::Generator;
    use crate::hilbert::{build_space, SpaceSpec};
    use num_complex::Complex64 as C64;

    #[test]
    fn requires_states_and_points() {
        let space = build_space(&SpaceSpec::new(1, &[2], &[])).unwrap();
        let ops = Operators::new(&space);
        let params = SystemParams::uniform_chain(1, 1.0, 0.0).with_field_mode(1.0, 0.0, 0.05, 1.0);
        let gen = Generator::from_model(&ops, &params);
        let psi = ProductState::ground(1, 1, 0).build(&space).unwrap();
        let tr = propagate(&ops, &gen, &psi, &PropagateSettings::new(0.1, 0.1)).unwrap();
        assert!(matches!(
            ehrenfest_check(&tr, &ops, &params, Observable::SigmaZ(0)),
            Err(DynamicsError::NoStoredStates)
        ));
        let tr = propagate(&ops, &gen, &psi, &PropagateSettings::new(0.1, 0.1).recording_states()).unwrap();
        assert!(matches!(
            ehrenfest_check(&tr, &ops, &params, Observable::SigmaZ(0)),
            Err(DynamicsError::TooFewPoints { needed: 3, got: 2 })
        ));
    }

    #[test]
    fn sigma_and_field_track_rhs() {
        let space = build_space(&SpaceSpec::new(1, &[8], &[])).unwrap();
        let ops = Operators::new(&space);
        let params = SystemParams::uniform_chain(1, 1.0, 0.0).with_field_mode(1.0, 0.0, 0.05, 1.0);
        let gen = Generator::from_model(&ops, &params);
        let psi = ProductState {
            sites: vec![SiteState::Upper],
            field: vec![ModeState::coherent(C64::new(0.5, 0.0))],
            phonons: vec![],
        }
        .build(&space)
        .unwrap();
        let settings = PropagateSettings::new(3.0, 1e-3).with_tolerances(1e-12, 1e-14).recording_states();
        let tr = propagate(&ops, &gen, &psi, &settings).unwrap();
        for obs in [Observable::SigmaZ(0), Observable::SigmaMinus(0), Observable::Field(0)] {
            let r = ehrenfest_check(&tr, &ops, &params, obs).unwrap();
            assert!(r.max_deviation < 1e-5, "{r:?}");
            assert!(r.fd_truncation_bound.unwrap() < 1e-5);
        }
        let bad = ehrenfest_check(&tr, &ops, &params, Observable::Phonon(0));
        assert!(bad.is_err());
    }
}
