//! Mean-field closure of the Heisenberg equations: every operator product is
//! replaced by the product of expectation values, `{A, B} → 2⟨A⟩⟨B⟩`.

mod rabi;
mod spectrum;
mod volterra;

pub use rabi::{rabi_oracle, RabiSolution, RABI_MAX_DETUNING_RATIO, RABI_MAX_DRIVE_RATIO};
pub use spectrum::{spectrum, spectrum_of, GridPolicy, Peak, SpectrumOptions, SpectrumResult, Window};
pub use volterra::{volterra_diagnostics, Regime, VolterraReport, VolterraSettings};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{integrate, DynamicsError, ProductState, PropagateSettings, COMPACT_METRIC};
use crate::hamiltonian::{ParamsError, SystemParams};
use crate::trajectory::{standard_columns, Trajectory, TrajectoryKind};
use crate::transition_ops::{cross, Triple, VectorComponent};

const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Error)]
pub enum MeanFieldError {
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error("outside the validity range of the oracle: {0}")]
    OutsideValidity(String),
    #[error("non-uniform time grid")]
    NonUniformGrid,
    #[error("series too short: need {needed} points, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("unknown observable '{0}'")]
    UnknownObservable(String),
    #[error("{0}")]
    Invalid(String),
}

/// How the field amplitudes enter the closed equations.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "amplitudes")]
pub enum FieldTreatment {
    /// `a_k` evolves under its own mean-field equation.
    #[default]
    Dynamical,
    /// `a_k(t) = α_k e^{−iω_k t}`, unaffected by the sites.
    Prescribed(Vec<[f64; 2]>),
}

/// Expectation values `⟨σ⁻_l⟩, ⟨σ⁺_l⟩, ⟨σᶻ_l⟩`, `⟨a_k⟩, ⟨a†_k⟩`,
/// `⟨b_q⟩, ⟨b†_q⟩`. The conjugate slots are evolved independently.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanFieldState {
    pub sites: Vec<Triple<C64>>,
    pub field: Vec<[C64; 2]>,
    pub phonons: Vec<[C64; 2]>,
}

impl MeanFieldState {
    pub fn from_product(state: &ProductState) -> Self {
        let sites = state
            .sites
            .iter()
            .map(|s| {
                let (m, z) = s.moments();
                Triple::new(m, m.conj(), C64::new(z, 0.0))
            })
            .collect();
        let pair = |a: C64| [a, a.conj()];
        Self {
            sites,
            field: state.field.iter().map(|m| pair(m.mean_amplitude())).collect(),
            phonons: state.phonons.iter().map(|m| pair(m.mean_amplitude())).collect(),
        }
    }

    pub fn len(&self) -> usize {
        3 * self.sites.len() + 2 * self.field.len() + 2 * self.phonons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn pack(&self) -> Vec<C64> {
        let mut v = Vec::with_capacity(self.len());
        for s in &self.sites {
            v.extend([s.minus, s.plus, s.z]);
        }
        for f in self.field.iter().chain(&self.phonons) {
            v.extend(f);
        }
        v
    }

    /// Inverse of [`Self::pack`] with the layout of `self`.
    pub fn unpack_like(&self, y: &[C64]) -> Self {
        let n = self.sites.len();
        let nf = self.field.len();
        let sites = (0..n).map(|l| Triple::new(y[3 * l], y[3 * l + 1], y[3 * l + 2])).collect();
        let pairs = |off: usize, count: usize| (0..count).map(|k| [y[off + 2 * k], y[off + 2 * k + 1]]).collect();
        Self {
            sites,
            field: pairs(3 * n, nf),
            phonons: pairs(3 * n + 2 * nf, self.phonons.len()),
        }
    }

    /// `(sᶻ)² + 4 s⁺ s⁻` per site; equal to 1 on pure product states.
    pub fn bloch_invariants(&self) -> Vec<f64> {
        self.sites
            .iter()
            .map(|s| (s.z * s.z + s.plus * s.minus * 4.0).re)
            .collect()
    }

    fn check(&self, params: &SystemParams, treatment: &FieldTreatment) -> Result<(), MeanFieldError> {
        params.check(self.sites.len(), Some(self.field.len()), self.phonons.len())?;
        if let FieldTreatment::Prescribed(a) = treatment {
            if a.len() != params.field_modes.len() {
                return Err(MeanFieldError::Invalid(format!(
                    "{} prescribed amplitudes for {} field modes",
                    a.len(),
                    params.field_modes.len()
                )));
            }
        }
        Ok(())
    }
}

fn anti(a: C64, b: C64) -> C64 {
    a.sym_product(&b) * 2.0
}

fn field_at(mf: &MeanFieldState, params: &SystemParams, treatment: &FieldTreatment, t: f64) -> Vec<[C64; 2]> {
    match treatment {
        FieldTreatment::Dynamical => mf.field.clone(),
        FieldTreatment::Prescribed(amps) => amps
            .iter()
            .zip(&params.field_modes)
            .map(|([re, im], m)| {
                let a = C64::new(*re, *im) * C64::from_polar(1.0, -m.omega * t);
                [a, a.conj()]
            })
            .collect(),
    }
}

fn field_drive(params: &SystemParams, field: &[[C64; 2]], l: usize, t: f64) -> C64 {
    field
        .iter()
        .enumerate()
        .map(|(k, [a, a_dag])| {
            let q = params.coupling_q(l, k, t);
            q * a + q.conj() * a_dag
        })
        .sum()
}

fn phonon_displacement(params: &SystemParams, mf: &MeanFieldState) -> C64 {
    mf.phonons
        .iter()
        .zip(&params.phonon_modes)
        .map(|([b, b_dag], m)| (b + b_dag) * m.lambda)
        .sum()
}

fn neighbor_sums(mf: &MeanFieldState, params: &SystemParams, l: usize) -> Triple<C64> {
    params.neighbors(l).iter().fold(Triple::new(C64::default(), C64::default(), C64::default()), |acc, &m| {
        let s = &mf.sites[m];
        Triple::new(acc.minus + s.minus, acc.plus + s.plus, acc.z + s.z)
    })
}

/// Time derivative of every mean-field slot.
pub fn close_rhs(mf: &MeanFieldState, params: &SystemParams, treatment: &FieldTreatment, t: f64) -> MeanFieldState {
    let j = params.exchange_j;
    let field = field_at(mf, params, treatment, t);
    let x = phonon_displacement(params, mf);
    let sites = (0..mf.sites.len())
        .map(|l| {
            let s = &mf.sites[l];
            let w = params.omega(l);
            let b = field_drive(params, &field, l, t);
            let nb = neighbor_sums(mf, params, l);
            let z = (s.minus - s.plus) * b * I * 2.0 + (anti(s.minus, nb.plus) - anti(s.plus, nb.minus)) * I * 2.0 * j;
            let plus = s.plus * I * w - s.z * b * I
                + (anti(s.plus, nb.z) - anti(s.z, nb.plus)) * I * j
                + x * s.plus * I * 2.0;
            let minus = -s.minus * I * w + s.z * b * I + (anti(s.z, nb.minus) - anti(s.minus, nb.z)) * I * j
                - x * s.minus * I * 2.0;
            Triple::new(minus, plus, z)
        })
        .collect();
    let dfield = match treatment {
        FieldTreatment::Dynamical => field
            .iter()
            .enumerate()
            .map(|(k, [a, a_dag])| {
                let w = params.field_modes[k].omega;
                let (mut src, mut src_dag) = (C64::default(), C64::default());
                for (jj, s) in mf.sites.iter().enumerate() {
                    let q = params.coupling_q(jj, k, t);
                    src += (s.plus + s.minus) * q.conj();
                    src_dag += (s.plus + s.minus) * q;
                }
                [-I * w * a - I * src, I * w * a_dag + I * src_dag]
            })
            .collect(),
        FieldTreatment::Prescribed(_) => mf
            .field
            .iter()
            .zip(&params.field_modes)
            .map(|([a, a_dag], m)| [-I * m.omega * a, I * m.omega * a_dag])
            .collect(),
    };
    let sz_total: C64 = mf.sites.iter().map(|s| s.z).sum();
    let dph = mf
        .phonons
        .iter()
        .zip(&params.phonon_modes)
        .map(|([b, b_dag], m)| [-I * m.nu * b - I * m.lambda * sz_total, I * m.nu * b_dag + I * m.lambda * sz_total])
        .collect();
    MeanFieldState {
        sites,
        field: dfield,
        phonons: dph,
    }
}

/// Site derivatives from the compact form `g ∘ (s × G)` evaluated on
/// c-numbers; an independent route to the site part of [`close_rhs`].
pub fn compact_site_rhs(mf: &MeanFieldState, params: &SystemParams, treatment: &FieldTreatment, t: f64) -> Vec<Triple<C64>> {
    let field = field_at(mf, params, treatment, t);
    let x = phonon_displacement(params, mf);
    let jj = params.effective_exchange();
    (0..mf.sites.len())
        .map(|l| {
            let b = field_drive(params, &field, l, t);
            let nb = neighbor_sums(mf, params, l);
            let g = Triple::new(
                -b - nb.minus * jj,
                -b - nb.plus * jj,
                -C64::new(params.omega(l), 0.0) - nb.z * jj - x * 2.0,
            );
            cross(&mf.sites[l], &g).with_metric(COMPACT_METRIC)
        })
        .collect()
}

/// Energy functional whose Hamiltonian flow is the closed system (static
/// coupling): the expectation of the full Hamiltonian in the product state.
pub fn mean_field_energy(mf: &MeanFieldState, params: &SystemParams, treatment: &FieldTreatment, t: f64) -> f64 {
    let field = field_at(mf, params, treatment, t);
    let mut e = C64::default();
    for (v, s) in mf.sites.iter().enumerate() {
        let [ea, eb] = params.site_energies[v];
        e += 0.5 * (ea + eb) + s.z * (0.5 * params.omega(v));
        e += (s.minus + s.plus) * field_drive(params, &field, v, t);
    }
    for (v, w) in params.bonds() {
        let (a, b) = (&mf.sites[v], &mf.sites[w]);
        e += (a.plus * b.minus + a.minus * b.plus + a.z * b.z * 0.5) * params.effective_exchange();
    }
    if matches!(treatment, FieldTreatment::Dynamical) {
        for ([a, a_dag], m) in field.iter().zip(&params.field_modes) {
            e += (a_dag * a + 0.5) * m.omega;
        }
    }
    let sz_total: C64 = mf.sites.iter().map(|s| s.z).sum();
    for ([b, b_dag], m) in mf.phonons.iter().zip(&params.phonon_modes) {
        e += (b_dag * b + 0.5) * m.nu + (b + b_dag) * sz_total * m.lambda;
    }
    e.re
}

fn observe(mf: &MeanFieldState, params: &SystemParams, treatment: &FieldTreatment, t: f64) -> Vec<f64> {
    let mut row = Vec::new();
    for s in &mf.sites {
        row.extend([s.minus.re, s.minus.im, s.plus.re, s.plus.im, s.z.re]);
    }
    for [a, a_dag] in field_at(mf, params, treatment, t) {
        row.extend([a.re, a.im, (a_dag * a).re, 0.0]);
    }
    for [b, _] in &mf.phonons {
        row.extend([b.re, b.im, 0.0]);
    }
    row.push(1.0);
    row.push(mean_field_energy(mf, params, treatment, t));
    row
}

/// Integrates the closed equations on the output grid of `settings`.
pub fn mf_propagate(
    mf0: &MeanFieldState,
    params: &SystemParams,
    treatment: &FieldTreatment,
    settings: &PropagateSettings,
) -> Result<Trajectory, MeanFieldError> {
    settings.validate()?;
    mf0.check(params, treatment)?;
    let mut traj = Trajectory::new(
        TrajectoryKind::MeanField,
        standard_columns(mf0.sites.len(), mf0.field.len(), mf0.phonons.len()),
    );
    let times = settings.output_times();
    let inv0 = mf0.bloch_invariants();
    let mut drift: f64 = 0.0;
    traj.push(times[0], observe(mf0, params, treatment, times[0]));
    let mut y = mf0.pack();
    let stats = integrate(
        |t, y, dy| {
            let d = close_rhs(&mf0.unpack_like(y), params, treatment, t).pack();
            dy.copy_from_slice(&d);
        },
        times[0],
        &mut y,
        &times[1..],
        &settings.integrator,
        |t, y| {
            let mf = mf0.unpack_like(y);
            for (a, b) in mf.bloch_invariants().iter().zip(&inv0) {
                drift = drift.max((a - b).abs());
            }
            traj.push(t, observe(&mf, params, treatment, t));
            Ok(())
        },
    )?;
    traj.meta.max_invariant_drift = Some(drift);
    traj.meta.steps_accepted = stats.accepted;
    traj.meta.steps_rejected = stats.rejected;
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{ModeState, SiteState};
    use crate::hamiltonian::{build_total, Boundary, Operators};
    use crate::hilbert::{build_space, SpaceSpec};
    use rand::{Rng, SeedableRng};

    fn random_state<R: Rng>(n: usize, nf: usize, nph: usize, rng: &mut R) -> ProductState {
        ProductState {
            sites: (0..n)
                .map(|_| SiteState::Angles {
                    theta: rng.gen_range(0.0..std::f64::consts::PI),
                    phi: rng.gen_range(0.0..std::f64::consts::TAU),
                })
                .collect(),
            field: (0..nf)
                .map(|_| ModeState::coherent(C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))))
                .collect(),
            phonons: (0..nph)
                .map(|_| ModeState::coherent(C64::new(rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3))))
                .collect(),
        }
    }

    #[test]
    fn explicit_and_compact_site_rhs_agree() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for boundary in [Boundary::Open, Boundary::Periodic] {
            let mut p = SystemParams::random(4, 2, 1, &mut rng);
            p.boundary = boundary;
            let mf = MeanFieldState::from_product(&random_state(4, 2, 1, &mut rng));
            let explicit = close_rhs(&mf, &p, &FieldTreatment::Dynamical, 0.3);
            let compact = compact_site_rhs(&mf, &p, &FieldTreatment::Dynamical, 0.3);
            for (a, b) in explicit.sites.iter().zip(&compact) {
                for (x, y) in a.components().iter().zip(b.components()) {
                    assert!((*x - y).norm() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn closure_is_expectation_of_exact_rhs_on_product_states() {
        // On a product state with coherent modes of a large cutoff the exact
        // Heisenberg right-hand side factorizes, which pins the closure rule.
        let space = build_space(&SpaceSpec::new(2, &[30], &[])).unwrap();
        let ops = Operators::new(&space);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let p = SystemParams::random(2, 1, 0, &mut rng);
        let st = ProductState {
            sites: vec![SiteState::Angles { theta: 1.1, phi: 0.4 }, SiteState::Angles { theta: 2.0, phi: -1.0 }],
            field: vec![ModeState::coherent(C64::new(0.7, 0.2))],
            phonons: vec![],
        };
        let psi = st.build(&space).unwrap();
        let mf = MeanFieldState::from_product(&st);
        let d = close_rhs(&mf, &p, &FieldTreatment::Dynamical, 0.0);
        for l in 0..2 {
            let exact = crate::dynamics::heisenberg_rhs_sigma(&ops, &p, l, 0.0);
            assert!((exact.z.expectation(&psi) - d.sites[l].z).norm() < 1e-12);
            assert!((exact.minus.expectation(&psi) - d.sites[l].minus).norm() < 1e-12);
        }
        let (da, _) = crate::dynamics::heisenberg_rhs_field(&ops, &p, 0, 0.0);
        assert!((da.expectation(&psi) - d.field[0][0]).norm() < 1e-12);
        // energy functional equals ⟨H⟩
        let h = build_total(&ops, &p, 0.0);
        assert!((h.expectation(&psi).re - mean_field_energy(&mf, &p, &FieldTreatment::Dynamical, 0.0)).abs() < 1e-11);
    }

    #[test]
    fn bloch_invariant_and_energy_conserved() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let p = SystemParams::random(3, 1, 1, &mut rng);
        let mf = MeanFieldState::from_product(&random_state(3, 1, 1, &mut rng));
        for inv in mf.bloch_invariants() {
            assert!((inv - 1.0).abs() < 1e-14);
        }
        let s = PropagateSettings::new(60.0, 0.5).with_tolerances(1e-11, 1e-13);
        let tr = mf_propagate(&mf, &p, &FieldTreatment::Dynamical, &s).unwrap();
        assert!(tr.meta.max_invariant_drift.unwrap() < 1e-8);
        let e = tr.column("energy").unwrap();
        assert!(e.iter().all(|x| (x - e[0]).abs() < 1e-8 * e[0].abs().max(1.0)));
    }

    #[test]
    fn prescribed_field_is_free() {
        let p = SystemParams::uniform_chain(1, 1.0, 0.0).with_field_mode(0.9, 0.0, 0.05, 1.0);
        let st = ProductState::ground(1, 1, 0);
        let alpha = [[1.5, 0.0]];
        let mut mf = MeanFieldState::from_product(&st);
        mf.field[0] = [C64::new(1.5, 0.0), C64::new(1.5, 0.0)];
        let tr = mf_propagate(&mf, &p, &FieldTreatment::Prescribed(alpha.to_vec()), &PropagateSettings::new(5.0, 1.0)).unwrap();
        let a = tr.complex_column("a0").unwrap();
        for (t, v) in tr.times.iter().zip(a) {
            assert!((v - C64::from_polar(1.5, -0.9 * t)).norm() < 1e-14);
        }
        let bad = mf_propagate(&mf, &p, &FieldTreatment::Prescribed(vec![]), &PropagateSettings::new(5.0, 1.0));
        assert!(bad.is_err());
    }

    #[test]
    fn pack_round_trip() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let mf = MeanFieldState::from_product(&random_state(2, 2, 1, &mut rng));
        assert_eq!(mf.unpack_like(&mf.pack()), mf);
        assert_eq!(mf.pack().len(), mf.len());
    }
}
