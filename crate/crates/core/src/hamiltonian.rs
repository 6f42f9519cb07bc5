//! Chain, field, interaction and phonon Hamiltonians.
//!
//! Units: ħ = 1, so every energy is an angular frequency.
//!
//! The exchange term is written as `Σ_bonds [J(σ⁺σ⁻' + σ⁻σ⁺' + ½σᶻσᶻ') + H.c.]`
//! and the Hermitian conjugate is taken literally, so the effective bond
//! coupling is `2J`. Halve `exchange_j` to match conventions that write the
//! bond term once.

use num_complex::Complex64 as C64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hilbert::{
    annihilation_local, embed_local, number_local, sum_ops, top_level_local, Operator, SpaceIndex,
    Subsystem,
};
use crate::transition_ops::{build_transition_set, TransitionSet};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid parameters: {}", .0.join("; "))]
pub struct ParamsError(pub Vec<String>);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    #[default]
    Open,
    Periodic,
}

/// How the plane-wave phase `exp(−iω_k t + i k r_j)` of the site-field
/// coupling is treated.
///
/// `LiteralTimeDependent` keeps the `e^{−iω_k t}` factor inside the
/// Schrödinger-picture Hamiltonian, which double-counts free field evolution
/// alongside the field Hamiltonian. `StaticPhaseAtT0` freezes the phase at
/// `t = 0`, giving a time-independent, energy-conserving Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingMode {
    LiteralTimeDependent,
    #[default]
    StaticPhaseAtT0,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldMode {
    pub omega: f64,
    #[serde(default)]
    pub wavevector: f64,
    /// Field-strength scale of the mode.
    pub amplitude: f64,
    /// `e_k · e_{P_j}` for every site.
    pub polarization_overlap: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhononMode {
    pub nu: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParams {
    /// `(E_α, E_β)` per site.
    pub site_energies: Vec<[f64; 2]>,
    #[serde(default)]
    pub exchange_j: f64,
    #[serde(default)]
    pub boundary: Boundary,
    #[serde(default)]
    pub field_modes: Vec<FieldMode>,
    /// Transition dipole `p_j` per site.
    pub dipole: Vec<f64>,
    /// Site coordinate `r_j` along the chain.
    pub site_positions: Vec<f64>,
    #[serde(default)]
    pub coupling_mode: CouplingMode,
    #[serde(default)]
    pub phonon_modes: Vec<PhononMode>,
}

/// Transition frequency of a magnetic center, `γ H₀`.
pub fn larmor_frequency(gyromagnetic_ratio: f64, static_field: f64) -> f64 {
    gyromagnetic_ratio * static_field
}

/// `r_j = j·a`
pub fn lattice_positions(n_sites: usize, spacing: f64) -> Vec<f64> {
    (0..n_sites).map(|j| j as f64 * spacing).collect()
}

impl SystemParams {
    /// Identical sites `(0, ω)` on a unit lattice, no modes.
    pub fn uniform_chain(n_sites: usize, omega: f64, exchange_j: f64) -> Self {
        Self {
            site_energies: vec![[0.0, omega]; n_sites],
            exchange_j,
            boundary: Boundary::Open,
            field_modes: Vec::new(),
            dipole: vec![1.0; n_sites],
            site_positions: lattice_positions(n_sites, 1.0),
            coupling_mode: CouplingMode::StaticPhaseAtT0,
            phonon_modes: Vec::new(),
        }
    }

    /// Adds a field mode with the same polarization overlap on every site.
    pub fn with_field_mode(mut self, omega: f64, wavevector: f64, amplitude: f64, overlap: f64) -> Self {
        self.field_modes.push(FieldMode {
            omega,
            wavevector,
            amplitude,
            polarization_overlap: vec![overlap; self.n_sites()],
        });
        self
    }

    pub fn with_phonon_mode(mut self, nu: f64, lambda: f64) -> Self {
        self.phonon_modes.push(PhononMode { nu, lambda });
        self
    }

    pub fn n_sites(&self) -> usize {
        self.site_energies.len()
    }

    /// `ω_v = E_β − E_α`
    pub fn omega(&self, site: usize) -> f64 {
        let [ea, eb] = self.site_energies[site];
        eb - ea
    }

    pub fn omegas(&self) -> Vec<f64> {
        (0..self.n_sites()).map(|v| self.omega(v)).collect()
    }

    /// Bond coupling after the literal Hermitian conjugate, `2J`.
    pub fn effective_exchange(&self) -> f64 {
        2.0 * self.exchange_j
    }

    /// Largest angular frequency present (sites, field, phonons).
    pub fn fastest_frequency(&self) -> f64 {
        self.omegas()
            .into_iter()
            .chain(self.field_modes.iter().map(|m| m.omega))
            .chain(self.phonon_modes.iter().map(|m| m.nu))
            .fold(0.0, f64::max)
    }

    /// Nearest-neighbour bonds `(v, v+1)` under the boundary policy.
    pub fn bonds(&self) -> Vec<(usize, usize)> {
        let n = self.n_sites();
        match self.boundary {
            Boundary::Open => (0..n.saturating_sub(1)).map(|v| (v, v + 1)).collect(),
            Boundary::Periodic => (0..n)
                .map(|v| (v, (v + 1) % n))
                .filter(|(v, w)| v != w)
                .collect(),
        }
    }

    /// Neighbours `l−1`, `l+1` of a site under the boundary policy. For a
    /// periodic pair the partner appears twice, matching [`Self::bonds`].
    pub fn neighbors(&self, l: usize) -> Vec<usize> {
        let n = self.n_sites();
        match self.boundary {
            Boundary::Open => {
                let mut out = Vec::with_capacity(2);
                if l > 0 {
                    out.push(l - 1);
                }
                if l + 1 < n {
                    out.push(l + 1);
                }
                out
            }
            Boundary::Periodic if n >= 2 => vec![(l + n - 1) % n, (l + 1) % n],
            Boundary::Periodic => Vec::new(),
        }
    }

    /// `q_{jk}(t) = −p_j (e_k·e_{P_j}) 𝔈_k exp(−iω_k t + i k r_j)`; in static
    /// mode the phase is evaluated at `t = 0`.
    pub fn coupling_q(&self, j: usize, k: usize, t: f64) -> C64 {
        let mode = &self.field_modes[k];
        let t_eff = match self.coupling_mode {
            CouplingMode::LiteralTimeDependent => t,
            CouplingMode::StaticPhaseAtT0 => 0.0,
        };
        let magnitude = -self.dipole[j] * mode.polarization_overlap[j] * mode.amplitude;
        let phase = -mode.omega * t_eff + mode.wavevector * self.site_positions[j];
        C64::from_polar(magnitude, phase)
    }

    /// Checks the parameter set on its own and against a space with
    /// `n_field` / `n_phonon` quantized modes. All problems are collected.
    pub fn check(&self, n_sites: usize, n_field: Option<usize>, n_phonon: usize) -> Result<(), ParamsError> {
        let mut errs = Vec::new();
        let n = self.n_sites();
        if n != n_sites {
            errs.push(format!("site_energies has {n} entries, space has {n_sites} sites"));
        }
        for (v, [ea, eb]) in self.site_energies.iter().enumerate() {
            if !(eb > ea) {
                errs.push(format!("site {v}: upper energy {eb} must exceed lower energy {ea}"));
            }
        }
        if !self.exchange_j.is_finite() {
            errs.push("exchange_j must be finite".into());
        }
        if self.dipole.len() != n {
            errs.push(format!("dipole has {} entries, expected {n}", self.dipole.len()));
        }
        if self.site_positions.len() != n {
            errs.push(format!(
                "site_positions has {} entries, expected {n}",
                self.site_positions.len()
            ));
        }
        if let Some(nf) = n_field {
            if self.field_modes.len() != nf {
                errs.push(format!(
                    "{} field modes in params, {nf} in space",
                    self.field_modes.len()
                ));
            }
        }
        for (k, m) in self.field_modes.iter().enumerate() {
            if !(m.omega > 0.0) {
                errs.push(format!("field mode {k}: omega must be positive"));
            }
            if !m.amplitude.is_finite() || !m.wavevector.is_finite() {
                errs.push(format!("field mode {k}: amplitude and wavevector must be finite"));
            }
            if m.polarization_overlap.len() != n {
                errs.push(format!(
                    "field mode {k}: polarization_overlap has {} entries, expected {n}",
                    m.polarization_overlap.len()
                ));
            }
        }
        if self.phonon_modes.len() != n_phonon {
            errs.push(format!(
                "{} phonon modes in params, {n_phonon} in space",
                self.phonon_modes.len()
            ));
        }
        for (q, m) in self.phonon_modes.iter().enumerate() {
            if !(m.nu > 0.0) {
                errs.push(format!("phonon mode {q}: nu must be positive"));
            }
            if !m.lambda.is_finite() {
                errs.push(format!("phonon mode {q}: lambda must be finite"));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ParamsError(errs))
        }
    }

    pub fn validate(&self, space: &SpaceIndex) -> Result<(), ParamsError> {
        self.check(space.n_sites(), Some(space.n_field_modes()), space.n_phonon_modes())
    }

    /// Random parameter draw used by the identity checks.
    pub fn random<R: Rng>(n_sites: usize, n_field: usize, n_phonon: usize, rng: &mut R) -> Self {
        let site_energies = (0..n_sites)
            .map(|_| {
                let ea = rng.gen_range(-0.5..0.5);
                [ea, ea + rng.gen_range(0.8..1.2)]
            })
            .collect();
        let field_modes = (0..n_field)
            .map(|_| FieldMode {
                omega: rng.gen_range(0.8..1.2),
                wavevector: rng.gen_range(0.0..std::f64::consts::PI),
                amplitude: rng.gen_range(0.05..0.3),
                polarization_overlap: (0..n_sites).map(|_| rng.gen_range(0.5..1.0)).collect(),
            })
            .collect();
        let phonon_modes = (0..n_phonon)
            .map(|_| PhononMode {
                nu: rng.gen_range(0.1..0.5),
                lambda: rng.gen_range(0.01..0.1),
            })
            .collect();
        Self {
            site_energies,
            exchange_j: rng.gen_range(-0.1..0.1),
            boundary: Boundary::Open,
            field_modes,
            dipole: (0..n_sites).map(|_| rng.gen_range(0.5..1.5)).collect(),
            site_positions: lattice_positions(n_sites, 1.0),
            coupling_mode: CouplingMode::StaticPhaseAtT0,
            phonon_modes,
        }
    }
}

/// Ladder operators of one bosonic mode, embedded.
#[derive(Debug, Clone)]
pub struct ModeOps {
    pub a: Operator,
    pub a_dag: Operator,
    pub number: Operator,
    pub top: Operator,
}

impl ModeOps {
    fn new(space: &SpaceIndex, s: Subsystem, name: &str) -> Self {
        let cutoff = space.local_dim(s).expect("mode exists") - 1;
        let a = embed_local(space, s, &annihilation_local(cutoff))
            .expect("mode exists")
            .with_tag(name.to_string());
        let a_dag = a.adjoint();
        let number = embed_local(space, s, &number_local(cutoff)).expect("mode exists");
        let top = embed_local(space, s, &top_level_local(cutoff)).expect("mode exists");
        Self { a, a_dag, number, top }
    }

    /// `a + a†`
    pub fn quadrature(&self) -> Operator {
        &self.a + &self.a_dag
    }
}

/// Every embedded building block of the model, built once per space.
#[derive(Debug, Clone)]
pub struct Operators {
    pub space: SpaceIndex,
    pub sites: Vec<TransitionSet>,
    pub field: Vec<ModeOps>,
    pub phonons: Vec<ModeOps>,
}

impl Operators {
    pub fn new(space: &SpaceIndex) -> Self {
        let sites = (0..space.n_sites())
            .map(|v| build_transition_set(space, v).expect("site exists"))
            .collect();
        let field = (0..space.n_field_modes())
            .map(|k| ModeOps::new(space, Subsystem::Field(k), &format!("a_{k}")))
            .collect();
        let phonons = (0..space.n_phonon_modes())
            .map(|q| ModeOps::new(space, Subsystem::Phonon(q), &format!("b_{q}")))
            .collect();
        Self {
            space: space.clone(),
            sites,
            field,
            phonons,
        }
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn identity(&self) -> Operator {
        self.space.identity()
    }

    pub fn zero(&self) -> Operator {
        self.space.zero()
    }

    /// `σ⁻_j + σ⁺_j`
    pub fn sigma_x(&self, j: usize) -> Operator {
        &self.sites[j].minus + &self.sites[j].plus
    }

    /// `b̂_{lk} = q_{lk} â_k + â†_k q*_{lk}`
    pub fn field_drive(&self, params: &SystemParams, l: usize, k: usize, t: f64) -> Operator {
        let q = params.coupling_q(l, k, t);
        &self.field[k].a.scale(q) + &self.field[k].a_dag.scale(q.conj())
    }

    /// `Σ_k b̂_{lk}`
    pub fn total_field_drive(&self, params: &SystemParams, l: usize, t: f64) -> Operator {
        let terms: Vec<Operator> = (0..self.field.len())
            .map(|k| self.field_drive(params, l, k, t))
            .collect();
        sum_ops(self.dim(), &terms)
    }

    /// `Σ_q λ_q (b̂_q + b̂†_q)`
    pub fn phonon_displacement(&self, params: &SystemParams) -> Operator {
        let terms: Vec<Operator> = self
            .phonons
            .iter()
            .zip(&params.phonon_modes)
            .map(|(ph, m)| ph.quadrature().scale_re(m.lambda))
            .collect();
        sum_ops(self.dim(), &terms)
    }

    /// `Σ_j σᶻ_j`
    pub fn total_inversion(&self) -> Operator {
        sum_ops(self.dim(), self.sites.iter().map(|s| &s.z))
    }
}

/// `Σ_v Σ_m 𝓔_{mv} |m_v⟩⟨m_v|`
pub fn build_h0(ops: &Operators, params: &SystemParams) -> Operator {
    let space = &ops.space;
    let diag: Vec<f64> = (0..space.dim())
        .map(|i| {
            (0..space.n_sites())
                .map(|v| params.site_energies[v][space.occupation(i, v)])
                .sum()
        })
        .collect();
    Operator::diagonal(&diag, "H0")
}

/// Chain Hamiltonian: `H0` plus isotropic nearest-neighbour exchange.
pub fn build_hc(ops: &Operators, params: &SystemParams) -> Operator {
    let h0 = build_h0(ops, params);
    if params.exchange_j == 0.0 {
        return h0.with_tag("HC");
    }
    let bond_terms: Vec<Operator> = params
        .bonds()
        .into_iter()
        .map(|(v, w)| {
            let (a, b) = (&ops.sites[v], &ops.sites[w]);
            let flip = &(&a.plus * &b.minus) + &(&a.minus * &b.plus);
            &flip + &(&a.z * &b.z).scale_re(0.5)
        })
        .collect();
    let x = sum_ops(ops.dim(), &bond_terms).scale_re(params.exchange_j);
    (&h0 + &(&x + &x.adjoint())).with_tag("HC")
}

/// `Σ_j Σ_k [q_{jk}(t)(σ⁻_j+σ⁺_j)â_k + (σ⁻_j+σ⁺_j)â†_k q*_{jk}(t)]`
pub fn build_hcf(ops: &Operators, params: &SystemParams, t: f64) -> Operator {
    let terms: Vec<Operator> = (0..ops.sites.len())
        .filter(|_| !params.field_modes.is_empty())
        .map(|j| &ops.sigma_x(j) * &ops.total_field_drive(params, j, t))
        .collect();
    sum_ops(ops.dim(), &terms).with_tag("HCF")
}

/// `Σ_k ω_k (â†_k â_k + ½)`
pub fn build_hf(ops: &Operators, params: &SystemParams) -> Operator {
    let id = ops.identity();
    let terms: Vec<Operator> = ops
        .field
        .iter()
        .zip(&params.field_modes)
        .map(|(m, p)| (&m.number + &id.scale_re(0.5)).scale_re(p.omega))
        .collect();
    sum_ops(ops.dim(), &terms).with_tag("HF")
}

/// `Σ_q ν_q (b̂†_q b̂_q + ½)`
pub fn build_hp(ops: &Operators, params: &SystemParams) -> Operator {
    let id = ops.identity();
    let terms: Vec<Operator> = ops
        .phonons
        .iter()
        .zip(&params.phonon_modes)
        .map(|(m, p)| (&m.number + &id.scale_re(0.5)).scale_re(p.nu))
        .collect();
    sum_ops(ops.dim(), &terms).with_tag("HP")
}

/// `Σ_j Σ_q λ_q (b̂†_q + b̂_q) σᶻ_j`
pub fn build_hcp(ops: &Operators, params: &SystemParams) -> Operator {
    if ops.phonons.is_empty() {
        return ops.zero().with_tag("HCP");
    }
    (&ops.phonon_displacement(params) * &ops.total_inversion()).with_tag("HCP")
}

/// `HC + HF + HCF(t) + HP + HCP`
pub fn build_total(ops: &Operators, params: &SystemParams, t: f64) -> Operator {
    let parts = [
        build_hc(ops, params),
        build_hf(ops, params),
        build_hcf(ops, params, t),
        build_hp(ops, params),
        build_hcp(ops, params),
    ];
    sum_ops(ops.dim(), &parts).with_tag("H")
}

/// Harmonic term `e^{−iωt} A + e^{iωt} A†` of a generator.
#[derive(Debug, Clone)]
pub struct Drive {
    pub op: Operator,
    pub op_dag: Operator,
    pub omega: f64,
}

/// `H(t) = H_static + Σ_d [e^{−iω_d t} A_d + e^{iω_d t} A_d†]`
#[derive(Debug, Clone)]
pub struct Generator {
    pub static_part: Operator,
    pub drives: Vec<Drive>,
}

impl Generator {
    /// The full quantized model. In literal mode `q_{jk}(t) = q_{jk}(0)
    /// e^{−iω_k t}` for every site, so the interaction splits into one drive
    /// per field mode.
    pub fn from_model(ops: &Operators, params: &SystemParams) -> Self {
        let mut static_part = &(&build_hc(ops, params) + &build_hf(ops, params))
            + &(&build_hp(ops, params) + &build_hcp(ops, params));
        let mut drives = Vec::new();
        match params.coupling_mode {
            CouplingMode::StaticPhaseAtT0 => {
                static_part = &static_part + &build_hcf(ops, params, 0.0);
            }
            CouplingMode::LiteralTimeDependent => {
                for (k, mode) in params.field_modes.iter().enumerate() {
                    let terms: Vec<Operator> = (0..ops.sites.len())
                        .map(|j| (&ops.sigma_x(j) * &ops.field[k].a).scale(params.coupling_q(j, k, 0.0)))
                        .collect();
                    let op = sum_ops(ops.dim(), &terms);
                    drives.push(Drive {
                        op_dag: op.adjoint(),
                        op,
                        omega: mode.omega,
                    });
                }
            }
        }
        Self {
            static_part: static_part.with_tag("H_static"),
            drives,
        }
    }

    /// Classical-drive substitution `â_k → α_k e^{−iω_k t}` on a space without
    /// quantized field modes: `H_C + H_P + H_CP + Σ_{jk}(σ⁻_j+σ⁺_j)
    /// [q_{jk} α_k e^{−iω_k t} + c.c.]`, with `q_{jk}` from the configured
    /// coupling mode at `t = 0`.
    pub fn classical_drive(ops: &Operators, params: &SystemParams, amplitudes: &[C64]) -> Self {
        assert!(ops.field.is_empty(), "classical drive replaces the quantized field");
        assert_eq!(amplitudes.len(), params.field_modes.len());
        let static_part = &(&build_hc(ops, params) + &build_hp(ops, params)) + &build_hcp(ops, params);
        let drives = params
            .field_modes
            .iter()
            .enumerate()
            .map(|(k, mode)| {
                let terms: Vec<Operator> = (0..ops.sites.len())
                    .map(|j| ops.sigma_x(j).scale(params.coupling_q(j, k, 0.0) * amplitudes[k]))
                    .collect();
                let op = sum_ops(ops.dim(), &terms);
                Drive {
                    op_dag: op.adjoint(),
                    op,
                    omega: mode.omega,
                }
            })
            .collect();
        Self { static_part, drives }
    }

    pub fn dim(&self) -> usize {
        self.static_part.dim()
    }

    pub fn is_time_dependent(&self) -> bool {
        !self.drives.is_empty()
    }

    pub fn hamiltonian_at(&self, t: f64) -> Operator {
        self.drives.iter().fold(self.static_part.clone(), |acc, d| {
            let ph = C64::from_polar(1.0, -d.omega * t);
            &(&acc + &d.op.scale(ph)) + &d.op_dag.scale(ph.conj())
        })
    }

    /// `out ← H(t) ψ`
    pub fn apply(&self, t: f64, psi: &[C64], out: &mut [C64]) {
        self.static_part.apply(psi, out);
        for d in &self.drives {
            let ph = C64::from_polar(1.0, -d.omega * t);
            d.op.apply_add(ph, psi, out);
            d.op_dag.apply_add(ph.conj(), psi, out);
        }
    }

    /// `⟨ψ|H(t)|ψ⟩`
    pub fn energy(&self, t: f64, psi: &[C64]) -> f64 {
        let mut h = vec![C64::new(0.0, 0.0); psi.len()];
        self.apply(t, psi, &mut h);
        psi.iter().zip(&h).map(|(a, b)| a.conj() * b).sum::<C64>().re
    }
}
