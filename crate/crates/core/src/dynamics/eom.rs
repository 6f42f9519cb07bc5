//! Explicit Heisenberg equations of motion and their checks against the
//! commutator `i[H, O]`.
//!
//! Field term of `dσᶻ/dt`: the commutator gives `2i(σ⁻_l − σ⁺_l) Σ_k b̂_lk`.
//! Written with the opposite sign the Bloch length `(σᶻ)² + 4σ⁺σ⁻` would not
//! be conserved, so this sign is used throughout.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::DynamicsError;
use crate::hamiltonian::{build_total, Operators, SystemParams};
use crate::hilbert::{sum_ops, Operator};
use crate::transition_ops::{cross, OpVector, Triple};

const I: C64 = C64::new(0.0, 1.0);

/// Metric of the compact form `dσ/dt = g (σ × G)`.
pub const COMPACT_METRIC: [f64; 3] = [1.0, 1.0, 4.0];
/// Negative control: the compact form with a Euclidean metric.
pub const IDENTITY_METRIC: [f64; 3] = [1.0, 1.0, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Plus,
    Minus,
}

/// `i[H, O]`
pub fn commutator_rhs(h: &Operator, o: &Operator) -> Operator {
    h.commutator(o).scale(I)
}

fn neighbor_sums(ops: &Operators, params: &SystemParams, l: usize) -> OpVector {
    let nb = params.neighbors(l);
    let dim = ops.dim();
    Triple::new(
        sum_ops(dim, nb.iter().map(|&m| &ops.sites[m].minus)),
        sum_ops(dim, nb.iter().map(|&m| &ops.sites[m].plus)),
        sum_ops(dim, nb.iter().map(|&m| &ops.sites[m].z)),
    )
}

/// `±2i Σ_q λ_q (b̂_q + b̂†_q) σ^±_l`, the phonon contribution to `dσ^±_l/dt`.
pub fn phonon_correction_direct(ops: &Operators, params: &SystemParams, l: usize, branch: Branch) -> Operator {
    let x = ops.phonon_displacement(params);
    match branch {
        Branch::Plus => (&x * &ops.sites[l].plus).scale(I * 2.0),
        Branch::Minus => (&x * &ops.sites[l].minus).scale(-I * 2.0),
    }
}

/// `∫₀ᵗ S(t') sin(ν(t − t')) dt'` for a piecewise-linear history `S`
/// sampled at `(t_i, S_i)`; each segment is integrated exactly.
pub fn memory_kernel(history: &[(f64, f64)], nu: f64, t: f64) -> Result<f64, DynamicsError> {
    if history.len() < 2 {
        return Err(DynamicsError::InsufficientHistory(history.len()));
    }
    let t_last = history[history.len() - 1].0;
    if t > t_last + 1e-12 * t_last.abs().max(1.0) {
        return Err(DynamicsError::InvalidSettings(format!(
            "kernel requested at t = {t} beyond history end {t_last}"
        )));
    }
    let mut acc = 0.0;
    for w in history.windows(2) {
        let ((ta, sa), (tb_raw, sb_raw)) = (w[0], w[1]);
        if ta >= t {
            break;
        }
        let (tb, sb) = if tb_raw > t {
            (t, sa + (sb_raw - sa) * (t - ta) / (tb_raw - ta))
        } else {
            (tb_raw, sb_raw)
        };
        let slope = (sb - sa) / (tb - ta);
        let cos_b = (nu * (t - tb)).cos();
        let cos_a = (nu * (t - ta)).cos();
        let constant = (cos_b - cos_a) / nu;
        let linear = (tb - ta) * cos_b / nu + ((nu * (t - tb)).sin() - (nu * (t - ta)).sin()) / (nu * nu);
        acc += sa * constant + slope * linear;
    }
    Ok(acc)
}

/// `⟨b̂_q + b̂†_q⟩(t) = b₀e^{−iνt} + c.c. − 2λ ∫₀ᵗ Σ_j⟨σᶻ_j⟩(t') sin(ν(t−t')) dt'`
/// with the site inversion taken from a recorded history.
pub fn phonon_displacement_memory(
    params: &SystemParams,
    q: usize,
    b0: C64,
    history: &[(f64, f64)],
    t: f64,
) -> Result<f64, DynamicsError> {
    let m = &params.phonon_modes[q];
    let free = 2.0 * (b0 * C64::from_polar(1.0, -m.nu * t)).re;
    Ok(free - 2.0 * m.lambda * memory_kernel(history, m.nu, t)?)
}

/// Phonon contribution to `dσ^±_l/dt` with the bath eliminated: each
/// `b̂_q + b̂†_q` is replaced by its free part `b̂_q e^{−iνt} + h.c.` plus the
/// memory integral over the recorded inversion history.
pub fn phonon_correction_memory(
    ops: &Operators,
    params: &SystemParams,
    l: usize,
    branch: Branch,
    history: &[(f64, f64)],
    t: f64,
) -> Result<Operator, DynamicsError> {
    let id = ops.identity();
    let mut terms = Vec::with_capacity(ops.phonons.len());
    for (q, (ph, m)) in ops.phonons.iter().zip(&params.phonon_modes).enumerate() {
        let ph_t = C64::from_polar(1.0, -m.nu * t);
        let free = &ph.a.scale(ph_t) + &ph.a_dag.scale(ph_t.conj());
        let shift = -2.0 * m.lambda * memory_kernel(history, params.phonon_modes[q].nu, t)?;
        terms.push((&free + &id.scale_re(shift)).scale_re(m.lambda));
    }
    let x = sum_ops(ops.dim(), &terms);
    Ok(match branch {
        Branch::Plus => (&x * &ops.sites[l].plus).scale(I * 2.0),
        Branch::Minus => (&x * &ops.sites[l].minus).scale(-I * 2.0),
    })
}

/// Explicit right-hand sides `(dσ⁻_l/dt, dσ⁺_l/dt, dσᶻ_l/dt)`.
pub fn heisenberg_rhs_sigma(ops: &Operators, params: &SystemParams, l: usize, t: f64) -> OpVector {
    let s = &ops.sites[l];
    let omega = params.omega(l);
    let j = params.exchange_j;
    let b = ops.total_field_drive(params, l, t);
    let nb = neighbor_sums(ops, params, l);

    let z = &(&(&s.minus - &s.plus) * &b).scale(I * 2.0)
        + &(&s.minus.anticommutator(&nb.plus) - &s.plus.anticommutator(&nb.minus)).scale(I * 2.0 * j);
    let plus = &(&(&s.plus.scale(I * omega) - &(&s.z * &b).scale(I))
        + &(&s.plus.anticommutator(&nb.z) - &s.z.anticommutator(&nb.plus)).scale(I * j))
        + &phonon_correction_direct(ops, params, l, Branch::Plus);
    let minus = &(&(&s.minus.scale(-I * omega) + &(&s.z * &b).scale(I))
        + &(&s.z.anticommutator(&nb.minus) - &s.minus.anticommutator(&nb.z)).scale(I * j))
        + &phonon_correction_direct(ops, params, l, Branch::Minus);
    Triple::new(minus, plus, z)
}

/// `(dâ_k/dt, dâ†_k/dt)` with `dâ_k/dt = −iω_k â_k − i Σ_j (σ⁺_j + σ⁻_j) q*_jk`.
pub fn heisenberg_rhs_field(ops: &Operators, params: &SystemParams, k: usize, t: f64) -> (Operator, Operator) {
    let mode = &ops.field[k];
    let terms: Vec<Operator> = (0..ops.sites.len())
        .map(|j| ops.sigma_x(j).scale(params.coupling_q(j, k, t).conj()))
        .collect();
    let drive = sum_ops(ops.dim(), &terms);
    let da = &mode.a.scale(-I * params.field_modes[k].omega) - &drive.scale(I);
    let da_dag = da.adjoint();
    (da, da_dag)
}

/// `(db̂_q/dt, db̂†_q/dt)` with `db̂_q/dt = −iν_q b̂_q − iλ_q Σ_j σᶻ_j`.
pub fn heisenberg_rhs_phonon(ops: &Operators, params: &SystemParams, q: usize) -> (Operator, Operator) {
    let m = &params.phonon_modes[q];
    let db = &ops.phonons[q].a.scale(-I * m.nu) - &ops.total_inversion().scale(I * m.lambda);
    let db_dag = db.adjoint();
    (db, db_dag)
}

/// Effective-field vector `G_l` with `b̂_lk = q_lk â_k + â†_k q*_lk`:
///
/// * `G⁻ = −Σ_k b̂_lk − 2J Σ_m σ⁻_m`
/// * `G⁺ = −Σ_k b̂_lk − 2J Σ_m σ⁺_m`
/// * `Gᶻ = −ω_l − 2J Σ_m σᶻ_m − 2 Σ_q λ_q (b̂_q + b̂†_q)`
///
/// where `m` runs over the neighbours of `l` and `2J` is the effective bond
/// coupling.
pub fn build_g_vector(ops: &Operators, params: &SystemParams, l: usize, t: f64) -> OpVector {
    let b = ops.total_field_drive(params, l, t);
    let nb = neighbor_sums(ops, params, l);
    let jj = params.effective_exchange();
    let minus = -&(&b + &nb.minus.scale_re(jj));
    let plus = -&(&b + &nb.plus.scale_re(jj));
    let z = -&(&(&ops.identity().scale_re(params.omega(l)) + &nb.z.scale_re(jj))
        + &ops.phonon_displacement(params).scale_re(2.0));
    Triple::new(minus, plus, z)
}

/// `g ∘ (σ_l × G_l)` with the symmetrized generalized cross product.
pub fn compact_rhs(ops: &Operators, params: &SystemParams, l: usize, t: f64, metric: [f64; 3]) -> OpVector {
    let g = build_g_vector(ops, params, l, t);
    cross(&ops.sites[l].vector(), &g).with_metric(metric)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityEntry {
    pub label: String,
    pub residual: f64,
    /// Boson identities are compared below the top Fock level, where the
    /// truncated ladder operators still satisfy `[a, a†] = 1`.
    pub projected: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub entries: Vec<IdentityEntry>,
}

impl IdentityReport {
    pub fn max_residual(&self) -> f64 {
        self.entries.iter().map(|e| e.residual).fold(0.0, f64::max)
    }

    pub fn worst(&self) -> Option<&IdentityEntry> {
        self.entries.iter().max_by(|a, b| a.residual.total_cmp(&b.residual))
    }

    pub fn passed(&self, tol: f64) -> bool {
        self.max_residual() <= tol
    }
}

/// Residual `‖explicit − i[H(t), O]‖` for every σ, field and phonon equation.
pub fn eom_identity_report(ops: &Operators, params: &SystemParams, t: f64) -> IdentityReport {
    let h = build_total(ops, params, t);
    let keep = ops.space.below_top_mask();
    let mut entries = Vec::new();
    for l in 0..ops.sites.len() {
        let rhs = heisenberg_rhs_sigma(ops, params, l, t);
        let s = &ops.sites[l];
        for (name, explicit, o) in [
            ("minus", &rhs.minus, &s.minus),
            ("plus", &rhs.plus, &s.plus),
            ("z", &rhs.z, &s.z),
        ] {
            entries.push(IdentityEntry {
                label: format!("sigma{name}_{l}"),
                residual: (explicit - &commutator_rhs(&h, o)).norm_op_bound(),
                projected: false,
            });
        }
    }
    let mut boson = |label: String, explicit: &Operator, o: &Operator| {
        let diff = explicit - &commutator_rhs(&h, o);
        entries.push(IdentityEntry {
            label,
            residual: diff.restrict(&keep).norm_op_bound(),
            projected: true,
        });
    };
    for k in 0..ops.field.len() {
        let (da, da_dag) = heisenberg_rhs_field(ops, params, k, t);
        boson(format!("a_{k}"), &da, &ops.field[k].a);
        boson(format!("adag_{k}"), &da_dag, &ops.field[k].a_dag);
    }
    for q in 0..ops.phonons.len() {
        let (db, db_dag) = heisenberg_rhs_phonon(ops, params, q);
        boson(format!("b_{q}"), &db, &ops.phonons[q].a);
        boson(format!("bdag_{q}"), &db_dag, &ops.phonons[q].a_dag);
    }
    IdentityReport { entries }
}

/// Residuals of the compact form against the explicit equations, per site
/// and component (`[minus, plus, z]`).
pub fn verify_compact_form(ops: &Operators, params: &SystemParams, t: f64, metric: [f64; 3]) -> IdentityReport {
    let mut entries = Vec::new();
    for l in 0..ops.sites.len() {
        let explicit = heisenberg_rhs_sigma(ops, params, l, t);
        let compact = compact_rhs(ops, params, l, t, metric);
        for (name, a, b) in [
            ("minus", &explicit.minus, &compact.minus),
            ("plus", &explicit.plus, &compact.plus),
            ("z", &explicit.z, &compact.z),
        ] {
            entries.push(IdentityEntry {
                label: format!("compact_{name}_{l}"),
                residual: (a - b).norm_op_bound(),
                projected: false,
            });
        }
    }
    IdentityReport { entries }
}
