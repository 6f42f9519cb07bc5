use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::MeanFieldError;
use crate::hamiltonian::SystemParams;

/// Largest `Ω/ω_d` for which the rotating-wave solution is offered.
pub const RABI_MAX_DRIVE_RATIO: f64 = 0.1;
/// Largest `|Δ|/ω_d` for which the rotating-wave solution is offered.
pub const RABI_MAX_DETUNING_RATIO: f64 = 0.1;

/// Rotating-wave solution for one two-level center driven by a classical
/// mode `a(t) = α e^{−iω_d t}`, starting in the lower level.
///
/// With `κ = q α` the drive Rabi frequency is `Ω = 2|κ|`, the detuning
/// `Δ = ω₀ − ω_d` and the generalized frequency `Ω_R = √(Δ² + Ω²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RabiSolution {
    pub omega0: f64,
    pub drive_omega: f64,
    pub kappa: C64,
    pub detuning: f64,
    pub rabi: f64,
    pub generalized_rabi: f64,
}

impl RabiSolution {
    /// `(c_α, c_β)` in the frame rotating at `ω_d`.
    fn rotating_amplitudes(&self, t: f64) -> (C64, C64) {
        let x = self.generalized_rabi * t / 2.0;
        let ca = C64::new(x.cos(), self.detuning / self.generalized_rabi * x.sin());
        let cb = -C64::new(0.0, x.sin()) * self.kappa * (2.0 / self.generalized_rabi);
        (ca, cb)
    }

    /// `⟨σᶻ⟩(t) = −1 + 2 (Ω/Ω_R)² sin²(Ω_R t/2)`
    pub fn sz(&self, t: f64) -> f64 {
        let x = (self.generalized_rabi * t / 2.0).sin();
        -1.0 + 2.0 * self.max_excitation() * x * x
    }

    /// `⟨σ⁻⟩(t)` in the laboratory frame.
    pub fn s_minus(&self, t: f64) -> C64 {
        let (ca, cb) = self.rotating_amplitudes(t);
        ca.conj() * cb * C64::from_polar(1.0, -self.drive_omega * t)
    }

    /// Peak upper-level population `(Ω/Ω_R)²`.
    pub fn max_excitation(&self) -> f64 {
        (self.rabi / self.generalized_rabi).powi(2)
    }

    /// Time of the first population maximum, `π/Ω_R`.
    pub fn inversion_time(&self) -> f64 {
        std::f64::consts::PI / self.generalized_rabi
    }

    /// Peak-to-peak amplitude of `⟨σᶻ⟩`, `2(Ω/Ω_R)²`.
    pub fn sz_amplitude(&self) -> f64 {
        2.0 * self.max_excitation()
    }
}

/// Builds the rotating-wave solution for site 0 driven by field mode 0 with
/// classical amplitude `alpha`, refusing parameters outside the regime where
/// the counter-rotating terms are negligible.
pub fn rabi_oracle(params: &SystemParams, alpha: C64) -> Result<RabiSolution, MeanFieldError> {
    if params.n_sites() != 1 || params.field_modes.len() != 1 {
        return Err(MeanFieldError::OutsideValidity(format!(
            "needs one site and one field mode, got {} and {}",
            params.n_sites(),
            params.field_modes.len()
        )));
    }
    let drive_omega = params.field_modes[0].omega;
    if !(drive_omega > 0.0) {
        return Err(MeanFieldError::OutsideValidity("drive frequency must be positive".into()));
    }
    let omega0 = params.omega(0);
    let kappa = params.coupling_q(0, 0, 0.0) * alpha;
    let rabi = 2.0 * kappa.norm();
    let detuning = omega0 - drive_omega;
    if rabi / drive_omega > RABI_MAX_DRIVE_RATIO {
        return Err(MeanFieldError::OutsideValidity(format!(
            "Ω/ω = {:.3} exceeds {RABI_MAX_DRIVE_RATIO}",
            rabi / drive_omega
        )));
    }
    if detuning.abs() / drive_omega > RABI_MAX_DETUNING_RATIO {
        return Err(MeanFieldError::OutsideValidity(format!(
            "|Δ|/ω = {:.3} exceeds {RABI_MAX_DETUNING_RATIO}",
            detuning.abs() / drive_omega
        )));
    }
    if rabi == 0.0 && detuning == 0.0 {
        return Err(MeanFieldError::OutsideValidity("no drive and no detuning".into()));
    }
    Ok(RabiSolution {
        omega0,
        drive_omega,
        kappa,
        detuning,
        rabi,
        generalized_rabi: (detuning * detuning + rabi * rabi).sqrt(),
    })
}
