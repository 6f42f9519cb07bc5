use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::DynamicsError;
use crate::hilbert::SpaceIndex;

/// Local state of one two-level center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SiteState {
    Lower,
    Upper,
    /// `cos(θ/2)|α⟩ + e^{iφ} sin(θ/2)|β⟩`
    Angles { theta: f64, phi: f64 },
}

impl SiteState {
    /// Amplitudes on `(|α⟩, |β⟩)`.
    pub fn amplitudes(&self) -> [C64; 2] {
        match *self {
            SiteState::Lower => [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
            SiteState::Upper => [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
            SiteState::Angles { theta, phi } => [
                C64::new((theta / 2.0).cos(), 0.0),
                C64::from_polar((theta / 2.0).sin(), phi),
            ],
        }
    }

    /// `(⟨σ⁻⟩, ⟨σᶻ⟩)` in this state.
    pub fn moments(&self) -> (C64, f64) {
        let [ca, cb] = self.amplitudes();
        (ca.conj() * cb, cb.norm_sqr() - ca.norm_sqr())
    }
}

/// Local state of one bosonic mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeState {
    Vacuum,
    Fock { n: usize },
    /// Coherent state, truncated at the cutoff and renormalized.
    Coherent { re: f64, im: f64 },
}

impl ModeState {
    pub fn coherent(alpha: C64) -> Self {
        ModeState::Coherent { re: alpha.re, im: alpha.im }
    }

    /// Mean amplitude `⟨a⟩` of the untruncated state.
    pub fn mean_amplitude(&self) -> C64 {
        match *self {
            ModeState::Coherent { re, im } => C64::new(re, im),
            _ => C64::new(0.0, 0.0),
        }
    }

    pub fn amplitudes(&self, cutoff: usize) -> Result<Vec<C64>, DynamicsError> {
        let mut amps = vec![C64::new(0.0, 0.0); cutoff + 1];
        match *self {
            ModeState::Vacuum => amps[0] = C64::new(1.0, 0.0),
            ModeState::Fock { n } => {
                if n > cutoff {
                    return Err(DynamicsError::InvalidState(format!(
                        "Fock level {n} above cutoff {cutoff}"
                    )));
                }
                amps[n] = C64::new(1.0, 0.0);
            }
            ModeState::Coherent { re, im } => {
                let alpha = C64::new(re, im);
                let mut c = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
                for (n, slot) in amps.iter_mut().enumerate() {
                    if n > 0 {
                        c = c * alpha / (n as f64).sqrt();
                    }
                    *slot = c;
                }
                let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
                amps.iter_mut().for_each(|a| *a /= norm);
            }
        }
        Ok(amps)
    }
}

/// Initial product state over sites, field modes and phonon modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProductState {
    pub sites: Vec<SiteState>,
    #[serde(default)]
    pub field: Vec<ModeState>,
    #[serde(default)]
    pub phonons: Vec<ModeState>,
}

impl ProductState {
    pub fn ground(n_sites: usize, n_field: usize, n_phonon: usize) -> Self {
        Self {
            sites: vec![SiteState::Lower; n_sites],
            field: vec![ModeState::Vacuum; n_field],
            phonons: vec![ModeState::Vacuum; n_phonon],
        }
    }

    /// Kronecker product of the local amplitude vectors in subsystem order.
    pub fn build(&self, space: &SpaceIndex) -> Result<Vec<C64>, DynamicsError> {
        if self.sites.len() != space.n_sites()
            || self.field.len() != space.n_field_modes()
            || self.phonons.len() != space.n_phonon_modes()
        {
            return Err(DynamicsError::InvalidState(format!(
                "state has {}/{}/{} sites/field/phonon factors, space has {}/{}/{}",
                self.sites.len(),
                self.field.len(),
                self.phonons.len(),
                space.n_sites(),
                space.n_field_modes(),
                space.n_phonon_modes()
            )));
        }
        let dims = space.local_dims();
        let mut factors: Vec<Vec<C64>> = self.sites.iter().map(|s| s.amplitudes().to_vec()).collect();
        let modes = self.field.iter().chain(&self.phonons);
        for (m, &d) in modes.zip(&dims[self.sites.len()..]) {
            factors.push(m.amplitudes(d - 1)?);
        }
        let mut psi = vec![C64::new(1.0, 0.0)];
        for f in &factors {
            psi = psi.iter().flat_map(|&p| f.iter().map(move |&x| p * x)).collect();
        }
        Ok(psi)
    }
}

pub fn norm(psi: &[C64]) -> f64 {
    psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}
