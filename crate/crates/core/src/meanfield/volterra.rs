//! Diagnostics for regular versus broadband mean-field dynamics.
//!
//! Two numbers are estimated: the largest Lyapunov exponent from the
//! renormalized separation of two nearby trajectories, and the spectral
//! flatness of the site and mode observables. Together with the peak
//! structure they sort a run into periodic, quasiperiodic or broadband.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::spectrum::{spectrum, SpectrumOptions, Window};
use super::{close_rhs, mf_propagate, FieldTreatment, MeanFieldError, MeanFieldState};
use crate::dynamics::{integrate, IntegratorSettings, PropagateSettings};
use crate::hamiltonian::SystemParams;

const MIN_SPECTRUM_POINTS: usize = 64;
const MIN_INTERVALS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolterraSettings {
    pub t_end: f64,
    pub dt_out: f64,
    /// Time between renormalizations of the separation vector.
    pub renorm_interval: f64,
    pub initial_separation: f64,
    pub integrator: IntegratorSettings,
    /// Exponents below this (after subtracting two standard errors) count
    /// as zero.
    pub lyapunov_threshold: f64,
    pub flatness_threshold: f64,
    /// Peaks below this fraction of a signal's largest bin are ignored.
    pub peak_threshold: f64,
}

impl Default for VolterraSettings {
    fn default() -> Self {
        Self {
            t_end: 400.0,
            dt_out: 0.1,
            renorm_interval: 5.0,
            initial_separation: 1e-8,
            integrator: IntegratorSettings {
                rtol: 1e-10,
                atol: 1e-12,
                ..Default::default()
            },
            lyapunov_threshold: 1e-3,
            flatness_threshold: 0.3,
            peak_threshold: 1e-2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Periodic,
    Quasiperiodic,
    Broadband,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolterraReport {
    pub lyapunov: f64,
    pub lyapunov_stderr: f64,
    pub intervals: usize,
    /// Spectral flatness per analysed signal.
    pub flatness: Vec<(String, f64)>,
    /// Distinct non-zero peak frequencies over all signals, ascending.
    pub peak_frequencies: Vec<f64>,
    pub d_omega: f64,
    pub regime: Regime,
}

fn separation(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

fn lyapunov(
    mf0: &MeanFieldState,
    params: &SystemParams,
    treatment: &FieldTreatment,
    s: &VolterraSettings,
) -> Result<(f64, f64, usize), MeanFieldError> {
    let intervals = (s.t_end / s.renorm_interval).floor() as usize;
    let mut y1 = mf0.pack();
    // perturb every slot, keeping conjugate pairs conjugate
    let n = y1.len();
    let mut y2 = y1.clone();
    let mut delta = vec![C64::default(); n];
    let mut l = 0;
    for _ in &mf0.sites {
        let d = C64::new(1.0, 0.5);
        delta[l] = d;
        delta[l + 1] = d.conj();
        delta[l + 2] = C64::new(-0.7, 0.0);
        l += 3;
    }
    while l < n {
        let d = C64::new(0.6, -0.4);
        delta[l] = d;
        delta[l + 1] = d.conj();
        l += 2;
    }
    let dn = separation(&delta, &vec![C64::default(); n]);
    for (y, d) in y2.iter_mut().zip(&delta) {
        *y += d * (s.initial_separation / dn);
    }

    let rhs = |t: f64, y: &[C64], dy: &mut [C64]| {
        dy.copy_from_slice(&close_rhs(&mf0.unpack_like(y), params, treatment, t).pack());
    };
    let mut logs = Vec::with_capacity(intervals);
    let mut t = 0.0;
    for i in 0..intervals {
        let t_next = (i + 1) as f64 * s.renorm_interval;
        integrate(rhs, t, &mut y1, &[t_next], &s.integrator, |_, _| Ok(()))?;
        integrate(rhs, t, &mut y2, &[t_next], &s.integrator, |_, _| Ok(()))?;
        let d = separation(&y1, &y2);
        logs.push((d / s.initial_separation).ln() / s.renorm_interval);
        let scale = s.initial_separation / d;
        for (b, a) in y2.iter_mut().zip(&y1) {
            *b = a + (*b - a) * scale;
        }
        t = t_next;
    }
    let m = logs.len() as f64;
    let mean = logs.iter().sum::<f64>() / m;
    let var = logs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    Ok((mean, (var / m).sqrt(), intervals))
}

fn classify(
    lyap: f64,
    stderr: f64,
    max_flatness: f64,
    peaks: &[f64],
    d_omega: f64,
    s: &VolterraSettings,
) -> Regime {
    if lyap - 2.0 * stderr > s.lyapunov_threshold || max_flatness > s.flatness_threshold {
        return Regime::Broadband;
    }
    let Some(&f0) = peaks.first() else {
        return Regime::Periodic;
    };
    let harmonic = peaks.iter().all(|&f| {
        let order = (f / f0).round().max(1.0);
        (f - order * f0).abs() <= 2.0 * d_omega * order
    });
    if harmonic {
        Regime::Periodic
    } else {
        Regime::Quasiperiodic
    }
}

/// Runs the mean-field dynamics from `mf0` and classifies the regime.
pub fn volterra_diagnostics(
    mf0: &MeanFieldState,
    params: &SystemParams,
    treatment: &FieldTreatment,
    settings: &VolterraSettings,
) -> Result<VolterraReport, MeanFieldError> {
    let points = (settings.t_end / settings.dt_out).floor() as usize + 1;
    if points < MIN_SPECTRUM_POINTS {
        return Err(MeanFieldError::TooShort {
            needed: MIN_SPECTRUM_POINTS,
            got: points,
        });
    }
    let intervals = (settings.t_end / settings.renorm_interval).floor() as usize;
    if intervals < MIN_INTERVALS {
        return Err(MeanFieldError::TooShort {
            needed: MIN_INTERVALS,
            got: intervals,
        });
    }

    let prop = PropagateSettings {
        t_end: settings.t_end,
        dt_out: settings.dt_out,
        integrator: settings.integrator,
        record_states: false,
    };
    let traj = mf_propagate(mf0, params, treatment, &prop)?;
    let mut signals: Vec<String> = Vec::new();
    for l in 0..mf0.sites.len() {
        signals.push(format!("s{l}_minus"));
        signals.push(format!("s{l}_z"));
    }
    for k in 0..mf0.field.len() {
        signals.push(format!("a{k}"));
    }
    for q in 0..mf0.phonons.len() {
        signals.push(format!("b{q}"));
    }
    let opts = SpectrumOptions {
        window: Window::Hann,
        peak_threshold: settings.peak_threshold,
        remove_mean: true,
        ..Default::default()
    };
    let mut flatness = Vec::new();
    let mut freqs: Vec<f64> = Vec::new();
    let mut d_omega = 0.0;
    for name in signals {
        let values = traj.series(&name).ok_or_else(|| MeanFieldError::UnknownObservable(name.clone()))?;
        let sp = spectrum(&traj.times, &values, &opts)?;
        d_omega = sp.d_omega;
        // constant signals carry no spectral information
        if sp.mean_power < 1e-20 {
            continue;
        }
        flatness.push((name, sp.flatness()));
        freqs.extend(sp.peaks.iter().map(|p| p.omega.abs()).filter(|w| *w > 1.5 * sp.d_omega));
    }
    freqs.sort_by(f64::total_cmp);
    freqs.dedup_by(|a, b| (*a - *b).abs() <= 2.0 * d_omega);

    let (lyap, stderr, intervals) = lyapunov(mf0, params, treatment, settings)?;
    let max_flat = flatness.iter().map(|(_, f)| *f).fold(0.0, f64::max);
    let regime = classify(lyap, stderr, max_flat, &freqs, d_omega, settings);
    Ok(VolterraReport {
        lyapunov: lyap,
        lyapunov_stderr: stderr,
        intervals,
        flatness,
        peak_frequencies: freqs,
        d_omega,
        regime,
    })
}
