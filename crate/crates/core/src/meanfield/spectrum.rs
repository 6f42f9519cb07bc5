//! Power spectra of trajectory observables.
//!
//! The transform is `X(ω) = Σ_n x_n e^{+iωt_n}`, so a signal `e^{−iω₀t}` shows
//! up at `+ω₀`. Power is normalized as `P(ω) = |X(ω)|²/(N² Δω)`, which makes
//! `Σ P Δω` equal to the mean of `|x_w|²` over the windowed samples.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::MeanFieldError;
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    Rectangular,
    #[default]
    Hann,
}

/// What to do with a non-uniform time grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridPolicy {
    #[default]
    Refuse,
    /// Linear interpolation onto a uniform grid with the same number of points.
    Resample,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumOptions {
    pub window: Window,
    pub grid: GridPolicy,
    /// Peaks below this fraction of the largest bin are ignored.
    pub peak_threshold: f64,
    /// Subtract the mean before transforming.
    pub remove_mean: bool,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self {
            window: Window::Hann,
            grid: GridPolicy::Refuse,
            peak_threshold: 1e-3,
            remove_mean: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub omega: f64,
    pub power: f64,
    /// Full width at half maximum, linearly interpolated between bins.
    pub fwhm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    /// Ascending angular frequencies.
    pub omegas: Vec<f64>,
    pub power: Vec<f64>,
    pub d_omega: f64,
    /// Sorted by decreasing power.
    pub peaks: Vec<Peak>,
    /// Mean of `|x_w|²` over the windowed series.
    pub mean_power: f64,
    pub resampled: bool,
}

impl SpectrumResult {
    pub fn integrated_power(&self) -> f64 {
        self.power.iter().sum::<f64>() * self.d_omega
    }

    /// Geometric over arithmetic mean of the power, with bins floored at
    /// `1e-30` of the maximum.
    pub fn flatness(&self) -> f64 {
        let max = self.power.iter().copied().fold(0.0, f64::max);
        if max == 0.0 {
            return 0.0;
        }
        let floor = max * 1e-30;
        let n = self.power.len() as f64;
        let log_mean = self.power.iter().map(|p| p.max(floor).ln()).sum::<f64>() / n;
        let mean = self.power.iter().map(|p| p.max(floor)).sum::<f64>() / n;
        log_mean.exp() / mean
    }
}

fn resample(times: &[f64], values: &[C64]) -> Vec<C64> {
    let n = times.len();
    let (t0, t1) = (times[0], times[n - 1]);
    let dt = (t1 - t0) / (n - 1) as f64;
    let mut j = 0;
    let mut out_v = Vec::with_capacity(n);
    for i in 0..n {
        let t = t0 + i as f64 * dt;
        while j + 2 < n && times[j + 1] < t {
            j += 1;
        }
        let w = ((t - times[j]) / (times[j + 1] - times[j])).clamp(0.0, 1.0);
        out_v.push(values[j] * (1.0 - w) + values[j + 1] * w);
    }
    out_v
}

pub fn spectrum(times: &[f64], values: &[C64], opts: &SpectrumOptions) -> Result<SpectrumResult, MeanFieldError> {
    let n = times.len();
    if n < 4 {
        return Err(MeanFieldError::TooShort { needed: 4, got: n });
    }
    if values.len() != n {
        return Err(MeanFieldError::Invalid(format!("{} times but {} values", n, values.len())));
    }
    let dt = (times[n - 1] - times[0]) / (n - 1) as f64;
    if !(dt > 0.0) {
        return Err(MeanFieldError::Invalid("time grid must be increasing".into()));
    }
    let uniform = times.windows(2).all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-6 * dt);
    let (values, resampled) = if uniform {
        (values.to_vec(), false)
    } else {
        match opts.grid {
            GridPolicy::Refuse => return Err(MeanFieldError::NonUniformGrid),
            GridPolicy::Resample => (resample(times, values), true),
        }
    };

    let mean = if opts.remove_mean {
        values.iter().sum::<C64>() / n as f64
    } else {
        C64::default()
    };
    let mut buf: Vec<C64> = values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let w = match opts.window {
                Window::Rectangular => 1.0,
                Window::Hann => 0.5 * (1.0 - (2.0 * PI * i as f64 / (n - 1) as f64).cos()),
            };
            (v - mean) * w
        })
        .collect();
    let mean_power = buf.iter().map(|v| v.norm_sqr()).sum::<f64>() / n as f64;

    // inverse transform: Σ x_n e^{+2πi kn/N}
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    let d_omega = 2.0 * PI / (n as f64 * dt);
    let half = n / 2;
    let mut omegas = Vec::with_capacity(n);
    let mut power = Vec::with_capacity(n);
    for i in 0..n {
        // shift so frequencies ascend from −(N/2)Δω
        let k = (i + n - half) % n;
        let signed = if k >= n - half { k as i64 - n as i64 } else { k as i64 };
        omegas.push(signed as f64 * d_omega);
        power.push(buf[k].norm_sqr() / (n as f64 * n as f64 * d_omega));
    }
    let peaks = find_peaks(&omegas, &power, opts.peak_threshold);
    Ok(SpectrumResult {
        omegas,
        power,
        d_omega,
        peaks,
        mean_power,
        resampled,
    })
}

fn find_peaks(omegas: &[f64], power: &[f64], threshold: f64) -> Vec<Peak> {
    let n = power.len();
    let max = power.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return Vec::new();
    }
    let floor = threshold * max;
    let mut peaks = Vec::new();
    for i in 0..n {
        let left = if i > 0 { power[i - 1] } else { f64::NEG_INFINITY };
        let right = if i + 1 < n { power[i + 1] } else { f64::NEG_INFINITY };
        if power[i] >= floor && power[i] > left && power[i] >= right {
            peaks.push(Peak {
                omega: omegas[i],
                power: power[i],
                fwhm: half_width(omegas, power, i),
            });
        }
    }
    peaks.sort_by(|a, b| b.power.total_cmp(&a.power));
    peaks
}

fn half_width(omegas: &[f64], power: &[f64], i: usize) -> f64 {
    let half = power[i] / 2.0;
    let mut lo = omegas[0];
    for j in (0..i).rev() {
        if power[j] <= half {
            let w = (half - power[j]) / (power[j + 1] - power[j]);
            lo = omegas[j] + w * (omegas[j + 1] - omegas[j]);
            break;
        }
    }
    let mut hi = omegas[omegas.len() - 1];
    for j in i + 1..power.len() {
        if power[j] <= half {
            let w = (power[j - 1] - half) / (power[j - 1] - power[j]);
            hi = omegas[j - 1] + w * (omegas[j] - omegas[j - 1]);
            break;
        }
    }
    hi - lo
}

/// Spectrum of a trajectory column or complex column pair (for example
/// `s0_minus` or `s0_z`).
pub fn spectrum_of(traj: &Trajectory, observable: &str, opts: &SpectrumOptions) -> Result<SpectrumResult, MeanFieldError> {
    let values = traj
        .series(observable)
        .ok_or_else(|| MeanFieldError::UnknownObservable(observable.to_string()))?;
    spectrum(&traj.times, &values, opts)
}
