//! Adaptive Dormand–Prince 5(4) for complex state vectors.
//!
//! The step is clipped so that every requested output time is hit exactly;
//! no interpolation is involved.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::DynamicsError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorSettings {
    pub rtol: f64,
    pub atol: f64,
    /// Smallest step accepted before giving up.
    pub h_min: f64,
    /// Upper bound on any step; 0 means unbounded.
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            h_min: 1e-12,
            h_max: 0.0,
            max_steps: 50_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// fifth minus fourth order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

/// Integrates `dy/dt = f(t, y)` from `t0` through every time in `t_out`
/// (ascending, all `>= t0`), calling `observe(t, y)` at each of them.
pub fn integrate<F, O>(
    mut f: F,
    t0: f64,
    y: &mut [C64],
    t_out: &[f64],
    settings: &IntegratorSettings,
    mut observe: O,
) -> Result<StepStats, DynamicsError>
where
    F: FnMut(f64, &[C64], &mut [C64]),
    O: FnMut(f64, &[C64]) -> Result<(), DynamicsError>,
{
    let n = y.len();
    let zero = C64::new(0.0, 0.0);
    let mut k: [Vec<C64>; 7] = std::array::from_fn(|_| vec![zero; n]);
    let mut tmp = vec![zero; n];
    let mut y_new = vec![zero; n];
    let mut stats = StepStats::default();

    let mut t = t0;
    f(t, y, &mut k[0]);
    stats.evaluations += 1;
    let mut h = initial_step(&mut f, t, y, &k[0], settings, &mut stats);

    for &target in t_out {
        if target < t {
            return Err(DynamicsError::InvalidSettings(format!(
                "output time {target} precedes current time {t}"
            )));
        }
        while t < target {
            if stats.accepted + stats.rejected >= settings.max_steps {
                return Err(DynamicsError::MaxSteps { t });
            }
            if settings.h_max > 0.0 {
                h = h.min(settings.h_max);
            }
            let remaining = target - t;
            let clipped = h >= remaining * (1.0 - 1e-12);
            let step = if clipped { remaining } else { h };
            if step < settings.h_min && !clipped {
                return Err(DynamicsError::StepUnderflow { t, h: step });
            }

            {
                let [k1, k2, k3, k4, k5, k6, k7] = &mut k;
                stage(&mut tmp, y, step, &[(A21, &*k1)]);
                f(t + C2 * step, &tmp, k2);
                stage(&mut tmp, y, step, &[(A31, &*k1), (A32, &*k2)]);
                f(t + C3 * step, &tmp, k3);
                stage(&mut tmp, y, step, &[(A41, &*k1), (A42, &*k2), (A43, &*k3)]);
                f(t + C4 * step, &tmp, k4);
                stage(&mut tmp, y, step, &[(A51, &*k1), (A52, &*k2), (A53, &*k3), (A54, &*k4)]);
                f(t + C5 * step, &tmp, k5);
                stage(
                    &mut tmp,
                    y,
                    step,
                    &[(A61, &*k1), (A62, &*k2), (A63, &*k3), (A64, &*k4), (A65, &*k5)],
                );
                f(t + step, &tmp, k6);
                stage(
                    &mut y_new,
                    y,
                    step,
                    &[(A71, &*k1), (A73, &*k3), (A74, &*k4), (A75, &*k5), (A76, &*k6)],
                );
                f(t + step, &y_new, k7);
            }
            stats.evaluations += 6;

            let mut acc = 0.0;
            for i in 0..n {
                let e = (k[0][i] * E1 + k[2][i] * E3 + k[3][i] * E4 + k[4][i] * E5 + k[5][i] * E6 + k[6][i] * E7)
                    * step;
                let sc = settings.atol + settings.rtol * y[i].norm().max(y_new[i].norm());
                acc += (e.norm() / sc).powi(2);
            }
            let err = (acc / n.max(1) as f64).sqrt();
            if !err.is_finite() {
                return Err(DynamicsError::NonFinite { t });
            }

            let factor = if err == 0.0 {
                MAX_FACTOR
            } else {
                (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
            };
            if err <= 1.0 {
                stats.accepted += 1;
                t = if clipped { target } else { t + step };
                y.copy_from_slice(&y_new);
                k.swap(0, 6);
                // a clipped step says nothing about the natural step size
                h = if clipped { h.max(step * factor) } else { step * factor };
            } else {
                stats.rejected += 1;
                h = step * factor.min(1.0);
                if h < settings.h_min {
                    return Err(DynamicsError::StepUnderflow { t, h });
                }
            }
        }
        observe(t, y)?;
    }
    Ok(stats)
}

fn stage(out: &mut [C64], y: &[C64], h: f64, terms: &[(f64, &Vec<C64>)]) {
    for i in 0..out.len() {
        let mut acc = C64::new(0.0, 0.0);
        for (a, k) in terms {
            acc += k[i] * *a;
        }
        out[i] = y[i] + acc * h;
    }
}

// Hairer–Nørsett–Wanner starting-step heuristic.
fn initial_step<F>(f: &mut F, t: f64, y: &[C64], f0: &[C64], s: &IntegratorSettings, stats: &mut StepStats) -> f64
where
    F: FnMut(f64, &[C64], &mut [C64]),
{
    let n = y.len().max(1) as f64;
    let sc: Vec<f64> = y.iter().map(|v| s.atol + s.rtol * v.norm()).collect();
    let d0 = (y.iter().zip(&sc).map(|(v, c)| (v.norm() / c).powi(2)).sum::<f64>() / n).sqrt();
    let d1 = (f0.iter().zip(&sc).map(|(v, c)| (v.norm() / c).powi(2)).sum::<f64>() / n).sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1: Vec<C64> = y.iter().zip(f0).map(|(a, b)| a + b * h0).collect();
    let mut f1 = vec![C64::new(0.0, 0.0); y.len()];
    f(t + h0, &y1, &mut f1);
    stats.evaluations += 1;
    let d2 = (f1
        .iter()
        .zip(f0)
        .zip(&sc)
        .map(|((a, b), c)| ((a - b).norm() / c).powi(2))
        .sum::<f64>()
        / n)
        .sqrt()
        / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    let h = (100.0 * h0).min(h1);
    if s.h_max > 0.0 {
        h.min(s.h_max)
    } else {
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_observe(_: f64, _: &[C64]) -> Result<(), DynamicsError> {
        Ok(())
    }

    #[test]
    fn harmonic_phase() {
        let w = 1.7;
        let mut y = vec![C64::new(1.0, 0.0), C64::new(0.0, 2.0)];
        let times: Vec<f64> = (1..=20).map(|i| i as f64 * 0.5).collect();
        let mut seen = Vec::new();
        let s = IntegratorSettings { rtol: 1e-12, atol: 1e-14, ..Default::default() };
        integrate(
            |_, y, dy| {
                for i in 0..y.len() {
                    dy[i] = C64::new(0.0, -w) * y[i];
                }
            },
            0.0,
            &mut y,
            &times,
            &s,
            |t, y| {
                seen.push((t, y[0], y[1]));
                Ok(())
            },
        )
        .unwrap();
        assert_eq!(seen.len(), 20);
        for (t, a, b) in seen {
            let ph = C64::from_polar(1.0, -w * t);
            assert!((a - ph).norm() < 1e-10, "t={t}");
            assert!((b - C64::new(0.0, 2.0) * ph).norm() < 2e-10);
        }
    }

    #[test]
    fn hits_output_grid_exactly() {
        let mut y = vec![C64::new(1.0, 0.0)];
        let times = [0.0, 0.1, 0.2 + 1e-9, 3.0];
        let mut seen = Vec::new();
        integrate(
            |_, y, dy| dy[0] = -y[0],
            0.0,
            &mut y,
            &times,
            &IntegratorSettings::default(),
            |t, _| {
                seen.push(t);
                Ok(())
            },
        )
        .unwrap();
        assert_eq!(seen, times.to_vec());
        assert!((y[0].re - (-3f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn step_underflow_is_reported() {
        // blows up at t = 1
        let mut y = vec![C64::new(1.0, 0.0)];
        let err = integrate(
            |_, y, dy| dy[0] = y[0] * y[0],
            0.0,
            &mut y,
            &[2.0],
            &IntegratorSettings { h_min: 1e-10, ..Default::default() },
            no_observe,
        )
        .unwrap_err();
        assert!(matches!(
            err,
            DynamicsError::StepUnderflow { .. } | DynamicsError::NonFinite { .. }
        ));
    }

    #[test]
    fn rejects_backwards_output() {
        let mut y = vec![C64::new(1.0, 0.0)];
        let r = integrate(|_, _, dy| dy[0] = C64::new(0.0, 0.0), 1.0, &mut y, &[0.5], &IntegratorSettings::default(), no_observe);
        assert!(r.is_err());
    }
}
