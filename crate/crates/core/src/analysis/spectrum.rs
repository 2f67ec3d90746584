//! Singularity tracing from the decay of Fourier coefficients.
//!
//! A singularity `(z − z₀)^μ` at distance `δ = Im z₀` from the real axis makes
//! the coefficients behave like `|û(k)| ≈ C k^{−(μ+1)} e^{−δk}` for large `k`.
//! Fitting `ln|û|` against `{1, ln k, k}` on the resolved high-wavenumber
//! tail yields `δ`; `μ` is reported but is known to be unreliable.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::lstsq;
use crate::error::{Error, Result};
use crate::spectral::{Grid, SpectralField};

/// Fewer usable modes than this marks a fit unreliable.
pub const MIN_USABLE_MODES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WindowPolicy {
    /// Modes from `start_fraction·m_last` up to `m_last`, the last positive
    /// mode whose modulus exceeds `floor_factor` times the rounding floor
    /// `ε_mach·max|û|`.
    Adaptive { start_fraction: f64, floor_factor: f64 },
    /// Explicit wavenumber window.
    Fixed { k_min: f64, k_max: f64 },
}

impl Default for WindowPolicy {
    fn default() -> Self {
        WindowPolicy::Adaptive {
            start_fraction: 0.6,
            floor_factor: 100.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumFit {
    /// Distance of the nearest complex singularity to the real axis.
    pub delta: f64,
    /// Singularity exponent; informational only.
    pub mu: f64,
    pub log_amplitude: f64,
    pub k_window: (f64, f64),
    /// RMS misfit of `ln|û|` over the window.
    pub residual: f64,
    pub usable_modes: usize,
    pub reliable: bool,
}

pub fn min_resolved_distance(grid: &Grid) -> f64 {
    grid.length() / grid.n_modes() as f64
}

/// Strict: a singularity exactly at the resolution limit does not stop a run.
pub fn singularity_stop_check(fit: &SpectrumFit, m: f64) -> bool {
    fit.delta < m
}

pub fn fit_fourier_asymptotics(u_hat: &SpectralField, policy: WindowPolicy) -> Result<SpectrumFit> {
    fit_coefficients(u_hat.coefficients(), u_hat.grid(), policy)
}

pub(crate) fn fit_coefficients(
    coeffs: &[Complex64],
    grid: &Grid,
    policy: WindowPolicy,
) -> Result<SpectrumFit> {
    let n = grid.n_modes();
    let k = grid.wavenumbers();
    let max_abs = coeffs.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    if !(max_abs > 0.0 && max_abs.is_finite()) {
        return Err(Error::Numerical(
            "spectrum is zero or non-finite; nothing to fit".into(),
        ));
    }
    let floor = f64::EPSILON * max_abs;

    // Positive modes m = 1 .. N/2 − 1; the Nyquist mode is skipped.
    let positive = 1..n / 2;
    let (lo, hi, threshold) = match policy {
        WindowPolicy::Adaptive {
            start_fraction,
            floor_factor,
        } => {
            let threshold = floor_factor * floor;
            let last = resolved_band_end(coeffs, positive.clone(), threshold)
                .ok_or_else(|| Error::Numerical("no positive mode above the rounding floor".into()))?;
            let first = ((start_fraction * last as f64).ceil() as usize).clamp(1, last);
            (first, last, threshold)
        }
        WindowPolicy::Fixed { k_min, k_max } => {
            let d = grid.half_width();
            let first = ((k_min * d).ceil() as usize).max(1);
            let last = ((k_max * d).floor() as usize).min(n / 2 - 1);
            (first, last, floor)
        }
    };

    let first_fit = fit_window(coeffs, k, lo, hi, threshold)?;
    if first_fit.residual <= MAX_RESIDUAL || !matches!(policy, WindowPolicy::Adaptive { .. }) {
        return Ok(first_fit);
    }
    // A slowly decaying tail (a kink in the periodic extension, say) bends
    // the top of the window. Pull the end back until the model fits.
    let start_fraction = lo as f64 / hi as f64;
    let mut last = hi;
    loop {
        last = last * 9 / 10;
        let first = ((start_fraction * last as f64).ceil() as usize).max(1);
        let Ok(fit) = fit_window(coeffs, k, first, last, threshold) else { break };
        if fit.usable_modes < MIN_USABLE_MODES {
            break;
        }
        if fit.residual <= MAX_RESIDUAL {
            return Ok(fit);
        }
    }
    Ok(SpectrumFit { reliable: false, ..first_fit })
}

/// RMS residual of `ln|û|` beyond which the fit model does not describe the
/// window. Clean exponential tails fit to about 1e-4.
const MAX_RESIDUAL: f64 = 2e-3;

fn fit_window(coeffs: &[Complex64], k: &[f64], lo: usize, hi: usize, threshold: f64) -> Result<SpectrumFit> {
    let mut ln_k = Vec::new();
    let mut kk = Vec::new();
    let mut y = Vec::new();
    for j in lo..=hi {
        let a = coeffs[j].norm();
        if a > threshold {
            ln_k.push(k[j].ln());
            kk.push(k[j]);
            y.push(a.ln());
        }
    }
    let usable = y.len();
    if usable < 3 {
        return Err(Error::Numerical(format!(
            "only {usable} usable modes in the fit window"
        )));
    }
    let sol = lstsq::solve(&[vec![1.0; usable], ln_k, kk], &y)
        .ok_or_else(|| Error::Numerical("degenerate spectrum fit window".into()))?;
    let c = &sol.coefficients;
    let residual = sol.residual_norm / (usable as f64).sqrt();
    let raw_delta = -c[2];
    Ok(SpectrumFit {
        delta: raw_delta.max(0.0),
        mu: -c[1] - 1.0,
        log_amplitude: c[0],
        k_window: (k[lo], k[hi]),
        residual,
        usable_modes: usable,
        // A non-decaying or badly fitting model says nothing about a singularity.
        reliable: usable >= MIN_USABLE_MODES
            && residual <= MAX_RESIDUAL
            && raw_delta > 0.0,
    })
}

/// Consecutive sub-threshold modes that mark the start of the rounding plateau.
const FLOOR_RUN: usize = 8;

/// Last mode of the contiguous band above `threshold`, scanning up from
/// `k = 0`. Isolated zeros of an oscillating spectrum do not end the band;
/// a run of [`FLOOR_RUN`] small modes does, so noise spikes out in the
/// rounding plateau are never reached.
fn resolved_band_end(coeffs: &[Complex64], modes: std::ops::Range<usize>, threshold: f64) -> Option<usize> {
    let mut last = None;
    let mut run = 0;
    for j in modes {
        if coeffs[j].norm() > threshold {
            last = Some(j);
            run = 0;
        } else {
            run += 1;
            if run >= FLOOR_RUN && last.is_some() {
                break;
            }
        }
    }
    last
}

/// Ratio of the largest coefficient in the top tenth of the positive band to
/// the largest coefficient overall. Values well above the rounding level mean
/// the grid no longer resolves the solution.
pub fn spectral_tail_ratio(coeffs: &[Complex64]) -> f64 {
    let n = coeffs.len();
    let max_abs = coeffs.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    if max_abs == 0.0 {
        return 0.0;
    }
    let start = (0.9 * (n / 2) as f64) as usize;
    let tail = coeffs[start..n / 2]
        .iter()
        .chain(&coeffs[n / 2..n - start + 1])
        .fold(0.0f64, |m, z| m.max(z.norm()));
    tail / max_abs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{to_spectral, PhysicalField};
    use approx::assert_relative_eq;

    #[test]
    fn resolved_distance_values() {
        let g = Grid::new(1 << 17, 10.0).unwrap();
        assert_relative_eq!(min_resolved_distance(&g), 4.794e-4, epsilon = 1e-7);
        let g = Grid::new(1 << 16, 100.0).unwrap();
        assert_relative_eq!(min_resolved_distance(&g), 2.0 * std::f64::consts::PI * 100.0 / 65536.0);
        let g2 = Grid::new(1 << 17, 100.0).unwrap();
        assert_relative_eq!(min_resolved_distance(&g2), 0.5 * min_resolved_distance(&g));
    }

    #[test]
    fn stop_rule_is_strict() {
        let mut fit = SpectrumFit {
            delta: 2.4e-3,
            mu: 0.0,
            log_amplitude: 0.0,
            k_window: (1.0, 2.0),
            residual: 0.0,
            usable_modes: 100,
            reliable: true,
        };
        assert!(!singularity_stop_check(&fit, 4.794e-4));
        fit.delta = 0.0;
        assert!(singularity_stop_check(&fit, 1e-12));
        fit.delta = 4.794e-4;
        assert!(!singularity_stop_check(&fit, 4.794e-4));
    }

    #[test]
    fn synthetic_model_spectrum() {
        let g = Grid::new(512, 4.0).unwrap();
        let coeffs: Vec<Complex64> = g
            .wavenumbers()
            .iter()
            .map(|&k| {
                let a = k.abs();
                if a == 0.0 {
                    return Complex64::new(1.0, 0.0);
                }
                Complex64::new(a.powi(-2) * (-a / 2.0).exp(), 0.0)
            })
            .collect();
        let fit = fit_coefficients(&coeffs, &g, WindowPolicy::default()).unwrap();
        assert!(fit.reliable);
        assert_relative_eq!(fit.delta, 0.5, epsilon = 1e-10);
        assert_relative_eq!(fit.mu, 1.0, epsilon = 1e-9);
        assert!(fit.residual < 1e-10);
    }

    #[test]
    fn sech_pole_distance() {
        // sech has poles at ±iπ/2.
        let g = Grid::new(512, 10.0).unwrap();
        let u = PhysicalField::from_real_fn(&g, |x| 1.0 / x.cosh());
        let fit = fit_fourier_asymptotics(&to_spectral(&u), WindowPolicy::default()).unwrap();
        assert!(fit.reliable);
        assert!((fit.delta - std::f64::consts::FRAC_PI_2).abs() < 0.02, "{fit:?}");
    }

    #[test]
    fn noise_spikes_beyond_the_plateau_are_ignored() {
        let g = Grid::new(8192, 50.0).unwrap();
        let u = PhysicalField::from_real_fn(&g, |x| 1.0 / x.cosh());
        let mut coeffs = to_spectral(&u).into_coefficients();
        let clean = fit_coefficients(&coeffs, &g, WindowPolicy::default()).unwrap();
        for j in (1500..4000).step_by(300) {
            coeffs[j] = Complex64::new(1e-12 * coeffs[0].norm(), 0.0);
        }
        let spiked = fit_coefficients(&coeffs, &g, WindowPolicy::default()).unwrap();
        assert_eq!(spiked.k_window, clean.k_window);
        assert!((spiked.delta - std::f64::consts::FRAC_PI_2).abs() < 0.02, "{spiked:?}");
    }

    #[test]
    fn slow_algebraic_tail_is_trimmed_off() {
        // δ = 0.02 decay meeting a smooth k⁻² tail near 5e-14, as a kink in
        // the periodic extension produces.
        let g = Grid::new(32768, 10.0).unwrap();
        let coeffs: Vec<Complex64> = g
            .wavenumbers()
            .iter()
            .map(|&k| {
                let k = k.abs();
                Complex64::new((-0.02 * k).exp() + 5e-8 / (1.0 + k * k), 0.0)
            })
            .collect();
        let fit = fit_coefficients(&coeffs, &g, WindowPolicy::default()).unwrap();
        assert!(fit.reliable, "{fit:?}");
        assert!((fit.delta - 0.02).abs() < 0.02 * 0.02, "{fit:?}");
    }

    #[test]
    fn growing_spectrum_is_unreliable() {
        let g = Grid::new(256, 1.0).unwrap();
        let coeffs: Vec<Complex64> = g
            .wavenumbers()
            .iter()
            .map(|&k| Complex64::new((0.01 * k.abs()).exp(), 0.0))
            .collect();
        let fit = fit_coefficients(&coeffs, &g, WindowPolicy::default()).unwrap();
        assert_eq!(fit.delta, 0.0);
        assert!(!fit.reliable);
    }

    #[test]
    fn zero_spectrum_is_an_error() {
        let g = Grid::new(64, 1.0).unwrap();
        assert!(fit_coefficients(&vec![Complex64::new(0.0, 0.0); 64], &g, WindowPolicy::default()).is_err());
    }

    #[test]
    fn tail_ratio_flags_unresolved_spectra() {
        let g = Grid::new(512, 8.0).unwrap();
        let smooth = to_spectral(&PhysicalField::from_real_fn(&g, |x| 1.0 / x.cosh()));
        assert!(spectral_tail_ratio(smooth.coefficients()) < 1e-9);
        let rough = to_spectral(&PhysicalField::from_real_fn(&g, |x| if x.abs() < 1.0 { 1.0 } else { 0.0 }));
        assert!(spectral_tail_ratio(rough.coefficients()) > 1e-3);
    }
}
