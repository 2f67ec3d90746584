use num_complex::Complex64;
use rustfft::FftPlanner;

use super::GroundState;
use crate::analysis::{lstsq, spectral_tail_ratio};
use crate::error::{Error, Result};
use crate::spectral::{Grid, PhysicalField};

/// Spectral tail above this fraction of the peak flags an under-resolved
/// rescaled state.
const RESCALE_TAIL_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Rescaled {
    pub field: PhysicalField,
    pub tail_ratio: f64,
    pub under_resolved: bool,
}

/// Evaluates the trigonometric interpolant of `u` at `λ x_j` for every node,
/// by a chirp transform (three FFTs of length `4N`).
fn interpolate_dilated(u: &PhysicalField, lambda: f64) -> Vec<Complex64> {
    let grid = u.grid();
    let n = grid.n_modes();
    let half = (n / 2) as i64;
    let coeffs = u.to_spectral().into_coefficients();
    let chirp = |x: i64| {
        let x = x as f64;
        Complex64::from_polar(1.0, std::f64::consts::PI * lambda * (x * x) / n as f64)
    };

    // The grid starts at x₀ = −πD, so each mode picks up e^{−iπm(λ−1)}.
    let l = 4 * n;
    let zero = Complex64::new(0.0, 0.0);
    let mut a = vec![zero; l];
    for (idx, slot) in a.iter_mut().take(n).enumerate() {
        let m = idx as i64 - half;
        let shift = Complex64::from_polar(1.0, -std::f64::consts::PI * m as f64 * (lambda - 1.0));
        *slot = coeffs[grid.index_of_mode(m)] * shift * chirp(m);
    }
    let mut b = vec![zero; l];
    for d in -(n as i64 - 1)..n as i64 {
        b[d.rem_euclid(l as i64) as usize] = chirp(d + half).conj();
    }

    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(l);
    let inv = planner.plan_fft_inverse(l);
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    inv.process(&mut a);
    let norm = 1.0 / (l as f64 * n as f64);
    (0..n).map(|j| chirp(j as i64) * a[j] * norm).collect()
}

/// `ω^{1/(2p)} Q(ω^{1/(2s)} x)`, the ground state of frequency `ω`.
pub fn rescale_omega(gs: &GroundState, omega: f64) -> Result<Rescaled> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::param("omega", format!("must be positive, got {omega}")));
    }
    let grid = gs.field.grid();
    let values = if omega == 1.0 {
        gs.field.values().to_vec()
    } else {
        let lambda = omega.powf(0.5 / gs.s);
        let amp = omega.powf(0.5 / gs.p);
        interpolate_dilated(&gs.field, lambda)
            .into_iter()
            .map(|z| Complex64::new(amp * z.re, 0.0))
            .collect()
    };
    let field = PhysicalField::new(grid.clone(), values)?;
    let tail_ratio = spectral_tail_ratio(field.to_spectral().coefficients());
    Ok(Rescaled {
        field,
        tail_ratio,
        under_resolved: tail_ratio > RESCALE_TAIL_THRESHOLD,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailFit {
    /// Slope of `ln Q` against `ln x`.
    pub exponent: f64,
    pub window: (f64, f64),
    /// RMS misfit of the power-law model.
    pub residual: f64,
    /// RMS misfit of the exponential model on the same window.
    pub exponential_residual: f64,
    pub reliable: bool,
}

/// Far-field decay exponent of `Q`, fitted on `x ∈ [πD/4, πD/2]`.
pub fn tail_exponent(gs: &GroundState) -> Result<TailFit> {
    tail_fit_on(gs.field.grid(), gs.field.values())
}

fn tail_fit_on(grid: &Grid, values: &[Complex64]) -> Result<TailFit> {
    let d = grid.half_width();
    let (lo, hi) = (0.25 * std::f64::consts::PI * d, 0.5 * std::f64::consts::PI * d);
    let peak = values.iter().fold(0.0f64, |m, z| m.max(z.re.abs()));
    let noise = 1e3 * f64::EPSILON * peak;
    let mut at_noise = false;
    let (mut lx, mut x, mut y) = (Vec::new(), Vec::new(), Vec::new());
    for (j, v) in values.iter().enumerate() {
        let xj = grid.node(j);
        if xj < lo || xj > hi {
            continue;
        }
        if v.re <= noise {
            at_noise = true;
        }
        if v.re > 0.0 {
            lx.push(xj.ln());
            x.push(xj);
            y.push(v.re.ln());
        }
    }
    if y.len() < 3 {
        return Err(Error::Numerical("tail window holds fewer than 3 positive samples".into()));
    }
    let rms = |r: f64| r / (y.len() as f64).sqrt();
    let (slope, _, res_alg) = lstsq::line(&lx, &y)
        .ok_or_else(|| Error::Numerical("degenerate tail window".into()))?;
    let (_, _, res_exp) = lstsq::line(&x, &y)
        .ok_or_else(|| Error::Numerical("degenerate tail window".into()))?;
    let (residual, exponential_residual) = (rms(res_alg), rms(res_exp));
    Ok(TailFit {
        exponent: slope,
        window: (lo, hi),
        residual,
        exponential_residual,
        reliable: !at_noise && residual < exponential_residual,
    })
}
