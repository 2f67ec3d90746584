//! Blow-up time and rate fitting.
//!
//! Near a self-similar blow-up at `t*` a norm behaves like `(t* − t)^{κ₁}`,
//! so its logarithm is fitted to `κ₁ ln(t* − t) + κ₂`, optionally with the
//! log-log correction `κ₁(ln(t* − t) − ln ln|ln(t* − t)|) + κ₂`. For a fixed
//! `t*` the pair `(κ₁, κ₂)` is a linear least-squares problem; `t*` itself is
//! found with a downhill simplex on the remaining misfit.

use serde::{Deserialize, Serialize};

use super::lstsq;
use super::nelder_mead::{self, SimplexOptions};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateModel {
    PureLog,
    LogLog,
}

/// Which recorded samples enter a fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitWindow {
    /// The last `n` samples (all of them if fewer are available).
    Last(usize),
    /// Half-open index range.
    Range(usize, usize),
    All,
}

impl FitWindow {
    pub const LAST_1000: FitWindow = FitWindow::Last(1000);
    pub const LAST_100: FitWindow = FitWindow::Last(100);
    pub const LAST_10: FitWindow = FitWindow::Last(10);

    pub fn resolve(&self, len: usize) -> Result<(usize, usize)> {
        let (a, b) = match *self {
            FitWindow::Last(n) => (len.saturating_sub(n), len),
            FitWindow::Range(a, b) => (a, b),
            FitWindow::All => (0, len),
        };
        if a >= b || b > len {
            return Err(Error::param(
                "window",
                format!("[{a}, {b}) is not a valid window into {len} samples"),
            ));
        }
        Ok((a, b))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupFit {
    pub t_star: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    /// L² misfit over the samples used.
    pub delta2: f64,
    pub model: RateModel,
    pub fit_window: (usize, usize),
    pub samples_used: usize,
    pub evals: usize,
}

/// Predicted power-law exponents in `(t* − t)` of `‖∂_x ψ‖₂²` and `‖ψ‖_∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictedExponents {
    pub gradient_sq: f64,
    pub sup: f64,
}

pub fn predicted_exponents(s: f64, p: f64) -> Result<PredictedExponents> {
    if !(s > 0.0 && p > 0.0) {
        return Err(Error::param("s, p", "must both be positive"));
    }
    Ok(PredictedExponents {
        gradient_sq: -(1.0 / p + 1.0 / (2.0 * s)),
        sup: -1.0 / (2.0 * p),
    })
}

fn regressor(model: RateModel, tau: f64) -> Option<f64> {
    let l = tau.ln();
    match model {
        RateModel::PureLog => Some(l),
        // ln ln|ln τ| is only used where |ln τ| > 1.
        RateModel::LogLog => (l.abs() > 1.0).then(|| l - l.abs().ln().ln()),
    }
}

struct Inner {
    kappa1: f64,
    kappa2: f64,
    delta2: f64,
    used: usize,
}

fn inner_fit(model: RateModel, times: &[f64], y: &[f64], t_last: f64, gap: f64) -> Option<Inner> {
    let mut x = Vec::with_capacity(times.len());
    let mut yy = Vec::with_capacity(times.len());
    for (t, v) in times.iter().zip(y) {
        // τ = t* − t computed from the gap to keep the fit translation covariant.
        let tau = (t_last - t) + gap;
        if let Some(r) = regressor(model, tau) {
            x.push(r);
            yy.push(*v);
        }
    }
    if x.len() < 3 {
        return None;
    }
    let (k1, k2, res) = lstsq::line(&x, &yy)?;
    Some(Inner {
        kappa1: k1,
        kappa2: k2,
        delta2: res,
        used: x.len(),
    })
}

/// Fits `y_i = ln(norm)(t_i)` over `window` to the chosen model.
pub fn fit_blowup_rate(
    times: &[f64],
    log_values: &[f64],
    model: RateModel,
    window: FitWindow,
) -> Result<BlowupFit> {
    if times.len() != log_values.len() {
        return Err(Error::param("series", "times and values differ in length"));
    }
    let (a, b) = window.resolve(times.len())?;
    let t = &times[a..b];
    let y = &log_values[a..b];
    if t.len() < 3 {
        return Err(Error::param("window", "needs at least three samples"));
    }
    if t.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::param("series", "sample times must be strictly increasing"));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("series", "non-finite values in fit window"));
    }
    let t_last = *t.last().unwrap();
    let mut spacings: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
    spacings.sort_by(f64::total_cmp);
    let median = spacings[spacings.len() / 2];

    // Search in θ = ln(t* − t_last): every simplex vertex is then a feasible
    // blow-up time beyond the window.
    let objective = |theta: &[f64]| -> f64 {
        let gap = theta[0].exp();
        if !(gap > 0.0 && gap.is_finite()) {
            return f64::INFINITY;
        }
        inner_fit(model, t, y, t_last, gap).map_or(f64::INFINITY, |f| f.delta2)
    };

    let base = (5.0 * median).ln();
    let opts = SimplexOptions::default();
    let mut best: Option<nelder_mead::SimplexResult> = None;
    let mut evals = 0;
    // Primary seed first; reseed further out or closer in if it fails.
    for shift in [0.0, 10f64.ln(), -(10f64.ln()), 2.0 * 10f64.ln()] {
        let r = nelder_mead::minimize(objective, &[base + shift], &[0.5], opts);
        evals += r.evals;
        let better = best.as_ref().is_none_or(|b| r.value < b.value);
        let done = r.converged && r.value.is_finite();
        if better {
            best = Some(r);
        }
        if done {
            break;
        }
    }
    let best = best.expect("at least one seed is tried");
    let gap = best.x[0].exp();
    let inner = inner_fit(model, t, y, t_last, gap);
    let fit = match inner {
        Some(i) => BlowupFit {
            t_star: t_last + gap,
            kappa1: i.kappa1,
            kappa2: i.kappa2,
            delta2: i.delta2,
            model,
            fit_window: (a, b),
            samples_used: i.used,
            evals,
        },
        None => {
            return Err(Error::Numerical(
                "no admissible blow-up time found for this window".into(),
            ))
        }
    };
    if !best.converged {
        return Err(Error::FitNotConverged { best: Box::new(fit) });
    }
    Ok(fit)
}

/// `L(t) = (‖∂_x ψ₀‖₂ / ‖∂_x ψ(t)‖₂)^{1/(1 − d/2 + s/p)}` with `d = 1`.
pub fn scaling_factor_series(gradient_norms: &[f64], s: f64, p: f64) -> Result<Vec<f64>> {
    let g0 = *gradient_norms
        .first()
        .ok_or_else(|| Error::param("series", "empty gradient series"))?;
    if gradient_norms.iter().any(|g| !(*g > 0.0)) {
        return Err(Error::param("series", "gradient norms must be positive"));
    }
    let exponent = 1.0 / (0.5 + s / p);
    Ok(gradient_norms
        .iter()
        .map(|g| (g0 / g).powf(exponent))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelComparison {
    pub window: FitWindow,
    pub pure_log: BlowupFit,
    pub log_log: BlowupFit,
}

impl ModelComparison {
    /// The model with the smaller fitting error.
    pub fn preferred(&self) -> RateModel {
        if self.log_log.delta2 < self.pure_log.delta2 {
            RateModel::LogLog
        } else {
            RateModel::PureLog
        }
    }
}

pub fn compare_models(
    times: &[f64],
    log_values: &[f64],
    windows: &[FitWindow],
) -> Result<Vec<ModelComparison>> {
    windows
        .iter()
        .map(|&w| {
            Ok(ModelComparison {
                window: w,
                pure_log: fit_blowup_rate(times, log_values, RateModel::PureLog, w)?,
                log_log: fit_blowup_rate(times, log_values, RateModel::LogLog, w)?,
            })
        })
        .collect()
}
