use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of one fractional NLS instance
/// `i ε ψ_t = ½ ε^{2s} (−Δ)^s ψ + γ |ψ|^{2p} ψ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct ModelParams {
    s: f64,
    p: f64,
    gamma: f64,
    epsilon: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    s: f64,
    #[serde(default = "one")]
    p: f64,
    #[serde(default = "minus_one")]
    gamma: f64,
    #[serde(default = "one")]
    epsilon: f64,
}

fn one() -> f64 {
    1.0
}

fn minus_one() -> f64 {
    -1.0
}

impl TryFrom<RawParams> for ModelParams {
    type Error = Error;

    fn try_from(r: RawParams) -> Result<Self> {
        ModelParams::new(r.s, r.p, r.gamma, r.epsilon)
    }
}

impl From<ModelParams> for RawParams {
    fn from(m: ModelParams) -> Self {
        RawParams {
            s: m.s,
            p: m.p,
            gamma: m.gamma,
            epsilon: m.epsilon,
        }
    }
}

impl ModelParams {
    pub fn new(s: f64, p: f64, gamma: f64, epsilon: f64) -> Result<Self> {
        if !(s > 0.0 && s <= 1.0) {
            return Err(Error::param("s", format!("must lie in (0, 1], got {s}")));
        }
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::param("p", format!("must be positive, got {p}")));
        }
        if gamma != 1.0 && gamma != -1.0 {
            return Err(Error::param("gamma", format!("must be -1 or +1, got {gamma}")));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::param("epsilon", format!("must be positive, got {epsilon}")));
        }
        Ok(ModelParams { s, p, gamma, epsilon })
    }

    /// Focusing (`γ = −1`) instance with `ε = 1`.
    pub fn focusing(s: f64, p: f64) -> Result<Self> {
        Self::new(s, p, -1.0, 1.0)
    }

    /// Defocusing (`γ = +1`) instance with `ε = 1`.
    pub fn defocusing(s: f64, p: f64) -> Result<Self> {
        Self::new(s, p, 1.0, 1.0)
    }

    pub fn with_epsilon(self, epsilon: f64) -> Result<Self> {
        Self::new(self.s, self.p, self.gamma, epsilon)
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn is_focusing(&self) -> bool {
        self.gamma < 0.0
    }

    /// Scaling-critical Sobolev index `σ_c = d/2 − s/p` in one dimension.
    pub fn critical_sigma(&self) -> f64 {
        0.5 - self.s / self.p
    }

    /// Coefficient multiplying `|k|^{2s}/2` in the linear flow once time is
    /// measured in units of `ε`: `ε^{2s−1}`.
    pub fn dispersion_scale(&self) -> f64 {
        self.epsilon.powf(2.0 * self.s - 1.0)
    }
}

/// Largest admissible nonlinearity `p*(s, d = 1)`: `2s/(1 − 2s)` for
/// `s < 1/2`, unbounded otherwise.
pub fn critical_power(s: f64) -> f64 {
    if s < 0.5 {
        2.0 * s / (1.0 - 2.0 * s)
    } else {
        f64::INFINITY
    }
}
