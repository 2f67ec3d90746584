use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("length mismatch: grid has {expected} nodes, field has {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("grid mismatch: field lives on N={found_n}, D={found_d}, expected N={expected_n}, D={expected_d}")]
    GridMismatch {
        expected_n: usize,
        expected_d: f64,
        found_n: usize,
        found_d: f64,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite value encountered at t = {time}")]
    Overflow { time: f64 },

    #[error("{0}")]
    Numerical(String),

    #[error("blow-up fit did not converge (best t* = {})", best.t_star)]
    FitNotConverged {
        best: Box<crate::analysis::BlowupFit>,
    },

    #[error("Newton iteration failed ({reason:?}) after {iterations} steps, residual {residual:e}; try a smaller continuation step")]
    NewtonFailed {
        reason: crate::ground_state::NewtonFailure,
        residual: f64,
        iterations: usize,
    },

    #[error("continuation stalled: last converged s = {}, could not reach s = {s_failed}", last.s)]
    ContinuationStalled {
        s_failed: f64,
        last: Box<crate::ground_state::GroundState>,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
