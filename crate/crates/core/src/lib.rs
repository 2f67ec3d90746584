//! Pseudo-spectral solver for the one-dimensional fractional nonlinear
//! Schrödinger equation
//!
//! ```text
//! i ε ψ_t = ε^{2s}/2 (−Δ)^s ψ + γ |ψ|^{2p} ψ,   x ∈ [−πD, πD) periodic,
//! ```
//!
//! with fourth-order time stepping, ground-state computation and blow-up
//! diagnostics based on the decay of Fourier coefficients.

pub mod analysis;
pub mod error;
pub mod evolution;
pub mod ground_state;
pub mod par;
pub mod params;
pub mod scenarios;
pub mod spectral;

pub use error::{Error, Result};
pub use evolution::{evolve, Integrator, MonitorConfig, RunResult, RunStatus, Sample, TimeGrid};
pub use params::ModelParams;
pub use spectral::{Grid, GridSpec, PhysicalField, SpectralField};
