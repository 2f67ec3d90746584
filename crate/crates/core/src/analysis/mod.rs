//! Post-processing: singularity tracing, blow-up fits and exponent tables.

pub mod blowup;
pub mod lstsq;
pub mod nelder_mead;
pub mod spectrum;

pub use blowup::{
    compare_models, fit_blowup_rate, predicted_exponents, scaling_factor_series, BlowupFit,
    FitWindow, ModelComparison, PredictedExponents, RateModel,
};
pub use spectrum::{
    fit_fourier_asymptotics, min_resolved_distance, singularity_stop_check, spectral_tail_ratio,
    SpectrumFit, WindowPolicy,
};
