//! Shared numerical tolerances.
//!
//! These are dominated by quadrature error, not machine epsilon, so they are
//! deliberately loose compared to `f64::EPSILON`.

/// Relative PSD tolerance: min eigenvalue must be at least `-TOL_PSD_REL * trace_norm`.
pub const TOL_PSD_REL: f64 = 1e-8;

/// Relative Hermiticity tolerance against `max |k|`.
pub const TOL_HERM_REL: f64 = 1e-10;

/// Absolute tolerance on the unit trace of a density kernel.
pub const TOL_TR: f64 = 1e-6;

/// Below this relative size a domain-probe quotient is treated as exactly zero.
pub const PROBE_ZERO_REL: f64 = 1e-12;

/// Negative flux allowed on boundary-vanishing PSD kernels.
pub const FLUX_NEG_TOL: f64 = 1e-6;

/// Growth exponent at or below which a domain probe reports BOUNDED.
pub const BOUNDED_EXPONENT: f64 = 0.2;

/// Growth exponent at or above which a domain probe reports DIVERGENT.
pub const DIVERGENT_EXPONENT: f64 = 0.8;

pub fn tol_psd(trace_norm: f64) -> f64 {
    TOL_PSD_REL * trace_norm
}

pub fn tol_herm(max_abs: f64) -> f64 {
    TOL_HERM_REL * max_abs
}
