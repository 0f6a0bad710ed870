//! Estimation of weighted quadratic functionals of a density observed under
//! multiplicative measurement error `Y = X * U`.
//!
//! The estimator works in the Mellin domain: with the error law `g` known,
//! `M_c[f] = M_c[f_Y] / M_c[g]`, and the functional
//!
//! ```text
//! theta = ∫ |M_c[f](t)|^2 ω^2(t) dt
//! ```
//!
//! is estimated by a bias-corrected spectral cut-off statistic restricted to
//! `|t| <= k` (see [`estimator`]). The cut-off is chosen by a
//! Goldenshluger–Lepski contrast with data-driven penalties ([`adaptive`]).
//! [`simkit`] carries the samplers, the brute-force oracle and the Monte
//! Carlo driver used to check everything end to end.

// `!(x > 0.0)` is used on purpose: it rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adaptive;
pub mod density;
pub mod error;
pub mod estimator;
pub mod mellin;
pub mod quad;
pub mod sample;
pub mod simkit;
pub mod summary;
pub mod weight;

pub use adaptive::{
    contrast_and_select, delta_four, delta_inf, error_constant_cg, m_upper, omega_rate, oracle_k_star, penalty,
    select_with_stopping, sigma_fg, sigma_hat_sq, vbar, PenaltyInputs, PenaltyMode, PenaltyRow, PenaltyTable,
    SelectionResult, Smoothness,
};
pub use density::DensitySpec;
pub use error::{Error, Result};
pub use estimator::{estimate_curve, estimate_theta, CurvePoint, EstimationReport};
pub use mellin::{analytic_mellin, empirical_mellin, mellin_power, numeric_mellin, ComplexValue};
pub use quad::{integrate_even, sup_on_interval, QuadratureRule, Scheme};
pub use sample::{KGrid, ModelExponent, Sample, SeedProvenance};
pub use weight::WeightSpec;

/// The simulation study's Mellin development point.
pub const DEFAULT_C: f64 = 0.5;

/// Penalty constant used in the simulation study.
pub const DEFAULT_KAPPA: f64 = 1e-5;
