//! Estimator moment checks, bound evaluation and rate fits.

mod bounds;
mod moments;
mod rate;
pub mod stats;

pub use bounds::{bound_curve, stochastic_second_moment_bound, BoundCurve, BoundInputs, Theorem};
pub use moments::{
    expected_estimate, mse_closed_form, mse_monte_carlo, rounding_floor, second_moment_closed_form,
    MomentReport,
    MIN_SAMPLES,
};
pub use rate::{fit_log_linear, fit_log_linear_rate, mean_gap_curve, window_bounds, RateAxis, RateWindow};
