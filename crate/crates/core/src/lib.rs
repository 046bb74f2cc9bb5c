//! Zeroth-order optimization with multi-query gradient estimators.
//!
//! Two estimators built from a block of `q` Gaussian directions are
//! provided: the averaging estimator `(1/q) U s` and the alignment
//! estimator `U (U^T U)^{-1} s`, which is the minimum-norm vector
//! reproducing every measured directional derivative. Around them sit
//! benchmark objectives, a budgeted descent driver with allocation
//! schedules, and statistical checks of the estimators' moments and of
//! the convergence bounds.

pub mod analysis;
pub mod block;
pub mod error;
pub mod estimators;
pub mod objective;
pub mod objectives;
pub mod optimizer;
pub mod rng;

pub use block::{sample_direction_block, DirectionBlock};
pub use error::{Result, ZoqError};
pub use estimators::{
    estimate, EstimatorConfig, EstimatorKind, EstimatorMode, GradientEstimate, Smoothing,
};
pub use objective::{Objective, Realization, StochasticObjective, WithOptimum};
pub use optimizer::{
    run_deterministic, run_stochastic, AllocationKind, AllocationSchedule, StepPolicy, Trajectory,
    TrajectoryRow,
};
pub use rng::SeededRng;
