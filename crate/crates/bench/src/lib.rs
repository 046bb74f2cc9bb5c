//! Experiment runner, CSV output, SVG plots and the verification battery
//! behind the `zoq` command.

pub mod config;
pub mod error;
pub mod output;
pub mod plot;
pub mod presets;
pub mod runner;
pub mod verify;

pub use config::ExperimentConfig;
pub use error::BenchError;
