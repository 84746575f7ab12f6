//! Benchmark harness for the EP estimators: deterministic instance
//! generation, SNR sweeps against a brute-force MMSE reference, NMSE
//! aggregation, and CSV/SVG reports.

pub mod config;
pub mod error;
pub mod experiment;
pub mod generate;
pub mod parallel;
pub mod svg;
pub mod verify;

pub use config::{Estimator, ExperimentConfig, Scenario};
pub use error::{BenchError, Result};
pub use experiment::{run_experiment, ExperimentOutput, RunRecord, SummaryRow};
pub use generate::{generate_instance, noise_variance_for_snr, scenario_priors, Instance};
