//! Experiment driver for `nsp-lab-core`: Monte Carlo probability estimates,
//! verification suites, configuration files and plot data.

pub mod cli;
pub mod config;
pub mod error;
pub mod montecarlo;
pub mod plot;
pub mod suite;

pub use config::{ExperimentConfig, Format, MatrixSource};
pub use error::{CliError, CliResult};
pub use montecarlo::{mc_probability, MonteCarloSummary, Proportion};
pub use suite::{run_suite, verify_counterexample1, SuiteName, SuiteOptions};
