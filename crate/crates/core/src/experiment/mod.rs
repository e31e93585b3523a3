//! Configuration, orchestration and CSV output.

mod config;
mod output;
mod runner;

pub use config::{load_config, parse_config, ConfigError, DtmcSettings, ExperimentConfig};
pub use output::{aggregate_csv, emit_results, trials_csv, AGGREGATE_HEADER, TRIAL_HEADER};
pub use runner::{dtmc_report, run_experiment, AggregateRow, DtmcRow, Estimate, ExperimentResults, TrialSummary};
