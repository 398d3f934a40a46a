//! Benchmark harness: configuration, Monte-Carlo runner, error metrics,
//! flop counting and artifact emission.

pub mod config;
pub mod flops;
pub mod metrics;
pub mod output;
pub mod runner;

pub use config::{FilterKind, FilterSpec, RmseForm, RunConfig};
pub use flops::{fit_reference_counts, flops, FlopsKind};
pub use metrics::{armse, reporting_error, rmse, STATE_NAMES};
pub use output::write_artifacts;
pub use runner::{bench, initial_belief, run_filter, BenchResult};
