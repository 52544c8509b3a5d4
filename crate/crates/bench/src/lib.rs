//! Config-driven benchmark runs over the vanilla generative models.
//!
//! A [`RunConfig`] names a dataset, a task and a model. [`run_benchmark`]
//! builds the data, fits the model, draws samples, scores them and writes
//! everything under a directory keyed by the config hash:
//!
//! ```text
//! <runs>/<run id>/config.json          resolved config
//! <runs>/<run id>/checkpoint/          model parameters and state
//! <runs>/<run id>/training_log.json    per-epoch losses and validation metric
//! <runs>/<run id>/metrics.json         metric report
//! <runs>/<run id>/timings.json         wall-clock timings
//! <runs>/<run id>/result.json          all of the above in one record
//! <runs>/<run id>/reference/ inputs/ draws/ predictions/   stored arrays
//! <runs>/<run id>/failure.json         stage and message, only on failure
//! ```

pub mod aggregate;
pub mod config;
pub mod data;
pub mod error;
pub mod report;
pub mod run;
pub mod sweep;
pub mod throughput;

pub use aggregate::{aggregate_results, column_ranks, Column, ReportTable, Row};
pub use config::{DatasetSpec, GeometrySpec, ResolvedGeometry, RunConfig, Task};
pub use data::{build_task_data, TaskData, TestData};
pub use error::{BenchError, Result, Stage};
pub use run::{run_benchmark, run_dir, split_draws, FailureRecord, RunResult, Timings};
pub use sweep::{run_sweep, sweep_dir, SweepEntry};
pub use throughput::{measure_throughput, Phase, Throughput, TimingEntry};
pub use tsgb_metrics::{ensemble_stats, EnsembleStats};
