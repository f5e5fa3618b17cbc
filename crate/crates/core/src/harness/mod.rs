//! Experiment harness: configuration, training of the learned policies,
//! seeded evaluation runs, metric logs and aggregate reports.

pub mod config;
pub mod metrics;
pub mod report;
pub mod run;
pub mod stats;
pub mod train;

pub use config::{ExperimentConfig, PolicyName};
pub use metrics::{MetricsLog, RunSummary};
pub use report::{emit_report, PolicyReport, Report};
pub use run::{read_runs, run_experiment, run_single, write_runs, RunOutput};
pub use train::{required_keys, train_library, train_or_load, PolicyLibrary, TrainedBin};

use crate::error::Result;

/// Train (or load cached tables), run every policy and seed, write the run
/// logs and the aggregate report under `cfg.out_dir`.
pub fn run_all(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let (library, _) = train_or_load(cfg, &required_keys(cfg))?;
    let runs = run_experiment(cfg, &library)?;
    write_runs(cfg, &runs)?;
    emit_report(cfg, &runs, &cfg.out_dir.join("report"))
}
