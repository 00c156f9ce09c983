//! Experiment configs, run directories, grid search and report tables.
//!
//! A run directory is self-describing:
//!
//! ```text
//! <root>/<dataset>-<protocol>-<update>-<alpha>-<fingerprint>/
//!     config.toml            resolved config, defaults included
//!     seed-<s>/report.jsonl  per-step records + summary (roland.eval/1)
//!     seed-<s>/train_log.jsonl
//!     seed-<s>/working_set.jsonl
//!     seed-<s>/checkpoint.{json,tensors}
//!     summary.json           cross-seed mean and standard deviation
//!     COMPLETE
//! ```

mod config;
mod grid;
mod report;
mod run;

pub use config::ExperimentConfig;
pub use grid::{grid_search, grid_search_on, CellOutcome, GridAxes, GridOptions, GridResult, GRID_SCHEMA};
pub use report::{collect_runs, LoadedRun, ReportTables};
pub use run::{
    completed_summary, load_dataset, read_reports, run_experiment, run_experiment_on, run_seed, ExperimentSummary,
    RunOptions, RunOutcome, SeedSummary, COMPLETE_MARKER, CONFIG_FILE, SUMMARY_FILE, SUMMARY_SCHEMA,
};
