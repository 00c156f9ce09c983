//! Ranking metrics and the live-update and fixed-split evaluation protocols.

mod metrics;
mod protocol;
mod report;

pub use metrics::{mrr, mrr_over, reciprocal_rank};
pub use protocol::{fixed_split_run, fixed_split_test_steps, live_update_run, RunConfig, RunOutput};
pub use report::{EvalReport, Protocol, ReportSummary, StepRecord, REPORT_SCHEMA};
