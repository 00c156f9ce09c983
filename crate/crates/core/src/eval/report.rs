use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Identifies the line layout of a serialised report.
pub const REPORT_SCHEMA: &str = "roland.eval/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    LiveUpdate,
    FixedSplit,
}

impl std::fmt::Display for Protocol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Protocol::LiveUpdate => "live_update",
            Protocol::FixedSplit => "fixed_split",
        })
    }
}

impl std::str::FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "live_update" | "live" => Ok(Protocol::LiveUpdate),
            "fixed_split" | "fixed" => Ok(Protocol::FixedSplit),
            other => Err(Error::config(format!("unknown protocol `{other}`"))),
        }
    }
}

/// One label step: snapshot `t` is absorbed and the edges of `t + 1` are the
/// positives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: usize,
    /// Scored before training on this step's labels; `None` when the step was
    /// not scored (skipped, the first live step, or a fixed-split training step).
    pub mrr: Option<f64>,
    pub n_positives: usize,
    /// Epochs trained on this step (0 when frozen or skipped).
    pub epochs_run: usize,
    pub best_val_mrr: Option<f64>,
    pub skipped: bool,
    /// Digest of the parameters and node state that produced the scores.
    pub scorer_checksum: Option<String>,
}

/// Deterministic summary of a run: contains no timings, so identical runs
/// serialise to identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub schema: String,
    pub protocol: Protocol,
    pub fingerprint: String,
    pub seed: u64,
    pub mean_mrr: Option<f64>,
    pub evaluated_steps: usize,
    pub skipped_steps: Vec<usize>,
    pub patience: usize,
    pub alpha: Option<f64>,
    pub k_neg: usize,
    /// Fixed split: first label step of the test block.
    pub test_start: Option<usize>,
    /// Fixed split: node state keeps rolling through the test block.
    pub state_rolls_in_test: Option<bool>,
    pub checksum_before_test: Option<String>,
    pub checksum_after_test: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub per_step: Vec<StepRecord>,
    pub summary: ReportSummary,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum Line {
    Step(StepRecord),
    Summary(ReportSummary),
}

impl EvalReport {
    /// Scored records in step order.
    pub fn evaluated(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.per_step.iter().filter_map(|r| r.mrr.map(|m| (r.t, m)))
    }

    pub fn mean_mrr(&self) -> Option<f64> {
        self.summary.mean_mrr
    }

    /// One JSON object per step followed by the summary object.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.per_step {
            out += &serde_json::to_string(&Line::Step(r.clone())).expect("serialisable");
            out.push('\n');
        }
        out += &self.summary_line();
        out
    }

    pub fn summary_line(&self) -> String {
        serde_json::to_string(&Line::Summary(self.summary.clone())).expect("serialisable") + "\n"
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut per_step = Vec::new();
        let mut summary = None;
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let parsed: Line = serde_json::from_str(line).map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            match parsed {
                Line::Step(r) => per_step.push(r),
                Line::Summary(s) => summary = Some(s),
            }
        }
        let summary = summary.ok_or_else(|| Error::Format("report has no summary record".into()))?;
        if summary.schema != REPORT_SCHEMA {
            return Err(Error::Format(format!(
                "report schema `{}` (expected `{REPORT_SCHEMA}`)",
                summary.schema
            )));
        }
        Ok(Self { per_step, summary })
    }
}

pub(crate) fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}
