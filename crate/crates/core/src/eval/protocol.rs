use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::report::{mean, EvalReport, Protocol, ReportSummary, StepRecord, REPORT_SCHEMA};
use super::mrr;
use crate::diffcore::Mode;
use crate::model::{ModelConfig, NodeState, Roland};
use crate::seed::{rng_for, stream};
use crate::snapshots::{build_labels, DynamicGraph, LabelSet};
use crate::train::{fine_tune, meta_update, MetaParams, StepLog, TrainConfig, WorkingSet};
use crate::{Error, Result};

/// Everything a single-seed run depends on besides the graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub train: TrainConfig,
    /// Meta-model smoothing; `None` warm-starts each step from the previous
    /// step's trained parameters instead.
    pub alpha: Option<f64>,
    pub k_neg: usize,
    pub val_fraction: f64,
    /// Fixed split only: share of snapshots whose label steps form the test block.
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            alpha: Some(0.9),
            k_neg: 1000,
            val_fraction: 0.1,
            test_fraction: 0.1,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.train.validate()?;
        if let Some(a) = self.alpha {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::config(format!("alpha must lie in [0, 1], got {a}")));
            }
        }
        if self.k_neg == 0 {
            return Err(Error::config("k_neg must be at least 1"));
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return Err(Error::config(format!("val_fraction must lie in (0, 1), got {}", self.val_fraction)));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::config(format!("test_fraction must lie in (0, 1), got {}", self.test_fraction)));
        }
        Ok(())
    }

    /// SHA-256 of the canonical (key-sorted) JSON form, excluding the seed.
    pub fn fingerprint(&self) -> String {
        let mut v = serde_json::to_value(self).expect("serialisable");
        if let Some(map) = v.as_object_mut() {
            map.remove("seed");
            if let Some(train) = map.get_mut("train").and_then(|t| t.as_object_mut()) {
                train.remove("seed");
            }
        }
        hex::encode(Sha256::digest(v.to_string().as_bytes()))
    }

    fn train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: self.seed,
            ..self.train.clone()
        }
    }
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: EvalReport,
    pub logs: Vec<StepLog>,
    /// Working set of every trained step, including the meta-model.
    pub working_sets: Vec<(usize, WorkingSet)>,
    pub model: Roland,
    pub state: NodeState,
    pub meta: Option<MetaParams>,
}

fn labels_for(g: &DynamicGraph, t: usize, cfg: &RunConfig) -> Result<LabelSet> {
    let mut rng = rng_for(cfg.seed, &[stream::LABELS, t as u64]);
    build_labels(g, t, cfg.val_fraction, cfg.k_neg, &mut rng)
}

fn scorer_checksum(model: &Roland, state: &NodeState) -> String {
    let mut h = Sha256::new();
    model.hash_into(&mut h);
    for layer in &state.layers {
        for v in layer.iter() {
            h.update(v.to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}

/// Rolling state shared by both protocols.
struct Runner<'a> {
    g: &'a DynamicGraph,
    train: TrainConfig,
    model: Roland,
    state: NodeState,
    meta: Option<MetaParams>,
    logs: Vec<StepLog>,
    working_sets: Vec<(usize, WorkingSet)>,
}

impl<'a> Runner<'a> {
    fn new(g: &'a DynamicGraph, cfg: &'a RunConfig) -> Result<Self> {
        cfg.validate()?;
        let model = Roland::new(cfg.model.clone(), cfg.seed)?;
        let state = model.initial_state(g.node_count);
        let meta = cfg.alpha.map(|a| MetaParams::new(model.clone(), a)).transpose()?;
        Ok(Self {
            g,
            train: cfg.train_config(),
            model,
            state,
            meta,
            logs: Vec::new(),
            working_sets: Vec::new(),
        })
    }

    /// Scores step `t` with the current parameters and state, leaving both as they are.
    fn score(&self, t: usize, labels: &LabelSet) -> Result<(Option<f64>, String)> {
        let mut scorer = self.model.clone();
        let (z, _) = scorer.embed(&self.g.snapshots[t], &self.state, Mode::Eval)?;
        Ok((mrr(&z, &scorer.head, labels)?, scorer_checksum(&self.model, &self.state)))
    }

    /// Fine-tunes on step `t` from the meta-model (or the previous parameters)
    /// and advances the state with the result.
    fn train(&mut self, t: usize, labels: &LabelSet, record: &mut StepRecord) -> Result<()> {
        let snapshot = &self.g.snapshots[t];
        if labels.skip {
            self.advance(t)?;
            return Ok(());
        }
        let warm = self.meta.as_ref().map_or(&self.model, |m| &m.model);
        let r = fine_tune(warm, snapshot, &self.state, labels, &self.train)?;
        let mut ws = r.working_set;
        ws.meta = self.meta.as_ref().map_or(0, MetaParams::element_count);
        self.working_sets.push((t, ws));
        self.logs.push(StepLog::from_result(t, &r));
        record.epochs_run = r.epochs_run;
        record.best_val_mrr = Some(r.best_val_mrr);
        self.model = r.model;
        self.state = r.state;
        if let Some(meta) = self.meta.take() {
            self.meta = Some(meta_update(meta, &self.model)?);
        }
        Ok(())
    }

    /// Absorbs snapshot `t` into the state without touching the parameters.
    fn advance(&mut self, t: usize) -> Result<()> {
        let (_, next) = self.model.embed(&self.g.snapshots[t], &self.state, Mode::Eval)?;
        self.state = next;
        Ok(())
    }

    fn finish(self, per_step: Vec<StepRecord>, summary: ReportSummary) -> RunOutput {
        RunOutput {
            report: EvalReport { per_step, summary },
            logs: self.logs,
            working_sets: self.working_sets,
            model: self.model,
            state: self.state,
            meta: self.meta,
        }
    }
}

fn record(t: usize, labels: &LabelSet) -> StepRecord {
    StepRecord {
        t,
        mrr: None,
        n_positives: labels.positives.len(),
        epochs_run: 0,
        best_val_mrr: None,
        skipped: labels.skip,
        scorer_checksum: None,
    }
}

fn summary(protocol: Protocol, cfg: &RunConfig, per_step: &[StepRecord]) -> ReportSummary {
    let scored: Vec<f64> = per_step.iter().filter_map(|r| r.mrr).collect();
    ReportSummary {
        schema: REPORT_SCHEMA.into(),
        protocol,
        fingerprint: cfg.fingerprint(),
        seed: cfg.seed,
        mean_mrr: mean(&scored),
        evaluated_steps: scored.len(),
        skipped_steps: per_step.iter().filter(|r| r.skipped).map(|r| r.t).collect(),
        patience: cfg.train.patience,
        alpha: cfg.alpha,
        k_neg: cfg.k_neg,
        test_start: None,
        state_rolls_in_test: None,
        checksum_before_test: None,
        checksum_after_test: None,
    }
}

/// Live-update evaluation over every label step.
///
/// Step `t` (labels from snapshot `t + 1`) is first scored with the parameters
/// trained through step `t − 1` and the state `H_{t−1}`, then trained on. Step 0
/// has nothing to score with and is training-only, so a graph of `T` snapshots
/// yields `T − 1` records of which at most `T − 2` carry an MRR.
pub fn live_update_run(g: &DynamicGraph, cfg: &RunConfig) -> Result<RunOutput> {
    if g.len() < 3 {
        return Err(Error::config(format!(
            "live-update evaluation needs at least 3 snapshots, got {}",
            g.len()
        )));
    }
    let mut run = Runner::new(g, cfg)?;
    let mut per_step = Vec::with_capacity(g.len() - 1);
    for t in 0..g.len() - 1 {
        let labels = labels_for(g, t, cfg)?;
        let mut rec = record(t, &labels);
        if t >= 1 && !labels.skip {
            let (m, sum) = run.score(t, &labels)?;
            rec.mrr = m;
            rec.scorer_checksum = Some(sum);
        }
        run.train(t, &labels, &mut rec)?;
        per_step.push(rec);
    }
    let summary = summary(Protocol::LiveUpdate, cfg, &per_step);
    Ok(run.finish(per_step, summary))
}

/// Number of label steps in the fixed-split test block: `floor(T · test_fraction)`.
pub fn fixed_split_test_steps(snapshots: usize, test_fraction: f64) -> usize {
    // T · (1/T) can land a hair below 1 in floating point.
    (snapshots as f64 * test_fraction + 1e-9).floor() as usize
}

/// Fixed-split evaluation: the leading label steps are trained incrementally
/// (with the meta-model when enabled), then parameters are frozen and the last
/// `floor(T · test_fraction)` label steps are scored while the node state keeps
/// absorbing each test snapshot.
pub fn fixed_split_run(g: &DynamicGraph, cfg: &RunConfig) -> Result<RunOutput> {
    let steps = g.len().saturating_sub(1);
    let n_test = fixed_split_test_steps(g.len(), cfg.test_fraction);
    if n_test == 0 || n_test >= steps {
        return Err(Error::config(format!(
            "fixed split of {} snapshots with test_fraction {} leaves {n_test} test and {} training steps; both must be at least 1",
            g.len(),
            cfg.test_fraction,
            steps.saturating_sub(n_test)
        )));
    }
    let test_start = steps - n_test;
    let mut run = Runner::new(g, cfg)?;
    for t in 0..test_start {
        let labels = labels_for(g, t, cfg)?;
        run.train(t, &labels, &mut record(t, &labels))?;
    }
    let before = run.model.checksum();
    let mut per_step = Vec::with_capacity(n_test);
    for t in test_start..steps {
        let labels = labels_for(g, t, cfg)?;
        let mut rec = record(t, &labels);
        if !labels.skip {
            let (m, sum) = run.score(t, &labels)?;
            rec.mrr = m;
            rec.scorer_checksum = Some(sum);
        }
        run.advance(t)?;
        per_step.push(rec);
    }
    let after = run.model.checksum();
    let mut summary = summary(Protocol::FixedSplit, cfg, &per_step);
    summary.test_start = Some(test_start);
    summary.state_rolls_in_test = Some(true);
    summary.checksum_before_test = Some(before);
    summary.checksum_after_test = Some(after);
    Ok(run.finish(per_step, summary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::UpdateKind;
    use crate::snapshots::{Frequency, TemporalEdge};

    fn graph(windows: usize) -> DynamicGraph {
        let w = (0..windows)
            .map(|i| {
                let start = i as f64 * 10.0;
                let edges = (0..6u32)
                    .map(|k| TemporalEdge {
                        src: (k + i as u32) % 6,
                        dst: (k * 5 + 1 + i as u32) % 6,
                        weight: 1.0,
                        timestamp: start + k as f64,
                    })
                    .filter(|e| e.src != e.dst)
                    .collect();
                ((start, start + 10.0), edges)
            })
            .collect();
        DynamicGraph::from_windows(w, Frequency::Seconds(10.0), 6).unwrap()
    }

    fn cfg() -> RunConfig {
        RunConfig {
            model: ModelConfig {
                hidden_dim: 4,
                ..ModelConfig::default().with_update(UpdateKind::MovingAverage)
            },
            train: TrainConfig {
                max_epochs: 3,
                ..TrainConfig::default()
            },
            k_neg: 5,
            val_fraction: 0.3,
            test_fraction: 0.25,
            ..RunConfig::default()
        }
    }

    #[test]
    fn live_update_record_layout() {
        let out = live_update_run(&graph(5), &cfg()).unwrap();
        let steps = &out.report.per_step;
        assert_eq!(steps.len(), 4);
        assert!(steps[0].mrr.is_none() && steps[0].epochs_run > 0);
        assert!(steps[1..].iter().all(|r| r.mrr.is_some()));
        assert_eq!(out.report.summary.evaluated_steps, 3);
        assert_eq!(out.logs.len(), 4);
        assert_eq!(out.state.step, 4);
    }

    #[test]
    fn live_update_needs_three_snapshots() {
        assert!(matches!(live_update_run(&graph(2), &cfg()), Err(Error::Config(_))));
    }

    #[test]
    fn fixed_split_freezes_parameters() {
        let out = fixed_split_run(&graph(8), &cfg()).unwrap();
        let s = &out.report.summary;
        assert_eq!(out.report.per_step.len(), 2);
        assert_eq!(s.test_start, Some(5));
        assert_eq!(s.checksum_before_test, s.checksum_after_test);
        assert!(out.report.per_step.iter().all(|r| r.epochs_run == 0));
        assert!(out.logs.iter().all(|l| l.t < 5));
    }

    #[test]
    fn fixed_split_rejects_empty_blocks() {
        let c = RunConfig {
            test_fraction: 0.1,
            ..cfg()
        };
        assert!(fixed_split_run(&graph(5), &c).is_err());
    }

    #[test]
    fn fingerprint_ignores_seed_only() {
        let a = cfg();
        let b = RunConfig { seed: 9, ..cfg() };
        let c = RunConfig { k_neg: 6, ..cfg() };
        assert_eq!(a.fingerprint(), b.fingerprint());
        assert_ne!(a.fingerprint(), c.fingerprint());
    }

    #[test]
    fn reruns_serialise_identically() {
        let a = live_update_run(&graph(4), &cfg()).unwrap();
        let b = live_update_run(&graph(4), &cfg()).unwrap();
        assert_eq!(a.report.to_jsonl(), b.report.to_jsonl());
    }
}
