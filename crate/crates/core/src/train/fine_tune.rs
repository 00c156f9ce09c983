use std::collections::HashSet;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{bce_grad, bce_loss, Adam, TrainConfig};
use crate::diffcore::Mode;
use crate::eval::mrr_over;
use crate::model::{NodeState, Roland};
use crate::seed::{rng_for, stream};
use crate::snapshots::{GraphSnapshot, LabelSet};
use crate::{Error, Result};

/// Element counts of the large objects alive while one snapshot trains.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkingSet {
    /// Trainable values and their gradients plus batch-norm statistics.
    pub params: usize,
    /// The best-so-far copy kept for early stopping.
    pub best_copy: usize,
    /// Meta-model (filled in by the caller that owns it).
    pub meta: usize,
    pub optimizer: usize,
    pub state: usize,
    pub snapshot: usize,
}

impl WorkingSet {
    pub fn total(&self) -> usize {
        self.params + self.best_copy + self.meta + self.optimizer + self.state + self.snapshot
    }
}

#[derive(Debug, Clone)]
pub struct FineTuneResult {
    /// Parameters from the epoch with the best validation MRR (possibly the
    /// untouched warm start).
    pub model: Roland,
    /// State after the snapshot, recomputed in evaluation mode with `model`.
    pub state: NodeState,
    pub best_val_mrr: f64,
    pub epochs_run: usize,
    /// Validation MRR of the warm start followed by one entry per epoch.
    pub val_history: Vec<f64>,
    pub final_train_loss: f64,
    pub wall_seconds: f64,
    pub working_set: WorkingSet,
}

/// Training batch for one epoch: each positive followed by its sampled
/// negatives, and the matching 1/0 labels.
pub fn sample_training_pairs<R: Rng + ?Sized>(
    positives: &[(u32, u32)],
    exclude: &HashSet<(u32, u32)>,
    node_count: usize,
    per_positive: usize,
    rng: &mut R,
) -> (Vec<(u32, u32)>, Vec<f64>) {
    const MAX_TRIES: usize = 64;
    let mut pairs = Vec::with_capacity(positives.len() * (1 + per_positive));
    let mut labels = Vec::with_capacity(pairs.capacity());
    for &(u, v) in positives {
        pairs.push((u, v));
        labels.push(1.0);
        for _ in 0..per_positive {
            if let Some(w) = (0..MAX_TRIES)
                .map(|_| rng.random_range(0..node_count as u32))
                .find(|&w| !exclude.contains(&(u, w)))
            {
                pairs.push((u, w));
                labels.push(0.0);
            }
        }
    }
    (pairs, labels)
}

fn val_mrr(model: &mut Roland, g: &GraphSnapshot, h_prev: &NodeState, labels: &LabelSet, val: &[(u32, u32)]) -> Result<f64> {
    let (z, _) = model.embed(g, h_prev, Mode::Eval)?;
    Ok(mrr_over(&z, &model.head, val, &labels.eval_negatives)?.unwrap_or(0.0))
}

/// Trains a copy of `init` on the labels of snapshot `g`, treating `h_prev` as
/// fixed input, and keeps the parameters with the best validation MRR.
///
/// Training stops after `patience` epochs without a strict improvement or at
/// `max_epochs`. When the validation split is empty the training positives
/// stand in for it, and vice versa.
pub fn fine_tune(
    init: &Roland,
    g: &GraphSnapshot,
    h_prev: &NodeState,
    labels: &LabelSet,
    cfg: &TrainConfig,
) -> Result<FineTuneResult> {
    cfg.validate()?;
    if labels.skip || labels.positives.is_empty() {
        return Err(Error::config(format!("step {} has no labels to train on", labels.step)));
    }
    let start = Instant::now();
    let train_pos = if labels.train_pos.is_empty() { &labels.val_pos } else { &labels.train_pos };
    let val_pos = if labels.val_pos.is_empty() { &labels.train_pos } else { &labels.val_pos };
    let exclude = labels.positive_set();

    let mut model = init.clone();
    if model.config.reset_bn_per_snapshot {
        model.reset_batch_norm_stats();
    }
    let baseline = val_mrr(&mut model, g, h_prev, labels, val_pos)?;
    let mut best = (baseline, model.clone());
    let mut history = vec![baseline];
    let mut adam = Adam::new(&model, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_eps);
    let mut since_best = 0;
    let mut final_loss = f64::NAN;
    let mut epochs = 0;

    for epoch in 1..=cfg.max_epochs {
        let mut rng = rng_for(cfg.seed, &[stream::TRAIN_NEG, labels.step as u64, epoch as u64]);
        let (pairs, ys) = sample_training_pairs(train_pos, &exclude, g.node_count(), cfg.negatives_per_positive, &mut rng);
        model.zero_grad();
        let (scores, _, cache) = model.forward_train(g, h_prev, &pairs)?;
        let loss = bce_loss(&scores, &ys)?;
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss {
                epoch,
                learning_rate: cfg.learning_rate,
            });
        }
        model.backward(&cache, &bce_grad(&scores, &ys)?)?;
        drop(cache);
        adam.step(&mut model);
        if !model.is_finite() {
            return Err(Error::NonFiniteLoss {
                epoch,
                learning_rate: cfg.learning_rate,
            });
        }
        final_loss = loss;
        epochs = epoch;
        let val = val_mrr(&mut model, g, h_prev, labels, val_pos)?;
        history.push(val);
        if val > best.0 {
            best = (val, model.clone());
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                break;
            }
        }
    }

    let working_set = WorkingSet {
        params: 2 * model.param_count() + model.buffer_count(),
        best_copy: best.1.param_count() + best.1.buffer_count(),
        meta: 0,
        optimizer: adam.element_count(),
        state: h_prev.element_count(),
        snapshot: g.element_count(),
    };
    let (best_val_mrr, mut trained) = best;
    let (_, state) = trained.embed(g, h_prev, Mode::Eval)?;
    Ok(FineTuneResult {
        model: trained,
        state,
        best_val_mrr,
        epochs_run: epochs,
        val_history: history,
        final_train_loss: final_loss,
        wall_seconds: start.elapsed().as_secs_f64(),
        working_set,
    })
}

/// One line of a run's training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepLog {
    pub t: usize,
    pub epochs_run: usize,
    pub best_val_mrr: f64,
    pub final_train_loss: f64,
    pub wall_seconds: f64,
}

impl StepLog {
    pub fn from_result(t: usize, r: &FineTuneResult) -> Self {
        Self {
            t,
            epochs_run: r.epochs_run,
            best_val_mrr: r.best_val_mrr,
            final_train_loss: r.final_train_loss,
            wall_seconds: r.wall_seconds,
        }
    }
}
