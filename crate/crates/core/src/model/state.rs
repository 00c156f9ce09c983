use serde::{Deserialize, Serialize};

use super::KeepRatioMode;
use crate::snapshots::GraphSnapshot;
use crate::Matrix;

/// Moving-average mixing weight `history / (history + new)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeepRatio {
    pub value: f64,
    /// Both counts were zero; `value` is then 0 (the fresh embedding wins).
    pub degenerate: bool,
}

pub fn keep_ratio(history: u64, new: u64) -> KeepRatio {
    let total = history + new;
    if total == 0 {
        KeepRatio {
            value: 0.0,
            degenerate: true,
        }
    } else {
        KeepRatio {
            value: history as f64 / total as f64,
            degenerate: false,
        }
    }
}

/// Keep ratios for one snapshot: a scalar, or one per node.
#[derive(Debug, Clone, PartialEq)]
pub enum Kappa {
    Global(f64),
    PerNode(Vec<f64>),
}

/// Edge counts seen before the current snapshot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MovingAverageCounter {
    pub history: u64,
    /// Incident-edge counts per node.
    pub per_node: Vec<u64>,
}

impl MovingAverageCounter {
    pub fn new(node_count: usize) -> Self {
        Self {
            history: 0,
            per_node: vec![0; node_count],
        }
    }

    pub fn kappa(&self, snapshot: &GraphSnapshot, mode: KeepRatioMode) -> Kappa {
        match mode {
            KeepRatioMode::Global => Kappa::Global(keep_ratio(self.history, snapshot.edge_count() as u64).value),
            KeepRatioMode::PerNode => Kappa::PerNode(
                self.per_node
                    .iter()
                    .zip(snapshot.incident_counts())
                    .map(|(&h, n)| keep_ratio(h, n).value)
                    .collect(),
            ),
        }
    }

    /// Counter after `snapshot` has been absorbed.
    pub fn absorbed(&self, snapshot: &GraphSnapshot) -> Self {
        let mut next = self.clone();
        next.history += snapshot.edge_count() as u64;
        for (h, n) in next.per_node.iter_mut().zip(snapshot.incident_counts()) {
            *h += n;
        }
        next
    }
}

/// Per-layer node embeddings carried from one snapshot to the next.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeState {
    /// One `node_count × d` matrix per message-passing layer.
    pub layers: Vec<Matrix>,
    /// Number of snapshots absorbed so far; equals the index of the next snapshot.
    pub step: usize,
    pub counter: MovingAverageCounter,
}

impl NodeState {
    /// All-zero state before the first snapshot.
    pub fn zeros(n_layers: usize, node_count: usize, dim: usize) -> Self {
        Self {
            layers: (0..n_layers).map(|_| Matrix::zeros((node_count, dim))).collect(),
            step: 0,
            counter: MovingAverageCounter::new(node_count),
        }
    }

    pub fn node_count(&self) -> usize {
        self.counter.per_node.len()
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|m| m.iter().all(|v| v.is_finite()))
    }

    pub fn element_count(&self) -> usize {
        self.layers.iter().map(Matrix::len).sum::<usize>() + self.counter.per_node.len() + 1
    }
}
