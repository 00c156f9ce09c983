use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::diffcore::Aggregation;
use crate::snapshots::{EDGE_FEATURE_DIM, NODE_FEATURE_DIM};
use crate::{Error, Result};

/// How a message-passing layer's fresh embedding is merged into its stored state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateKind {
    MovingAverage,
    Mlp,
    Gru,
}

impl UpdateKind {
    pub const ALL: [UpdateKind; 3] = [UpdateKind::MovingAverage, UpdateKind::Mlp, UpdateKind::Gru];

    pub fn as_str(self) -> &'static str {
        match self {
            UpdateKind::MovingAverage => "moving_average",
            UpdateKind::Mlp => "mlp",
            UpdateKind::Gru => "gru",
        }
    }
}

impl fmt::Display for UpdateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for UpdateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "moving_average" | "ma" => Ok(UpdateKind::MovingAverage),
            "mlp" => Ok(UpdateKind::Mlp),
            "gru" => Ok(UpdateKind::Gru),
            other => Err(Error::config(format!(
                "unknown update kind `{other}` (expected moving_average, mlp or gru)"
            ))),
        }
    }
}

/// Which edge counts feed the moving-average keep ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeepRatioMode {
    /// One ratio for every node from whole-graph edge counts.
    Global,
    /// Each node's own incident-edge counts.
    PerNode,
}

impl fmt::Display for KeepRatioMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KeepRatioMode::Global => "global",
            KeepRatioMode::PerNode => "per_node",
        })
    }
}

impl FromStr for KeepRatioMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "global" => Ok(KeepRatioMode::Global),
            "per_node" => Ok(KeepRatioMode::PerNode),
            other => Err(Error::config(format!("unknown keep-ratio mode `{other}`"))),
        }
    }
}

/// Architecture of a [`Roland`](super::Roland) network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub input_dim: usize,
    pub edge_dim: usize,
    pub hidden_dim: usize,
    pub n_pre: usize,
    pub n_mp: usize,
    pub n_post: usize,
    pub aggregation: Aggregation,
    pub bidirectional: bool,
    pub update: UpdateKind,
    pub keep_ratio: KeepRatioMode,
    pub batch_norm: bool,
    pub skip: bool,
    /// Reset batch-norm running statistics before training on each snapshot
    /// instead of carrying them across time.
    pub reset_bn_per_snapshot: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            input_dim: NODE_FEATURE_DIM,
            edge_dim: EDGE_FEATURE_DIM,
            hidden_dim: 128,
            n_pre: 1,
            n_mp: 2,
            n_post: 1,
            aggregation: Aggregation::Sum,
            bidirectional: false,
            update: UpdateKind::Gru,
            keep_ratio: KeepRatioMode::Global,
            batch_norm: true,
            skip: true,
            reset_bn_per_snapshot: false,
        }
    }
}

impl ModelConfig {
    pub const LAYER_RANGE: std::ops::RangeInclusive<usize> = 1..=5;

    pub fn with_update(mut self, update: UpdateKind) -> Self {
        self.update = update;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (field, value) in [("n_pre", self.n_pre), ("n_mp", self.n_mp), ("n_post", self.n_post)] {
            if !Self::LAYER_RANGE.contains(&value) {
                return Err(Error::config(format!("{field} = {value} outside [1, 5]")));
            }
        }
        for (field, value) in [
            ("hidden_dim", self.hidden_dim),
            ("input_dim", self.input_dim),
            ("edge_dim", self.edge_dim),
        ] {
            if value == 0 {
                return Err(Error::config(format!("{field} must be positive")));
            }
        }
        Ok(())
    }
}
