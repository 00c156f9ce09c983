use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Per-snapshot optimisation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Epochs without a validation improvement before stopping.
    pub patience: usize,
    pub negatives_per_positive: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            max_epochs: 100,
            patience: 3,
            negatives_per_positive: 1,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config(format!("learning_rate = {} must be finite and ≥ 0", self.learning_rate)));
        }
        if self.max_epochs == 0 {
            return Err(Error::config("max_epochs must be ≥ 1"));
        }
        if self.patience == 0 {
            return Err(Error::config("patience must be ≥ 1"));
        }
        if self.negatives_per_positive == 0 {
            return Err(Error::config("negatives_per_positive must be ≥ 1"));
        }
        for (field, v) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::config(format!("{field} = {v} outside [0, 1)")));
            }
        }
        if !(self.adam_eps > 0.0) {
            return Err(Error::config("adam_eps must be positive"));
        }
        Ok(())
    }
}
