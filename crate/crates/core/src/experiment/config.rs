use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diffcore::Aggregation;
use crate::eval::{Protocol, RunConfig};
use crate::model::{KeepRatioMode, ModelConfig, UpdateKind};
use crate::snapshots::{EdgeSchema, Frequency};
use crate::train::TrainConfig;
use crate::{Error, Result};

/// A complete experiment: dataset, protocol, model, training and seeds.
///
/// Serialised as a flat TOML table; every key is optional in the file and
/// falls back to the default shown by [`ExperimentConfig::to_toml`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub dataset: PathBuf,
    /// Comma-separated column roles, e.g. `src,dst,weight,timestamp`.
    pub columns: String,
    /// `,`, `tab`, `whitespace`, or any single character.
    pub delimiter: String,
    pub skip_header: bool,
    /// `weekly`, `daily`, or a period in seconds such as `3600s`.
    pub frequency: String,
    pub protocol: Protocol,

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
    pub reset_bn_per_snapshot: bool,

    pub learning_rate: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub negatives_per_positive: usize,

    /// Warm-start from the meta-model; when off, from the previous step's model.
    pub meta: bool,
    pub alpha: f64,
    pub k_neg: usize,
    pub val_fraction: f64,
    pub test_fraction: f64,
    pub seeds: Vec<u64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let m = ModelConfig::default();
        let t = TrainConfig::default();
        let r = RunConfig::default();
        Self {
            dataset: PathBuf::new(),
            columns: "src,dst,weight,timestamp".into(),
            delimiter: ",".into(),
            skip_header: false,
            frequency: "weekly".into(),
            protocol: Protocol::LiveUpdate,
            hidden_dim: m.hidden_dim,
            n_pre: m.n_pre,
            n_mp: m.n_mp,
            n_post: m.n_post,
            aggregation: m.aggregation,
            bidirectional: m.bidirectional,
            update: m.update,
            keep_ratio: m.keep_ratio,
            batch_norm: m.batch_norm,
            skip: m.skip,
            reset_bn_per_snapshot: m.reset_bn_per_snapshot,
            learning_rate: t.learning_rate,
            max_epochs: t.max_epochs,
            patience: t.patience,
            negatives_per_positive: t.negatives_per_positive,
            meta: r.alpha.is_some(),
            alpha: r.alpha.unwrap_or(1.0),
            k_neg: r.k_neg,
            val_fraction: r.val_fraction,
            test_fraction: r.test_fraction,
            seeds: vec![0, 1, 2],
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Every field, defaults included.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("flat config serialises")
    }

    pub fn schema(&self) -> Result<EdgeSchema> {
        let mut s = EdgeSchema::from_columns(&self.columns, self.delimiter.parse()?)?;
        s.skip_header = self.skip_header;
        Ok(s)
    }

    pub fn frequency(&self) -> Result<Frequency> {
        self.frequency.parse()
    }

    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            hidden_dim: self.hidden_dim,
            n_pre: self.n_pre,
            n_mp: self.n_mp,
            n_post: self.n_post,
            aggregation: self.aggregation,
            bidirectional: self.bidirectional,
            update: self.update,
            keep_ratio: self.keep_ratio,
            batch_norm: self.batch_norm,
            skip: self.skip,
            reset_bn_per_snapshot: self.reset_bn_per_snapshot,
            ..ModelConfig::default()
        }
    }

    pub fn run_config(&self, seed: u64) -> RunConfig {
        RunConfig {
            model: self.model_config(),
            train: TrainConfig {
                learning_rate: self.learning_rate,
                max_epochs: self.max_epochs,
                patience: self.patience,
                negatives_per_positive: self.negatives_per_positive,
                seed,
                ..TrainConfig::default()
            },
            alpha: self.meta.then_some(self.alpha),
            k_neg: self.k_neg,
            val_fraction: self.val_fraction,
            test_fraction: self.test_fraction,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.schema()?;
        self.frequency()?;
        if self.seeds.is_empty() {
            return Err(Error::config("seeds must list at least one seed"));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return Err(Error::config("seeds must be distinct"));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::config(format!("alpha = {} outside [0, 1]", self.alpha)));
        }
        self.run_config(self.seeds[0]).validate()
    }

    /// SHA-256 over the sorted `key=value` lines of the resolved config.
    pub fn fingerprint(&self) -> String {
        let value = serde_json::to_value(self).expect("serialisable");
        let map = value.as_object().expect("flat struct");
        let mut keys: Vec<&String> = map.keys().collect();
        keys.sort();
        let mut h = Sha256::new();
        for k in keys {
            h.update(format!("{k}={}\n", map[k]).as_bytes());
        }
        hex::encode(h.finalize())
    }

    /// Dataset label used in run names and tables: the file stem.
    pub fn dataset_name(&self) -> String {
        self.dataset
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .filter(|s| !s.is_empty())
            .unwrap_or_else(|| "unnamed".into())
    }

    /// Directory name under the run root: readable prefix plus fingerprint.
    pub fn run_name(&self) -> String {
        let alpha = if self.meta { format!("a{}", self.alpha) } else { "nometa".into() };
        format!(
            "{}-{}-{}-{alpha}-{}",
            self.dataset_name(),
            self.protocol,
            self.update,
            &self.fingerprint()[..12]
        )
    }

    /// Returns a copy with `key` set to `value`, as if written in the file.
    pub fn with_override(&self, key: &str, value: &toml::Value) -> Result<Self> {
        let mut table = toml::Table::try_from(self).expect("flat config serialises");
        if !table.contains_key(key) {
            return Err(Error::config(format!("unknown config key `{key}`")));
        }
        table.insert(key.to_string(), value.clone());
        let cfg: Self = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::config(format!("{key}: {}", e.message())))?;
        cfg.validate()?;
        Ok(cfg)
    }
}
