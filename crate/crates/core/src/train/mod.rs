//! Incremental training: one snapshot at a time, with the previous node
//! state as fixed input, early stopping on validation MRR and a meta-model
//! blended from each step's result.

mod adam;
mod config;
mod fine_tune;
mod loss;
mod meta;

pub use adam::Adam;
pub use config::TrainConfig;
pub use fine_tune::{fine_tune, sample_training_pairs, FineTuneResult, StepLog, WorkingSet};
pub use loss::{bce_grad, bce_loss};
pub use meta::{meta_update, MetaParams};
