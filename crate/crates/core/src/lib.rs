//! Dynamic graph learning over snapshot sequences.
//!
//! A static message-passing network is turned into a dynamic one by treating the
//! node embeddings of every layer as a *hierarchical node state* that is carried
//! from one snapshot to the next and merged with freshly computed embeddings by an
//! update module (moving average, MLP, or GRU).
//!
//! The crate is organised bottom-up:
//!
//! - [`snapshots`]: edge-list ingestion, time partitioning, label sets with
//!   sampled negatives, and an on-disk snapshot cache.
//! - [`diffcore`]: the handful of differentiable primitives the model needs, each
//!   with a hand-derived backward pass and a finite-difference checker.
//! - [`model`]: message-passing layers with edge features and skip connections,
//!   the per-layer state update modules, the pair-scoring head, and the full
//!   snapshot forward pass.
//! - [`train`]: binary cross-entropy, per-snapshot fine-tuning with early
//!   stopping, and the meta-model blend used as each snapshot's warm start.
//! - [`eval`]: reciprocal-rank metrics and the live-update / fixed-split protocols.
//! - [`experiment`]: configuration files, run directories, seed replication,
//!   hyperparameter grids and report tables.
//!
//! Runnable walkthroughs of each capability live in the crate's `examples/`
//! directory (`cargo run --release --example live_update`).

pub mod diffcore;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod model;
pub mod snapshots;
pub mod train;

mod seed;

pub use error::{Error, Result};
pub use seed::derive_seed;

/// Dense row-major matrix used throughout: rows are nodes, edges or pairs.
pub type Matrix = ndarray::Array2<f64>;
