//! The snapshot network: pre-processing, message passing with per-layer state
//! updates, post-processing and the edge-scoring head.
//!
//! A [`Roland`] value owns the parameters; the per-layer node embeddings that
//! carry history live in a separate [`NodeState`], which every forward pass
//! consumes and returns advanced by one snapshot. Keeping the two apart is what
//! lets training treat the previous state as plain data.

mod checkpoint;
mod config;
mod head;
mod layers;
mod network;
mod state;
mod update;

pub use checkpoint::{checkpoint_paths, load_checkpoint, save_checkpoint};
pub use config::{KeepRatioMode, ModelConfig, UpdateKind};
pub use head::{EdgeHead, HeadCache};
pub use layers::{DenseCache, DenseLayer, MessageCache, MessageLayer, MessageSpec};
pub use network::{ForwardCache, Roland};
pub use state::{keep_ratio, Kappa, KeepRatio, MovingAverageCounter, NodeState};
pub use update::{update_state, UpdateCache, UpdateModule};
