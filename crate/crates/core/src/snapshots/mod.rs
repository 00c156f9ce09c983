//! Timestamped edge streams, snapshot partitioning, and link-prediction labels.

mod cache;
mod edges;
mod labels;
mod partition;
pub mod synthetic;

pub use cache::{cache_key, load_cached, SnapshotCache};
pub use edges::{load_edge_list, parse_edge_list, Column, Delimiter, EdgeSchema, TemporalEdge, TemporalEdgeList};
pub use labels::{build_labels, LabelSet};
pub use partition::{partition_snapshots, DynamicGraph, Frequency, GraphSnapshot, EDGE_FEATURE_DIM, NODE_FEATURE_DIM};
