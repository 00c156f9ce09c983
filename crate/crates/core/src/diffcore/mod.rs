//! Differentiable building blocks with hand-written backward passes.
//!
//! Matrices are row-major with one row per node, edge or pair. An affine map is
//! `out = x · W + b` with `W` stored as `in × out`, so `out` has `W.ncols()`
//! columns. Every primitive exposes a forward pass that returns whatever it needs
//! to cache, and a backward pass that accumulates parameter gradients into
//! [`Param::grad`] and returns the gradient with respect to its inputs.

mod aggregate;
mod batchnorm;
mod gradcheck;
mod gru;
mod linear;
mod mlp;
pub mod ops;
mod param;

pub use aggregate::{aggregate, aggregate_backward, aggregate_forward, AggregateCache, Aggregation};
pub use batchnorm::{BatchNorm, BatchNormCache, BatchNormStats};
pub use gradcheck::{grad_check, numeric_gradient, relative_error};
pub use gru::{GruCache, GruCell};
pub use linear::{affine, Linear};
pub use mlp::{Mlp2, Mlp2Cache};
pub use param::{read_tensor_file, read_tensors, write_tensor_file, write_tensors, NamedTensor, Param};

/// Whether a forward pass is part of training (batch statistics, running-stat
/// updates) or inference (running statistics only).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}
