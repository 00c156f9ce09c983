use ndarray::Axis;
use rand::Rng;

use super::state::Kappa;
use super::UpdateKind;
use crate::diffcore::ops::{concat_cols, ensure_same_shape, split_cols};
use crate::diffcore::{GruCache, GruCell, Linear, Mlp2, Mlp2Cache, Param};
use crate::{Matrix, Result};

/// Merges a layer's stored embedding `H_prev` with its fresh embedding `H̃`.
#[derive(Debug, Clone, PartialEq)]
pub enum UpdateModule {
    /// `κ·H_prev + (1 − κ)·H̃`.
    MovingAverage,
    /// `mlp2(concat(H_prev, H̃))`.
    Mlp(Mlp2),
    /// GRU with hidden state `H_prev` and input `H̃`.
    Gru(GruCell),
}

#[derive(Debug, Clone)]
pub enum UpdateCache {
    MovingAverage(Kappa),
    Mlp(Mlp2Cache),
    Gru(GruCache),
}

impl UpdateModule {
    /// `output_bias = false` drops the MLP's final bias, for a layer whose
    /// output only feeds batch-norm (which would cancel it, leaving a parameter
    /// that never receives gradient).
    pub fn new<R: Rng + ?Sized>(name: &str, kind: UpdateKind, dim: usize, output_bias: bool, rng: &mut R) -> Self {
        match kind {
            UpdateKind::MovingAverage => UpdateModule::MovingAverage,
            UpdateKind::Mlp => UpdateModule::Mlp(Mlp2 {
                hidden: Linear::new(&format!("{name}.0"), 2 * dim, dim, true, rng),
                output: Linear::new(&format!("{name}.1"), dim, dim, output_bias, rng),
            }),
            UpdateKind::Gru => UpdateModule::Gru(GruCell::new(name, dim, dim, rng)),
        }
    }

    pub fn kind(&self) -> UpdateKind {
        match self {
            UpdateModule::MovingAverage => UpdateKind::MovingAverage,
            UpdateModule::Mlp(_) => UpdateKind::Mlp,
            UpdateModule::Gru(_) => UpdateKind::Gru,
        }
    }

    pub fn forward(&self, h_prev: &Matrix, h_tilde: &Matrix, kappa: &Kappa) -> Result<(Matrix, UpdateCache)> {
        ensure_same_shape("update_state", h_prev, h_tilde)?;
        match self {
            UpdateModule::MovingAverage => Ok((moving_average(h_prev, h_tilde, kappa), UpdateCache::MovingAverage(kappa.clone()))),
            UpdateModule::Mlp(mlp) => {
                let (out, cache) = mlp.forward(&concat_cols(&[h_prev, h_tilde])?)?;
                Ok((out, UpdateCache::Mlp(cache)))
            }
            UpdateModule::Gru(cell) => {
                let (out, cache) = cell.forward(h_prev, h_tilde)?;
                Ok((out, UpdateCache::Gru(cache)))
            }
        }
    }

    /// Gradient with respect to `H̃`. The `H_prev` gradient is dropped: the
    /// previous state is data, not part of this step's graph.
    pub fn backward(&mut self, cache: &UpdateCache, grad: &Matrix) -> Matrix {
        match (self, cache) {
            (UpdateModule::MovingAverage, UpdateCache::MovingAverage(kappa)) => match kappa {
                Kappa::Global(k) => grad * (1.0 - k),
                Kappa::PerNode(ks) => {
                    let mut g = grad.clone();
                    for (mut row, k) in g.axis_iter_mut(Axis(0)).zip(ks) {
                        row *= 1.0 - k;
                    }
                    g
                }
            },
            (UpdateModule::Mlp(mlp), UpdateCache::Mlp(c)) => {
                let d_in = mlp.backward(c, grad);
                let half = d_in.ncols() / 2;
                split_cols(&d_in, &[half, half]).swap_remove(1)
            }
            (UpdateModule::Gru(cell), UpdateCache::Gru(c)) => cell.backward(c, grad).1,
            _ => unreachable!("update cache from a different module kind"),
        }
    }

    pub fn params(&self) -> Vec<&Param> {
        match self {
            UpdateModule::MovingAverage => Vec::new(),
            UpdateModule::Mlp(m) => m.params(),
            UpdateModule::Gru(g) => g.params(),
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        match self {
            UpdateModule::MovingAverage => Vec::new(),
            UpdateModule::Mlp(m) => m.params_mut(),
            UpdateModule::Gru(g) => g.params_mut(),
        }
    }
}

fn moving_average(h_prev: &Matrix, h_tilde: &Matrix, kappa: &Kappa) -> Matrix {
    match kappa {
        Kappa::Global(k) => h_prev * *k + h_tilde * (1.0 - k),
        Kappa::PerNode(ks) => {
            let mut out = h_tilde.clone();
            for ((mut row, prev), &k) in out.axis_iter_mut(Axis(0)).zip(h_prev.axis_iter(Axis(0))).zip(ks) {
                row.zip_mut_with(&prev, |t, &p| *t = k * p + (1.0 - k) * *t);
            }
            out
        }
    }
}

/// One state update without caching.
pub fn update_state(h_prev: &Matrix, h_tilde: &Matrix, module: &UpdateModule, kappa: &Kappa) -> Result<Matrix> {
    module.forward(h_prev, h_tilde, kappa).map(|(m, _)| m)
}
