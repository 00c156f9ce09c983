use ndarray::{Array1, Axis};

use super::ops::sum_rows;
use super::{Mode, Param};
use crate::{Error, Matrix, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BatchNormStats {
    pub running_mean: Array1<f64>,
    pub running_var: Array1<f64>,
    /// Weight of the newest batch in the running averages.
    pub momentum: f64,
    pub eps: f64,
}

impl BatchNormStats {
    pub fn new(dim: usize) -> Self {
        Self {
            running_mean: Array1::zeros(dim),
            running_var: Array1::ones(dim),
            momentum: 0.1,
            eps: 1e-5,
        }
    }

    pub fn reset(&mut self) {
        self.running_mean.fill(0.0);
        self.running_var.fill(1.0);
    }
}

/// Per-column batch normalisation followed by the affine `γ · x̂ + β`.
///
/// In training mode with at least two rows the batch mean and biased variance
/// normalise the input and the running statistics move towards the batch
/// statistics (unbiased variance) by `momentum`. With fewer than two rows, or in
/// evaluation mode, the running statistics are used and left untouched.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm {
    pub gamma: Param,
    pub beta: Param,
    pub stats: BatchNormStats,
}

#[derive(Debug, Clone)]
pub struct BatchNormCache {
    x_hat: Matrix,
    inv_std: Array1<f64>,
    batch_stats: bool,
}

impl BatchNorm {
    pub fn new(name: &str, dim: usize) -> Self {
        Self {
            gamma: Param::new(format!("{name}.gamma"), Matrix::ones((1, dim))),
            beta: Param::zeros(format!("{name}.beta"), 1, dim),
            stats: BatchNormStats::new(dim),
        }
    }

    pub fn forward(&mut self, x: &Matrix, mode: Mode) -> Result<(Matrix, BatchNormCache)> {
        if x.ncols() != self.gamma.value.ncols() {
            return Err(Error::Dimension {
                op: "batch_norm",
                left: x.dim(),
                right: self.gamma.value.dim(),
            });
        }
        let rows = x.nrows();
        let batch_stats = mode == Mode::Train && rows >= 2;
        let (mean, var) = if batch_stats {
            let mean = x.mean_axis(Axis(0)).expect("rows >= 2");
            let centered = x - &mean;
            let var = centered.mapv(|v| v * v).mean_axis(Axis(0)).expect("rows >= 2");
            let m = self.stats.momentum;
            let unbiased = &var * (rows as f64 / (rows as f64 - 1.0));
            self.stats.running_mean = &self.stats.running_mean * (1.0 - m) + &mean * m;
            self.stats.running_var = &self.stats.running_var * (1.0 - m) + &unbiased * m;
            (mean, var)
        } else {
            (self.stats.running_mean.clone(), self.stats.running_var.clone())
        };
        let inv_std = var.mapv(|v| 1.0 / (v + self.stats.eps).sqrt());
        let x_hat = (x - &mean) * &inv_std;
        let out = &x_hat * &self.gamma.value + &self.beta.value;
        Ok((
            out,
            BatchNormCache {
                x_hat,
                inv_std,
                batch_stats,
            },
        ))
    }

    pub fn backward(&mut self, c: &BatchNormCache, grad: &Matrix) -> Matrix {
        self.gamma.grad += &sum_rows(&(grad * &c.x_hat));
        self.beta.grad += &sum_rows(grad);
        let d_xhat = grad * &self.gamma.value;
        if !c.batch_stats {
            return d_xhat * &c.inv_std;
        }
        // dx = inv_std / m · (m·dx̂ − Σdx̂ − x̂ · Σ(dx̂ ⊙ x̂))
        let m = grad.nrows() as f64;
        let sum_d = d_xhat.sum_axis(Axis(0));
        let sum_dx = (&d_xhat * &c.x_hat).sum_axis(Axis(0));
        let mut dx = &d_xhat * m - &sum_d - &(&c.x_hat * &sum_dx);
        dx *= &(&c.inv_std / m);
        dx
    }

    pub fn params(&self) -> Vec<&Param> {
        vec![&self.gamma, &self.beta]
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.gamma, &mut self.beta]
    }
}
