use rand::Rng;

use super::ops::sum_rows;
use super::Param;
use crate::{Error, Matrix, Result};

/// `x · W + b`, with `W` stored `in × out` and `b` as a `1 × out` row.
pub fn affine(x: &Matrix, w: &Param, b: Option<&Param>) -> Result<Matrix> {
    if x.ncols() != w.value.nrows() {
        return Err(Error::Dimension {
            op: "affine",
            left: x.dim(),
            right: w.value.dim(),
        });
    }
    let mut out = x.dot(&w.value);
    if let Some(b) = b {
        if b.value.dim() != (1, w.value.ncols()) {
            return Err(Error::Dimension {
                op: "affine bias",
                left: w.value.dim(),
                right: b.value.dim(),
            });
        }
        out += &b.value;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: Param,
    pub bias: Option<Param>,
}

impl Linear {
    pub fn new<R: Rng + ?Sized>(name: &str, fan_in: usize, fan_out: usize, bias: bool, rng: &mut R) -> Self {
        Self {
            weight: Param::glorot(format!("{name}.weight"), fan_in, fan_out, rng),
            bias: bias.then(|| Param::zeros(format!("{name}.bias"), 1, fan_out)),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weight.value.nrows()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.value.ncols()
    }

    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        affine(x, &self.weight, self.bias.as_ref())
    }

    /// Accumulates `dW = xᵀ g`, `db = Σ_rows g`; returns `dx = g Wᵀ`.
    pub fn backward(&mut self, x: &Matrix, grad: &Matrix) -> Matrix {
        self.weight.grad += &x.t().dot(grad);
        if let Some(b) = &mut self.bias {
            b.grad += &sum_rows(grad);
        }
        grad.dot(&self.weight.value.t())
    }

    pub fn params(&self) -> Vec<&Param> {
        std::iter::once(&self.weight).chain(self.bias.as_ref()).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        std::iter::once(&mut self.weight).chain(self.bias.as_mut()).collect()
    }
}
