use rand::Rng;

use super::ops::{relu, relu_backward};
use super::{Linear, Param};
use crate::{Matrix, Result};

/// Two affine layers with a ReLU between them.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp2 {
    pub hidden: Linear,
    pub output: Linear,
}

#[derive(Debug, Clone)]
pub struct Mlp2Cache {
    x: Matrix,
    pre: Matrix,
    act: Matrix,
}

impl Mlp2 {
    pub fn new<R: Rng + ?Sized>(name: &str, in_dim: usize, hidden_dim: usize, out_dim: usize, rng: &mut R) -> Self {
        Self {
            hidden: Linear::new(&format!("{name}.0"), in_dim, hidden_dim, true, rng),
            output: Linear::new(&format!("{name}.1"), hidden_dim, out_dim, true, rng),
        }
    }

    pub fn forward(&self, x: &Matrix) -> Result<(Matrix, Mlp2Cache)> {
        let pre = self.hidden.forward(x)?;
        let act = relu(&pre);
        let out = self.output.forward(&act)?;
        Ok((
            out,
            Mlp2Cache {
                x: x.clone(),
                pre,
                act,
            },
        ))
    }

    pub fn backward(&mut self, cache: &Mlp2Cache, grad: &Matrix) -> Matrix {
        let d_act = self.output.backward(&cache.act, grad);
        let d_pre = relu_backward(&cache.pre, &d_act);
        self.hidden.backward(&cache.x, &d_pre)
    }

    pub fn params(&self) -> Vec<&Param> {
        let mut p = self.hidden.params();
        p.extend(self.output.params());
        p
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut p = self.hidden.params_mut();
        p.extend(self.output.params_mut());
        p
    }
}
