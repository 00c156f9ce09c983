use ndarray::s;
use rand::Rng;

use crate::diffcore::{Mlp2, Param};
use crate::{Error, Matrix, Result};

/// Edge scorer `mlp2(concat(z_u, z_v))` returning raw logits.
///
/// The hidden layer's weight splits into a source block `W_a` and a
/// destination block `W_b`, so each pair costs one gather of the node
/// projections `Z·W_a` and `Z·W_b` instead of a `2d`-wide product.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeHead {
    pub mlp: Mlp2,
}

#[derive(Debug, Clone)]
pub struct HeadCache {
    z: Matrix,
    pairs: Vec<(u32, u32)>,
    /// `pairs × hidden` pre-activations.
    pre: Matrix,
}

impl HeadCache {
    pub fn pair_count(&self) -> usize {
        self.pairs.len()
    }
}

impl EdgeHead {
    pub fn new<R: Rng + ?Sized>(name: &str, dim: usize, rng: &mut R) -> Self {
        Self {
            mlp: Mlp2::new(name, 2 * dim, dim, 1, rng),
        }
    }

    fn check(&self, z: &Matrix, pairs: &[(u32, u32)]) -> Result<()> {
        if 2 * z.ncols() != self.mlp.hidden.in_dim() {
            return Err(Error::Dimension {
                op: "predict_scores",
                left: z.dim(),
                right: self.mlp.hidden.weight.shape(),
            });
        }
        if let Some(&(u, v)) = pairs.iter().find(|&&(u, v)| u.max(v) as usize >= z.nrows()) {
            return Err(Error::Bounds {
                what: "scored pair node",
                index: u.max(v) as usize,
                len: z.nrows(),
            });
        }
        Ok(())
    }

    fn projections(&self, z: &Matrix) -> (Matrix, Matrix) {
        let d = z.ncols();
        let w = &self.mlp.hidden.weight.value;
        (z.dot(&w.slice(s![..d, ..])), z.dot(&w.slice(s![d.., ..])))
    }

    fn hidden_bias(&self) -> ndarray::ArrayView1<'_, f64> {
        self.mlp.hidden.bias.as_ref().expect("head has biases").value.row(0)
    }

    fn output_bias(&self) -> f64 {
        self.mlp.output.bias.as_ref().expect("head has biases").value[[0, 0]]
    }

    /// One logit per pair; no per-pair buffers are kept.
    pub fn predict_scores(&self, z: &Matrix, pairs: &[(u32, u32)]) -> Result<Vec<f64>> {
        self.check(z, pairs)?;
        let (a, b) = self.projections(z);
        let b1 = self.hidden_bias();
        let w2 = self.mlp.output.weight.value.column(0);
        let b2 = self.output_bias();
        Ok(pairs
            .iter()
            .map(|&(u, v)| {
                let (au, bv) = (a.row(u as usize), b.row(v as usize));
                let mut s = b2;
                for j in 0..w2.len() {
                    s += (au[j] + bv[j] + b1[j]).max(0.0) * w2[j];
                }
                s
            })
            .collect())
    }

    pub fn forward_train(&self, z: &Matrix, pairs: &[(u32, u32)]) -> Result<(Vec<f64>, HeadCache)> {
        self.check(z, pairs)?;
        let (a, b) = self.projections(z);
        let b1 = self.hidden_bias();
        let mut pre = Matrix::zeros((pairs.len(), b1.len()));
        for (mut row, &(u, v)) in pre.rows_mut().into_iter().zip(pairs) {
            row.assign(&(&a.row(u as usize) + &b.row(v as usize) + &b1));
        }
        let act = pre.mapv(|x| x.max(0.0));
        let scores = act.dot(&self.mlp.output.weight.value.column(0)) + self.output_bias();
        Ok((
            scores.to_vec(),
            HeadCache {
                z: z.clone(),
                pairs: pairs.to_vec(),
                pre,
            },
        ))
    }

    /// Accumulates head gradients; returns the gradient with respect to `z`.
    pub fn backward(&mut self, c: &HeadCache, d_scores: &[f64]) -> Matrix {
        let d = c.z.ncols();
        let hidden = c.pre.ncols();
        let w2 = self.mlp.output.weight.value.column(0).to_owned();
        let mut d_a = Matrix::zeros((c.z.nrows(), hidden));
        let mut d_b = Matrix::zeros((c.z.nrows(), hidden));
        let mut d_w2 = vec![0.0; hidden];
        let mut d_b1 = vec![0.0; hidden];
        let mut d_b2 = 0.0;
        for (i, &(u, v)) in c.pairs.iter().enumerate() {
            let ds = d_scores[i];
            d_b2 += ds;
            for j in 0..hidden {
                let p = c.pre[[i, j]];
                if p > 0.0 {
                    d_w2[j] += p * ds;
                    let g = ds * w2[j];
                    d_b1[j] += g;
                    d_a[[u as usize, j]] += g;
                    d_b[[v as usize, j]] += g;
                }
            }
        }
        let out = &mut self.mlp.output;
        for j in 0..hidden {
            out.weight.grad[[j, 0]] += d_w2[j];
        }
        out.bias.as_mut().expect("head has biases").grad[[0, 0]] += d_b2;
        let lin = &mut self.mlp.hidden;
        for (g, db) in lin.bias.as_mut().expect("head has biases").grad.iter_mut().zip(&d_b1) {
            *g += db;
        }
        lin.weight.grad.slice_mut(s![..d, ..]).scaled_add(1.0, &c.z.t().dot(&d_a));
        lin.weight.grad.slice_mut(s![d.., ..]).scaled_add(1.0, &c.z.t().dot(&d_b));
        let w = &lin.weight.value;
        d_a.dot(&w.slice(s![..d, ..]).t()) + d_b.dot(&w.slice(s![d.., ..]).t())
    }

    pub fn params(&self) -> Vec<&Param> {
        self.mlp.params()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        self.mlp.params_mut()
    }
}
