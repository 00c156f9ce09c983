use ndarray::Zip;
use rand::Rng;

use super::ops::{concat_cols, ensure_rows, sigmoid, split_cols, sum_rows};
use super::Param;
use crate::{Error, Matrix, Result};

/// Gated recurrent unit over a batch of rows.
///
/// ```text
/// z  = σ([x, h] W_z + b_z)
/// r  = σ([x, h] W_r + b_r)
/// n  = tanh([x, r ⊙ h] W_n + b_n)
/// h' = (1 − z) ⊙ n + z ⊙ h
/// ```
///
/// Each `W_*` is `(input_dim + hidden_dim) × hidden_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct GruCell {
    pub w_z: Param,
    pub b_z: Param,
    pub w_r: Param,
    pub b_r: Param,
    pub w_n: Param,
    pub b_n: Param,
    input_dim: usize,
    hidden_dim: usize,
}

#[derive(Debug, Clone)]
pub struct GruCache {
    xh: Matrix,
    xrh: Matrix,
    h: Matrix,
    z: Matrix,
    r: Matrix,
    n: Matrix,
}

impl GruCell {
    pub fn new<R: Rng + ?Sized>(name: &str, input_dim: usize, hidden_dim: usize, rng: &mut R) -> Self {
        let fan_in = input_dim + hidden_dim;
        Self {
            w_z: Param::glorot(format!("{name}.w_z"), fan_in, hidden_dim, rng),
            b_z: Param::zeros(format!("{name}.b_z"), 1, hidden_dim),
            w_r: Param::glorot(format!("{name}.w_r"), fan_in, hidden_dim, rng),
            b_r: Param::zeros(format!("{name}.b_r"), 1, hidden_dim),
            w_n: Param::glorot(format!("{name}.w_n"), fan_in, hidden_dim, rng),
            b_n: Param::zeros(format!("{name}.b_n"), 1, hidden_dim),
            input_dim,
            hidden_dim,
        }
    }

    pub fn forward(&self, h_prev: &Matrix, x: &Matrix) -> Result<(Matrix, GruCache)> {
        ensure_rows("gru_cell", h_prev, x)?;
        if x.ncols() != self.input_dim || h_prev.ncols() != self.hidden_dim {
            return Err(Error::Dimension {
                op: "gru_cell",
                left: (x.ncols(), h_prev.ncols()),
                right: (self.input_dim, self.hidden_dim),
            });
        }
        let xh = concat_cols(&[x, h_prev])?;
        let mut z = xh.dot(&self.w_z.value) + &self.b_z.value;
        z.mapv_inplace(sigmoid);
        let mut r = xh.dot(&self.w_r.value) + &self.b_r.value;
        r.mapv_inplace(sigmoid);
        let rh = &r * h_prev;
        let xrh = concat_cols(&[x, &rh])?;
        let mut n = xrh.dot(&self.w_n.value) + &self.b_n.value;
        n.mapv_inplace(f64::tanh);
        let mut out = n.clone();
        Zip::from(&mut out)
            .and(&z)
            .and(h_prev)
            .for_each(|o, &z, &h| *o = (1.0 - z) * *o + z * h);
        Ok((
            out,
            GruCache {
                xh,
                xrh,
                h: h_prev.clone(),
                z,
                r,
                n,
            },
        ))
    }

    /// Returns `(d h_prev, d x)`.
    pub fn backward(&mut self, c: &GruCache, grad: &Matrix) -> (Matrix, Matrix) {
        let (dx_dim, dh_dim) = (self.input_dim, self.hidden_dim);
        let mut dh = grad * &c.z;
        // through n
        let mut da_n = grad.clone();
        Zip::from(&mut da_n)
            .and(&c.z)
            .and(&c.n)
            .for_each(|g, &z, &n| *g *= (1.0 - z) * (1.0 - n * n));
        self.w_n.grad += &c.xrh.t().dot(&da_n);
        self.b_n.grad += &sum_rows(&da_n);
        let dxrh = da_n.dot(&self.w_n.value.t());
        let parts = split_cols(&dxrh, &[dx_dim, dh_dim]);
        let mut dx = parts[0].clone();
        let d_rh = &parts[1];
        dh += &(d_rh * &c.r);
        // through z
        let mut da_z = grad.clone();
        Zip::from(&mut da_z)
            .and(&c.h)
            .and(&c.n)
            .and(&c.z)
            .for_each(|g, &h, &n, &z| *g *= (h - n) * z * (1.0 - z));
        // through r
        let mut da_r = d_rh * &c.h;
        Zip::from(&mut da_r).and(&c.r).for_each(|g, &r| *g *= r * (1.0 - r));

        self.w_z.grad += &c.xh.t().dot(&da_z);
        self.b_z.grad += &sum_rows(&da_z);
        self.w_r.grad += &c.xh.t().dot(&da_r);
        self.b_r.grad += &sum_rows(&da_r);
        let dxh = da_z.dot(&self.w_z.value.t()) + da_r.dot(&self.w_r.value.t());
        let parts = split_cols(&dxh, &[dx_dim, dh_dim]);
        dx += &parts[0];
        dh += &parts[1];
        (dh, dx)
    }

    pub fn params(&self) -> Vec<&Param> {
        vec![&self.w_z, &self.b_z, &self.w_r, &self.b_r, &self.w_n, &self.b_n]
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![
            &mut self.w_z,
            &mut self.b_z,
            &mut self.w_r,
            &mut self.b_r,
            &mut self.w_n,
            &mut self.b_n,
        ]
    }
}
