use ndarray::{concatenate, s, Axis};
use rand::Rng;

use crate::diffcore::ops::{gather_rows, relu, relu_backward, scatter_add_rows};
use crate::diffcore::{
    aggregate_backward, aggregate_forward, AggregateCache, Aggregation, BatchNorm, BatchNormCache, Linear, Mode, Param,
};
use crate::snapshots::GraphSnapshot;
use crate::{Error, Matrix, Result};

/// Per-node `Linear → [BatchNorm] → ReLU`, used before and after message passing.
///
/// The linear map has a bias only without batch-norm, whose mean subtraction
/// would cancel it.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub linear: Linear,
    pub bn: Option<BatchNorm>,
}

#[derive(Debug, Clone)]
pub struct DenseCache {
    x: Matrix,
    bn: Option<BatchNormCache>,
    pre: Matrix,
}

impl DenseLayer {
    pub fn new<R: Rng + ?Sized>(name: &str, in_dim: usize, out_dim: usize, batch_norm: bool, rng: &mut R) -> Self {
        Self {
            linear: Linear::new(&format!("{name}.linear"), in_dim, out_dim, !batch_norm, rng),
            bn: batch_norm.then(|| BatchNorm::new(&format!("{name}.bn"), out_dim)),
        }
    }

    pub fn forward(&mut self, x: &Matrix, mode: Mode) -> Result<(Matrix, DenseCache)> {
        let mut pre = self.linear.forward(x)?;
        let bn = match &mut self.bn {
            Some(bn) => {
                let (out, cache) = bn.forward(&pre, mode)?;
                pre = out;
                Some(cache)
            }
            None => None,
        };
        Ok((
            relu(&pre),
            DenseCache {
                x: x.clone(),
                bn,
                pre,
            },
        ))
    }

    pub fn backward(&mut self, c: &DenseCache, grad: &Matrix) -> Matrix {
        let mut g = relu_backward(&c.pre, grad);
        if let (Some(bn), Some(bc)) = (&mut self.bn, &c.bn) {
            g = bn.backward(bc, &g);
        }
        self.linear.backward(&c.x, &g)
    }

    pub fn params(&self) -> Vec<&Param> {
        let mut p = self.linear.params();
        p.extend(self.bn.iter().flat_map(BatchNorm::params));
        p
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut p = self.linear.params_mut();
        p.extend(self.bn.iter_mut().flat_map(BatchNorm::params_mut));
        p
    }
}

/// One message-passing layer over a snapshot.
///
/// Each edge `u → v` sends `m = concat(h_u, h_v, f_uv) · W`; messages are
/// aggregated at `v`, the node's own `h_v` is added (skip), and the result goes
/// through batch-norm and ReLU. In bidirectional mode every edge also runs
/// `v → u` with the same `W`.
#[derive(Debug, Clone, PartialEq)]
pub struct MessageLayer {
    /// `(2d + edge_dim) × d`, rows ordered source, destination, edge features.
    pub weight: Param,
    pub bn: Option<BatchNorm>,
    pub aggregation: Aggregation,
    pub bidirectional: bool,
    pub skip: bool,
    dim: usize,
}

#[derive(Debug, Clone)]
pub struct MessageCache {
    h: Matrix,
    src: Vec<u32>,
    dst: Vec<u32>,
    edge_features: Matrix,
    agg: AggregateCache,
    bn: Option<BatchNormCache>,
    pre: Matrix,
}

/// Settings shared by every message-passing layer of a network.
#[derive(Debug, Clone, Copy)]
pub struct MessageSpec {
    pub dim: usize,
    pub edge_dim: usize,
    pub aggregation: Aggregation,
    pub bidirectional: bool,
    pub skip: bool,
    pub batch_norm: bool,
}

impl MessageLayer {
    pub fn new<R: Rng + ?Sized>(name: &str, spec: MessageSpec, rng: &mut R) -> Self {
        Self {
            weight: Param::glorot(format!("{name}.weight"), 2 * spec.dim + spec.edge_dim, spec.dim, rng),
            bn: spec.batch_norm.then(|| BatchNorm::new(&format!("{name}.bn"), spec.dim)),
            aggregation: spec.aggregation,
            bidirectional: spec.bidirectional,
            skip: spec.skip,
            dim: spec.dim,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn edges(&self, g: &GraphSnapshot) -> (Vec<u32>, Vec<u32>, Matrix) {
        if !self.bidirectional {
            return (g.src.clone(), g.dst.clone(), g.edge_features.clone());
        }
        let src = g.src.iter().chain(&g.dst).copied().collect();
        let dst = g.dst.iter().chain(&g.src).copied().collect();
        let f = concatenate(Axis(0), &[g.edge_features.view(), g.edge_features.view()]).expect("same width");
        (src, dst, f)
    }

    pub fn forward(&mut self, h: &Matrix, g: &GraphSnapshot, mode: Mode) -> Result<(Matrix, MessageCache)> {
        let d = self.dim;
        let edge_dim = self.weight.value.nrows() - 2 * d;
        if h.ncols() != d || h.nrows() != g.node_count() || g.edge_features.ncols() != edge_dim {
            return Err(Error::Dimension {
                op: "gnn_layer",
                left: h.dim(),
                right: (g.node_count(), g.edge_features.ncols()),
            });
        }
        for (what, ids) in [("edge source", &g.src), ("edge destination", &g.dst)] {
            if let Some(&bad) = ids.iter().find(|&&v| v as usize >= h.nrows()) {
                return Err(Error::Bounds {
                    what,
                    index: bad as usize,
                    len: h.nrows(),
                });
            }
        }
        let (src, dst, edge_features) = self.edges(g);
        let w = &self.weight.value;
        // concat(h_u, h_v, f)·W split by row blocks; project nodes once, then gather.
        let from_src = h.dot(&w.slice(s![..d, ..]));
        let from_dst = h.dot(&w.slice(s![d..2 * d, ..]));
        let messages = gather_rows(&from_src, &src)
            + gather_rows(&from_dst, &dst)
            + edge_features.dot(&w.slice(s![2 * d.., ..]));
        let (mut pre, agg) = aggregate_forward(&messages, &dst, h.nrows(), self.aggregation)?;
        if self.skip {
            pre += h;
        }
        let bn = match &mut self.bn {
            Some(bn) => {
                let (out, cache) = bn.forward(&pre, mode)?;
                pre = out;
                Some(cache)
            }
            None => None,
        };
        Ok((
            relu(&pre),
            MessageCache {
                h: h.clone(),
                src,
                dst,
                edge_features,
                agg,
                bn,
                pre,
            },
        ))
    }

    /// Returns the gradient with respect to the layer input `h`.
    pub fn backward(&mut self, c: &MessageCache, grad: &Matrix) -> Matrix {
        let d = self.dim;
        let mut g = relu_backward(&c.pre, grad);
        if let (Some(bn), Some(bc)) = (&mut self.bn, &c.bn) {
            g = bn.backward(bc, &g);
        }
        let d_msg = aggregate_backward(&c.agg, &c.dst, &g);
        let n = c.h.nrows();
        let mut by_src = Matrix::zeros((n, d));
        scatter_add_rows(&mut by_src, &c.src, &d_msg);
        let mut by_dst = Matrix::zeros((n, d));
        scatter_add_rows(&mut by_dst, &c.dst, &d_msg);

        let w = &self.weight.value;
        let mut dh = by_src.dot(&w.slice(s![..d, ..]).t()) + by_dst.dot(&w.slice(s![d..2 * d, ..]).t());
        if self.skip {
            dh += &g;
        }
        let wg = &mut self.weight.grad;
        wg.slice_mut(s![..d, ..]).scaled_add(1.0, &c.h.t().dot(&by_src));
        wg.slice_mut(s![d..2 * d, ..]).scaled_add(1.0, &c.h.t().dot(&by_dst));
        wg.slice_mut(s![2 * d.., ..]).scaled_add(1.0, &c.edge_features.t().dot(&d_msg));
        dh
    }

    pub fn params(&self) -> Vec<&Param> {
        std::iter::once(&self.weight).chain(self.bn.iter().flat_map(BatchNorm::params)).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        std::iter::once(&mut self.weight)
            .chain(self.bn.iter_mut().flat_map(BatchNorm::params_mut))
            .collect()
    }
}
