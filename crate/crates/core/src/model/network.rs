use sha2::{Digest, Sha256};

use super::head::{EdgeHead, HeadCache};
use super::layers::{DenseCache, DenseLayer, MessageCache, MessageLayer, MessageSpec};
use super::state::NodeState;
use super::update::{UpdateCache, UpdateModule};
use super::ModelConfig;
use crate::diffcore::{BatchNorm, Mode, Param};
use crate::seed::{rng_for, stream};
use crate::snapshots::GraphSnapshot;
use crate::{Error, Matrix, Result};

/// Snapshot-by-snapshot link predictor with per-layer recurrent node state.
///
/// For snapshot `t` the node features pass through the pre-processing layers,
/// then each message-passing layer `l` computes `H̃ = gnn_layer(H^(l−1)_t)` and
/// merges it into the stored state, `H^(l)_t = update(H^(l)_{t−1}, H̃)`. The
/// top state goes through the post-processing layers and the edge head scores
/// `(u, v)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct Roland {
    pub config: ModelConfig,
    pub pre: Vec<DenseLayer>,
    pub mp: Vec<MessageLayer>,
    pub updates: Vec<UpdateModule>,
    pub post: Vec<DenseLayer>,
    pub head: EdgeHead,
}

/// Everything [`Roland::backward`] needs from one training forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pre: Vec<DenseCache>,
    mp: Vec<MessageCache>,
    updates: Vec<UpdateCache>,
    post: Vec<DenseCache>,
    head: HeadCache,
}

struct Pass {
    z: Matrix,
    state: NodeState,
    pre: Vec<DenseCache>,
    mp: Vec<MessageCache>,
    updates: Vec<UpdateCache>,
    post: Vec<DenseCache>,
}

impl Roland {
    /// Glorot weights and zero biases drawn from `seed`'s initialisation stream.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = rng_for(seed, &[stream::INIT]);
        let d = config.hidden_dim;
        let pre = (0..config.n_pre)
            .map(|i| {
                let input = if i == 0 { config.input_dim } else { d };
                DenseLayer::new(&format!("pre.{i}"), input, d, config.batch_norm, &mut rng)
            })
            .collect();
        let spec = MessageSpec {
            dim: d,
            edge_dim: config.edge_dim,
            aggregation: config.aggregation,
            bidirectional: config.bidirectional,
            skip: config.skip,
            batch_norm: config.batch_norm,
        };
        let mut mp = Vec::with_capacity(config.n_mp);
        let mut updates = Vec::with_capacity(config.n_mp);
        for l in 0..config.n_mp {
            mp.push(MessageLayer::new(&format!("mp.{l}"), spec, &mut rng));
            // The last layer's state reaches the head only through post-processing.
            let output_bias = !(config.batch_norm && l + 1 == config.n_mp);
            updates.push(UpdateModule::new(&format!("update.{l}"), config.update, d, output_bias, &mut rng));
        }
        let post = (0..config.n_post)
            .map(|i| DenseLayer::new(&format!("post.{i}"), d, d, config.batch_norm, &mut rng))
            .collect();
        let head = EdgeHead::new("head", d, &mut rng);
        Ok(Self {
            config,
            pre,
            mp,
            updates,
            post,
            head,
        })
    }

    /// All-zero state over `node_count` nodes.
    pub fn initial_state(&self, node_count: usize) -> NodeState {
        NodeState::zeros(self.config.n_mp, node_count, self.config.hidden_dim)
    }

    fn check_state(&self, g: &GraphSnapshot, state: &NodeState) -> Result<()> {
        if state.step != g.index {
            return Err(Error::config(format!(
                "state has absorbed {} snapshots but snapshot {} was supplied",
                state.step, g.index
            )));
        }
        if state.layers.len() != self.mp.len() {
            return Err(Error::Dimension {
                op: "forward state layers",
                left: (state.layers.len(), 0),
                right: (self.mp.len(), 0),
            });
        }
        let want = (g.node_count(), self.config.hidden_dim);
        if let Some(bad) = state.layers.iter().find(|m| m.dim() != want) {
            return Err(Error::Dimension {
                op: "forward state",
                left: bad.dim(),
                right: want,
            });
        }
        if state.node_count() != g.node_count() {
            return Err(Error::Dimension {
                op: "forward counter",
                left: (state.node_count(), 0),
                right: (g.node_count(), 0),
            });
        }
        Ok(())
    }

    fn pass(&mut self, g: &GraphSnapshot, state: &NodeState, mode: Mode) -> Result<Pass> {
        self.check_state(g, state)?;
        let kappa = state.counter.kappa(g, self.config.keep_ratio);
        let mut x = g.node_features.clone();
        let mut pre = Vec::with_capacity(self.pre.len());
        for layer in &mut self.pre {
            let (out, c) = layer.forward(&x, mode)?;
            pre.push(c);
            x = out;
        }
        let mut layers = Vec::with_capacity(self.mp.len());
        let mut mp = Vec::with_capacity(self.mp.len());
        let mut updates = Vec::with_capacity(self.mp.len());
        for ((layer, update), h_prev) in self.mp.iter_mut().zip(&self.updates).zip(&state.layers) {
            let (h_tilde, mc) = layer.forward(&x, g, mode)?;
            let (h, uc) = update.forward(h_prev, &h_tilde, &kappa)?;
            mp.push(mc);
            updates.push(uc);
            x = h.clone();
            layers.push(h);
        }
        let mut post = Vec::with_capacity(self.post.len());
        for layer in &mut self.post {
            let (out, c) = layer.forward(&x, mode)?;
            post.push(c);
            x = out;
        }
        Ok(Pass {
            z: x,
            state: NodeState {
                layers,
                step: state.step + 1,
                counter: state.counter.absorbed(g),
            },
            pre,
            mp,
            updates,
            post,
        })
    }

    /// Absorbs `g` into `state` and returns the head's input embeddings with the
    /// new state.
    pub fn embed(&mut self, g: &GraphSnapshot, state: &NodeState, mode: Mode) -> Result<(Matrix, NodeState)> {
        let p = self.pass(g, state, mode)?;
        Ok((p.z, p.state))
    }

    pub fn forward(
        &mut self,
        g: &GraphSnapshot,
        state: &NodeState,
        pairs: &[(u32, u32)],
        mode: Mode,
    ) -> Result<(Vec<f64>, NodeState)> {
        let (z, next) = self.embed(g, state, mode)?;
        Ok((self.head.predict_scores(&z, pairs)?, next))
    }

    /// Training-mode forward that keeps what [`backward`](Self::backward) needs.
    pub fn forward_train(
        &mut self,
        g: &GraphSnapshot,
        state: &NodeState,
        pairs: &[(u32, u32)],
    ) -> Result<(Vec<f64>, NodeState, ForwardCache)> {
        let p = self.pass(g, state, Mode::Train)?;
        let (scores, head) = self.head.forward_train(&p.z, pairs)?;
        Ok((
            scores,
            p.state,
            ForwardCache {
                pre: p.pre,
                mp: p.mp,
                updates: p.updates,
                post: p.post,
                head,
            },
        ))
    }

    /// Accumulates `∂loss/∂θ` given `∂loss/∂scores`. The previous state is a
    /// constant, so nothing flows into earlier snapshots.
    pub fn backward(&mut self, cache: &ForwardCache, d_scores: &[f64]) -> Result<()> {
        if d_scores.len() != cache.head.pair_count() {
            return Err(Error::Dimension {
                op: "backward scores",
                left: (d_scores.len(), 1),
                right: (cache.head.pair_count(), 1),
            });
        }
        let mut g = self.head.backward(&cache.head, d_scores);
        for (layer, c) in self.post.iter_mut().zip(&cache.post).rev() {
            g = layer.backward(c, &g);
        }
        for ((layer, update), (mc, uc)) in self
            .mp
            .iter_mut()
            .zip(&mut self.updates)
            .zip(cache.mp.iter().zip(&cache.updates))
            .rev()
        {
            let d_tilde = update.backward(uc, &g);
            g = layer.backward(mc, &d_tilde);
        }
        for (layer, c) in self.pre.iter_mut().zip(&cache.pre).rev() {
            g = layer.backward(c, &g);
        }
        Ok(())
    }

    pub fn params(&self) -> Vec<&Param> {
        let mut p: Vec<&Param> = self.pre.iter().flat_map(DenseLayer::params).collect();
        for (layer, update) in self.mp.iter().zip(&self.updates) {
            p.extend(layer.params());
            p.extend(update.params());
        }
        p.extend(self.post.iter().flat_map(DenseLayer::params));
        p.extend(self.head.params());
        p
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut p: Vec<&mut Param> = self.pre.iter_mut().flat_map(DenseLayer::params_mut).collect();
        for (layer, update) in self.mp.iter_mut().zip(&mut self.updates) {
            p.extend(layer.params_mut());
            p.extend(update.params_mut());
        }
        p.extend(self.post.iter_mut().flat_map(DenseLayer::params_mut));
        p.extend(self.head.params_mut());
        p
    }

    /// Batch-norm layers in parameter order; their running statistics are the
    /// model's non-trainable buffers.
    pub fn batch_norms(&self) -> Vec<&BatchNorm> {
        self.pre
            .iter()
            .filter_map(|l| l.bn.as_ref())
            .chain(self.mp.iter().filter_map(|l| l.bn.as_ref()))
            .chain(self.post.iter().filter_map(|l| l.bn.as_ref()))
            .collect()
    }

    pub fn batch_norms_mut(&mut self) -> Vec<&mut BatchNorm> {
        self.pre
            .iter_mut()
            .filter_map(|l| l.bn.as_mut())
            .chain(self.mp.iter_mut().filter_map(|l| l.bn.as_mut()))
            .chain(self.post.iter_mut().filter_map(|l| l.bn.as_mut()))
            .collect()
    }

    pub fn reset_batch_norm_stats(&mut self) {
        for bn in self.batch_norms_mut() {
            bn.stats.reset();
        }
    }

    pub fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.value.len()).sum()
    }

    pub fn buffer_count(&self) -> usize {
        self.batch_norms().iter().map(|b| 2 * b.stats.running_mean.len()).sum()
    }

    pub fn flat_params(&self) -> Vec<f64> {
        self.params().iter().flat_map(|p| p.value.iter().copied()).collect()
    }

    pub fn flat_grads(&self) -> Vec<f64> {
        self.params().iter().flat_map(|p| p.grad.iter().copied()).collect()
    }

    pub fn load_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        let count = self.param_count();
        if flat.len() != count {
            return Err(Error::Dimension {
                op: "load_flat_params",
                left: (flat.len(), 1),
                right: (count, 1),
            });
        }
        let mut values = flat.iter();
        for p in self.params_mut() {
            for v in p.value.iter_mut() {
                *v = *values.next().expect("length checked");
            }
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.params().iter().all(|p| p.is_finite())
    }

    /// SHA-256 over parameter names and the bit patterns of every weight and
    /// batch-norm statistic.
    pub fn checksum(&self) -> String {
        let mut h = Sha256::new();
        self.hash_into(&mut h);
        hex::encode(h.finalize())
    }

    pub(crate) fn hash_into(&self, h: &mut Sha256) {
        for p in self.params() {
            h.update(p.name.as_bytes());
            for v in p.value.iter() {
                h.update(v.to_le_bytes());
            }
        }
        for bn in self.batch_norms() {
            for v in bn.stats.running_mean.iter().chain(&bn.stats.running_var) {
                h.update(v.to_le_bytes());
            }
        }
    }
}
