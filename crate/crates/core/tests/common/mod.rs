//! Fixtures and independent oracles shared by the integration and acceptance
//! targets.
#![allow(dead_code)]

pub mod primitives;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use roland::diffcore::grad_check;
use roland::model::{EdgeHead, ModelConfig, NodeState, Roland, UpdateKind};
use roland::snapshots::synthetic::SyntheticStream;
use roland::snapshots::{partition_snapshots, DynamicGraph, Frequency, TemporalEdge};
use roland::train::{bce_grad, bce_loss};
use roland::Matrix;

pub fn edge(src: u32, dst: u32, weight: f64, timestamp: f64) -> TemporalEdge {
    TemporalEdge {
        src,
        dst,
        weight,
        timestamp,
    }
}

/// Six nodes over two windows; the second window holds eight edges.
pub fn toy_graph() -> DynamicGraph {
    DynamicGraph::from_windows(
        vec![
            (
                (0.0, 10.0),
                vec![edge(0, 1, 1.0, 1.0), edge(2, 3, -1.0, 4.0), edge(4, 5, 1.0, 7.5), edge(5, 0, 1.0, 9.0)],
            ),
            (
                (10.0, 20.0),
                vec![
                    edge(0, 2, 1.0, 10.5),
                    edge(1, 3, -1.0, 11.0),
                    edge(2, 4, 1.0, 12.5),
                    edge(3, 5, 1.0, 13.0),
                    edge(4, 0, -1.0, 15.0),
                    edge(5, 1, 1.0, 16.5),
                    edge(1, 4, 1.0, 18.0),
                    edge(3, 0, 1.0, 19.5),
                ],
            ),
        ],
        Frequency::Seconds(10.0),
        6,
    )
    .unwrap()
}

pub fn small_config(update: UpdateKind, dim: usize) -> ModelConfig {
    ModelConfig {
        hidden_dim: dim,
        update,
        ..ModelConfig::default()
    }
}

/// Max relative error between backward and finite differences of the BCE
/// loss on the second toy snapshot, for every trainable parameter.
pub fn model_gradient_error(config: ModelConfig, seed: u64) -> f64 {
    model_gradient_error_at(config, seed, 1e-4)
}

pub fn model_gradient_error_at(config: ModelConfig, seed: u64, eps: f64) -> f64 {
    let g = toy_graph();
    let mut model = Roland::new(config, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xbeef);
    // Zero-initialised shifts put ReLU inputs exactly on the kink (a node whose
    // embedding is all zeros scores the head bias alone); randomise them.
    for bn in model.batch_norms_mut() {
        bn.gamma.value.mapv_inplace(|_| rng.random_range(0.5..1.5));
        bn.beta.value.mapv_inplace(|_| rng.random_range(-0.5..0.5));
    }
    for p in model.params_mut() {
        if p.name.ends_with("bias") || p.name.contains(".b_") {
            p.value.mapv_inplace(|_| rng.random_range(-0.5..0.5));
        }
    }
    let (_, h1) = model
        .forward(&g.snapshots[0], &model.initial_state(6), &[], roland::diffcore::Mode::Train)
        .unwrap();
    let pairs = [(0, 3), (1, 5), (2, 0), (4, 1), (5, 2), (3, 4)];
    let labels = [1.0, 0.0, 1.0, 0.0, 1.0, 0.0];

    let loss_at = |m: &mut Roland, h: &NodeState| {
        let (s, _, _) = m.forward_train(&g.snapshots[1], h, &pairs).unwrap();
        bce_loss(&s, &labels).unwrap()
    };
    let mut probe = model.clone();
    probe.zero_grad();
    let (scores, _, cache) = probe.forward_train(&g.snapshots[1], &h1, &pairs).unwrap();
    probe.backward(&cache, &bce_grad(&scores, &labels).unwrap()).unwrap();
    let analytic = probe.flat_grads();
    let point = model.flat_params();
    grad_check(&point, &analytic, eps, |flat| {
        let mut m = model.clone();
        m.load_flat_params(flat)?;
        Ok(loss_at(&mut m, &h1))
    })
    .unwrap()
}

/// Exhaustive MRR: for each positive, sort its source's candidates (the
/// positive plus negatives) by score descending, placing the positive after
/// every equal-scored negative, and read off its position.
pub fn mrr_oracle(
    z: &Matrix,
    head: &EdgeHead,
    positives: &[(u32, u32)],
    negatives: &BTreeMap<u32, Vec<u32>>,
) -> f64 {
    let mut total = 0.0;
    for &(u, v) in positives {
        let negs = negatives.get(&u).cloned().unwrap_or_default();
        let pos = head.predict_scores(z, &[(u, v)]).unwrap()[0];
        let mut cands: Vec<(f64, bool)> = negs
            .iter()
            .map(|&w| (head.predict_scores(z, &[(u, w)]).unwrap()[0], false))
            .collect();
        cands.push((pos, true));
        cands.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        let rank = cands.iter().position(|c| c.1).unwrap() + 1;
        total += 1.0 / rank as f64;
    }
    total / positives.len() as f64
}

/// Up to 10 nodes, random embeddings (optionally quantised so scores tie), a
/// random head, random positives and per-source negatives.
pub fn mrr_instance(seed: u64) -> (Matrix, EdgeHead, Vec<(u32, u32)>, BTreeMap<u32, Vec<u32>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=10usize);
    let d = rng.random_range(1..=4usize);
    let quantise = rng.random_bool(0.4);
    let z = Matrix::from_shape_fn((n, d), |_| {
        let v: f64 = rng.random_range(-1.0..1.0);
        if quantise { (v * 2.0).round() / 2.0 } else { v }
    });
    let mut head = EdgeHead::new("head", d, &mut rng);
    if rng.random_bool(0.15) {
        // Constant scorer: every candidate ties.
        for p in head.params_mut() {
            p.value.fill(0.0);
        }
    }
    let mut positives = Vec::new();
    let mut negatives = BTreeMap::new();
    for u in 0..n as u32 {
        if !rng.random_bool(0.6) {
            continue;
        }
        let v = rng.random_range(0..n as u32);
        positives.push((u, v));
        let k = rng.random_range(0..=n);
        let negs: Vec<u32> = (0..k).map(|_| rng.random_range(0..n as u32)).filter(|&w| w != v).collect();
        negatives.insert(u, negs);
    }
    if positives.is_empty() {
        positives.push((0, 1));
        negatives.insert(0, vec![0]);
    }
    (z, head, positives, negatives)
}

/// Small drifting-community stream split into fixed-width windows.
pub fn synthetic_graph(nodes: usize, snapshots: usize, edges_per_snapshot: usize, seed: u64) -> DynamicGraph {
    let edges = SyntheticStream {
        nodes,
        snapshots,
        edges_per_snapshot,
        seed,
        ..SyntheticStream::default()
    }
    .generate()
    .unwrap();
    partition_snapshots(&edges, Frequency::Seconds(1000.0)).unwrap()
}

/// Edge lists of every window, in order.
pub fn windows(g: &DynamicGraph) -> Vec<((f64, f64), Vec<TemporalEdge>)> {
    g.snapshots
        .iter()
        .map(|s| {
            let edges = (0..s.edge_count())
                .map(|i| edge(s.src[i], s.dst[i], s.weights[i], s.timestamps[i]))
                .collect();
            (s.window, edges)
        })
        .collect()
}

/// Reorders the contents of every snapshot with index > `after` by `order`
/// (a permutation of those indices), moving timestamps into their new windows.
pub fn permute_after(g: &DynamicGraph, after: usize, order: &[usize]) -> DynamicGraph {
    let w = windows(g);
    let tail: Vec<usize> = (after + 1..g.len()).collect();
    assert_eq!(order.len(), tail.len());
    let mut out = w.clone();
    for (slot, &src) in tail.iter().zip(order) {
        let (from, ref edges) = w[src];
        let to = w[*slot].0;
        out[*slot].1 = edges
            .iter()
            .map(|e| edge(e.src, e.dst, e.weight, e.timestamp - from.0 + to.0))
            .collect();
    }
    DynamicGraph::from_windows(out, g.frequency, g.node_count).unwrap()
}

/// Public datasets looked up under `$ROLAND_DATA_DIR` (default `data/` at the
/// workspace root), with the file names they are distributed under.
#[derive(Debug, Clone, Copy)]
pub enum Dataset {
    UciMessage,
    BitcoinAlpha,
    BitcoinOtc,
}

impl Dataset {
    pub fn file_names(self) -> &'static [&'static str] {
        match self {
            Dataset::UciMessage => &["CollegeMsg.txt", "uci-message.txt", "out.opsahl-ucsocial"],
            Dataset::BitcoinAlpha => &["soc-sign-bitcoinalpha.csv", "bitcoin-alpha.csv"],
            Dataset::BitcoinOtc => &["soc-sign-bitcoinotc.csv", "bitcoin-otc.csv"],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Dataset::UciMessage => "UCI-Message",
            Dataset::BitcoinAlpha => "Bitcoin-Alpha",
            Dataset::BitcoinOtc => "Bitcoin-OTC",
        }
    }

    pub fn data_dir() -> std::path::PathBuf {
        std::env::var_os("ROLAND_DATA_DIR")
            .map(Into::into)
            .unwrap_or_else(|| std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data"))
    }

    pub fn locate(self) -> Option<std::path::PathBuf> {
        let dir = Self::data_dir();
        self.file_names().iter().map(|n| dir.join(n)).find(|p| p.is_file())
    }

    /// Experiment template for this dataset, or `None` when the file is absent.
    pub fn config(self) -> Option<roland::experiment::ExperimentConfig> {
        let path = self.locate()?;
        let (columns, delimiter) = match self {
            Dataset::UciMessage => ("src,dst,timestamp", "whitespace"),
            _ => ("src,dst,weight,timestamp", ","),
        };
        Some(roland::experiment::ExperimentConfig {
            dataset: path,
            columns: columns.into(),
            delimiter: delimiter.into(),
            frequency: "weekly".into(),
            ..Default::default()
        })
    }
}
