//! A seeded generator of temporal edge streams with learnable structure.
//!
//! Nodes belong to communities that slowly drift, interactions recur between
//! pairs that talked recently, and new nodes join over time. The output feeds the
//! same ingestion path as real edge files and is used by the examples and tests.

use rand::Rng;

use super::{TemporalEdge, TemporalEdgeList};
use crate::seed::rng_for;
use crate::Result;

#[derive(Debug, Clone)]
pub struct SyntheticStream {
    pub nodes: usize,
    pub snapshots: usize,
    pub edges_per_snapshot: usize,
    pub communities: usize,
    /// Probability an edge repeats a recent interaction.
    pub repeat_prob: f64,
    /// Probability a fresh edge stays inside the source's community.
    pub intra_prob: f64,
    /// Fraction of nodes present at the start; the rest join uniformly over time.
    pub initial_fraction: f64,
    /// Width of one snapshot window in seconds.
    pub period: f64,
    pub seed: u64,
}

impl Default for SyntheticStream {
    fn default() -> Self {
        Self {
            nodes: 120,
            snapshots: 12,
            edges_per_snapshot: 240,
            communities: 6,
            repeat_prob: 0.55,
            intra_prob: 0.85,
            initial_fraction: 0.6,
            period: 1_000.0,
            seed: 0,
        }
    }
}

impl SyntheticStream {
    pub fn generate(&self) -> Result<TemporalEdgeList> {
        let mut rng = rng_for(self.seed, &[0x5137]);
        let n = self.nodes.max(2);
        let c = self.communities.max(1);
        let mut community: Vec<usize> = (0..n).map(|v| v % c).collect();
        let initial = ((n as f64 * self.initial_fraction).ceil() as usize).clamp(2, n);
        let mut recent: Vec<(u32, u32)> = Vec::new();
        let mut edges = Vec::with_capacity(self.snapshots * self.edges_per_snapshot);
        for t in 0..self.snapshots {
            let active = if self.snapshots > 1 {
                initial + (n - initial) * t / (self.snapshots - 1)
            } else {
                n
            };
            // A few nodes change community each step.
            for _ in 0..(n / 50).max(1) {
                let v = rng.random_range(0..n);
                community[v] = rng.random_range(0..c);
            }
            let mut fresh = Vec::with_capacity(self.edges_per_snapshot);
            for _ in 0..self.edges_per_snapshot {
                let (u, v) = if !recent.is_empty() && rng.random_bool(self.repeat_prob) {
                    recent[rng.random_range(0..recent.len())]
                } else {
                    let u = rng.random_range(0..active);
                    let v = loop {
                        let v = rng.random_range(0..active);
                        let same = community[v] == community[u];
                        if v != u && (same == rng.random_bool(self.intra_prob)) {
                            break v;
                        }
                    };
                    (u as u32, v as u32)
                };
                let ts = self.period * (t as f64 + rng.random::<f64>() * 0.999);
                let weight = if community[u as usize] == community[v as usize] { 1.0 } else { -1.0 };
                edges.push(TemporalEdge {
                    src: u,
                    dst: v,
                    weight,
                    timestamp: ts,
                });
                fresh.push((u, v));
            }
            recent = fresh;
        }
        TemporalEdgeList::new(edges, n)
    }
}
