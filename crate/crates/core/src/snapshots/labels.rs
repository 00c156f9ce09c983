use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::Rng;

use super::DynamicGraph;
use crate::{Error, Result};

/// Future-link labels for step `t`: the edges of snapshot `t + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelSet {
    pub step: usize,
    /// Deduplicated, sorted positive pairs.
    pub positives: Vec<(u32, u32)>,
    pub train_pos: Vec<(u32, u32)>,
    pub val_pos: Vec<(u32, u32)>,
    /// For every distinct positive source, destinations it does *not* link to at `t + 1`.
    pub eval_negatives: BTreeMap<u32, Vec<u32>>,
    /// Set when snapshot `t + 1` has no edges; such steps are neither trained nor scored.
    pub skip: bool,
}

impl LabelSet {
    fn empty(step: usize) -> Self {
        Self {
            step,
            positives: Vec::new(),
            train_pos: Vec::new(),
            val_pos: Vec::new(),
            eval_negatives: BTreeMap::new(),
            skip: true,
        }
    }

    pub fn positive_set(&self) -> HashSet<(u32, u32)> {
        self.positives.iter().copied().collect()
    }

    /// Every (src, dst) pair that gets scored when evaluating `positives`.
    pub fn scored_pair_count(&self) -> usize {
        self.positives
            .iter()
            .map(|(u, _)| 1 + self.eval_negatives.get(u).map_or(0, Vec::len))
            .sum()
    }
}

/// Builds the label set that step `t` is trained or scored on.
///
/// Positives are the distinct edges of snapshot `t + 1`. A uniformly random
/// `round(val_fraction · |positives|)` of them form the validation split. Each
/// distinct positive source receives up to `k_neg` distinct negatives drawn uniformly
/// from the node universe, rejecting destinations that are positives of this
/// step; when fewer than `k_neg` candidates exist, all of them are used.
pub fn build_labels<R: Rng + ?Sized>(
    g: &DynamicGraph,
    t: usize,
    val_fraction: f64,
    k_neg: usize,
    rng: &mut R,
) -> Result<LabelSet> {
    if t + 1 >= g.len() {
        return Err(Error::Bounds {
            what: "label step",
            index: t,
            len: g.len().saturating_sub(1),
        });
    }
    if !(val_fraction > 0.0 && val_fraction < 1.0) {
        return Err(Error::config(format!("val_fraction must lie in (0, 1), got {val_fraction}")));
    }
    if k_neg == 0 {
        return Err(Error::config("k_neg must be at least 1"));
    }
    let next = &g.snapshots[t + 1];
    if next.edge_count() == 0 {
        return Ok(LabelSet::empty(t));
    }

    let pairs: BTreeSet<(u32, u32)> = next.src.iter().copied().zip(next.dst.iter().copied()).collect();
    let positives: Vec<(u32, u32)> = pairs.into_iter().collect();

    let n_val = (val_fraction * positives.len() as f64).round() as usize;
    let mut order: Vec<usize> = (0..positives.len()).collect();
    order.shuffle(rng);
    let mut is_val = vec![false; positives.len()];
    for &i in &order[..n_val] {
        is_val[i] = true;
    }
    let (mut train_pos, mut val_pos) = (Vec::new(), Vec::new());
    for (p, val) in positives.iter().zip(is_val) {
        if val {
            val_pos.push(*p);
        } else {
            train_pos.push(*p);
        }
    }

    let mut by_src: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for &(u, v) in &positives {
        by_src.entry(u).or_default().push(v);
    }
    let n = g.node_count;
    let mut eval_negatives = BTreeMap::new();
    let mut candidates = Vec::with_capacity(n);
    for (&u, dsts) in &by_src {
        // dsts is sorted because positives are.
        candidates.clear();
        let mut excluded = dsts.iter().peekable();
        for v in 0..n as u32 {
            if excluded.peek() == Some(&&v) {
                excluded.next();
            } else {
                candidates.push(v);
            }
        }
        let k = k_neg.min(candidates.len());
        let mut negs: Vec<u32> = sample(rng, candidates.len(), k)
            .into_iter()
            .map(|i| candidates[i])
            .collect();
        negs.sort_unstable();
        eval_negatives.insert(u, negs);
    }

    Ok(LabelSet {
        step: t,
        positives,
        train_pos,
        val_pos,
        eval_negatives,
        skip: false,
    })
}
