use std::collections::BTreeMap;

use crate::model::EdgeHead;
use crate::snapshots::LabelSet;
use crate::{Error, Matrix, Result};

/// `1 / rank` with rank `1 + #{neg > pos} + #{neg = pos}`: ties count against
/// the positive, so a constant scorer earns `1 / (k + 1)`.
pub fn reciprocal_rank(pos: f64, negs: &[f64]) -> Result<f64> {
    if pos.is_nan() || negs.iter().any(|s| s.is_nan()) {
        return Err(Error::Numeric("NaN score in reciprocal rank".into()));
    }
    let above = negs.iter().filter(|&&s| s >= pos).count();
    Ok(1.0 / (1 + above) as f64)
}

/// Mean reciprocal rank of `positives`, each ranked against its source's
/// negative list. Returns `None` for an empty positive set.
pub fn mrr_over(
    z: &Matrix,
    head: &EdgeHead,
    positives: &[(u32, u32)],
    negatives: &BTreeMap<u32, Vec<u32>>,
) -> Result<Option<f64>> {
    if positives.is_empty() {
        return Ok(None);
    }
    let mut by_source: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for &(u, v) in positives {
        by_source.entry(u).or_default().push(v);
    }
    let mut total = 0.0;
    for (u, dsts) in by_source {
        let negs = negatives.get(&u).map(Vec::as_slice).unwrap_or(&[]);
        let neg_pairs: Vec<(u32, u32)> = negs.iter().map(|&w| (u, w)).collect();
        let neg_scores = head.predict_scores(z, &neg_pairs)?;
        let pos_pairs: Vec<(u32, u32)> = dsts.iter().map(|&v| (u, v)).collect();
        for pos in head.predict_scores(z, &pos_pairs)? {
            total += reciprocal_rank(pos, &neg_scores)?;
        }
    }
    Ok(Some(total / positives.len() as f64))
}

/// MRR over every positive of a label set; `None` when the step is skipped.
pub fn mrr(z: &Matrix, head: &EdgeHead, labels: &LabelSet) -> Result<Option<f64>> {
    if labels.skip {
        return Ok(None);
    }
    mrr_over(z, head, &labels.positives, &labels.eval_negatives)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_cases() {
        let negs: Vec<f64> = (0..1000).map(|i| i as f64 / 1000.0).collect();
        assert_eq!(reciprocal_rank(5.0, &negs).unwrap(), 1.0);
        assert_eq!(reciprocal_rank(0.5, &[1.0, 2.0, 0.1, -3.0]).unwrap(), 1.0 / 3.0);
        assert_eq!(reciprocal_rank(0.0, &[0.0; 7]).unwrap(), 1.0 / 8.0);
        assert_eq!(reciprocal_rank(0.0, &[]).unwrap(), 1.0);
    }

    #[test]
    fn nan_is_a_numeric_error() {
        assert!(matches!(reciprocal_rank(f64::NAN, &[1.0]), Err(Error::Numeric(_))));
        assert!(matches!(reciprocal_rank(1.0, &[f64::NAN]), Err(Error::Numeric(_))));
    }
}
