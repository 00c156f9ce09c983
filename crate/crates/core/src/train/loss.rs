use crate::diffcore::ops::sigmoid;
use crate::{Error, Result};

/// Mean binary cross-entropy on logits,
/// `max(s, 0) − s·y + ln(1 + e^{−|s|})` per entry.
pub fn bce_loss(scores: &[f64], labels: &[f64]) -> Result<f64> {
    check(scores, labels)?;
    let total: f64 = scores
        .iter()
        .zip(labels)
        .map(|(&s, &y)| s.max(0.0) - s * y + (-s.abs()).exp().ln_1p())
        .sum();
    Ok(total / scores.len() as f64)
}

/// `∂ bce_loss / ∂ scores = (σ(s) − y) / n`.
pub fn bce_grad(scores: &[f64], labels: &[f64]) -> Result<Vec<f64>> {
    check(scores, labels)?;
    let n = scores.len() as f64;
    Ok(scores.iter().zip(labels).map(|(&s, &y)| (sigmoid(s) - y) / n).collect())
}

fn check(scores: &[f64], labels: &[f64]) -> Result<()> {
    if scores.is_empty() {
        return Err(Error::UndefinedLoss);
    }
    if scores.len() != labels.len() {
        return Err(Error::Dimension {
            op: "bce_loss",
            left: (scores.len(), 1),
            right: (labels.len(), 1),
        });
    }
    Ok(())
}
