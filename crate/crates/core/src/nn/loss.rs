//! Binary cross-entropy.

use crate::error::{Error, Result};

/// Probabilities are clamped into `[BCE_CLAMP, 1 − BCE_CLAMP]` before the
/// logs so saturated predictions cannot produce infinities.
pub const BCE_CLAMP: f64 = 1e-7;

/// Mean binary cross-entropy over a batch plus the gradient w.r.t. each
/// prediction.  Labels must be 0 or 1; predictions outside the clamp window
/// get a zero gradient (the clamp is flat there).
pub fn bce_loss(pred: &[f64], label: &[f64]) -> Result<(f64, Vec<f64>)> {
    if pred.len() != label.len() || pred.is_empty() {
        return Err(Error::invalid(format!(
            "bce: {} predictions vs {} labels",
            pred.len(),
            label.len()
        )));
    }
    let n = pred.len() as f64;
    let hi = 1.0 - BCE_CLAMP;
    let mut loss = 0.0;
    let mut grad = vec![0.0; pred.len()];
    for (i, (&p, &y)) in pred.iter().zip(label.iter()).enumerate() {
        debug_assert!(y == 0.0 || y == 1.0, "labels must be binary");
        let pc = p.clamp(BCE_CLAMP, hi);
        loss -= y * pc.ln() + (1.0 - y) * (1.0 - pc).ln();
        if p >= BCE_CLAMP && p <= hi {
            grad[i] = (-y / pc + (1.0 - y) / (1.0 - pc)) / n;
        }
    }
    Ok((loss / n, grad))
}
