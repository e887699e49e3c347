//! Ranking metrics over per-point success predictions.

use serde::{Deserialize, Serialize};

/// Success threshold for turning probabilities into hard calls.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

/// Predictions at or above the threshold count as positive calls.
pub fn confusion(preds: &[f64], labels: &[u8], threshold: f64) -> Confusion {
    assert_eq!(preds.len(), labels.len(), "prediction/label length mismatch");
    let mut c = Confusion::default();
    for (&p, &y) in preds.iter().zip(labels) {
        match (p >= threshold, y == 1) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    c
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FScore {
    /// Harmonic mean of precision and recall, as a percentage.
    pub percent: f64,
    /// Set when either class of positives is empty (no positive labels, or
    /// no predictions over the threshold), which forces the score to 0.
    pub degenerate: bool,
}

pub fn f_score(preds: &[f64], labels: &[u8], threshold: f64) -> FScore {
    let c = confusion(preds, labels, threshold);
    let degenerate = c.tp + c.fn_ == 0 || c.tp + c.fp == 0;
    if degenerate || c.tp == 0 {
        return FScore { percent: 0.0, degenerate };
    }
    let precision = c.tp as f64 / (c.tp + c.fp) as f64;
    let recall = c.tp as f64 / (c.tp + c.fn_) as f64;
    FScore { percent: 100.0 * 2.0 * precision * recall / (precision + recall), degenerate }
}

/// Area under the precision-recall curve as a percentage, using step-wise
/// max interpolation: the precision credited at recall level r is the best
/// precision achieved at any recall ≥ r.  Tied scores enter the curve as one
/// group.  No positive labels → 0.
pub fn average_precision(preds: &[f64], labels: &[u8]) -> f64 {
    assert_eq!(preds.len(), labels.len(), "prediction/label length mismatch");
    let total_pos = labels.iter().filter(|&&y| y == 1).count();
    if total_pos == 0 {
        return 0.0;
    }
    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| preds[b].partial_cmp(&preds[a]).expect("finite scores").then(a.cmp(&b)));

    // Precision/recall after each tie group, walking the scores downward.
    let mut curve: Vec<(f64, f64)> = Vec::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = preds[order[i]];
        while i < order.len() && preds[order[i]] == s {
            if labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        curve.push((tp as f64 / total_pos as f64, tp as f64 / (tp + fp) as f64));
    }

    let mut best = 0.0f64;
    let mut interp = vec![0.0; curve.len()];
    for (j, &(_, p)) in curve.iter().enumerate().rev() {
        best = best.max(p);
        interp[j] = best;
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (j, &(r, _)) in curve.iter().enumerate() {
        ap += (r - prev_recall) * interp[j];
        prev_recall = r;
    }
    100.0 * ap
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    // ---------------------------------------------------------------
    // Brute-force oracles, coded independently of the implementations
    // above: O(n²) counting at explicit thresholds, no sorting tricks.
    // ---------------------------------------------------------------

    fn oracle_f(preds: &[f64], labels: &[u8], threshold: f64) -> f64 {
        let n = preds.len();
        let tp = (0..n).filter(|&i| preds[i] >= threshold && labels[i] == 1).count() as f64;
        let pred_pos = (0..n).filter(|&i| preds[i] >= threshold).count() as f64;
        let real_pos = (0..n).filter(|&i| labels[i] == 1).count() as f64;
        if pred_pos == 0.0 || real_pos == 0.0 || tp == 0.0 {
            return 0.0;
        }
        let p = tp / pred_pos;
        let r = tp / real_pos;
        100.0 * 2.0 * p * r / (p + r)
    }

    fn oracle_ap(preds: &[f64], labels: &[u8]) -> f64 {
        let n = preds.len();
        let real_pos = (0..n).filter(|&i| labels[i] == 1).count();
        if real_pos == 0 {
            return 0.0;
        }
        // Every distinct score is a cut; "score ≥ cut" includes whole tie
        // groups automatically.
        let mut cuts: Vec<f64> = preds.to_vec();
        cuts.sort_by(|a, b| b.partial_cmp(a).unwrap());
        cuts.dedup();
        let pr: Vec<(f64, f64)> = cuts
            .iter()
            .map(|&s| {
                let tp = (0..n).filter(|&i| preds[i] >= s && labels[i] == 1).count() as f64;
                let pp = (0..n).filter(|&i| preds[i] >= s).count() as f64;
                (tp / real_pos as f64, tp / pp)
            })
            .collect();
        let mut ap = 0.0;
        let mut prev_r = 0.0;
        for &(r, _) in &pr {
            // Interpolated precision: best precision at any recall ≥ r.
            let best = pr
                .iter()
                .filter(|&&(r2, _)| r2 >= r)
                .map(|&(_, p2)| p2)
                .fold(0.0f64, f64::max);
            ap += (r - prev_r) * best;
            prev_r = r;
        }
        100.0 * ap
    }

    #[test]
    fn f_score_hand_case_is_fifty() {
        let preds = [0.9, 0.9, 0.1, 0.4];
        let labels = [1, 0, 0, 1];
        // Calls: {0, 1} positive → precision 1/2; one of two real positives
        // found → recall 1/2; harmonic mean 1/2.
        let f = f_score(&preds, &labels, DEFAULT_THRESHOLD);
        assert_eq!(f.percent, 50.0);
        assert!(!f.degenerate);
        assert_eq!(oracle_f(&preds, &labels, 0.5), 50.0);
    }

    #[test]
    fn perfect_predictions_score_hundred() {
        let f = f_score(&[0.9, 0.8, 0.1], &[1, 1, 0], DEFAULT_THRESHOLD);
        assert_eq!(f.percent, 100.0);
        assert_eq!(average_precision(&[0.9, 0.8, 0.1], &[1, 1, 0]), 100.0);
    }

    #[test]
    fn empty_positive_cases_flagged() {
        // No positive labels at all.
        let f = f_score(&[0.9, 0.8], &[0, 0], DEFAULT_THRESHOLD);
        assert_eq!(f.percent, 0.0);
        assert!(f.degenerate);
        // Positives exist but nothing is called positive.
        let f = f_score(&[0.1, 0.2, 0.3], &[1, 0, 1], DEFAULT_THRESHOLD);
        assert_eq!(f.percent, 0.0);
        assert!(f.degenerate);
    }

    #[test]
    fn wrong_calls_score_zero_without_the_flag() {
        // Both classes are called, but every call is wrong.
        let f = f_score(&[0.9, 0.1], &[0, 1], DEFAULT_THRESHOLD);
        assert_eq!(f.percent, 0.0);
        assert!(!f.degenerate);
    }

    #[test]
    fn ap_hand_case_is_fifty() {
        // Descending by score: the negative outranks the positive, so the
        // curve's only useful point is (recall 1, precision 1/2).
        assert_eq!(average_precision(&[0.4, 0.6], &[1, 0]), 50.0);
        assert_eq!(oracle_ap(&[0.4, 0.6], &[1, 0]), 50.0);
    }

    #[test]
    fn ap_groups_tied_scores() {
        let preds = [0.7, 0.7, 0.2];
        let labels = [1, 0, 1];
        let got = average_precision(&preds, &labels);
        assert!((got - oracle_ap(&preds, &labels)).abs() < 1e-12);
        // Tie group gives (1/2, 1/2), then (1, 2/3); interpolation lifts the
        // first segment to 2/3 as well.
        assert!((got - 200.0 / 3.0).abs() < 1e-9, "{got}");
    }

    #[test]
    fn ap_without_positives_is_zero() {
        assert_eq!(average_precision(&[0.3, 0.9], &[0, 0]), 0.0);
    }

    #[test]
    fn confusion_counts_sum_to_input_size() {
        let preds = [0.1, 0.5, 0.51, 0.99, 0.0];
        let labels = [0, 1, 0, 1, 1];
        let c = confusion(&preds, &labels, DEFAULT_THRESHOLD);
        assert_eq!(c.total(), preds.len());
        assert_eq!(c, Confusion { tp: 2, fp: 1, fn_: 1, tn: 1 });
    }

    #[test]
    fn metrics_match_oracles_on_random_sets() {
        let mut rng = rng_from_seed(2024);
        for round in 0..20 {
            let n = rng.gen_range(1..=100);
            let mut preds = Vec::with_capacity(n);
            let mut labels = Vec::with_capacity(n);
            for _ in 0..n {
                // Quantized scores so tie groups actually occur.
                preds.push((rng.gen_range(0..=10) as f64) / 10.0);
                labels.push(rng.gen_range(0..=1) as u8);
            }
            let f = f_score(&preds, &labels, DEFAULT_THRESHOLD).percent;
            let f_ref = oracle_f(&preds, &labels, DEFAULT_THRESHOLD);
            assert!((f - f_ref).abs() < 1e-9, "round {round}: f {f} vs {f_ref}");
            let ap = average_precision(&preds, &labels);
            let ap_ref = oracle_ap(&preds, &labels);
            assert!((ap - ap_ref).abs() < 1e-9, "round {round}: ap {ap} vs {ap_ref}");
            assert!((0.0..=100.0 + 1e-9).contains(&f));
            assert!((0.0..=100.0 + 1e-9).contains(&ap));
        }
    }

    #[test]
    fn random_scores_ap_tracks_the_positive_rate() {
        let mut rng = rng_from_seed(7);
        let n = 10_000;
        let rate = 0.3;
        let mut preds = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            preds.push(rng.gen_range(0.0..1.0));
            labels.push(u8::from(rng.gen_range(0.0..1.0) < rate));
        }
        let ap = average_precision(&preds, &labels);
        let actual_rate = 100.0 * labels.iter().filter(|&&y| y == 1).count() as f64 / n as f64;
        assert!(
            (ap - actual_rate).abs() < 2.0,
            "uninformative scores should score near the base rate: {ap} vs {actual_rate}"
        );
    }
}
