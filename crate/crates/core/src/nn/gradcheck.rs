//! Finite-difference verification of analytic gradients.

use super::params::ParamSet;
use crate::rng::{derive_seed, rng_from_seed};
use rand::Rng;

/// Outcome of a [`grad_check`] run.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    /// Largest relative error over all probed entries.
    pub worst_rel: f64,
    /// Parameter owning the worst entry.
    pub worst_param: String,
    /// Number of scalar entries probed.
    pub checked: usize,
    /// Entries skipped because the loss is locally non-smooth there (the
    /// two-scale difference estimates disagreed, e.g. a ReLU kink inside
    /// the probe interval) — finite differences cannot verify those.
    pub skipped: usize,
}

/// Relative error between analytic and numeric derivatives, guarded so that
/// near-zero gradient pairs compare on an absolute scale instead of blowing
/// up.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Compare the gradients stored on `ps` (filled in by the caller's backward
/// pass) against central finite differences of `loss_fn`.
///
/// Probes up to `samples_per_param` entries of every trainable tensor
/// (seeded, so reruns touch the same entries).  `loss_fn` must be a pure
/// deterministic function of the parameter values.
///
/// Finite differences have two blind spots that must not masquerade as
/// gradient bugs.  Relu/max-pool networks have genuine kinks — most notably
/// exact pooling ties between identical rows, where backward picks one valid
/// subgradient and a symmetric difference reports the average of the two
/// one-sided slopes.  And the difference quotient itself drowns below the
/// rounding noise of the loss, about `ε_machine·|f|` per evaluation divided
/// by the step.  Each entry is therefore probed defensively:
///
/// * slopes closer than the rounding-noise budget count as agreeing — a
///   difference finer than that is unmeasurable by this method;
/// * the one-sided slopes `(f(x+e)−f(x))/e` and `(f(x)−f(x−e))/e` must
///   agree, otherwise a kink sits at or next to the evaluation point;
/// * the central estimates at `±e` and `±2e` must agree, otherwise a kink
///   sits further inside the probe interval;
/// * on disagreement the entry is retried at `e/10` and `e/100` — shrinking
///   the interval moves a kink outside, while a genuinely wrong gradient
///   stays wrong at every scale.
///
/// Verified entries compare the Richardson extrapolation `(4·d₁ − d₂)/3`
/// against the analytic gradient; entries that never become consistent are
/// counted in [`GradCheckReport::skipped`] instead of producing a bogus
/// failure.
pub fn grad_check(
    ps: &mut ParamSet,
    loss_fn: &dyn Fn(&ParamSet) -> f64,
    samples_per_param: usize,
    seed: u64,
    eps: f64,
) -> GradCheckReport {
    let mut report = GradCheckReport {
        worst_rel: 0.0,
        worst_param: String::new(),
        checked: 0,
        skipped: 0,
    };

    let param_count = ps.len();
    for pi in 0..param_count {
        if !ps.get(super::params::ParamId(pi)).trainable {
            continue;
        }
        let numel = ps.get(super::params::ParamId(pi)).value.len();
        if numel == 0 {
            continue;
        }
        let mut rng = rng_from_seed(derive_seed(seed, pi as u64));
        let take = samples_per_param.min(numel);
        let mut picked: Vec<usize> = Vec::with_capacity(take);
        while picked.len() < take {
            let idx = rng.gen_range(0..numel);
            if !picked.contains(&idx) {
                picked.push(idx);
            }
        }

        for flat in picked {
            let id = super::params::ParamId(pi);
            let (rows, cols) = {
                let v = ps.value(id);
                (v.nrows(), v.ncols())
            };
            let (r, c) = (flat / cols, flat % cols);
            debug_assert!(r < rows);

            let analytic = ps.get(id).grad[[r, c]];
            let orig = ps.value(id)[[r, c]];

            let mut best: Option<f64> = None;
            let f_mid = loss_fn(ps);
            for scale in [1.0, 0.1, 0.01] {
                let e = eps * scale;
                let mut probe = |delta: f64| {
                    ps.value_mut(id)[[r, c]] = orig + delta;
                    loss_fn(ps)
                };
                let up = probe(e);
                let dn = probe(-e);
                let d2 = (probe(2.0 * e) - probe(-2.0 * e)) / (4.0 * e);
                ps.value_mut(id)[[r, c]] = orig;
                let noise = 64.0 * f64::EPSILON * f_mid.abs().max(1.0) / e;
                let d_plus = (up - f_mid) / e;
                let d_minus = (f_mid - dn) / e;
                if (d_plus - d_minus).abs() > noise && relative_error(d_plus, d_minus) > 0.05 {
                    continue;
                }
                let d1 = (up - dn) / (2.0 * e);
                if (d1 - d2).abs() > noise && relative_error(d1, d2) > 0.02 {
                    continue;
                }
                let numeric = (4.0 * d1 - d2) / 3.0;
                let rel = if (analytic - numeric).abs() <= noise {
                    0.0
                } else {
                    relative_error(analytic, numeric)
                };
                best = Some(best.map_or(rel, |b: f64| b.min(rel)));
                if rel < 1e-6 {
                    break;
                }
            }
            let Some(rel) = best else {
                report.skipped += 1;
                continue;
            };
            report.checked += 1;
            if rel > report.worst_rel {
                report.worst_rel = rel;
                report.worst_param = ps.get(id).name.clone();
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    /// L(w) = Σ (w_i − c_i)²  with analytic gradient 2(w_i − c_i).
    fn quadratic_setup() -> (ParamSet, Array2<f64>) {
        let mut ps = ParamSet::new();
        let target = Array2::from_shape_fn((3, 4), |(i, j)| 0.1 * i as f64 - 0.2 * j as f64);
        let w = Array2::from_shape_fn((3, 4), |(i, j)| 0.3 * j as f64 + 0.05 * i as f64);
        ps.add("w", w, true);
        (ps, target)
    }

    #[test]
    fn accepts_correct_gradients() {
        let (mut ps, target) = quadratic_setup();
        let t = target.clone();
        let loss = move |ps: &ParamSet| {
            let w = ps.value(super::super::params::ParamId(0));
            (w - &t).mapv(|d| d * d).sum()
        };
        let grad = (ps.value(super::super::params::ParamId(0)) - &target).mapv(|d| 2.0 * d);
        ps.iter_mut().next().unwrap().grad = grad;
        let report = grad_check(&mut ps, &loss, 12, 7, 1e-6);
        assert!(report.worst_rel < 1e-7, "worst {}", report.worst_rel);
        assert_eq!(report.checked, 12);
    }

    #[test]
    fn flags_corrupted_gradients() {
        let (mut ps, target) = quadratic_setup();
        let t = target.clone();
        let loss = move |ps: &ParamSet| {
            let w = ps.value(super::super::params::ParamId(0));
            (w - &t).mapv(|d| d * d).sum()
        };
        let grad = (ps.value(super::super::params::ParamId(0)) - &target).mapv(|d| 2.0 * d + 0.5);
        ps.iter_mut().next().unwrap().grad = grad;
        let report = grad_check(&mut ps, &loss, 12, 7, 1e-6);
        assert!(report.worst_rel > 1e-2, "corruption must be detected");
        assert_eq!(report.worst_param, "w");
    }

    #[test]
    fn relative_error_handles_tiny_values() {
        assert!(relative_error(0.0, 1e-9) < 1e-2);
        assert!(relative_error(1.0, 1.1) > 0.05);
    }
}
