//! The fixed layer repertoire: linear, activations, batch norm, max-pool.
//!
//! Every layer exposes an explicit `forward` / `backward` pair; callers keep
//! whatever intermediate state backward needs.  There is deliberately no
//! general graph machinery — the architectures in this crate are static.

use super::params::{bias_uniform, kaiming_uniform, FeatureBatch, GradStore, ParamId, ParamSet};
use crate::error::{Error, Result};
use crate::rng::SeedRng;
use ndarray::{Array2, Axis};

pub const LEAKY_SLOPE: f64 = 0.01;
pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

// ---------------------------------------------------------------------------
// Linear

#[derive(Debug, Clone)]
pub struct Linear {
    pub w: ParamId,
    pub b: Option<ParamId>,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl Linear {
    pub fn new(
        ps: &mut ParamSet,
        rng: &mut SeedRng,
        name: &str,
        in_dim: usize,
        out_dim: usize,
    ) -> Linear {
        let w = ps.add(format!("{name}.w"), kaiming_uniform(rng, in_dim, out_dim), true);
        let b = ps.add(format!("{name}.b"), bias_uniform(rng, in_dim, out_dim), true);
        Linear { w, b: Some(b), in_dim, out_dim }
    }

    /// A layer that feeds batch norm: the mean subtraction would cancel any
    /// bias exactly (leaving a dead parameter), so none is allocated.
    pub fn new_unbiased(
        ps: &mut ParamSet,
        rng: &mut SeedRng,
        name: &str,
        in_dim: usize,
        out_dim: usize,
    ) -> Linear {
        let w = ps.add(format!("{name}.w"), kaiming_uniform(rng, in_dim, out_dim), true);
        Linear { w, b: None, in_dim, out_dim }
    }

    /// `y = x·W (+ b)`
    pub fn forward(&self, ps: &ParamSet, x: &FeatureBatch) -> FeatureBatch {
        debug_assert_eq!(x.ncols(), self.in_dim);
        let mut y = x.dot(ps.value(self.w));
        if let Some(b) = self.b {
            y += ps.value(b);
        }
        y
    }

    /// Returns `dx`; accumulates `dW = xᵀ·dy` and `db = Σrows dy`.
    pub fn backward(
        &self,
        ps: &ParamSet,
        x: &FeatureBatch,
        dy: &FeatureBatch,
        g: &mut GradStore,
    ) -> FeatureBatch {
        let dw = x.t().dot(dy);
        g.accumulate(ps, self.w, &dw);
        if let Some(b) = self.b {
            let db = dy.sum_axis(Axis(0)).insert_axis(Axis(0));
            g.accumulate(ps, b, &db);
        }
        dy.dot(&ps.value(self.w).t())
    }
}

// ---------------------------------------------------------------------------
// Activations

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    None,
    Relu,
    /// Leaky ReLU with slope 0.01 on the negative side.
    LeakyRelu,
    Sigmoid,
}

impl Activation {
    pub fn forward(self, x: &FeatureBatch) -> FeatureBatch {
        match self {
            Activation::None => x.clone(),
            Activation::Relu => x.mapv(|v| v.max(0.0)),
            Activation::LeakyRelu => x.mapv(|v| if v > 0.0 { v } else { LEAKY_SLOPE * v }),
            Activation::Sigmoid => x.mapv(sigmoid),
        }
    }

    /// `dx` given the forward input `x`, output `y` and upstream `dy`.
    /// The subgradient at a ReLU kink is taken on the negative branch.
    pub fn backward(self, x: &FeatureBatch, y: &FeatureBatch, dy: &FeatureBatch) -> FeatureBatch {
        match self {
            Activation::None => dy.clone(),
            Activation::Relu => {
                let mut dx = dy.clone();
                dx.zip_mut_with(x, |d, &xv| {
                    if xv <= 0.0 {
                        *d = 0.0;
                    }
                });
                dx
            }
            Activation::LeakyRelu => {
                let mut dx = dy.clone();
                dx.zip_mut_with(x, |d, &xv| {
                    if xv <= 0.0 {
                        *d *= LEAKY_SLOPE;
                    }
                });
                dx
            }
            Activation::Sigmoid => {
                let mut dx = dy.clone();
                dx.zip_mut_with(y, |d, &yv| *d *= yv * (1.0 - yv));
                dx
            }
        }
    }
}

pub fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

// ---------------------------------------------------------------------------
// Batch normalisation

#[derive(Debug, Clone)]
pub struct BatchNorm {
    pub gamma: ParamId,
    pub beta: ParamId,
    pub run_mean: ParamId,
    pub run_var: ParamId,
    pub dim: usize,
}

/// Cache carried from a train-mode forward to its backward.
pub struct BnCache {
    pub xhat: FeatureBatch,
    pub inv_std: Vec<f64>,
}

/// Batch statistics from one train-mode call.  Normalisation uses the
/// biased variance; running state tracks the unbiased one.
#[derive(Debug, Clone)]
pub struct BnStats {
    pub mean: Vec<f64>,
    pub var_unbiased: Vec<f64>,
}

impl BatchNorm {
    pub fn new(ps: &mut ParamSet, name: &str, dim: usize) -> BatchNorm {
        let gamma = ps.add(format!("{name}.gamma"), Array2::ones((1, dim)), true);
        let beta = ps.add(format!("{name}.beta"), Array2::zeros((1, dim)), true);
        let run_mean = ps.add(format!("{name}.run_mean"), Array2::zeros((1, dim)), false);
        let run_var = ps.add(format!("{name}.run_var"), Array2::ones((1, dim)), false);
        BatchNorm { gamma, beta, run_mean, run_var, dim }
    }

    /// Normalise over the rows of `x` with this call's own statistics.
    /// Needs at least two rows — a single sample has no batch variance.
    pub fn forward_train(
        &self,
        ps: &ParamSet,
        x: &FeatureBatch,
    ) -> Result<(FeatureBatch, BnCache, BnStats)> {
        let n = x.nrows();
        if n < 2 {
            return Err(Error::invalid(
                "batch norm in train mode needs a batch of at least 2 rows",
            ));
        }
        let c = x.ncols();
        debug_assert_eq!(c, self.dim);
        let gamma = ps.value(self.gamma);
        let beta = ps.value(self.beta);

        let mut mean = vec![0.0; c];
        let mut var = vec![0.0; c];
        for row in x.rows() {
            for (j, v) in row.iter().enumerate() {
                mean[j] += v;
            }
        }
        for m in mean.iter_mut() {
            *m /= n as f64;
        }
        for row in x.rows() {
            for (j, v) in row.iter().enumerate() {
                let d = v - mean[j];
                var[j] += d * d;
            }
        }
        let mut inv_std = vec![0.0; c];
        let mut var_unbiased = vec![0.0; c];
        for j in 0..c {
            var_unbiased[j] = var[j] / (n as f64 - 1.0);
            var[j] /= n as f64;
            inv_std[j] = 1.0 / (var[j] + BN_EPS).sqrt();
        }

        let mut xhat = x.clone();
        for mut row in xhat.rows_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (*v - mean[j]) * inv_std[j];
            }
        }
        let mut y = xhat.clone();
        for mut row in y.rows_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = *v * gamma[[0, j]] + beta[[0, j]];
            }
        }
        Ok((y, BnCache { xhat, inv_std }, BnStats { mean, var_unbiased }))
    }

    /// Train-mode call that also folds the batch statistics into the
    /// running state immediately (the single-threaded convenience path).
    pub fn forward_train_updating(
        &self,
        ps: &mut ParamSet,
        x: &FeatureBatch,
    ) -> Result<(FeatureBatch, BnCache)> {
        let (y, cache, stats) = self.forward_train(ps, x)?;
        self.update_running(ps, &stats);
        Ok((y, cache))
    }

    /// `running ← (1 − momentum)·running + momentum·batch`
    pub fn update_running(&self, ps: &mut ParamSet, stats: &BnStats) {
        let rm = ps.value_mut(self.run_mean);
        for (j, m) in stats.mean.iter().enumerate() {
            rm[[0, j]] = (1.0 - BN_MOMENTUM) * rm[[0, j]] + BN_MOMENTUM * m;
        }
        let rv = ps.value_mut(self.run_var);
        for (j, v) in stats.var_unbiased.iter().enumerate() {
            rv[[0, j]] = (1.0 - BN_MOMENTUM) * rv[[0, j]] + BN_MOMENTUM * v;
        }
    }

    /// Inference-mode normalisation with the stored running statistics.
    pub fn forward_eval(&self, ps: &ParamSet, x: &FeatureBatch) -> FeatureBatch {
        let gamma = ps.value(self.gamma);
        let beta = ps.value(self.beta);
        let rm = ps.value(self.run_mean);
        let rv = ps.value(self.run_var);
        let mut y = x.clone();
        for mut row in y.rows_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                let inv = 1.0 / (rv[[0, j]] + BN_EPS).sqrt();
                *v = (*v - rm[[0, j]]) * inv * gamma[[0, j]] + beta[[0, j]];
            }
        }
        y
    }

    /// Full train-mode backward including the mean/variance paths.
    pub fn backward(
        &self,
        ps: &ParamSet,
        cache: &BnCache,
        dy: &FeatureBatch,
        g: &mut GradStore,
    ) -> FeatureBatch {
        let n = dy.nrows() as f64;
        let c = dy.ncols();
        let gamma = ps.value(self.gamma);

        let mut dbeta = vec![0.0; c];
        let mut dgamma = vec![0.0; c];
        for (dy_row, xh_row) in dy.rows().into_iter().zip(cache.xhat.rows()) {
            for j in 0..c {
                dbeta[j] += dy_row[j];
                dgamma[j] += dy_row[j] * xh_row[j];
            }
        }

        // dx = (γ/σ) · (dy − mean(dy) − xhat·mean(dy·xhat)) , means over rows
        let mut dx = dy.clone();
        for (mut dx_row, xh_row) in dx.rows_mut().into_iter().zip(cache.xhat.rows()) {
            for j in 0..c {
                let term = dx_row[j] - dbeta[j] / n - xh_row[j] * dgamma[j] / n;
                dx_row[j] = term * gamma[[0, j]] * cache.inv_std[j];
            }
        }

        let dg = Array2::from_shape_vec((1, c), dgamma).expect("shape");
        let db = Array2::from_shape_vec((1, c), dbeta).expect("shape");
        g.accumulate(ps, self.gamma, &dg);
        g.accumulate(ps, self.beta, &db);
        dx
    }
}

// ---------------------------------------------------------------------------
// Max-pool over points

/// Column-wise maximum over groups of consecutive rows.
///
/// `offsets` delimits the groups: group `s` spans rows
/// `offsets[s]..offsets[s+1]` (each group must be non-empty).  Returns the
/// pooled `S×C` matrix and, per pooled value, the source row — ties resolve
/// to the lowest row index so gradients rout deterministically.
pub fn max_pool_segments(
    x: &FeatureBatch,
    offsets: &[usize],
) -> (FeatureBatch, Vec<Vec<usize>>) {
    let segs = offsets.len() - 1;
    let c = x.ncols();
    let mut out = Array2::from_elem((segs, c), f64::NEG_INFINITY);
    let mut argmax = vec![vec![0usize; c]; segs];
    for s in 0..segs {
        let (lo, hi) = (offsets[s], offsets[s + 1]);
        debug_assert!(hi > lo, "empty pool group");
        let mut out_row = out.row_mut(s);
        for r in lo..hi {
            let row = x.row(r);
            for j in 0..c {
                if row[j] > out_row[j] {
                    out_row[j] = row[j];
                    argmax[s][j] = r;
                }
            }
        }
    }
    (out, argmax)
}

/// Scatter pooled gradients back to their argmax rows.
pub fn max_pool_segments_backward(
    d_out: &FeatureBatch,
    argmax: &[Vec<usize>],
    in_rows: usize,
) -> FeatureBatch {
    let c = d_out.ncols();
    let mut dx = Array2::zeros((in_rows, c));
    for (s, rows) in argmax.iter().enumerate() {
        for j in 0..c {
            dx[[rows[j], j]] += d_out[[s, j]];
        }
    }
    dx
}

/// Pool an entire matrix to a single row.
pub fn max_pool_all(x: &FeatureBatch) -> (FeatureBatch, Vec<Vec<usize>>) {
    max_pool_segments(x, &[0, x.nrows()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use ndarray::arr2;
    use rand::Rng;

    fn random_batch(rng: &mut crate::rng::SeedRng, n: usize, c: usize) -> FeatureBatch {
        Array2::from_shape_simple_fn((n, c), || rng.gen_range(-1.5..1.5))
    }

    #[test]
    fn linear_identity_passthrough() {
        let mut ps = ParamSet::new();
        let mut rng = rng_from_seed(0);
        let lin = Linear::new(&mut ps, &mut rng, "l", 3, 3);
        *ps.value_mut(lin.w) = Array2::eye(3);
        ps.value_mut(lin.b.unwrap()).fill(0.0);
        let x = arr2(&[[1.0, -2.0, 0.5]]);
        assert_eq!(lin.forward(&ps, &x), x);
    }

    #[test]
    fn activation_hand_values() {
        let x = arr2(&[[-2.0, 0.0, 3.0]]);
        let leaky = Activation::LeakyRelu.forward(&x);
        assert_eq!(leaky[[0, 0]], -0.02);
        assert_eq!(leaky[[0, 2]], 3.0);
        let relu = Activation::Relu.forward(&x);
        assert_eq!(relu[[0, 0]], 0.0);
        let sig = Activation::Sigmoid.forward(&x);
        assert!((sig[[0, 1]] - 0.5).abs() < 1e-15);
        assert!((sig[[0, 2]] - 1.0 / (1.0 + (-3.0f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn sigmoid_is_stable_at_extremes() {
        assert_eq!(sigmoid(-800.0), 0.0);
        assert!((sigmoid(800.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bn_train_normalizes_and_tracks_running_stats() {
        let mut ps = ParamSet::new();
        let bn = BatchNorm::new(&mut ps, "bn", 4);
        let mut rng = rng_from_seed(1);
        let x = random_batch(&mut rng, 8, 4);
        let (y, _cache, stats) = bn.forward_train(&ps, &x).unwrap();

        for j in 0..4 {
            let col: Vec<f64> = y.column(j).to_vec();
            let mean: f64 = col.iter().sum::<f64>() / 8.0;
            let var: f64 = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 8.0;
            assert!(mean.abs() < 1e-12, "column {j} mean {mean}");
            assert!((var - 1.0).abs() < 1e-3, "column {j} var {var}");
        }

        bn.update_running(&mut ps, &stats);
        let rm = ps.value(bn.run_mean);
        assert!((rm[[0, 0]] - 0.1 * stats.mean[0]).abs() < 1e-15);
        let rv = ps.value(bn.run_var);
        assert!((rv[[0, 0]] - (0.9 + 0.1 * stats.var_unbiased[0])).abs() < 1e-15);
    }

    #[test]
    fn bn_eval_with_fresh_stats_is_identity() {
        let mut ps = ParamSet::new();
        let bn = BatchNorm::new(&mut ps, "bn", 3);
        let mut rng = rng_from_seed(2);
        let x = random_batch(&mut rng, 5, 3);
        let y = bn.forward_eval(&ps, &x);
        for (a, b) in x.iter().zip(y.iter()) {
            assert!((a - b).abs() < 1e-5 * a.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn bn_rejects_single_row_batches() {
        let mut ps = ParamSet::new();
        let bn = BatchNorm::new(&mut ps, "bn", 2);
        let x = arr2(&[[1.0, 2.0]]);
        assert!(bn.forward_train(&ps, &x).is_err());
    }

    #[test]
    fn max_pool_tie_takes_lowest_row() {
        let x = arr2(&[[1.0, 5.0], [1.0, 7.0], [0.0, 7.0]]);
        let (y, arg) = max_pool_all(&x);
        assert_eq!(y[[0, 0]], 1.0);
        assert_eq!(arg[0][0], 0, "tie on column 0 goes to row 0");
        assert_eq!(arg[0][1], 1, "tie on column 1 goes to row 1");
    }

    #[test]
    fn max_pool_segments_and_backward_route() {
        let x = arr2(&[[1.0], [3.0], [2.0], [9.0]]);
        let (y, arg) = max_pool_segments(&x, &[0, 2, 4]);
        assert_eq!(y, arr2(&[[3.0], [9.0]]));
        let d = arr2(&[[1.0], [10.0]]);
        let dx = max_pool_segments_backward(&d, &arg, 4);
        assert_eq!(dx, arr2(&[[0.0], [1.0], [0.0], [10.0]]));
    }

    #[test]
    fn max_pool_single_point_group_is_identity() {
        let x = arr2(&[[4.0, -2.0]]);
        let (y, _) = max_pool_all(&x);
        assert_eq!(y, x);
    }

    #[test]
    fn max_pool_is_invariant_to_row_permutation() {
        let mut rng = rng_from_seed(3);
        let x = random_batch(&mut rng, 10, 4);
        let (y, _) = max_pool_all(&x);
        let mut shuffled = x.clone();
        // Reverse rows: same multiset, different order.
        for j in 0..10 {
            shuffled.row_mut(j).assign(&x.row(9 - j));
        }
        let (y2, _) = max_pool_all(&shuffled);
        assert_eq!(y, y2);
    }
}
