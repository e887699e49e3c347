//! A stack of linear layers with optional batch norm and activations,
//! applied row-wise to a feature batch.  This is the shared building block
//! for set-abstraction / propagation layers, the kernel convolution and the
//! critic head.

use super::layers::{Activation, BatchNorm, BnCache, BnStats, Linear};
use super::params::{FeatureBatch, GradStore, ParamSet};
use crate::error::Result;
use crate::rng::SeedRng;

#[derive(Debug, Clone)]
pub struct Mlp {
    linears: Vec<Linear>,
    bns: Vec<Option<BatchNorm>>,
    acts: Vec<Activation>,
}

/// Per-layer intermediates kept for the backward pass.
pub struct MlpCache {
    lin_in: Vec<FeatureBatch>,
    bn: Vec<Option<BnCache>>,
    act_in: Vec<Option<FeatureBatch>>,
    act_out: Vec<Option<FeatureBatch>>,
}

impl Mlp {
    /// Build from a channel plan `dims = [in, h1, …, out]`.
    ///
    /// `batch_norm` inserts BN after every linear (the point-network
    /// convention); `hidden_act` follows every layer except the last, which
    /// gets `final_act`.
    pub fn new(
        ps: &mut ParamSet,
        rng: &mut SeedRng,
        name: &str,
        dims: &[usize],
        batch_norm: bool,
        hidden_act: Activation,
        final_act: Activation,
    ) -> Mlp {
        assert!(dims.len() >= 2, "channel plan needs at least in/out: {name}");
        let n = dims.len() - 1;
        let mut linears = Vec::with_capacity(n);
        let mut bns = Vec::with_capacity(n);
        let mut acts = Vec::with_capacity(n);
        for i in 0..n {
            let lin_name = format!("{name}.lin{i}");
            linears.push(if batch_norm {
                Linear::new_unbiased(ps, rng, &lin_name, dims[i], dims[i + 1])
            } else {
                Linear::new(ps, rng, &lin_name, dims[i], dims[i + 1])
            });
            bns.push(batch_norm.then(|| BatchNorm::new(ps, &format!("{name}.bn{i}"), dims[i + 1])));
            acts.push(if i + 1 == n { final_act } else { hidden_act });
        }
        Mlp { linears, bns, acts }
    }

    pub fn in_dim(&self) -> usize {
        self.linears[0].in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.linears.last().expect("non-empty mlp").out_dim
    }

    pub fn forward_train(
        &self,
        ps: &ParamSet,
        x: &FeatureBatch,
    ) -> Result<(FeatureBatch, MlpCache, Vec<BnStats>)> {
        let mut cache = MlpCache {
            lin_in: Vec::with_capacity(self.linears.len()),
            bn: Vec::with_capacity(self.linears.len()),
            act_in: Vec::with_capacity(self.linears.len()),
            act_out: Vec::with_capacity(self.linears.len()),
        };
        let mut stats = Vec::new();
        let mut cur = x.clone();
        for (i, lin) in self.linears.iter().enumerate() {
            let z = lin.forward(ps, &cur);
            cache.lin_in.push(cur);
            let h = match &self.bns[i] {
                Some(bn) => {
                    let (h, bn_cache, st) = bn.forward_train(ps, &z)?;
                    cache.bn.push(Some(bn_cache));
                    stats.push(st);
                    h
                }
                None => {
                    cache.bn.push(None);
                    z
                }
            };
            let act = self.acts[i];
            let y = act.forward(&h);
            // ReLU-family backward reads the input, sigmoid reads the output.
            cache.act_in.push(matches!(act, Activation::Relu | Activation::LeakyRelu).then(|| h));
            cache.act_out.push(matches!(act, Activation::Sigmoid).then(|| y.clone()));
            cur = y;
        }
        Ok((cur, cache, stats))
    }

    pub fn forward_eval(&self, ps: &ParamSet, x: &FeatureBatch) -> FeatureBatch {
        let mut cur = x.clone();
        for (i, lin) in self.linears.iter().enumerate() {
            let mut h = lin.forward(ps, &cur);
            if let Some(bn) = &self.bns[i] {
                h = bn.forward_eval(ps, &h);
            }
            cur = self.acts[i].forward(&h);
        }
        cur
    }

    /// Propagate `dy` back through the stack, accumulating into `g`.
    pub fn backward(
        &self,
        ps: &ParamSet,
        cache: &MlpCache,
        dy: &FeatureBatch,
        g: &mut GradStore,
    ) -> FeatureBatch {
        let mut d = dy.clone();
        for i in (0..self.linears.len()).rev() {
            let act = self.acts[i];
            d = match act {
                Activation::None => d,
                Activation::Sigmoid => {
                    let y = cache.act_out[i].as_ref().expect("sigmoid cache");
                    act.backward(y, y, &d)
                }
                _ => {
                    let h = cache.act_in[i].as_ref().expect("relu cache");
                    act.backward(h, h, &d)
                }
            };
            if let Some(bn) = &self.bns[i] {
                d = bn.backward(ps, cache.bn[i].as_ref().expect("bn cache"), &d, g);
            }
            d = self.linears[i].backward(ps, &cache.lin_in[i], &d, g);
        }
        d
    }

    /// Hand every BN layer its batch statistics (in layer order) to fold
    /// into the running state.  Used by the trainer after merging a batch.
    pub fn update_running(&self, ps: &mut ParamSet, stats: &[BnStats]) {
        let mut it = stats.iter();
        for bn in self.bns.iter().flatten() {
            let st = it.next().expect("one stats entry per BN layer");
            bn.update_running(ps, st);
        }
    }

    pub fn bn_count(&self) -> usize {
        self.bns.iter().filter(|b| b.is_some()).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::gradcheck::grad_check;
    use crate::rng::rng_from_seed;
    use ndarray::Array2;
    use rand::Rng;

    fn random_batch(seed: u64, n: usize, c: usize) -> FeatureBatch {
        let mut rng = rng_from_seed(seed);
        Array2::from_shape_simple_fn((n, c), || rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn train_and_eval_shapes_match_plan() {
        let mut ps = ParamSet::new();
        let mut rng = rng_from_seed(0);
        let mlp = Mlp::new(
            &mut ps,
            &mut rng,
            "m",
            &[5, 8, 4],
            true,
            Activation::Relu,
            Activation::Relu,
        );
        let x = random_batch(1, 6, 5);
        let (y, _, stats) = mlp.forward_train(&ps, &x).unwrap();
        assert_eq!(y.dim(), (6, 4));
        assert_eq!(stats.len(), 2);
        assert_eq!(mlp.forward_eval(&ps, &x).dim(), (6, 4));
    }

    #[test]
    fn full_stack_passes_finite_difference_check() {
        let mut ps = ParamSet::new();
        let mut rng = rng_from_seed(3);
        let mlp = Mlp::new(
            &mut ps,
            &mut rng,
            "m",
            &[4, 6, 3],
            true,
            Activation::Relu,
            Activation::Sigmoid,
        );
        let x = random_batch(4, 7, 4);
        let target = random_batch(5, 7, 3);

        // Scalar loss: squared error against a fixed target.
        let run = |ps: &ParamSet| -> f64 {
            let (y, _, _) = mlp.forward_train(ps, &x).unwrap();
            (&y - &target).mapv(|d| d * d).sum()
        };

        let (y, cache, _) = mlp.forward_train(&ps, &x).unwrap();
        let dy = (&y - &target).mapv(|d| 2.0 * d);
        let mut g = GradStore::new(&ps);
        mlp.backward(&ps, &cache, &dy, &mut g);
        g.apply_to(&mut ps);

        let report = grad_check(&mut ps, &run, 6, 11, 1e-5);
        assert!(report.worst_rel < 1e-4, "worst {} at {}", report.worst_rel, report.worst_param);
    }

    #[test]
    fn backward_returns_input_gradient() {
        let mut ps = ParamSet::new();
        let mut rng = rng_from_seed(6);
        let mlp = Mlp::new(&mut ps, &mut rng, "m", &[3, 3], false, Activation::None, Activation::None);
        let x = random_batch(7, 4, 3);
        let (y, cache, _) = mlp.forward_train(&ps, &x).unwrap();
        let dy = Array2::ones(y.raw_dim());
        let mut g = GradStore::new(&ps);
        let dx = mlp.backward(&ps, &cache, &dy, &mut g);
        assert_eq!(dx.dim(), (4, 3));
        // For a pure linear layer dx = dy·Wᵀ.
        let expect = dy.dot(&ps.value(mlp.linears[0].w).t());
        assert_eq!(dx, expect);
    }
}
