//! Adam with stepped learning-rate decay.

use super::params::ParamSet;
use ndarray::Array2;

#[derive(Debug, Clone)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Multiply the learning rate by `decay_factor` after every
    /// `decay_every` steps.
    pub decay_factor: f64,
    pub decay_every: u64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            decay_factor: 0.9,
            decay_every: 5000,
        }
    }
}

/// First/second moment state per parameter, plus the step counter.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub cfg: AdamConfig,
    pub step: u64,
    m: Vec<Array2<f64>>,
    v: Vec<Array2<f64>>,
}

impl OptimizerState {
    pub fn new(ps: &ParamSet, cfg: AdamConfig) -> Self {
        let m = ps
            .iter()
            .map(|p| {
                if p.trainable {
                    Array2::zeros(p.value.raw_dim())
                } else {
                    Array2::zeros((0, 0))
                }
            })
            .collect::<Vec<_>>();
        let v = m.clone();
        OptimizerState { cfg, step: 0, m, v }
    }

    /// Learning rate that the *next* step will use: the base rate decayed
    /// once per completed `decay_every` block (so the rate changes first on
    /// the step after the counter crosses the boundary).
    pub fn effective_lr(&self) -> f64 {
        let blocks = self.step / self.cfg.decay_every;
        self.cfg.lr * self.cfg.decay_factor.powi(blocks as i32)
    }

    /// One Adam update from the gradients stored on the parameters.
    /// Gradients are zeroed afterwards; the step counter always advances.
    pub fn apply(&mut self, ps: &mut ParamSet) {
        let lr = self.effective_lr();
        self.step += 1;
        let t = self.step as i32;
        let b1 = self.cfg.beta1;
        let b2 = self.cfg.beta2;
        let bias1 = 1.0 - b1.powi(t);
        let bias2 = 1.0 - b2.powi(t);

        for (i, p) in ps.iter_mut().enumerate() {
            if !p.trainable {
                continue;
            }
            let m = &mut self.m[i];
            let v = &mut self.v[i];
            for ((mv, vv), (val, gr)) in m
                .iter_mut()
                .zip(v.iter_mut())
                .zip(p.value.iter_mut().zip(p.grad.iter()))
            {
                *mv = b1 * *mv + (1.0 - b1) * gr;
                *vv = b2 * *vv + (1.0 - b2) * gr * gr;
                let mhat = *mv / bias1;
                let vhat = *vv / bias2;
                *val -= lr * mhat / (vhat.sqrt() + self.cfg.eps);
            }
            p.grad.fill(0.0);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;

    fn one_param() -> (ParamSet, super::super::params::ParamId) {
        let mut ps = ParamSet::new();
        let id = ps.add("w", arr2(&[[1.0]]), true);
        (ps, id)
    }

    #[test]
    fn first_step_moves_by_about_lr() {
        let (mut ps, id) = one_param();
        let mut opt = OptimizerState::new(&ps, AdamConfig::default());
        ps.iter_mut().next().unwrap().grad[[0, 0]] = 1.0;
        opt.apply(&mut ps);
        // m̂ = g, v̂ = g² on the first step, so Δ ≈ lr.
        let delta = 1.0 - ps.value(id)[[0, 0]];
        assert!((delta - 1e-3).abs() < 1e-9, "delta {delta}");
        assert_eq!(ps.get(id).grad[[0, 0]], 0.0, "gradients zeroed after step");
    }

    #[test]
    fn zero_gradient_keeps_parameters() {
        let (mut ps, id) = one_param();
        let mut opt = OptimizerState::new(&ps, AdamConfig::default());
        opt.apply(&mut ps);
        assert_eq!(ps.value(id)[[0, 0]], 1.0);
        assert_eq!(opt.step, 1, "counter advances even without gradient");
    }

    #[test]
    fn lr_decays_when_crossing_the_boundary() {
        let (ps, _) = one_param();
        let cfg = AdamConfig { decay_every: 3, ..AdamConfig::default() };
        let mut opt = OptimizerState::new(&ps, cfg);
        assert_eq!(opt.effective_lr(), 1e-3);
        opt.step = 2;
        assert_eq!(opt.effective_lr(), 1e-3, "still inside the first block");
        opt.step = 3;
        assert!((opt.effective_lr() - 0.9e-3).abs() < 1e-18, "crossed once");
        opt.step = 6;
        assert!((opt.effective_lr() - 0.81e-3).abs() < 1e-18, "crossed twice");
    }

    #[test]
    fn default_schedule_decays_after_5000() {
        let (ps, _) = one_param();
        let mut opt = OptimizerState::new(&ps, AdamConfig::default());
        opt.step = 4999;
        assert_eq!(opt.effective_lr(), 1e-3);
        opt.step = 5000;
        assert!((opt.effective_lr() - 0.9e-3).abs() < 1e-18);
    }

    #[test]
    fn descends_a_quadratic() {
        let (mut ps, id) = one_param();
        let mut opt = OptimizerState::new(&ps, AdamConfig { lr: 0.05, ..Default::default() });
        for _ in 0..400 {
            let w = ps.value(id)[[0, 0]];
            ps.iter_mut().next().unwrap().grad[[0, 0]] = 2.0 * (w - 0.25);
            opt.apply(&mut ps);
        }
        assert!((ps.value(id)[[0, 0]] - 0.25).abs() < 1e-3);
    }
}
