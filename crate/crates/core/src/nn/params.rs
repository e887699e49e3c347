//! Named parameters and gradient storage.
//!
//! All weights of a model live in one flat [`ParamSet`]; layers hold
//! [`ParamId`] handles instead of the arrays themselves.  This keeps
//! forward passes shareable across threads (`&ParamSet`) while gradients
//! accumulate into per-thread [`GradStore`]s that are merged in a fixed
//! order afterwards — training stays bit-reproducible under any worker
//! count.

use crate::error::{Error, Result};
use crate::rng::SeedRng;
use ndarray::Array2;
use rand::Rng;

/// Dense row-major batch of features: one row per point / sample.
pub type FeatureBatch = Array2<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamId(pub usize);

/// A named tensor with its gradient accumulator.
///
/// Vectors (biases, batch-norm state) are stored as `1×C` matrices so the
/// whole set is uniformly two-dimensional.  Non-trainable entries carry
/// running statistics; the optimizer skips them.
#[derive(Debug, Clone)]
pub struct Parameter {
    pub name: String,
    pub value: Array2<f64>,
    pub grad: Array2<f64>,
    pub trainable: bool,
}

#[derive(Debug, Clone, Default)]
pub struct ParamSet {
    params: Vec<Parameter>,
}

impl ParamSet {
    pub fn new() -> Self {
        ParamSet::default()
    }

    /// Register a tensor under a unique name.
    pub fn add(&mut self, name: impl Into<String>, value: Array2<f64>, trainable: bool) -> ParamId {
        let name = name.into();
        debug_assert!(
            self.find(&name).is_none(),
            "duplicate parameter name {name}"
        );
        let grad = Array2::zeros(value.raw_dim());
        self.params.push(Parameter { name, value, grad, trainable });
        ParamId(self.params.len() - 1)
    }

    pub fn value(&self, id: ParamId) -> &Array2<f64> {
        &self.params[id.0].value
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Array2<f64> {
        &mut self.params[id.0].value
    }

    pub fn get(&self, id: ParamId) -> &Parameter {
        &self.params[id.0]
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.params.iter().position(|p| p.name == name).map(ParamId)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Parameter> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Parameter> {
        self.params.iter_mut()
    }

    pub fn zero_grads(&mut self) {
        for p in &mut self.params {
            p.grad.fill(0.0);
        }
    }

    /// Total number of scalar values across all tensors.
    pub fn scalar_count(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }
}

/// Per-pass gradient accumulator aligned with a [`ParamSet`].
///
/// Entries allocate lazily the first time a layer touches them, so cheap
/// passes that reach only a few layers stay cheap.
#[derive(Debug, Clone)]
pub struct GradStore {
    grads: Vec<Option<Array2<f64>>>,
}

impl GradStore {
    pub fn new(ps: &ParamSet) -> Self {
        GradStore { grads: vec![None; ps.len()] }
    }

    pub fn accumulate(&mut self, ps: &ParamSet, id: ParamId, delta: &Array2<f64>) {
        let slot = &mut self.grads[id.0];
        match slot {
            Some(g) => *g += delta,
            None => {
                debug_assert_eq!(ps.value(id).raw_dim(), delta.raw_dim());
                *slot = Some(delta.clone());
            }
        }
    }

    /// Fold another store into this one (fixed element order, so summing a
    /// list of stores sequentially is deterministic).
    pub fn merge(&mut self, other: &GradStore) {
        for (dst, src) in self.grads.iter_mut().zip(other.grads.iter()) {
            if let Some(s) = src {
                match dst {
                    Some(d) => *d += s,
                    None => *dst = Some(s.clone()),
                }
            }
        }
    }

    /// Scale all gradients (used for batch averaging).
    pub fn scale(&mut self, factor: f64) {
        for g in self.grads.iter_mut().flatten() {
            g.mapv_inplace(|v| v * factor);
        }
    }

    /// Add the accumulated gradients onto `Parameter::grad`.
    pub fn apply_to(&self, ps: &mut ParamSet) {
        for (i, g) in self.grads.iter().enumerate() {
            if let Some(g) = g {
                ps.params[i].grad += g;
            }
        }
    }

    pub fn get(&self, id: ParamId) -> Option<&Array2<f64>> {
        self.grads[id.0].as_ref()
    }
}

/// Kaiming-style fan-in uniform initialisation for a weight matrix of shape
/// `(fan_in, fan_out)`.
pub fn kaiming_uniform(rng: &mut SeedRng, fan_in: usize, fan_out: usize) -> Array2<f64> {
    let bound = (6.0 / fan_in as f64).sqrt();
    Array2::from_shape_simple_fn((fan_in, fan_out), || rng.gen_range(-bound..bound))
}

/// Bias initialisation matching the weight's fan-in scale.
pub fn bias_uniform(rng: &mut SeedRng, fan_in: usize, fan_out: usize) -> Array2<f64> {
    let bound = 1.0 / (fan_in as f64).sqrt();
    Array2::from_shape_simple_fn((1, fan_out), || rng.gen_range(-bound..bound))
}

/// Validate that `id`'s tensor has the given shape; used by loaders.
pub fn expect_shape(ps: &ParamSet, id: ParamId, rows: usize, cols: usize) -> Result<()> {
    let v = ps.value(id);
    if v.nrows() != rows || v.ncols() != cols {
        return Err(Error::format(format!(
            "parameter {} has shape {}x{}, expected {rows}x{cols}",
            ps.get(id).name,
            v.nrows(),
            v.ncols()
        )));
    }
    Ok(())
}
