//! Minimal reverse-mode neural-network toolkit: named parameter store with
//! explicit gradient accumulators, linear / batch-norm / activation layers,
//! segment max-pooling, binary cross entropy, Adam, finite-difference
//! gradient checking and a simple checkpoint format.
//!
//! Everything operates on `FeatureBatch` (row-major `Array2<f64>`, one row
//! per point) and is deterministic given a seed.

pub mod checkpoint;
pub mod gradcheck;
pub mod layers;
pub mod loss;
pub mod mlp;
pub mod optim;
pub mod params;

pub use checkpoint::{load_checkpoint, load_into, save_checkpoint, LoadedParam};
pub use gradcheck::{grad_check, relative_error, GradCheckReport};
pub use layers::{
    max_pool_all, max_pool_segments, max_pool_segments_backward, Activation, BatchNorm, BnCache,
    BnStats, Linear, BN_EPS, BN_MOMENTUM, LEAKY_SLOPE,
};
pub use loss::{bce_loss, BCE_CLAMP};
pub use mlp::{Mlp, MlpCache};
pub use optim::{AdamConfig, OptimizerState};
pub use params::{FeatureBatch, GradStore, ParamId, ParamSet, Parameter};
