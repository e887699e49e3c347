//! Point-cloud encoders: single-scale-grouping set abstraction, feature
//! propagation with skip links, and the scene/object U-nets built from them.

mod encoder;
mod fp;
mod sa;

pub use encoder::{ObjectCache, ObjectEncoder, SceneCache, SceneEncoder};
pub use fp::{FeaturePropagation, FpCache};
pub(crate) use fp::scatter_idw;
pub use sa::{SaCache, SetAbstraction};
