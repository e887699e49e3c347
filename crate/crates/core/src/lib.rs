//! Learning per-point interaction affordances between object pairs.
//!
//! The crate covers the whole pipeline at two scales (a small `desk` preset
//! that runs comfortably on a CPU and a `full` preset at deployment size):
//!
//! * [`geometry`] — point clouds, furthest point sampling, k-nearest
//!   neighbours, inverse-distance interpolation, normal estimation, PLY I/O.
//! * [`nn`] — a deliberately small reverse-mode layer set (linear, batch
//!   norm, activations, max-pool, BCE, Adam) on dense `f64` matrices.
//! * [`backbone`] — single-scale-grouping set-abstraction / feature-
//!   propagation encoders for scene and object clouds.
//! * [`model`] — the object-kernel convolution that slides an acting
//!   object's cloud over scene seed points and scores each seed with a
//!   critic, plus the baseline variants used for comparisons.
//! * [`sim`] — a quasi-static rigid-body surrogate (vertical-axis boxes and
//!   cylinders), camera ray-casting into scans, and the four interaction
//!   tasks: placement, fitting, pushing, stacking.
//! * [`data`] — seeded trial sampling and dataset collection.
//! * [`train`] — balanced-batch training, F-score / average-precision
//!   metrics, evaluation reports.
//!
//! Everything is deterministic given its seeds: repeated runs produce
//! bit-identical scenes, scans, batches and loss curves.

pub mod backbone;
pub mod data;
pub mod error;
pub mod geometry;
pub mod model;
pub mod nn;
pub mod preset;
pub mod rng;
pub mod sim;
pub mod train;

pub use error::{Error, Result};
pub use geometry::{Point3, PointCloud, SeedSet};
pub use model::{AffordanceModel, Heatmap, Variant};
pub use preset::Preset;
pub use sim::Task;
