//! Point-cloud primitives shared by every stage of the pipeline.

mod cloud;
mod neighbors;
mod normals;
mod point;
mod ply;
mod sample;

pub use cloud::{PointCloud, SeedSet};
pub use neighbors::{idw_interpolate, knn, Neighbor, IDW_ZERO_DISTANCE};
pub(crate) use neighbors::{idw_combine, knn_into};
pub use normals::{estimate_normals, NormalEstimate};
pub use point::Point3;
pub use ply::{read_ply, write_ply};
pub use sample::{furthest_from_centroid, furthest_point_sample};
