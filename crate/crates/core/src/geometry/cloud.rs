//! Point clouds and seed subsets.

use super::Point3;
use crate::error::{Error, Result};

/// A point cloud with optional per-point normals and colors.
///
/// Attribute vectors, when present, have exactly one entry per point.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    pub points: Vec<Point3>,
    pub normals: Option<Vec<Point3>>,
    pub colors: Option<Vec<[u8; 3]>>,
}

impl PointCloud {
    pub fn from_points(points: Vec<Point3>) -> Self {
        PointCloud { points, normals: None, colors: None }
    }

    pub fn new(
        points: Vec<Point3>,
        normals: Option<Vec<Point3>>,
        colors: Option<Vec<[u8; 3]>>,
    ) -> Result<Self> {
        if let Some(n) = &normals {
            if n.len() != points.len() {
                return Err(Error::invalid(format!(
                    "normal count {} != point count {}",
                    n.len(),
                    points.len()
                )));
            }
        }
        if let Some(c) = &colors {
            if c.len() != points.len() {
                return Err(Error::invalid(format!(
                    "color count {} != point count {}",
                    c.len(),
                    points.len()
                )));
            }
        }
        Ok(PointCloud { points, normals, colors })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn centroid(&self) -> Point3 {
        if self.points.is_empty() {
            return Point3::ZERO;
        }
        let mut c = Point3::ZERO;
        for p in &self.points {
            c += *p;
        }
        c / self.points.len() as f64
    }

    /// Largest distance from the centroid to any point.
    pub fn bounding_radius(&self) -> f64 {
        let c = self.centroid();
        self.points
            .iter()
            .map(|p| p.dist(c))
            .fold(0.0, f64::max)
    }

    /// Axis-aligned bounds as `(min, max)`; `None` when empty.
    pub fn bounds(&self) -> Option<(Point3, Point3)> {
        let first = *self.points.first()?;
        let mut lo = first;
        let mut hi = first;
        for p in &self.points {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            lo.z = lo.z.min(p.z);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
            hi.z = hi.z.max(p.z);
        }
        Some((lo, hi))
    }

    /// Points translated so their centroid sits at the origin, returned with
    /// the centroid that was removed.
    pub fn centered_points(&self) -> (Vec<Point3>, Point3) {
        let c = self.centroid();
        (self.points.iter().map(|p| *p - c).collect(), c)
    }
}

/// Indices selected from a cloud by furthest point sampling.
///
/// Indices are pairwise distinct and each is smaller than `source_len`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedSet {
    pub indices: Vec<usize>,
    pub source_len: usize,
}

impl SeedSet {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}
