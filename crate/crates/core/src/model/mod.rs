//! The affordance model: slide the acting object's cloud as an explicit
//! convolution kernel over scene seed points, score each seed with a critic,
//! and interpolate seed scores into a dense per-point heatmap.  Includes the
//! input-substitution variants used for comparisons.

mod net;

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{PointCloud, SeedSet};

pub use net::{AffordanceModel, Frozen, TrainCache};

/// Which inputs the critic sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// Learned scene features + object kernel convolution + global feature.
    #[serde(rename = "full")]
    Full,
    /// Scene features replaced by raw position + surface normal.
    #[serde(rename = "b_posnor")]
    BPosnor,
    /// Acting object reduced to its axis-aligned bounding box.
    #[serde(rename = "b_bbox")]
    BBbox,
    /// Three global branches, no kernel convolution.
    #[serde(rename = "b_3branch")]
    B3branch,
    /// Kernel-convolution feature removed from the critic input.
    #[serde(rename = "ablated")]
    Ablated,
}

impl Variant {
    pub const ALL: [Variant; 5] =
        [Variant::Full, Variant::BPosnor, Variant::BBbox, Variant::B3branch, Variant::Ablated];

    pub fn parse(s: &str) -> Result<Variant> {
        match s {
            "full" => Ok(Variant::Full),
            "b_posnor" => Ok(Variant::BPosnor),
            "b_bbox" => Ok(Variant::BBbox),
            "b_3branch" => Ok(Variant::B3branch),
            "ablated" => Ok(Variant::Ablated),
            other => Err(Error::invalid(format!(
                "unknown variant '{other}' (full|b_posnor|b_bbox|b_3branch|ablated)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::BPosnor => "b_posnor",
            Variant::BBbox => "b_bbox",
            Variant::B3branch => "b_3branch",
            Variant::Ablated => "ablated",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A dense affordance map over a scene cloud.  Values at the evaluated
/// seeds are exact critic outputs; everywhere else they are inverse-distance
/// blends of the seed values, clamped to `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub values: Vec<f64>,
    pub seeds: SeedSet,
}

impl Heatmap {
    /// Colorized point cloud: high affordance renders red, low renders blue.
    pub fn write_ply(&self, w: &mut impl Write, cloud: &PointCloud) -> Result<()> {
        if cloud.len() != self.values.len() {
            return Err(Error::invalid(format!(
                "heatmap over {} values vs cloud of {} points",
                self.values.len(),
                cloud.len()
            )));
        }
        let colors: Vec<[u8; 3]> = self
            .values
            .iter()
            .map(|&v| [(v * 255.0).round() as u8, 0, ((1.0 - v) * 255.0).round() as u8])
            .collect();
        let colored = PointCloud {
            points: cloud.points.clone(),
            normals: cloud.normals.clone(),
            colors: Some(colors),
        };
        crate::geometry::write_ply(w, &colored)
    }

    /// Plain-text sidecar: one `index value` pair per line.
    pub fn write_values(&self, w: &mut impl Write) -> Result<()> {
        for (i, v) in self.values.iter().enumerate() {
            writeln!(w, "{i} {v}")?;
        }
        Ok(())
    }

    pub fn save(&self, cloud: &PointCloud, ply_path: &Path, values_path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(ply_path)?);
        self.write_ply(&mut f, cloud)?;
        let mut f = std::io::BufWriter::new(std::fs::File::create(values_path)?);
        self.write_values(&mut f)
    }
}
