//! Scale presets.
//!
//! Every width, resolution and count the pipeline depends on lives in a
//! [`ScaleConfig`] so that the small `desk` configuration used by tests and
//! the `full` deployment-size configuration flow through identical code.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One set-abstraction stage: subsample to `resolution` centroids, group
/// neighbours within `radius_fraction` of the cloud's bounding radius
/// (at most `cap` per group), run `mlp` per grouped point, max-pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaSpec {
    pub resolution: usize,
    /// Grouping radius as a fraction of the input cloud's bounding radius.
    /// Ignored by a global stage (`resolution == 1`), which groups all points.
    pub radius_fraction: f64,
    pub cap: usize,
    pub mlp: Vec<usize>,
}

/// An encoder: abstraction stages plus the mirrored propagation plans,
/// listed in application order (coarsest propagation first).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderSpec {
    pub sa: Vec<SaSpec>,
    pub fp: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleConfig {
    /// Points in a scene scan (`n`).
    pub scene_points: usize,
    /// Points in an acting-object cloud (`m`).
    pub object_points: usize,
    /// Seed count for kernel queries and heatmaps (`k`).
    pub seeds: usize,
    /// Interpolation neighbour count (`t`).
    pub idw_neighbors: usize,
    /// Per-point scene feature width (`f1`).
    pub scene_feat: usize,
    /// Per-point object feature width (`f2`).
    pub object_feat: usize,
    /// Pooled kernel feature width (`f3`).
    pub kernel_feat: usize,
    /// Global object feature width (`f_g`).
    pub global_feat: usize,
    pub scene_encoder: EncoderSpec,
    pub object_encoder: EncoderSpec,
    /// Per-point plan of the kernel convolution, `[f1+f2, …, f3]`.
    pub kernel_mlp: Vec<usize>,
    /// Critic plan, `[f1+f3+f_g, hidden…, 1]`.
    pub critic_mlp: Vec<usize>,
    /// Square virtual-camera resolution in pixels.
    pub camera_resolution: usize,
    /// Positive-trial floor for dataset collection.
    pub target_positives: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Small enough to train on one CPU core in minutes.
    Desk,
    /// Deployment size.
    Full,
}

impl Preset {
    pub fn parse(s: &str) -> Result<Preset> {
        match s {
            "desk" => Ok(Preset::Desk),
            "full" => Ok(Preset::Full),
            other => Err(Error::invalid(format!("unknown preset '{other}' (desk|full)"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Desk => "desk",
            Preset::Full => "full",
        }
    }

    pub fn config(self) -> ScaleConfig {
        match self {
            Preset::Desk => desk_config(),
            Preset::Full => full_config(),
        }
    }
}

impl std::fmt::Display for Preset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

fn sa(resolution: usize, radius_fraction: f64, mlp: &[usize]) -> SaSpec {
    SaSpec { resolution, radius_fraction, cap: 32, mlp: mlp.to_vec() }
}

fn desk_config() -> ScaleConfig {
    ScaleConfig {
        scene_points: 2000,
        object_points: 256,
        seeds: 128,
        idw_neighbors: 3,
        scene_feat: 64,
        object_feat: 64,
        kernel_feat: 64,
        global_feat: 64,
        scene_encoder: EncoderSpec {
            sa: vec![
                sa(256, 0.1, &[3, 32, 32, 64]),
                sa(64, 0.2, &[64, 64, 64, 64]),
                sa(16, 0.4, &[64, 64, 64, 64]),
                sa(4, 0.8, &[64, 64, 64, 64]),
            ],
            fp: vec![
                vec![128, 64, 64],
                vec![128, 64, 64],
                vec![128, 64, 64],
                vec![67, 64, 64],
            ],
        },
        object_encoder: EncoderSpec {
            sa: vec![
                sa(128, 0.2, &[3, 64, 64, 64]),
                sa(32, 0.4, &[64, 64, 64, 64]),
                sa(1, 1.0, &[64, 64, 64, 64]),
            ],
            fp: vec![vec![128, 64, 64], vec![128, 64, 64], vec![67, 64, 64]],
        },
        kernel_mlp: vec![128, 64, 64, 64],
        critic_mlp: vec![192, 64, 1],
        camera_resolution: 192,
        target_positives: 500,
    }
}

fn full_config() -> ScaleConfig {
    ScaleConfig {
        scene_points: 10_000,
        object_points: 1000,
        seeds: 1000,
        idw_neighbors: 3,
        scene_feat: 128,
        object_feat: 128,
        kernel_feat: 128,
        global_feat: 128,
        scene_encoder: EncoderSpec {
            sa: vec![
                sa(1024, 0.1, &[3, 32, 32, 64]),
                sa(256, 0.2, &[64, 64, 64, 128]),
                sa(64, 0.4, &[128, 128, 128, 256]),
                sa(16, 0.8, &[256, 256, 256, 512]),
            ],
            fp: vec![
                vec![768, 256, 256],
                vec![384, 256, 256],
                vec![320, 256, 128],
                vec![131, 128, 128, 128],
            ],
        },
        object_encoder: EncoderSpec {
            sa: vec![
                sa(512, 0.2, &[3, 64, 64, 128]),
                sa(128, 0.4, &[128, 128, 128, 256]),
                sa(1, 1.0, &[256, 256, 256, 256]),
            ],
            // The finest stage consumes the propagated features next to the
            // raw 3-d coordinates, hence last-width + 3 on the input side.
            fp: vec![
                vec![512, 256, 256],
                vec![384, 256, 256],
                vec![259, 128, 128, 128],
            ],
        },
        kernel_mlp: vec![256, 128, 128, 128],
        critic_mlp: vec![384, 128, 1],
        camera_resolution: 448,
        target_positives: 20_000,
    }
}

impl ScaleConfig {
    /// Check that every plan's widths line up with its neighbours:
    /// propagation inputs are coarse-output + skip widths, the finest skip is
    /// the 3 raw coordinates, the kernel plan starts at `f1+f2`, the critic
    /// at `f1+f3+f_g` and ends at a single logit.
    pub fn validate(&self) -> Result<()> {
        validate_encoder(&self.scene_encoder, "scene")?;
        validate_encoder(&self.object_encoder, "object")?;
        let last = |plan: &Vec<usize>| *plan.last().expect("non-empty plan");

        if self.kernel_mlp[0] != self.scene_feat + self.object_feat {
            return Err(Error::invalid(format!(
                "kernel plan input {} != f1+f2 = {}",
                self.kernel_mlp[0],
                self.scene_feat + self.object_feat
            )));
        }
        if last(&self.kernel_mlp) != self.kernel_feat {
            return Err(Error::invalid("kernel plan output is not f3"));
        }
        let critic_in = self.scene_feat + self.kernel_feat + self.global_feat;
        if self.critic_mlp[0] != critic_in {
            return Err(Error::invalid(format!(
                "critic input {} != f1+f3+f_g = {critic_in}",
                self.critic_mlp[0]
            )));
        }
        if last(&self.critic_mlp) != 1 {
            return Err(Error::invalid("critic must end in one logit"));
        }
        if self.seeds > self.scene_points {
            return Err(Error::invalid("more seeds than scene points"));
        }
        if self.idw_neighbors == 0 {
            return Err(Error::invalid("idw_neighbors must be positive"));
        }
        Ok(())
    }
}

fn validate_encoder(enc: &EncoderSpec, label: &str) -> Result<()> {
    if enc.sa.is_empty() || enc.sa.len() != enc.fp.len() {
        return Err(Error::invalid(format!(
            "{label}: {} abstraction vs {} propagation stages",
            enc.sa.len(),
            enc.fp.len()
        )));
    }
    if enc.sa[0].mlp.first() != Some(&3) {
        return Err(Error::invalid(format!("{label}: first stage must consume 3-d coordinates")));
    }
    for (i, pair) in enc.sa.windows(2).enumerate() {
        if pair[1].resolution >= pair[0].resolution {
            return Err(Error::invalid(format!(
                "{label}: resolution must shrink at stage {}",
                i + 1
            )));
        }
        if pair[1].mlp.first() != pair[0].mlp.last() {
            return Err(Error::invalid(format!(
                "{label}: stage {} input width mismatch",
                i + 1
            )));
        }
    }
    // Propagation i runs coarsest-first: its input is the coarser level's
    // feature width plus the skip width at the level it lands on.
    let n = enc.sa.len();
    let mut carried = *enc.sa[n - 1].mlp.last().expect("plan");
    for (i, plan) in enc.fp.iter().enumerate() {
        let skip =
            if i + 1 == n { 3 } else { *enc.sa[n - 2 - i].mlp.last().expect("plan") };
        if plan.first() != Some(&(carried + skip)) {
            return Err(Error::invalid(format!(
                "{label}: propagation {} expects {} channels, plan starts at {}",
                i,
                carried + skip,
                plan[0]
            )));
        }
        carried = *plan.last().expect("plan");
    }
    Ok(())
}
