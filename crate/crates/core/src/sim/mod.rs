//! Quasi-static interaction surrogate: primitive shapes, exact collision
//! and support checks, virtual-camera scans, and the four task environments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub mod body;
pub mod collide;
pub mod drop;
pub mod items;
pub mod render;
pub mod scene_gen;
pub mod trial;

pub use body::{
    Body, CameraSpec, GroundPlane, Joint, JointKind, MovingPart, Pose, PrimRef, Primitive,
    Scene, Shape, SurfaceLabel,
};
pub use drop::{drop_settle, Settle};
pub use items::{ActingObject, ItemFamily};
pub use render::{render_scan, Scan};
pub use scene_gen::build_scene;
pub use trial::{
    applicable_possible_mask, compute_offset, run_trial, Diagnostics, FailReason, TaskMasks,
    Trajectory, TrialOutcome,
};

/// The four interaction tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    /// Set the acting object down so it rests stably.
    Placement,
    /// Put the acting object inside a container that must still close.
    Fitting,
    /// Shove the scene object with the acting object.
    Pushing,
    /// Drop one item onto another so the pair stays standing.
    Stacking,
}

impl Task {
    pub const ALL: [Task; 4] = [Task::Placement, Task::Fitting, Task::Pushing, Task::Stacking];

    pub fn parse(s: &str) -> Result<Task> {
        match s {
            "placement" => Ok(Task::Placement),
            "fitting" => Ok(Task::Fitting),
            "pushing" => Ok(Task::Pushing),
            "stacking" => Ok(Task::Stacking),
            other => Err(Error::invalid(format!(
                "unknown task '{other}' (placement|fitting|pushing|stacking)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Task::Placement => "placement",
            Task::Fitting => "fitting",
            Task::Pushing => "pushing",
            Task::Stacking => "stacking",
        }
    }
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}
