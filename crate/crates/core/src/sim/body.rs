//! Scene description: rigid bodies assembled from yaw-posed primitives.
//!
//! Everything in the surrogate world is a box or a vertical cylinder.  Bodies
//! never pitch or roll — poses are a translation plus a rotation about +z —
//! which keeps every derived quantity (footprints, z-intervals, joints)
//! closed under composition and lets collision queries decompose into a 2-D
//! problem and an interval test.

use crate::error::{Error, Result};
use crate::geometry::Point3;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Rigid transform restricted to translation + rotation about the up axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub pos: Point3,
    pub yaw: f64,
}

impl Pose {
    pub const IDENTITY: Pose = Pose { pos: Point3::ZERO, yaw: 0.0 };

    pub fn new(pos: Point3, yaw: f64) -> Self {
        Pose { pos, yaw }
    }

    pub fn from_pos(pos: Point3) -> Self {
        Pose { pos, yaw: 0.0 }
    }

    /// Map a point from the local frame into the parent frame.
    pub fn apply(&self, p: Point3) -> Point3 {
        self.pos + p.rotated_z(self.yaw)
    }

    /// Rotate a direction (no translation).
    pub fn rotate(&self, d: Point3) -> Point3 {
        d.rotated_z(self.yaw)
    }

    /// Map a point from the parent frame back into the local frame.
    pub fn invert(&self, p: Point3) -> Point3 {
        (p - self.pos).rotated_z(-self.yaw)
    }

    /// `self ∘ inner`: first apply `inner`, then `self`.
    pub fn compose(&self, inner: Pose) -> Pose {
        Pose { pos: self.apply(inner.pos), yaw: self.yaw + inner.yaw }
    }

    /// The transform undoing this one: `self.inverse().compose(*self)` is
    /// the identity (up to round-off).
    pub fn inverse(&self) -> Pose {
        Pose { pos: (-self.pos).rotated_z(-self.yaw), yaw: -self.yaw }
    }
}

/// Convex solid; cylinders always stand on the up axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Box { half: Point3 },
    Cylinder { radius: f64, half_height: f64 },
}

impl Shape {
    pub fn volume(&self) -> f64 {
        match *self {
            Shape::Box { half } => 8.0 * half.x * half.y * half.z,
            Shape::Cylinder { radius, half_height } => {
                std::f64::consts::PI * radius * radius * 2.0 * half_height
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Shape::Box { half } => half.x > 0.0 && half.y > 0.0 && half.z > 0.0,
            Shape::Cylinder { radius, half_height } => radius > 0.0 && half_height > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("non-positive extents in {self:?}")))
        }
    }

    /// Scale every linear extent by `s`.
    pub fn scaled(&self, s: f64) -> Shape {
        match *self {
            Shape::Box { half } => Shape::Box { half: half * s },
            Shape::Cylinder { radius, half_height } => {
                Shape::Cylinder { radius: radius * s, half_height: half_height * s }
            }
        }
    }
}

/// A posed shape.  The frame the pose refers to depends on context: part
/// frame inside a [`Body`], world frame once flattened.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Primitive {
    pub shape: Shape,
    pub pose: Pose,
}

impl Primitive {
    pub fn new(shape: Shape, pose: Pose) -> Self {
        Primitive { shape, pose }
    }

    /// Vertical extent in the frame of `pose`.
    pub fn z_interval(&self) -> (f64, f64) {
        let hz = match self.shape {
            Shape::Box { half } => half.z,
            Shape::Cylinder { half_height, .. } => half_height,
        };
        (self.pose.pos.z - hz, self.pose.pos.z + hz)
    }

    /// Axis-aligned bounds in the frame of `pose`.
    pub fn aabb(&self) -> (Point3, Point3) {
        let c = self.pose.pos;
        let h = match self.shape {
            Shape::Box { half } => {
                let (s, co) = self.pose.yaw.sin_cos();
                Point3::new(
                    co.abs() * half.x + s.abs() * half.y,
                    s.abs() * half.x + co.abs() * half.y,
                    half.z,
                )
            }
            Shape::Cylinder { radius, half_height } => Point3::new(radius, radius, half_height),
        };
        (c - h, c + h)
    }
}

/// How an articulated part moves relative to its body.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JointKind {
    /// Slide along a horizontal unit axis in the body frame.
    Prismatic { axis: Point3 },
    /// Swing about a vertical axis through `anchor` (body frame).
    Revolute { anchor: Point3 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Joint {
    pub kind: JointKind,
    /// (closed, fully open); closed is always the lower bound.
    pub limits: (f64, f64),
    pub position: f64,
}

impl Joint {
    /// Part-frame → body-frame transform at the current position.
    pub fn transform(&self) -> Pose {
        self.transform_at(self.position)
    }

    pub fn transform_at(&self, q: f64) -> Pose {
        match self.kind {
            JointKind::Prismatic { axis } => Pose::from_pos(axis * q),
            JointKind::Revolute { anchor } => {
                Pose { pos: anchor - anchor.rotated_z(q), yaw: q }
            }
        }
    }

    pub fn range(&self) -> f64 {
        self.limits.1 - self.limits.0
    }

    pub fn validate(&self) -> Result<()> {
        if self.limits.0 > self.limits.1 {
            return Err(Error::invalid("joint limits reversed"));
        }
        if self.position < self.limits.0 - 1e-12 || self.position > self.limits.1 + 1e-12 {
            return Err(Error::invalid(format!(
                "joint position {} outside limits {:?}",
                self.position, self.limits
            )));
        }
        if let JointKind::Prismatic { axis } = self.kind {
            if (axis.norm() - 1.0).abs() > 1e-9 || axis.z.abs() > 1e-9 {
                return Err(Error::invalid("prismatic axis must be horizontal unit"));
            }
        }
        Ok(())
    }
}

/// The single articulated part a body may carry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MovingPart {
    pub prims: Vec<Primitive>,
    pub joint: Joint,
}

/// One rigid body: a fixed part plus at most one articulated part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Body {
    pub pose: Pose,
    pub is_static: bool,
    pub main: Vec<Primitive>,
    pub moving: Option<MovingPart>,
}

impl Body {
    pub fn fixed(pose: Pose, main: Vec<Primitive>, is_static: bool) -> Self {
        Body { pose, is_static, main, moving: None }
    }

    /// Body-frame transform of a part (0 = main, 1 = articulated).
    pub fn part_pose(&self, part: usize) -> Pose {
        if part == 0 {
            Pose::IDENTITY
        } else {
            self.moving.as_ref().expect("articulated part").joint.transform()
        }
    }

    /// Flatten to world-frame primitives tagged with (part, prim) indices.
    pub fn world_prims(&self) -> Vec<(u32, u32, Primitive)> {
        let mut out = Vec::new();
        for (i, p) in self.main.iter().enumerate() {
            let pose = self.pose.compose(p.pose);
            out.push((0, i as u32, Primitive::new(p.shape, pose)));
        }
        if let Some(m) = &self.moving {
            let part = self.pose.compose(m.joint.transform());
            for (i, p) in m.prims.iter().enumerate() {
                out.push((1, i as u32, Primitive::new(p.shape, part.compose(p.pose))));
            }
        }
        out
    }

    /// Uniform-density mass (density 1) and world-frame centre of mass.
    pub fn mass_com(&self) -> (f64, Point3) {
        let mut mass = 0.0;
        let mut moment = Point3::ZERO;
        for (_, _, prim) in self.world_prims() {
            let v = prim.shape.volume();
            mass += v;
            moment += prim.pose.pos * v;
        }
        (mass, moment / mass.max(1e-300))
    }

    pub fn validate(&self) -> Result<()> {
        for p in &self.main {
            p.shape.validate()?;
        }
        if let Some(m) = &self.moving {
            for p in &m.prims {
                p.shape.validate()?;
            }
            m.joint.validate()?;
        }
        Ok(())
    }
}

/// Identifies one primitive of one body part within a scene.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PrimRef {
    pub body: u32,
    pub part: u32,
    pub prim: u32,
}

/// What a scan point (or a contact) lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceLabel {
    Ground,
    Prim(PrimRef),
}

impl SurfaceLabel {
    pub fn is_ground(&self) -> bool {
        matches!(self, SurfaceLabel::Ground)
    }
}

/// Virtual depth camera.  Azimuth and altitude are sampled per render; the
/// remaining intrinsics live with the scene.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraSpec {
    pub distance: f64,
    pub fov_deg: f64,
    pub resolution: u32,
    pub target: Point3,
}

impl CameraSpec {
    pub fn standard(resolution: u32, target: Point3) -> Self {
        CameraSpec { distance: 5.0, fov_deg: 35.0, resolution, target }
    }
}

/// Horizontal support plane at z = 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundPlane {
    /// Rendered (stacking) or collision-only (pushing).
    pub visible: bool,
}

/// A static world plus the bookkeeping the task metrics need: which
/// primitive is the working countertop and which surface an object must
/// end up resting on for a fit to count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub bodies: Vec<Body>,
    pub ground: Option<GroundPlane>,
    pub camera: CameraSpec,
    pub countertop: Option<PrimRef>,
    pub fit_surface: Option<PrimRef>,
}

impl Scene {
    /// Every body primitive in world frame, tagged for labelling.
    pub fn world_surfaces(&self) -> Vec<(SurfaceLabel, Primitive)> {
        let mut out = Vec::new();
        for (b, body) in self.bodies.iter().enumerate() {
            for (part, prim, world) in body.world_prims() {
                let r = PrimRef { body: b as u32, part, prim };
                out.push((SurfaceLabel::Prim(r), world));
            }
        }
        out
    }

    /// World bounds over all bodies (ignores the ground plane).
    pub fn aabb(&self) -> (Point3, Point3) {
        let mut lo = Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut hi = -lo;
        for (_, prim) in self.world_surfaces() {
            let (a, b) = prim.aabb();
            lo = Point3::new(lo.x.min(a.x), lo.y.min(a.y), lo.z.min(a.z));
            hi = Point3::new(hi.x.max(b.x), hi.y.max(b.y), hi.z.max(b.z));
        }
        (lo, hi)
    }

    pub fn validate(&self) -> Result<()> {
        for b in &self.bodies {
            b.validate()?;
        }
        Ok(())
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::format(format!("scene encode: {e}")))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<Scene> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::format(format!("scene decode: {e}")))
    }
}
