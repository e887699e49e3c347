//! Procedural acting-object families and their point-cloud sampling.
//!
//! Six primitive-composed families stand in for mesh categories; the first
//! four are the training split, the last two stay held out for testing
//! generalization to unseen shapes.  An acting object carries a 1-DoF yaw
//! `q`, an isotropic scale `α`, and a placement centre; its axis-aligned
//! size `s` is derived from the posed primitives and drives the task
//! offset formulas.

use super::body::{Pose, Primitive, Shape};
use crate::error::{Error, Result};
use crate::geometry::{furthest_point_sample, Point3, PointCloud};
use crate::rng::{rng_from_seed, SeedRng};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemFamily {
    Box,
    Cylinder,
    OpenBox,
    TallBox,
    FlatCylinder,
    Mug,
}

impl ItemFamily {
    pub const ALL: [ItemFamily; 6] = [
        ItemFamily::Box,
        ItemFamily::Cylinder,
        ItemFamily::OpenBox,
        ItemFamily::TallBox,
        ItemFamily::FlatCylinder,
        ItemFamily::Mug,
    ];
    /// Families used to build training data.
    pub const TRAIN: [ItemFamily; 4] =
        [ItemFamily::Box, ItemFamily::Cylinder, ItemFamily::OpenBox, ItemFamily::TallBox];
    /// Families reserved for evaluating on unseen shapes.
    pub const HELD_OUT: [ItemFamily; 2] = [ItemFamily::FlatCylinder, ItemFamily::Mug];

    pub fn name(&self) -> &'static str {
        match self {
            ItemFamily::Box => "box",
            ItemFamily::Cylinder => "cylinder",
            ItemFamily::OpenBox => "open_box",
            ItemFamily::TallBox => "tall_box",
            ItemFamily::FlatCylinder => "flat_cylinder",
            ItemFamily::Mug => "mug",
        }
    }

    pub fn parse(s: &str) -> Result<ItemFamily> {
        ItemFamily::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown item family '{s}'")))
    }
}

impl std::fmt::Display for ItemFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Sample the base primitives of a family (unit scale, zero yaw).
pub fn family_prims(family: ItemFamily, rng: &mut SeedRng) -> Vec<Primitive> {
    let boxed = |half: Point3, pos: Point3| {
        Primitive::new(Shape::Box { half }, Pose::from_pos(pos))
    };
    match family {
        ItemFamily::Box => {
            let half = Point3::new(
                rng.gen_range(0.04..0.11),
                rng.gen_range(0.04..0.11),
                rng.gen_range(0.04..0.11),
            );
            vec![boxed(half, Point3::ZERO)]
        }
        ItemFamily::Cylinder => {
            let radius = rng.gen_range(0.04..0.10);
            let half_height = rng.gen_range(0.05..0.11);
            vec![Primitive::new(Shape::Cylinder { radius, half_height }, Pose::IDENTITY)]
        }
        ItemFamily::OpenBox => {
            let ox = rng.gen_range(0.06..0.12);
            let oy = rng.gen_range(0.06..0.12);
            let oh = rng.gen_range(0.05..0.10);
            let t = 0.01;
            let wall_h = oh - t * 0.5;
            vec![
                boxed(Point3::new(ox, oy, t * 0.5), Point3::new(0.0, 0.0, t * 0.5 - oh)),
                boxed(Point3::new(t * 0.5, oy, wall_h), Point3::new(ox - t * 0.5, 0.0, t * 0.5)),
                boxed(Point3::new(t * 0.5, oy, wall_h), Point3::new(t * 0.5 - ox, 0.0, t * 0.5)),
                boxed(Point3::new(ox - t, t * 0.5, wall_h), Point3::new(0.0, oy - t * 0.5, t * 0.5)),
                boxed(Point3::new(ox - t, t * 0.5, wall_h), Point3::new(0.0, t * 0.5 - oy, t * 0.5)),
            ]
        }
        ItemFamily::TallBox => {
            let half = Point3::new(
                rng.gen_range(0.025..0.05),
                rng.gen_range(0.025..0.05),
                rng.gen_range(0.10..0.18),
            );
            vec![boxed(half, Point3::ZERO)]
        }
        ItemFamily::FlatCylinder => {
            let radius = rng.gen_range(0.07..0.13);
            let half_height = rng.gen_range(0.012..0.025);
            vec![Primitive::new(Shape::Cylinder { radius, half_height }, Pose::IDENTITY)]
        }
        ItemFamily::Mug => {
            let radius = rng.gen_range(0.04..0.065);
            let half_height = rng.gen_range(0.05..0.085);
            let body = Primitive::new(Shape::Cylinder { radius, half_height }, Pose::IDENTITY);
            let handle = boxed(
                Point3::new(0.02, 0.008, half_height * 0.55),
                Point3::new(radius + 0.012, 0.0, 0.0),
            );
            vec![body, handle]
        }
    }
}

/// A shape the robot drops, pushes or stacks: posed by (centre, yaw, scale).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActingObject {
    pub family: ItemFamily,
    /// Base primitives at unit scale and zero yaw.
    pub base: Vec<Primitive>,
    pub yaw: f64,
    pub scale: f64,
    /// World position of the posed bounding-box centre.
    pub center: Point3,
}

impl ActingObject {
    /// Draw a random instance of a family; the centre starts at the origin
    /// and is set per trial.
    pub fn sample(family: ItemFamily, seed: u64) -> ActingObject {
        let mut rng = rng_from_seed(seed);
        let base = family_prims(family, &mut rng);
        let yaw = rng.gen_range(0.0..std::f64::consts::TAU);
        let scale = rng.gen_range(0.85..1.2);
        ActingObject { family, base, yaw, scale, center: Point3::ZERO }
    }

    /// Same shape, different isotropic scale (sensitivity probes).
    pub fn with_scale(&self, scale: f64) -> ActingObject {
        let mut o = self.clone();
        o.scale = scale;
        o
    }

    pub fn at(&self, center: Point3) -> ActingObject {
        let mut o = self.clone();
        o.center = center;
        o
    }

    /// Scale and yaw applied, before bounding-box centring.
    fn posed_prims(&self) -> Vec<Primitive> {
        self.base
            .iter()
            .map(|p| {
                Primitive::new(
                    p.shape.scaled(self.scale),
                    Pose::new((p.pose.pos * self.scale).rotated_z(self.yaw), p.pose.yaw + self.yaw),
                )
            })
            .collect()
    }

    fn posed_aabb(&self) -> (Point3, Point3) {
        let mut lo = Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut hi = -lo;
        for p in self.posed_prims() {
            let (a, b) = p.aabb();
            lo = Point3::new(lo.x.min(a.x), lo.y.min(a.y), lo.z.min(a.z));
            hi = Point3::new(hi.x.max(b.x), hi.y.max(b.y), hi.z.max(b.z));
        }
        (lo, hi)
    }

    /// Axis-aligned size s = (s_x, s_y, s_z) of the posed object.
    pub fn size(&self) -> Point3 {
        let (lo, hi) = self.posed_aabb();
        hi - lo
    }

    /// Primitives posed relative to the bounding-box centre, plus the
    /// centre of mass in the same frame.  This is the frame trial geometry
    /// works in: world primitive = local primitive translated by `center`.
    pub fn local_prims(&self) -> (Vec<Primitive>, Point3) {
        let (lo, hi) = self.posed_aabb();
        let mid = (lo + hi) * 0.5;
        let mut prims = self.posed_prims();
        let mut mass = 0.0;
        let mut moment = Point3::ZERO;
        for p in &mut prims {
            p.pose.pos -= mid;
            let v = p.shape.volume();
            mass += v;
            moment += p.pose.pos * v;
        }
        (prims, moment / mass.max(1e-300))
    }

    /// World-frame primitives at the current centre.
    pub fn world_prims(&self) -> Vec<Primitive> {
        let (mut prims, _) = self.local_prims();
        for p in &mut prims {
            p.pose.pos += self.center;
        }
        prims
    }

    pub fn mass(&self) -> f64 {
        self.base.iter().map(|p| p.shape.scaled(self.scale).volume()).sum()
    }

    /// World-frame centre of mass at the current centre.
    pub fn com(&self) -> Point3 {
        let (_, com_local) = self.local_prims();
        self.center + com_local
    }

    /// Complete (all-around) surface point cloud in the bounding-box-centred
    /// frame — the object-side input to the network.
    pub fn sample_cloud(&self, m: usize, seed: u64) -> Result<PointCloud> {
        let (prims, _) = self.local_prims();
        let mut rng = rng_from_seed(seed);
        let raw_target = (4 * m).max(512);
        let areas: Vec<f64> = prims.iter().map(|p| surface_area(&p.shape)).collect();
        let total: f64 = areas.iter().sum();
        let mut raw: Vec<Point3> = Vec::with_capacity(raw_target);
        while raw.len() < raw_target {
            let mut pick = rng.gen_range(0.0..total);
            let mut idx = 0;
            for (i, a) in areas.iter().enumerate() {
                if pick < *a {
                    idx = i;
                    break;
                }
                pick -= a;
            }
            let p = prims[idx].pose.apply(surface_point(&prims[idx].shape, &mut rng));
            // Skip points buried inside a sibling primitive.
            if prims.iter().enumerate().any(|(j, q)| j != idx && strictly_inside(&q, p)) {
                continue;
            }
            raw.push(p);
        }
        let picked = furthest_point_sample(&raw, m.min(raw.len()), 0)?;
        Ok(PointCloud::from_points(picked.indices.iter().map(|&i| raw[i]).collect()))
    }
}

fn surface_area(shape: &Shape) -> f64 {
    match *shape {
        Shape::Box { half } => 8.0 * (half.x * half.y + half.y * half.z + half.x * half.z),
        Shape::Cylinder { radius, half_height } => {
            std::f64::consts::TAU * radius * 2.0 * half_height
                + 2.0 * std::f64::consts::PI * radius * radius
        }
    }
}

/// Uniform point on the shape surface, in the shape's local frame.
fn surface_point(shape: &Shape, rng: &mut SeedRng) -> Point3 {
    match *shape {
        Shape::Box { half } => {
            let ax = half.y * half.z;
            let ay = half.x * half.z;
            let az = half.x * half.y;
            let pick = rng.gen_range(0.0..(ax + ay + az));
            let side = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let u = rng.gen_range(-1.0..1.0);
            let v = rng.gen_range(-1.0..1.0);
            if pick < ax {
                Point3::new(side * half.x, u * half.y, v * half.z)
            } else if pick < ax + ay {
                Point3::new(u * half.x, side * half.y, v * half.z)
            } else {
                Point3::new(u * half.x, v * half.y, side * half.z)
            }
        }
        Shape::Cylinder { radius, half_height } => {
            let side_area = std::f64::consts::TAU * radius * 2.0 * half_height;
            let cap_area = std::f64::consts::PI * radius * radius;
            let pick = rng.gen_range(0.0..(side_area + 2.0 * cap_area));
            let theta = rng.gen_range(0.0..std::f64::consts::TAU);
            if pick < side_area {
                let z = rng.gen_range(-half_height..half_height);
                Point3::new(radius * theta.cos(), radius * theta.sin(), z)
            } else {
                let r = radius * rng.gen_range(0f64..1.0).sqrt();
                let z = if pick < side_area + cap_area { half_height } else { -half_height };
                Point3::new(r * theta.cos(), r * theta.sin(), z)
            }
        }
    }
}

fn strictly_inside(prim: &Primitive, p: Point3) -> bool {
    let l = prim.pose.invert(p);
    let eps = 1e-9;
    match prim.shape {
        Shape::Box { half } => {
            l.x.abs() < half.x - eps && l.y.abs() < half.y - eps && l.z.abs() < half.z - eps
        }
        Shape::Cylinder { radius, half_height } => {
            l.x * l.x + l.y * l.y < (radius - eps) * (radius - eps)
                && l.z.abs() < half_height - eps
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_family_builds_valid_primitives() {
        for (i, family) in ItemFamily::ALL.into_iter().enumerate() {
            let obj = ActingObject::sample(family, 100 + i as u64);
            assert!(!obj.base.is_empty());
            for p in &obj.base {
                p.shape.validate().unwrap();
            }
            assert!(obj.mass() > 0.0);
            let s = obj.size();
            assert!(s.x > 0.0 && s.y > 0.0 && s.z > 0.0);
        }
    }

    #[test]
    fn train_and_held_out_splits_partition_the_families() {
        let mut all: Vec<&str> = ItemFamily::TRAIN.iter().map(|f| f.name()).collect();
        all.extend(ItemFamily::HELD_OUT.iter().map(|f| f.name()));
        all.sort_unstable();
        let mut expected: Vec<&str> = ItemFamily::ALL.iter().map(|f| f.name()).collect();
        expected.sort_unstable();
        assert_eq!(all, expected);
    }

    #[test]
    fn size_of_an_axis_aligned_box_is_twice_its_half_extents() {
        let mut obj = ActingObject::sample(ItemFamily::Box, 7);
        obj.yaw = 0.0;
        obj.scale = 1.0;
        let Shape::Box { half } = obj.base[0].shape else { panic!() };
        let s = obj.size();
        assert!((s - half * 2.0).norm() < 1e-12);
        // A quarter turn swaps the x and y extents.
        obj.yaw = std::f64::consts::FRAC_PI_2;
        let t = obj.size();
        assert!((t.x - s.y).abs() < 1e-9 && (t.y - s.x).abs() < 1e-9 && (t.z - s.z).abs() < 1e-12);
    }

    #[test]
    fn doubling_scale_doubles_every_size_component() {
        let obj = ActingObject::sample(ItemFamily::Mug, 21);
        let big = obj.with_scale(obj.scale * 2.0);
        assert!((big.size() - obj.size() * 2.0).norm() < 1e-12);
    }

    #[test]
    fn local_frame_is_bounding_box_centred() {
        let obj = ActingObject::sample(ItemFamily::Mug, 3);
        let (prims, _) = obj.local_prims();
        let mut lo = Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut hi = -lo;
        for p in &prims {
            let (a, b) = p.aabb();
            lo = Point3::new(lo.x.min(a.x), lo.y.min(a.y), lo.z.min(a.z));
            hi = Point3::new(hi.x.max(b.x), hi.y.max(b.y), hi.z.max(b.z));
        }
        assert!((lo + hi).norm() < 1e-12, "bounds must straddle the origin");
    }

    #[test]
    fn sampled_cloud_lies_on_primitive_surfaces() {
        for family in [ItemFamily::Box, ItemFamily::OpenBox, ItemFamily::Mug] {
            let obj = ActingObject::sample(family, 11);
            let cloud = obj.sample_cloud(128, 5).unwrap();
            assert_eq!(cloud.len(), 128);
            let (prims, _) = obj.local_prims();
            for &p in &cloud.points {
                let on_any = prims.iter().any(|prim| {
                    let l = prim.pose.invert(p);
                    match prim.shape {
                        Shape::Box { half } => {
                            let dx = l.x.abs() - half.x;
                            let dy = l.y.abs() - half.y;
                            let dz = l.z.abs() - half.z;
                            dx.max(dy).max(dz).abs() < 1e-9
                        }
                        Shape::Cylinder { radius, half_height } => {
                            let rr = (l.x * l.x + l.y * l.y).sqrt() - radius;
                            let zz = l.z.abs() - half_height;
                            rr.max(zz).abs() < 1e-9
                        }
                    }
                });
                assert!(on_any, "{p:?} is not on a surface");
                let buried = prims.iter().any(|prim| strictly_inside(prim, p));
                assert!(!buried, "{p:?} is buried inside the object");
            }
        }
    }

    #[test]
    fn cloud_sampling_is_deterministic() {
        let obj = ActingObject::sample(ItemFamily::Cylinder, 9);
        let a = obj.sample_cloud(64, 17).unwrap();
        let b = obj.sample_cloud(64, 17).unwrap();
        assert_eq!(a.points, b.points);
        let c = obj.sample_cloud(64, 18).unwrap();
        assert_ne!(a.points, c.points);
    }

    #[test]
    fn family_names_round_trip() {
        for f in ItemFamily::ALL {
            assert_eq!(ItemFamily::parse(f.name()).unwrap(), f);
        }
        assert!(ItemFamily::parse("teapot").is_err());
    }
}
