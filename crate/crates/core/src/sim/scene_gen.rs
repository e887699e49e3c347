//! Procedural scenes for the four interaction tasks.
//!
//! Every scene is built from one random furniture root (table or cabinet)
//! or, for pushing/stacking, one free-standing object, entirely driven by a
//! single seed.  All dimensions are drawn inside fixed ranges so the desk
//! preset's camera always frames the whole scene.

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::rng::{rng_from_seed, SeedRng};
use crate::sim::body::{
    Body, CameraSpec, GroundPlane, Joint, JointKind, MovingPart, Pose, PrimRef, Primitive, Scene,
    Shape,
};
use crate::sim::collide::{bodies_collide, CONTACT_TOL};
use crate::sim::drop::{drop_settle, Settle};
use crate::sim::items::{family_prims, ActingObject, ItemFamily};
use crate::sim::Task;

/// Wall/slab thickness shared by all furniture.
const WALL: f64 = 0.02;
/// Sliding clearance between a drawer and its shell.
const DRAWER_GAP: f64 = 0.005;
/// Per-item retry budget when scattering clutter.
const PLACE_ATTEMPTS: usize = 100;

fn boxed(half: Point3, pos: Point3, yaw: f64) -> Primitive {
    Primitive::new(Shape::Box { half }, Pose::new(pos, yaw))
}

/// Four-legged table; the top slab (primitive 0) is the countertop.
fn table(rng: &mut SeedRng) -> (Body, u32) {
    let hx = rng.gen_range(0.45..0.7);
    let hy = rng.gen_range(0.35..0.55);
    let height = rng.gen_range(0.55..0.8);
    let top = rng.gen_range(0.04..0.07);
    let leg = rng.gen_range(0.025..0.04);

    let mut prims = vec![boxed(
        Point3::new(hx, hy, top / 2.0),
        Point3::new(0.0, 0.0, height - top / 2.0),
        0.0,
    )];
    let lx = hx - leg - 0.02;
    let ly = hy - leg - 0.02;
    let lh = (height - top) / 2.0;
    for sx in [-1.0, 1.0] {
        for sy in [-1.0, 1.0] {
            prims.push(boxed(
                Point3::new(leg, leg, lh),
                Point3::new(sx * lx, sy * ly, lh),
                0.0,
            ));
        }
    }
    (Body { pose: Pose::IDENTITY, is_static: true, main: prims, moving: None }, 0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CabinetKind {
    Drawer,
    Door,
}

/// Open-front cabinet with one articulated part.  Returns the body, the
/// countertop primitive index and the (part, prim) pair payloads should
/// rest on during fitting.
fn cabinet(rng: &mut SeedRng, kind: CabinetKind) -> (Body, u32, (u32, u32)) {
    let dx = rng.gen_range(0.21..0.3); // depth half; +x is the open front
    let wy = rng.gen_range(0.3..0.45);
    let height = rng.gen_range(0.55..0.85);
    let t = WALL;

    let wall_z = (height - 2.0 * t) / 2.0;
    let mut main = vec![
        // 0: interior floor, 1: countertop
        boxed(Point3::new(dx, wy, t / 2.0), Point3::new(0.0, 0.0, t / 2.0), 0.0),
        boxed(Point3::new(dx, wy, t / 2.0), Point3::new(0.0, 0.0, height - t / 2.0), 0.0),
    ];
    // Side walls stop short of the front plane so a door can cover it.
    for sy in [-1.0, 1.0] {
        main.push(boxed(
            Point3::new(dx - t / 2.0, t / 2.0, wall_z),
            Point3::new(-t / 2.0, sy * (wy - t / 2.0), height / 2.0),
            0.0,
        ));
    }
    main.push(boxed(
        Point3::new(t / 2.0, wy - t, wall_z),
        Point3::new(-(dx - t / 2.0), 0.0, height / 2.0),
        0.0,
    ));

    let (moving, fit) = match kind {
        CabinetKind::Drawer => {
            // Shelf the drawer slides on; the gap above it bounds what fits.
            let headroom = rng.gen_range(0.14..0.3);
            let shelf_top = height - 2.0 * t - headroom;
            main.push(boxed(
                Point3::new(dx - t / 2.0, wy - t, t / 2.0),
                Point3::new(t / 2.0, 0.0, shelf_top - t / 2.0),
                0.0,
            ));
            let ddx = dx - t / 2.0 - DRAWER_GAP;
            let dwy = wy - t - DRAWER_GAP;
            let wall_h = rng.gen_range(0.1..0.16f64).min(headroom - 0.02);
            let x0 = t / 2.0;
            let zc = shelf_top + t + wall_h / 2.0;
            let mut prims = vec![boxed(
                Point3::new(ddx, dwy, t / 2.0),
                Point3::new(x0, 0.0, shelf_top + t / 2.0),
                0.0,
            )];
            for sx in [1.0, -1.0] {
                prims.push(boxed(
                    Point3::new(t / 2.0, dwy, wall_h / 2.0),
                    Point3::new(x0 + sx * (ddx - t / 2.0), 0.0, zc),
                    0.0,
                ));
            }
            for sy in [-1.0, 1.0] {
                prims.push(boxed(
                    Point3::new(ddx - t, t / 2.0, wall_h / 2.0),
                    Point3::new(x0, sy * (dwy - t / 2.0), zc),
                    0.0,
                ));
            }
            let joint = Joint {
                kind: JointKind::Prismatic { axis: Point3::new(1.0, 0.0, 0.0) },
                limits: (0.0, 1.5 * ddx),
                position: 0.0,
            };
            (MovingPart { prims, joint }, (1, 0))
        }
        CabinetKind::Door => {
            let prims = vec![boxed(
                Point3::new(t / 2.0, wy, wall_z),
                Point3::new(dx - t / 2.0, 0.0, height / 2.0),
                0.0,
            )];
            let joint = Joint {
                kind: JointKind::Revolute { anchor: Point3::new(dx - t / 2.0, wy, 0.0) },
                limits: (0.0, 110f64.to_radians()),
                position: 0.0,
            };
            (MovingPart { prims, joint }, (0, 0))
        }
    };

    let body =
        Body { pose: Pose::IDENTITY, is_static: true, main, moving: Some(moving) };
    (body, 1, fit)
}

/// Free-standing object a pushing scene is built around.
fn big_item(rng: &mut SeedRng) -> Body {
    let kind = rng.gen_range(0..3u32);
    let yaw = rng.gen_range(0.0..std::f64::consts::TAU);
    let jitter = Point3::new(rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1), 0.0);
    match kind {
        0 => {
            let half = Point3::new(
                rng.gen_range(0.25..0.45),
                rng.gen_range(0.25..0.45),
                rng.gen_range(0.25..0.45),
            );
            let prim = Primitive::new(Shape::Box { half }, Pose::from_pos(Point3::new(0.0, 0.0, half.z)));
            Body::fixed(Pose::new(jitter, yaw), vec![prim], false)
        }
        1 => {
            let radius = rng.gen_range(0.2..0.35);
            let hh = rng.gen_range(0.25..0.45);
            let prim = Primitive::new(
                Shape::Cylinder { radius, half_height: hh },
                Pose::from_pos(Point3::new(0.0, 0.0, hh)),
            );
            Body::fixed(Pose::new(jitter, yaw), vec![prim], false)
        }
        _ => {
            let (mut body, _) = table(rng);
            body.pose = Pose::new(jitter, yaw);
            body.is_static = false;
            body
        }
    }
}

/// Drop train-family items onto the countertop until `count` rest stably.
fn scatter_clutter(
    scene: &mut Scene,
    rng: &mut SeedRng,
    countertop: PrimRef,
    count: usize,
) -> Result<()> {
    let root_pose = scene.bodies[countertop.body as usize].pose;
    let ct_prim = scene.bodies[countertop.body as usize].main[countertop.prim as usize];
    let Shape::Box { half } = ct_prim.shape else {
        return Err(Error::Generation("countertop must be a box slab".into()));
    };
    let ct_top = root_pose.pos.z + ct_prim.z_interval().1;

    for _ in 0..count {
        let family = ItemFamily::TRAIN[rng.gen_range(0..ItemFamily::TRAIN.len())];
        let base = family_prims(family, rng);
        let scale = rng.gen_range(0.85..1.2);
        let mut placed = false;
        for _ in 0..PLACE_ATTEMPTS {
            let u = rng.gen_range(-0.92..0.92) * half.x + ct_prim.pose.pos.x;
            let v = rng.gen_range(-0.92..0.92) * half.y + ct_prim.pose.pos.y;
            let yaw = rng.gen_range(0.0..std::f64::consts::TAU);
            let obj = ActingObject {
                family,
                base: base.clone(),
                yaw,
                scale,
                center: Point3::ZERO,
            };
            let (local, com) = obj.local_prims();
            let mut start = root_pose.apply(Point3::new(u, v, 0.0));
            start.z = ct_top + 1.0;
            let surfaces = scene.world_surfaces();
            match drop_settle(&local, com, start, &surfaces, false, 10.0) {
                Settle::Rests { center, stable: true, .. } => {
                    scene.bodies.push(Body::fixed(Pose::from_pos(center), local, false));
                    placed = true;
                    break;
                }
                _ => continue,
            }
        }
        if !placed {
            return Err(Error::Generation(format!(
                "no room left on the countertop for a {family} after {PLACE_ATTEMPTS} tries"
            )));
        }
    }
    Ok(())
}

fn open_joint(body: &mut Body, fraction: f64) {
    if let Some(part) = body.moving.as_mut() {
        let (lo, hi) = part.joint.limits;
        part.joint.position = lo + fraction * (hi - lo);
    }
}

/// Build the complete scene for `(task, seed)`; identical inputs give a
/// bit-identical scene.  `resolution` only sets the camera raster size.
pub fn build_scene(task: Task, seed: u64, resolution: u32) -> Result<Scene> {
    let mut rng = rng_from_seed(seed);
    let mut scene = Scene {
        bodies: Vec::new(),
        ground: None,
        camera: CameraSpec::standard(resolution, Point3::ZERO),
        countertop: None,
        fit_surface: None,
    };

    match task {
        Task::Placement => {
            let root_yaw = rng.gen_range(0.0..std::f64::consts::TAU);
            let jitter =
                Point3::new(rng.gen_range(-0.15..0.15), rng.gen_range(-0.15..0.15), 0.0);
            let ct = if rng.gen_bool(0.5) {
                let (mut body, ct) = table(&mut rng);
                body.pose = Pose::new(jitter, root_yaw);
                scene.bodies.push(body);
                ct
            } else {
                let kind =
                    if rng.gen_bool(0.5) { CabinetKind::Drawer } else { CabinetKind::Door };
                let (mut body, ct, _) = cabinet(&mut rng, kind);
                body.pose = Pose::new(jitter, root_yaw);
                // Closed or randomly opened with equal probability.
                if rng.gen_bool(0.5) {
                    let f = rng.gen_range(0.0..1.0);
                    open_joint(&mut body, f);
                }
                scene.bodies.push(body);
                ct
            };
            let ct_ref = PrimRef { body: 0, part: 0, prim: ct };
            scene.countertop = Some(ct_ref);
            let count = rng.gen_range(0..=15usize);
            scatter_clutter(&mut scene, &mut rng, ct_ref, count)?;
        }
        Task::Fitting => {
            let root_yaw = rng.gen_range(0.0..std::f64::consts::TAU);
            let kind = if rng.gen_bool(0.5) { CabinetKind::Drawer } else { CabinetKind::Door };
            let (mut body, ct, fit) = cabinet(&mut rng, kind);
            body.pose = Pose::new(Point3::ZERO, root_yaw);
            let f = match kind {
                CabinetKind::Drawer => rng.gen_range(0.4..1.0),
                CabinetKind::Door => rng.gen_range(0.6..1.0),
            };
            open_joint(&mut body, f);
            scene.bodies.push(body);
            scene.countertop = Some(PrimRef { body: 0, part: 0, prim: ct });
            scene.fit_surface = Some(PrimRef { body: 0, part: fit.0, prim: fit.1 });
        }
        Task::Pushing => {
            scene.ground = Some(GroundPlane { visible: false });
            scene.bodies.push(big_item(&mut rng));
        }
        Task::Stacking => {
            scene.ground = Some(GroundPlane { visible: true });
            let family = ItemFamily::TRAIN[rng.gen_range(0..ItemFamily::TRAIN.len())];
            let obj = ActingObject {
                family,
                base: family_prims(family, &mut rng),
                yaw: rng.gen_range(0.0..std::f64::consts::TAU),
                scale: rng.gen_range(0.85..1.2),
                center: Point3::ZERO,
            };
            let (local, com) = obj.local_prims();
            let xy = Point3::new(rng.gen_range(-0.35..0.35), rng.gen_range(-0.35..0.35), 1.0);
            match drop_settle(&local, com, xy, &[], true, 10.0) {
                Settle::Rests { center, .. } => {
                    scene.bodies.push(Body::fixed(Pose::from_pos(center), local, false));
                }
                _ => return Err(Error::Generation("stacking object failed to settle".into())),
            }
        }
    }

    let (lo, hi) = scene.aabb();
    scene.camera.target = (lo + hi) * 0.5;
    scene.validate()?;

    // Generated scenes must start interpenetration-free; a violation here is
    // a bug in the builders above, surfaced as a generation error.
    for i in 0..scene.bodies.len() {
        for j in (i + 1)..scene.bodies.len() {
            if bodies_collide(&scene.bodies[i], &scene.bodies[j], CONTACT_TOL) {
                return Err(Error::Generation(format!(
                    "generated bodies {i} and {j} interpenetrate (seed {seed})"
                )));
            }
        }
    }
    Ok(scene)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_scene() {
        for task in Task::ALL {
            let a = build_scene(task, 42, 64).unwrap();
            let b = build_scene(task, 42, 64).unwrap();
            assert_eq!(a, b, "{task} scene must be reproducible");
        }
    }

    #[test]
    fn different_seeds_differ() {
        let a = build_scene(Task::Placement, 1, 64).unwrap();
        let b = build_scene(Task::Placement, 2, 64).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn clutter_counts_span_full_range() {
        // The clutter count is drawn uniformly from 0..=15; over enough
        // seeds every count must show up (chance of any one count missing
        // across 400 draws is (15/16)^400 ≈ 6e-12).
        let mut seen = [false; 16];
        for seed in 0..400 {
            let scene = build_scene(Task::Placement, seed, 32).unwrap();
            let clutter = scene.bodies.len() - 1;
            assert!(clutter <= 15);
            seen[clutter] = true;
        }
        assert!(seen.iter().all(|&s| s), "missing clutter counts: {seen:?}");
    }

    #[test]
    fn fitting_scene_has_an_open_part() {
        for seed in 0..20 {
            let scene = build_scene(Task::Fitting, seed, 32).unwrap();
            let part = scene.bodies[0].moving.as_ref().expect("articulated root");
            assert!(part.joint.position > 0.0, "seed {seed}: part not opened");
            assert!(scene.fit_surface.is_some());
            assert!(scene.countertop.is_some());
        }
    }

    #[test]
    fn pushing_scene_is_one_body_on_hidden_ground() {
        for seed in 0..10 {
            let scene = build_scene(Task::Pushing, seed, 32).unwrap();
            assert_eq!(scene.bodies.len(), 1);
            assert!(!scene.ground.as_ref().unwrap().visible);
            // Resting on the ground plane.
            let z0 = scene
                .bodies[0]
                .world_prims()
                .iter()
                .map(|(_, _, p)| p.z_interval().0)
                .fold(f64::INFINITY, f64::min);
            assert!(z0.abs() < 1e-9, "seed {seed}: base at {z0}");
        }
    }

    #[test]
    fn stacking_scene_rests_on_visible_ground() {
        for seed in 0..10 {
            let scene = build_scene(Task::Stacking, seed, 32).unwrap();
            assert!(scene.ground.as_ref().unwrap().visible);
            let z0 = scene
                .bodies[0]
                .world_prims()
                .iter()
                .map(|(_, _, p)| p.z_interval().0)
                .fold(f64::INFINITY, f64::min);
            assert!(z0.abs() < 1e-9);
        }
    }

    #[test]
    fn generated_scenes_start_collision_free() {
        // build_scene already errors on interpenetration; this exercises it
        // across seeds and tasks.
        for task in Task::ALL {
            for seed in 100..120 {
                build_scene(task, seed, 32).unwrap();
            }
        }
    }

    #[test]
    fn placement_root_is_static_and_clutter_is_not() {
        let scene = build_scene(Task::Placement, 7, 32).unwrap();
        assert!(scene.bodies[0].is_static);
        for b in &scene.bodies[1..] {
            assert!(!b.is_static);
        }
        assert!(scene.countertop.is_some());
    }
}
