//! Task trials: where each task applies on a scan, how the acting object
//! is posed relative to the chosen point, and the quasi-static outcome of
//! executing the interaction.
//!
//! Motion is rigid straight-line translation only.  Drops settle onto the
//! first support plane and are judged by the support polygon; pushes are
//! kinematic (the pushed object yields along the line from the contact
//! centroid through its centre of mass) with an analytic topple criterion.

use serde::{Deserialize, Serialize};

use crate::geometry::Point3;
use crate::sim::body::{Body, Primitive, Scene, SurfaceLabel};
use crate::sim::collide::{
    clip_convex, footprint, footprint_polygon, inside_with_margin, polygon_area,
    polygon_centroid, prims_collide, xy_penetration, z_overlap, CONTACT_TOL, STABILITY_MARGIN,
};
use crate::sim::drop::{drop_settle, Settle};
use crate::sim::items::ActingObject;
use crate::sim::render::Scan;
use crate::sim::Task;

/// Friction coefficient in the topple criterion μ·h_c > w/2.
pub const FRICTION: f64 = 0.5;
/// Smallest scene-object displacement that counts as "big enough motion".
pub const MIN_DISPLACEMENT: f64 = 0.03;
/// Gap the pushing offset leaves between the acting object and the point.
pub const PUSH_CLEARANCE: f64 = 0.1;
/// Cone half-angle (degrees) for both "close enough to up" normals and
/// push-direction alignment.
pub const ALIGN_DEG: f64 = 30.0;

fn align_cos() -> f64 {
    ALIGN_DEG.to_radians().cos()
}

/// Straight-line interaction motion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub direction: Point3,
    pub length: f64,
    pub step: f64,
}

impl Trajectory {
    /// Gravity descent used by the placement, fitting and stacking drops.
    pub fn gravity_drop() -> Trajectory {
        Trajectory { direction: Point3::new(0.0, 0.0, -1.0), length: 10.0, step: 1e-3 }
    }

    /// Push advance along +x: the approach clearance plus the half-width
    /// that carries the object's leading face through the target point.
    pub fn forward_push(size_x: f64) -> Trajectory {
        Trajectory {
            direction: Point3::new(1.0, 0.0, 0.0),
            length: PUSH_CLEARANCE + size_x / 2.0,
            step: 1e-3,
        }
    }
}

/// Per-point task masks over one scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskMasks {
    pub applicable: Vec<bool>,
    pub possible: Vec<bool>,
}

impl TaskMasks {
    pub fn possible_indices(&self) -> Vec<usize> {
        self.possible
            .iter()
            .enumerate()
            .filter_map(|(i, &p)| p.then_some(i))
            .collect()
    }
}

/// Where a task may be attempted (applicable) and where attempting it is
/// worth simulating (possible).  Possible is always a subset of applicable.
pub fn applicable_possible_mask(scene: &Scene, scan: &Scan, task: Task) -> TaskMasks {
    let normals = scan
        .cloud
        .normals
        .as_ref()
        .expect("trial masks need the scan's analytic normals");
    let up = align_cos();
    let n = scan.len();
    let mut applicable = vec![true; n];
    let mut possible = vec![false; n];
    for i in 0..n {
        match task {
            Task::Placement => {
                possible[i] = normals[i].z >= up;
            }
            Task::Fitting => {
                let on_countertop = match scene.countertop {
                    Some(ct) => scan.labels[i] == SurfaceLabel::Prim(ct),
                    None => false,
                };
                applicable[i] = !on_countertop;
                possible[i] = applicable[i] && normals[i].z >= up;
            }
            Task::Pushing => {
                possible[i] = true;
            }
            Task::Stacking => {
                applicable[i] = scan.labels[i].is_ground();
                possible[i] = applicable[i];
            }
        }
    }
    TaskMasks { applicable, possible }
}

/// Offset r from the chosen point to the acting object's centre, from the
/// object's axis-aligned size s:
/// placement/fitting (0, 0, s_z/2 + 0.01); pushing (−s_x/2 − 0.1, 0,
/// s_z/2 + 0.02); stacking (0, 0, s_z/2).
pub fn compute_offset(task: Task, object: &ActingObject) -> Point3 {
    let s = object.size();
    match task {
        Task::Placement | Task::Fitting => Point3::new(0.0, 0.0, s.z / 2.0 + 0.01),
        Task::Pushing => Point3::new(-s.x / 2.0 - PUSH_CLEARANCE, 0.0, s.z / 2.0 + 0.02),
        Task::Stacking => Point3::new(0.0, 0.0, s.z / 2.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailReason {
    /// Outside the possible mask — auto-failed without simulation.
    ImpossiblePoint,
    StartCollision,
    OffSurface,
    UnstableRest,
    WrongSurface,
    /// The articulated part cannot close over the payload.
    NotClosable,
    NoContact,
    SmallMotion,
    Misdirected,
    Toppled,
    /// Combined stack's centre of mass leaves the base support polygon.
    StackUnstable,
    /// The dropped object does not balance on the acting object's top.
    TopSlipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub start_collision: bool,
    /// Final reference position of whichever object the task moves.
    pub final_center: Option<Point3>,
    /// Scene-object displacement (pushing); zero elsewhere.
    pub displacement: Point3,
    pub topple: bool,
    /// Whether the articulated part closed over the payload (fitting only).
    pub drawer_closable: Option<bool>,
    /// Always zero: quasi-static motion never rotates bodies.
    pub orientation_change: f64,
}

impl Default for Diagnostics {
    fn default() -> Self {
        Diagnostics {
            start_collision: false,
            final_center: None,
            displacement: Point3::ZERO,
            topple: false,
            drawer_closable: None,
            orientation_change: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub success: bool,
    pub reason: Option<FailReason>,
    pub diagnostics: Diagnostics,
}

impl TrialOutcome {
    fn ok(diagnostics: Diagnostics) -> Self {
        TrialOutcome { success: true, reason: None, diagnostics }
    }

    fn fail(reason: FailReason, diagnostics: Diagnostics) -> Self {
        TrialOutcome { success: false, reason: Some(reason), diagnostics }
    }

    /// The auto-label for points outside the possible mask.
    pub fn impossible() -> Self {
        TrialOutcome::fail(FailReason::ImpossiblePoint, Diagnostics::default())
    }
}

/// True if the object's primitives, translated to `at`, interpenetrate any
/// scene surface (or dip below the ground plane when present).
fn placed_collides(
    local: &[Primitive],
    at: Point3,
    surfaces: &[(SurfaceLabel, Primitive)],
    ground: bool,
) -> bool {
    for l in local {
        let mut w = *l;
        w.pose.pos += at;
        if ground && w.z_interval().0 < -CONTACT_TOL {
            return true;
        }
        for (_, s) in surfaces {
            if prims_collide(&w, s, CONTACT_TOL) {
                return true;
            }
        }
    }
    false
}

pub fn run_trial(scene: &Scene, object: &ActingObject, task: Task, p: Point3) -> TrialOutcome {
    match task {
        Task::Placement => run_placement_trial(scene, object, p),
        Task::Fitting => run_fitting_trial(scene, object, p),
        Task::Pushing => run_pushing_trial(scene, object, p),
        Task::Stacking => run_stacking_trial(scene, object, p),
    }
}

/// Drop at p + r; success iff the object settles stably with every support
/// on the countertop.
pub fn run_placement_trial(scene: &Scene, object: &ActingObject, p: Point3) -> TrialOutcome {
    let start = p + compute_offset(Task::Placement, object);
    let (local, com) = object.local_prims();
    let surfaces = scene.world_surfaces();
    let mut diag = Diagnostics::default();
    match drop_settle(&local, com, start, &surfaces, scene.ground.is_some(), Trajectory::gravity_drop().length) {
        Settle::StartCollision => {
            diag.start_collision = true;
            TrialOutcome::fail(FailReason::StartCollision, diag)
        }
        Settle::OffSurface => TrialOutcome::fail(FailReason::OffSurface, diag),
        Settle::Rests { center, stable, supports, .. } => {
            diag.final_center = Some(center);
            if !stable {
                return TrialOutcome::fail(FailReason::UnstableRest, diag);
            }
            let on_countertop = match scene.countertop {
                Some(ct) => {
                    !supports.is_empty()
                        && supports.iter().all(|s| s.label == SurfaceLabel::Prim(ct))
                }
                None => false,
            };
            if on_countertop {
                TrialOutcome::ok(diag)
            } else {
                TrialOutcome::fail(FailReason::WrongSurface, diag)
            }
        }
    }
}

/// Scene primitives with the articulated joint of `body_idx` forced to `q`.
fn surfaces_with_joint_at(scene: &Scene, body_idx: usize, q: f64) -> Vec<(SurfaceLabel, Primitive)> {
    let mut tweaked = scene.clone();
    if let Some(part) = tweaked.bodies[body_idx].moving.as_mut() {
        part.joint.position = q;
    }
    tweaked.world_surfaces()
}

/// Drop at p + r onto the opened part's floor, then sweep the joint back
/// toward closed in steps of 1e-3 of its range.  A payload resting on the
/// moving part rides with it; collision of the payload against any cabinet
/// primitive — moving part or shell — blocks the close.
pub fn run_fitting_trial(scene: &Scene, object: &ActingObject, p: Point3) -> TrialOutcome {
    let start = p + compute_offset(Task::Fitting, object);
    let (local, com) = object.local_prims();
    let surfaces = scene.world_surfaces();
    let mut diag = Diagnostics::default();

    let Some(fit) = scene.fit_surface else {
        return TrialOutcome::fail(FailReason::WrongSurface, diag);
    };
    let center = match drop_settle(&local, com, start, &surfaces, scene.ground.is_some(), Trajectory::gravity_drop().length)
    {
        Settle::StartCollision => {
            diag.start_collision = true;
            return TrialOutcome::fail(FailReason::StartCollision, diag);
        }
        Settle::OffSurface => return TrialOutcome::fail(FailReason::OffSurface, diag),
        Settle::Rests { center, stable, supports, .. } => {
            diag.final_center = Some(center);
            if !stable {
                return TrialOutcome::fail(FailReason::UnstableRest, diag);
            }
            let on_fit = !supports.is_empty()
                && supports.iter().all(|s| s.label == SurfaceLabel::Prim(fit));
            if !on_fit {
                return TrialOutcome::fail(FailReason::WrongSurface, diag);
            }
            center
        }
    };

    let body_idx = fit.body as usize;
    let body = &scene.bodies[body_idx];
    let Some(part) = body.moving.as_ref() else {
        return TrialOutcome::fail(FailReason::WrongSurface, diag);
    };
    let q0 = part.joint.position;
    let (lo, _) = part.joint.limits;
    let dq = part.joint.range() * 1e-3;
    let payload_rides = fit.part == 1;
    let pose_at_q0 = body.pose.compose(part.joint.transform_at(q0));

    let payload: Vec<Primitive> = local
        .iter()
        .map(|pr| {
            let mut w = *pr;
            w.pose.pos += center;
            w
        })
        .collect();

    let steps = if dq > 0.0 { ((q0 - lo) / dq).ceil() as usize } else { 0 };
    for i in 1..=steps {
        let q = (q0 - i as f64 * dq).max(lo);
        let cabinet = surfaces_with_joint_at(scene, body_idx, q);
        let moved: Vec<Primitive> = if payload_rides {
            let delta = body
                .pose
                .compose(part.joint.transform_at(q))
                .compose(pose_at_q0.inverse());
            payload
                .iter()
                .map(|pr| Primitive::new(pr.shape, delta.compose(pr.pose)))
                .collect()
        } else {
            payload.clone()
        };
        for m in &moved {
            for (_, s) in &cabinet {
                if prims_collide(m, s, CONTACT_TOL) {
                    diag.drawer_closable = Some(false);
                    return TrialOutcome::fail(FailReason::NotClosable, diag);
                }
            }
        }
    }
    diag.drawer_closable = Some(true);
    TrialOutcome::ok(diag)
}

/// Area-weighted centroid of all contact patches between the object placed
/// at `at` and the scene, with the patch height taken at each overlap
/// interval's midpoint.
fn contact_centroid(
    local: &[Primitive],
    at: Point3,
    surfaces: &[(SurfaceLabel, Primitive)],
) -> Option<Point3> {
    let mut weighted = Point3::ZERO;
    let mut total_area = 0.0;
    let mut plain = Point3::ZERO;
    let mut count = 0usize;
    for l in local {
        let mut w = *l;
        w.pose.pos += at;
        let wz = w.z_interval();
        for (_, s) in surfaces {
            let sz = s.z_interval();
            if z_overlap(wz, sz) <= CONTACT_TOL {
                continue;
            }
            let fa = footprint(&w);
            let fb = footprint(s);
            if xy_penetration(&fa, &fb) <= CONTACT_TOL {
                continue;
            }
            let patch = clip_convex(&footprint_polygon(&fa), &footprint_polygon(&fb));
            if patch.is_empty() {
                continue;
            }
            let c2 = polygon_centroid(&patch);
            let z_mid = (wz.0.max(sz.0) + wz.1.min(sz.1)) / 2.0;
            let c = Point3::new(c2[0], c2[1], z_mid);
            let area = polygon_area(&patch).abs();
            weighted += c * area;
            total_area += area;
            plain += c;
            count += 1;
        }
    }
    if count == 0 {
        None
    } else if total_area > 1e-12 {
        Some(weighted / total_area)
    } else {
        Some(plain / count as f64)
    }
}

/// Sweep the acting object along +x until its centre reaches the point; on
/// contact the scene object yields the remaining sweep along the line from
/// the contact centroid through its centre of mass.  Topple iff
/// μ·h_c > w/2 (contact height vs. footprint extent along the push).
pub fn run_pushing_trial(scene: &Scene, object: &ActingObject, p: Point3) -> TrialOutcome {
    let start = p + compute_offset(Task::Pushing, object);
    let (local, _) = object.local_prims();
    let surfaces = scene.world_surfaces();
    let ground = scene.ground.is_some();
    let mut diag = Diagnostics::default();

    if placed_collides(&local, start, &surfaces, ground) {
        diag.start_collision = true;
        return TrialOutcome::fail(FailReason::StartCollision, diag);
    }

    let traj = Trajectory::forward_push(object.size().x);
    let n_steps = (traj.length / traj.step).ceil() as usize;
    let mut first_hit = None;
    for i in 1..=n_steps {
        let d = (i as f64 * traj.step).min(traj.length);
        if placed_collides(&local, start + traj.direction * d, &surfaces, false) {
            first_hit = Some(((i - 1) as f64 * traj.step, d));
            break;
        }
    }
    let Some((mut lo, mut hi)) = first_hit else {
        return TrialOutcome::fail(FailReason::NoContact, diag);
    };
    let d_probe = hi;
    for _ in 0..60 {
        let mid = (lo + hi) / 2.0;
        if placed_collides(&local, start + traj.direction * mid, &surfaces, false) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let d_contact = hi;
    let remaining = (traj.length - d_contact).max(0.0);

    let Some(contact) = contact_centroid(&local, start + traj.direction * d_probe, &surfaces)
    else {
        return TrialOutcome::fail(FailReason::NoContact, diag);
    };

    let body = &scene.bodies[0];
    let (_, com) = body.mass_com();
    let mut base = f64::INFINITY;
    let (mut x_lo, mut x_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (_, _, prim) in body.world_prims() {
        base = base.min(prim.z_interval().0);
        let (a, b) = prim.aabb();
        x_lo = x_lo.min(a.x);
        x_hi = x_hi.max(b.x);
    }
    let width = x_hi - x_lo;
    let h_contact = contact.z - base;
    diag.topple = FRICTION * h_contact > width / 2.0;

    let dir = (com - contact)
        .horizontal()
        .normalized()
        .unwrap_or(Point3::new(1.0, 0.0, 0.0));
    let moved = remaining * dir.x.max(0.0);
    diag.displacement = dir * moved;
    diag.final_center = Some(com + diag.displacement);

    if moved < MIN_DISPLACEMENT {
        TrialOutcome::fail(FailReason::SmallMotion, diag)
    } else if dir.x < align_cos() {
        TrialOutcome::fail(FailReason::Misdirected, diag)
    } else if diag.topple {
        TrialOutcome::fail(FailReason::Toppled, diag)
    } else {
        TrialOutcome::ok(diag)
    }
}

/// A body's primitives re-expressed about its bounding-box centre, with the
/// centre of mass in that frame and the total mass.
fn body_local(body: &Body) -> (Vec<Primitive>, Point3, f64) {
    let world: Vec<Primitive> = body.world_prims().into_iter().map(|(_, _, p)| p).collect();
    let mut lo = Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let mut hi = -lo;
    for p in &world {
        let (a, b) = p.aabb();
        lo = Point3::new(lo.x.min(a.x), lo.y.min(a.y), lo.z.min(a.z));
        hi = Point3::new(hi.x.max(b.x), hi.y.max(b.y), hi.z.max(b.z));
    }
    let c0 = (lo + hi) * 0.5;
    let local: Vec<Primitive> = world
        .into_iter()
        .map(|mut p| {
            p.pose.pos -= c0;
            p
        })
        .collect();
    let (mass, com_world) = body.mass_com();
    (local, com_world - c0, mass)
}

/// Sentinel body id labelling the acting object's primitives as drop
/// targets inside the stacking trial.
const ACTING_BODY: u32 = u32::MAX;

/// Place the acting object at p (r_z = s_z/2), lift the scene object and
/// drop it centred on p.  Success iff it lands on the acting object, backs
/// the combined stack's CoM over the acting object's ground supports, and
/// keeps its own CoM inside the mutual contact region.
pub fn run_stacking_trial(scene: &Scene, object: &ActingObject, p: Point3) -> TrialOutcome {
    let center_a = p + compute_offset(Task::Stacking, object);
    let (local_a, com_a) = object.local_prims();
    let surfaces = scene.world_surfaces();
    let mut diag = Diagnostics::default();

    if placed_collides(&local_a, center_a, &surfaces, scene.ground.is_some()) {
        diag.start_collision = true;
        return TrialOutcome::fail(FailReason::StartCollision, diag);
    }

    // The acting object's own ground supports carry the whole stack.
    let base = drop_settle(&local_a, com_a, center_a, &[], true, Trajectory::gravity_drop().length);
    let Settle::Rests { center: ca, hull: hull_a, .. } = base else {
        return TrialOutcome::fail(FailReason::OffSurface, diag);
    };

    let acting_surfaces: Vec<(SurfaceLabel, Primitive)> = local_a
        .iter()
        .enumerate()
        .map(|(i, pr)| {
            let mut w = *pr;
            w.pose.pos += ca;
            let label = SurfaceLabel::Prim(crate::sim::body::PrimRef {
                body: ACTING_BODY,
                part: 0,
                prim: i as u32,
            });
            (label, w)
        })
        .collect();
    let acting_top = acting_surfaces
        .iter()
        .map(|(_, pr)| pr.z_interval().1)
        .fold(f64::NEG_INFINITY, f64::max);

    let (local_s, com_s, mass_s) = body_local(&scene.bodies[0]);
    let mut s_half_z = 0.0f64;
    for pr in &local_s {
        s_half_z = s_half_z.max(pr.z_interval().1.abs()).max(pr.z_interval().0.abs());
    }
    let drop_from = Point3::new(p.x, p.y, acting_top + s_half_z + 0.5);

    match drop_settle(&local_s, com_s, drop_from, &acting_surfaces, true, Trajectory::gravity_drop().length) {
        Settle::Rests { center: cs, stable, supports, .. } => {
            diag.final_center = Some(cs);
            let on_acting = supports.iter().any(|s| {
                matches!(s.label, SurfaceLabel::Prim(r) if r.body == ACTING_BODY)
            });
            if !on_acting {
                return TrialOutcome::fail(FailReason::NoContact, diag);
            }
            // `stable` is the dropped object's own CoM against the mutual
            // contact region: all supports sit on the acting object here.
            if !stable {
                return TrialOutcome::fail(FailReason::TopSlipped, diag);
            }
            let mass_a = object.mass();
            let com_stack = (ca + com_a) * mass_a + (cs + com_s) * mass_s;
            let com_stack = com_stack / (mass_a + mass_s);
            if !inside_with_margin(&hull_a, [com_stack.x, com_stack.y], STABILITY_MARGIN) {
                return TrialOutcome::fail(FailReason::StackUnstable, diag);
            }
            TrialOutcome::ok(diag)
        }
        Settle::StartCollision => {
            diag.start_collision = true;
            TrialOutcome::fail(FailReason::StartCollision, diag)
        }
        Settle::OffSurface => TrialOutcome::fail(FailReason::NoContact, diag),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::body::{
        Body, CameraSpec, GroundPlane, Joint, JointKind, MovingPart, Pose, PrimRef, Shape,
    };
    use crate::sim::items::ItemFamily;
    use crate::sim::render::render_scan;
    use crate::sim::scene_gen::build_scene;

    fn box_obj(hx: f64, hy: f64, hz: f64) -> ActingObject {
        ActingObject {
            family: ItemFamily::Box,
            base: vec![Primitive::new(Shape::Box { half: Point3::new(hx, hy, hz) }, Pose::IDENTITY)],
            yaw: 0.0,
            scale: 1.0,
            center: Point3::ZERO,
        }
    }

    fn slab_scene(half: Point3, top_z: f64) -> Scene {
        let prim = Primitive::new(
            Shape::Box { half },
            Pose::from_pos(Point3::new(0.0, 0.0, top_z - half.z)),
        );
        Scene {
            bodies: vec![Body::fixed(Pose::IDENTITY, vec![prim], true)],
            ground: None,
            camera: CameraSpec::standard(32, Point3::new(0.0, 0.0, top_z / 2.0)),
            countertop: Some(PrimRef { body: 0, part: 0, prim: 0 }),
            fit_surface: None,
        }
    }

    // ---- offsets -------------------------------------------------------

    #[test]
    fn offset_hand_cases() {
        let o = box_obj(0.07, 0.05, 0.1); // s_z = 0.2
        let r = compute_offset(Task::Placement, &o);
        assert!((r - Point3::new(0.0, 0.0, 0.11)).norm() < 1e-15);

        let o = box_obj(0.15, 0.04, 0.1); // s_x = 0.3, s_z = 0.2
        let r = compute_offset(Task::Pushing, &o);
        assert!((r - Point3::new(-0.25, 0.0, 0.12)).norm() < 1e-15);

        let o = box_obj(0.03, 0.08, 0.1); // s_z = 0.2
        let r = compute_offset(Task::Stacking, &o);
        assert!((r - Point3::new(0.0, 0.0, 0.10)).norm() < 1e-15);
    }

    #[test]
    fn offsets_match_formulas_for_random_sizes() {
        // Property: for any sampled object, the offset equals the formula
        // applied to its measured size, bit for bit.
        for seed in 0..1000u64 {
            let family = ItemFamily::ALL[(seed % 6) as usize];
            let o = ActingObject::sample(family, seed);
            let s = o.size();
            assert_eq!(
                compute_offset(Task::Placement, &o),
                Point3::new(0.0, 0.0, s.z / 2.0 + 0.01)
            );
            assert_eq!(
                compute_offset(Task::Fitting, &o),
                Point3::new(0.0, 0.0, s.z / 2.0 + 0.01)
            );
            assert_eq!(
                compute_offset(Task::Pushing, &o),
                Point3::new(-s.x / 2.0 - 0.1, 0.0, s.z / 2.0 + 0.02)
            );
            assert_eq!(compute_offset(Task::Stacking, &o), Point3::new(0.0, 0.0, s.z / 2.0));
        }
    }

    #[test]
    fn push_trajectory_runs_centre_to_point() {
        let t = Trajectory::forward_push(0.3);
        assert_eq!(t.direction, Point3::new(1.0, 0.0, 0.0));
        assert!((t.length - 0.25).abs() < 1e-15);
        let g = Trajectory::gravity_drop();
        assert_eq!(g.direction.z, -1.0);
    }

    // ---- masks ---------------------------------------------------------

    #[test]
    fn pushing_masks_are_all_true() {
        let scene = build_scene(Task::Pushing, 3, 48).unwrap();
        let scan = render_scan(&scene, 11, 300).unwrap();
        let m = applicable_possible_mask(&scene, &scan, Task::Pushing);
        assert!(m.applicable.iter().all(|&a| a));
        assert!(m.possible.iter().all(|&p| p));
    }

    #[test]
    fn stacking_masks_select_exactly_ground_points() {
        let scene = build_scene(Task::Stacking, 5, 48).unwrap();
        let scan = render_scan(&scene, 12, 300).unwrap();
        let m = applicable_possible_mask(&scene, &scan, Task::Stacking);
        let mut ground_pts = 0;
        for i in 0..scan.len() {
            assert_eq!(m.applicable[i], scan.labels[i].is_ground());
            assert_eq!(m.possible[i], m.applicable[i]);
            ground_pts += scan.labels[i].is_ground() as usize;
        }
        assert!(ground_pts > 0, "stacking scan must see the ground");
    }

    #[test]
    fn placement_wall_points_applicable_but_not_possible() {
        // A plain box offers vertical walls and a horizontal top.
        let prim = Primitive::new(
            Shape::Box { half: Point3::new(0.3, 0.3, 0.3) },
            Pose::from_pos(Point3::new(0.0, 0.0, 0.3)),
        );
        let scene = Scene {
            bodies: vec![Body::fixed(Pose::IDENTITY, vec![prim], true)],
            ground: None,
            camera: CameraSpec::standard(48, Point3::new(0.0, 0.0, 0.3)),
            countertop: Some(PrimRef { body: 0, part: 0, prim: 0 }),
            fit_surface: None,
        };
        let scan = render_scan(&scene, 4, 400).unwrap();
        let m = applicable_possible_mask(&scene, &scan, Task::Placement);
        let normals = scan.cloud.normals.as_ref().unwrap();
        let mut wall = 0;
        let mut top = 0;
        for i in 0..scan.len() {
            assert!(m.applicable[i]);
            if normals[i].z.abs() < 1e-9 {
                assert!(!m.possible[i], "vertical-wall point marked possible");
                wall += 1;
            }
            if (normals[i].z - 1.0).abs() < 1e-9 {
                assert!(m.possible[i]);
                top += 1;
            }
        }
        assert!(wall > 0 && top > 0, "scan should see both walls and the top");
    }

    #[test]
    fn fitting_mask_excludes_countertop_and_possible_is_subset() {
        for seed in 0..6u64 {
            let scene = build_scene(Task::Fitting, seed, 64).unwrap();
            let scan = render_scan(&scene, seed.wrapping_add(77), 500).unwrap();
            let m = applicable_possible_mask(&scene, &scan, Task::Fitting);
            let ct = scene.countertop.unwrap();
            for i in 0..scan.len() {
                if scan.labels[i] == SurfaceLabel::Prim(ct) {
                    assert!(!m.applicable[i]);
                }
                assert!(m.applicable[i] || !m.possible[i], "possible must imply applicable");
            }
        }
    }

    #[test]
    fn possible_subset_of_applicable_across_tasks_and_seeds() {
        for task in Task::ALL {
            for seed in 0..4u64 {
                let scene = build_scene(task, seed, 48).unwrap();
                let scan = render_scan(&scene, seed ^ 0xabcd, 240).unwrap();
                let m = applicable_possible_mask(&scene, &scan, task);
                for i in 0..scan.len() {
                    assert!(!m.possible[i] || m.applicable[i]);
                }
            }
        }
    }

    // ---- placement -----------------------------------------------------

    #[test]
    fn placement_interior_point_succeeds() {
        let scene = slab_scene(Point3::new(0.6, 0.45, 0.03), 0.75);
        let obj = box_obj(0.05, 0.04, 0.06);
        let out = run_placement_trial(&scene, &obj, Point3::new(0.0, 0.0, 0.75));
        assert!(out.success, "{out:?}");
        assert_eq!(out.diagnostics.orientation_change, 0.0);
        let c = out.diagnostics.final_center.unwrap();
        assert!((c.z - 0.81).abs() < 1e-12, "rests at slab top + half height");
    }

    #[test]
    fn placement_over_the_edge_is_unstable() {
        let scene = slab_scene(Point3::new(0.6, 0.45, 0.03), 0.75);
        let obj = box_obj(0.05, 0.04, 0.06);
        let out = run_placement_trial(&scene, &obj, Point3::new(0.63, 0.0, 0.75));
        assert!(!out.success);
        assert_eq!(out.reason, Some(FailReason::UnstableRest));
    }

    #[test]
    fn placement_on_non_countertop_surface_fails() {
        let mut scene = slab_scene(Point3::new(0.6, 0.45, 0.03), 0.75);
        let shelf = Primitive::new(
            Shape::Box { half: Point3::new(0.3, 0.3, 0.02) },
            Pose::from_pos(Point3::new(1.6, 0.0, 0.28)),
        );
        scene.bodies.push(Body::fixed(Pose::IDENTITY, vec![shelf], true));
        let obj = box_obj(0.05, 0.04, 0.06);
        let out = run_placement_trial(&scene, &obj, Point3::new(1.6, 0.0, 0.3));
        assert!(!out.success);
        assert_eq!(out.reason, Some(FailReason::WrongSurface));
    }

    #[test]
    fn placement_start_collision_flagged() {
        let scene = slab_scene(Point3::new(0.6, 0.45, 0.03), 0.75);
        let obj = box_obj(0.05, 0.04, 0.06);
        // Point buried inside the slab: the posed object overlaps it.
        let out = run_placement_trial(&scene, &obj, Point3::new(0.0, 0.0, 0.70));
        assert!(!out.success);
        assert_eq!(out.reason, Some(FailReason::StartCollision));
        assert!(out.diagnostics.start_collision);
    }

    #[test]
    fn placement_off_surface_without_ground() {
        let scene = slab_scene(Point3::new(0.6, 0.45, 0.03), 0.75);
        let obj = box_obj(0.05, 0.04, 0.06);
        let out = run_placement_trial(&scene, &obj, Point3::new(3.0, 0.0, 0.75));
        assert!(!out.success);
        assert_eq!(out.reason, Some(FailReason::OffSurface));
    }

    // ---- fitting -------------------------------------------------------

    /// Hand-built drawer cabinet: interior headroom 0.21 above the drawer
    /// floor, drawer opened all the way out.
    fn drawer_scene() -> Scene {
        let dx = 0.25;
        let wy = 0.35;
        let h = 0.7;
        let t = 0.02;
        let shelf_top = 0.45;
        let wall_z = (h - 2.0 * t) / 2.0;
        let mut main = vec![
            Primitive::new(Shape::Box { half: Point3::new(dx, wy, t / 2.0) }, Pose::from_pos(Point3::new(0.0, 0.0, t / 2.0))),
            Primitive::new(Shape::Box { half: Point3::new(dx, wy, t / 2.0) }, Pose::from_pos(Point3::new(0.0, 0.0, h - t / 2.0))),
        ];
        for sy in [-1.0, 1.0] {
            main.push(Primitive::new(
                Shape::Box { half: Point3::new(dx - t / 2.0, t / 2.0, wall_z) },
                Pose::from_pos(Point3::new(-t / 2.0, sy * (wy - t / 2.0), h / 2.0)),
            ));
        }
        main.push(Primitive::new(
            Shape::Box { half: Point3::new(t / 2.0, wy - t, wall_z) },
            Pose::from_pos(Point3::new(-(dx - t / 2.0), 0.0, h / 2.0)),
        ));
        main.push(Primitive::new(
            Shape::Box { half: Point3::new(dx - t / 2.0, wy - t, t / 2.0) },
            Pose::from_pos(Point3::new(t / 2.0, 0.0, shelf_top - t / 2.0)),
        ));
        let ddx = dx - t / 2.0 - 0.005;
        let dwy = wy - t - 0.005;
        let wall_h = 0.12;
        let x0 = t / 2.0;
        let zc = shelf_top + t + wall_h / 2.0;
        let mut prims = vec![Primitive::new(
            Shape::Box { half: Point3::new(ddx, dwy, t / 2.0) },
            Pose::from_pos(Point3::new(x0, 0.0, shelf_top + t / 2.0)),
        )];
        for sx in [1.0, -1.0] {
            prims.push(Primitive::new(
                Shape::Box { half: Point3::new(t / 2.0, dwy, wall_h / 2.0) },
                Pose::from_pos(Point3::new(x0 + sx * (ddx - t / 2.0), 0.0, zc)),
            ));
        }
        for sy in [-1.0, 1.0] {
            prims.push(Primitive::new(
                Shape::Box { half: Point3::new(ddx - t, t / 2.0, wall_h / 2.0) },
                Pose::from_pos(Point3::new(x0, sy * (dwy - t / 2.0), zc)),
            ));
        }
        let joint = Joint {
            kind: JointKind::Prismatic { axis: Point3::new(1.0, 0.0, 0.0) },
            limits: (0.0, 0.3),
            position: 0.3,
        };
        let body = Body {
            pose: Pose::IDENTITY,
            is_static: true,
            main,
            moving: Some(MovingPart { prims, joint }),
        };
        Scene {
            bodies: vec![body],
            ground: None,
            camera: CameraSpec::standard(32, Point3::new(0.0, 0.0, 0.35)),
            countertop: Some(PrimRef { body: 0, part: 0, prim: 1 }),
            fit_surface: Some(PrimRef { body: 0, part: 1, prim: 0 }),
        }
    }

    #[test]
    fn fitting_short_box_closes() {
        let scene = drawer_scene();
        // Drawer floor top = 0.47; point inside the pulled-out drawer.
        let p = Point3::new(0.4, 0.0, 0.47);
        let out = run_fitting_trial(&scene, &box_obj(0.05, 0.05, 0.05), p);
        assert!(out.success, "{out:?}");
        assert_eq!(out.diagnostics.drawer_closable, Some(true));
    }

    #[test]
    fn fitting_box_taller_than_cavity_blocks_the_drawer() {
        let scene = drawer_scene();
        let p = Point3::new(0.4, 0.0, 0.47);
        // 0.30 tall vs 0.21 of headroom under the countertop.
        let out = run_fitting_trial(&scene, &box_obj(0.05, 0.05, 0.15), p);
        assert!(!out.success);
        assert_eq!(out.reason, Some(FailReason::NotClosable));
        assert_eq!(out.diagnostics.drawer_closable, Some(false));
    }

    #[test]
    fn fitting_point_on_countertop_is_wrong_surface() {
        let scene = drawer_scene();
        let out = run_fitting_trial(&scene, &box_obj(0.05, 0.05, 0.05), Point3::new(0.0, 0.0, 0.7));
        assert!(!out.success);
        assert_eq!(out.reason, Some(FailReason::WrongSurface));
    }

    /// Hand-built door cabinet, door swung open 100°.
    fn door_scene() -> Scene {
        let dx = 0.25;
        let wy = 0.35;
        let h = 0.7;
        let t = 0.02;
        let wall_z = (h - 2.0 * t) / 2.0;
        let mut main = vec![
            Primitive::new(Shape::Box { half: Point3::new(dx, wy, t / 2.0) }, Pose::from_pos(Point3::new(0.0, 0.0, t / 2.0))),
            Primitive::new(Shape::Box { half: Point3::new(dx, wy, t / 2.0) }, Pose::from_pos(Point3::new(0.0, 0.0, h - t / 2.0))),
        ];
        for sy in [-1.0, 1.0] {
            main.push(Primitive::new(
                Shape::Box { half: Point3::new(dx - t / 2.0, t / 2.0, wall_z) },
                Pose::from_pos(Point3::new(-t / 2.0, sy * (wy - t / 2.0), h / 2.0)),
            ));
        }
        main.push(Primitive::new(
            Shape::Box { half: Point3::new(t / 2.0, wy - t, wall_z) },
            Pose::from_pos(Point3::new(-(dx - t / 2.0), 0.0, h / 2.0)),
        ));
        let prims = vec![Primitive::new(
            Shape::Box { half: Point3::new(t / 2.0, wy, wall_z) },
            Pose::from_pos(Point3::new(dx - t / 2.0, 0.0, h / 2.0)),
        )];
        let joint = Joint {
            kind: JointKind::Revolute { anchor: Point3::new(dx - t / 2.0, wy, 0.0) },
            limits: (0.0, 110f64.to_radians()),
            position: 100f64.to_radians(),
        };
        let body = Body {
            pose: Pose::IDENTITY,
            is_static: true,
            main,
            moving: Some(MovingPart { prims, joint }),
        };
        Scene {
            bodies: vec![body],
            ground: None,
            camera: CameraSpec::standard(32, Point3::new(0.0, 0.0, 0.35)),
            countertop: Some(PrimRef { body: 0, part: 0, prim: 1 }),
            fit_surface: Some(PrimRef { body: 0, part: 0, prim: 0 }),
        }
    }

    #[test]
    fn fitting_small_box_inside_door_cabinet_closes() {
        let scene = door_scene();
        // Cavity floor top = 0.02.
        let out = run_fitting_trial(&scene, &box_obj(0.05, 0.05, 0.05), Point3::new(0.05, 0.0, 0.02));
        assert!(out.success, "{out:?}");
        assert_eq!(out.diagnostics.drawer_closable, Some(true));
    }

    #[test]
    fn fitting_box_protruding_past_the_door_plane_blocks() {
        let scene = door_scene();
        // Long box sticking out past the front: swings into the door.
        let out = run_fitting_trial(&scene, &box_obj(0.2, 0.05, 0.05), Point3::new(0.1, 0.0, 0.02));
        assert!(!out.success);
        assert_eq!(out.reason, Some(FailReason::NotClosable));
    }

    // ---- pushing -------------------------------------------------------

    fn push_scene(prim: Primitive) -> Scene {
        Scene {
            bodies: vec![Body::fixed(Pose::IDENTITY, vec![prim], false)],
            ground: Some(GroundPlane { visible: false }),
            camera: CameraSpec::standard(32, Point3::new(0.0, 0.0, 0.3)),
            countertop: None,
            fit_surface: None,
        }
    }

    #[test]
    fn pushing_high_contact_on_thin_box_topples() {
        // Footprint width 0.1 along the push, contact centred at height
        // 0.11: μ·h_c = 0.055 > w/2 = 0.05.
        let scene = push_scene(Primitive::new(
            Shape::Box { half: Point3::new(0.05, 0.05, 0.5) },
            Pose::from_pos(Point3::new(0.0, 0.0, 0.5)),
        ));
        let obj = box_obj(0.05, 0.05, 0.005);
        let out = run_pushing_trial(&scene, &obj, Point3::new(-0.05, 0.0, 0.085));
        assert!(!out.success);
        assert!(out.diagnostics.topple, "{out:?}");
        assert_eq!(out.reason, Some(FailReason::Toppled));
    }

    #[test]
    fn pushing_low_contact_on_wide_box_succeeds() {
        let scene = push_scene(Primitive::new(
            Shape::Box { half: Point3::new(0.3, 0.3, 0.15) },
            Pose::from_pos(Point3::new(0.0, 0.0, 0.15)),
        ));
        let obj = box_obj(0.05, 0.05, 0.04);
        let out = run_pushing_trial(&scene, &obj, Point3::new(-0.3, 0.0, 0.05));
        assert!(out.success, "{out:?}");
        assert!(!out.diagnostics.topple);
        assert!(out.diagnostics.displacement.x >= MIN_DISPLACEMENT);
    }

    #[test]
    fn pushing_over_the_top_never_contacts() {
        let scene = push_scene(Primitive::new(
            Shape::Box { half: Point3::new(0.3, 0.3, 0.15) },
            Pose::from_pos(Point3::new(0.0, 0.0, 0.15)),
        ));
        let obj = box_obj(0.05, 0.05, 0.04);
        let out = run_pushing_trial(&scene, &obj, Point3::new(0.0, 0.0, 0.3));
        assert!(!out.success);
        assert_eq!(out.reason, Some(FailReason::NoContact));
    }

    #[test]
    fn pushing_far_side_point_start_collides() {
        let scene = push_scene(Primitive::new(
            Shape::Box { half: Point3::new(0.3, 0.3, 0.15) },
            Pose::from_pos(Point3::new(0.0, 0.0, 0.15)),
        ));
        let obj = box_obj(0.05, 0.05, 0.04);
        let out = run_pushing_trial(&scene, &obj, Point3::new(0.3, 0.0, 0.05));
        assert!(!out.success);
        assert_eq!(out.reason, Some(FailReason::StartCollision));
        assert!(out.diagnostics.start_collision);
    }

    #[test]
    fn pushing_side_band_contact_is_misdirected() {
        let scene = push_scene(Primitive::new(
            Shape::Box { half: Point3::new(0.3, 0.3, 0.15) },
            Pose::from_pos(Point3::new(0.0, 0.0, 0.15)),
        ));
        let obj = box_obj(0.05, 0.05, 0.04);
        // Contact near the side edge: the CoM line leaves the 30° cone.
        let out = run_pushing_trial(&scene, &obj, Point3::new(-0.25, -0.3, 0.05));
        assert!(!out.success);
        assert_eq!(out.reason, Some(FailReason::Misdirected));
    }

    #[test]
    fn pushing_barely_reaching_contact_is_small_motion() {
        let scene = push_scene(Primitive::new(
            Shape::Box { half: Point3::new(0.3, 0.3, 0.15) },
            Pose::from_pos(Point3::new(0.0, 0.0, 0.15)),
        ));
        let obj = box_obj(0.05, 0.05, 0.04);
        let out = run_pushing_trial(&scene, &obj, Point3::new(-0.33, 0.0, 0.05));
        assert!(!out.success);
        assert_eq!(out.reason, Some(FailReason::SmallMotion));
        assert!(out.diagnostics.displacement.norm() < MIN_DISPLACEMENT);
    }

    // ---- stacking ------------------------------------------------------

    #[test]
    fn stacking_centred_drop_succeeds() {
        let item = Primitive::new(
            Shape::Box { half: Point3::new(0.04, 0.04, 0.04) },
            Pose::from_pos(Point3::new(0.0, 0.0, 0.04)),
        );
        let scene = Scene {
            bodies: vec![Body::fixed(Pose::from_pos(Point3::new(0.3, 0.2, 0.0)), vec![item], false)],
            ground: Some(GroundPlane { visible: true }),
            camera: CameraSpec::standard(32, Point3::ZERO),
            countertop: None,
            fit_surface: None,
        };
        let obj = box_obj(0.08, 0.08, 0.05);
        // Open ground away from where the item currently rests.
        let out = run_stacking_trial(&scene, &obj, Point3::new(-0.3, -0.2, 0.0));
        assert!(out.success, "{out:?}");
        let c = out.diagnostics.final_center.unwrap();
        // Acting object is 0.1 tall, the item 0.08: its centre rests at 0.14.
        assert!((c.z - 0.14).abs() < 1e-12, "{c:?}");
        assert!((c.x + 0.3).abs() < 1e-12 && (c.y + 0.2).abs() < 1e-12);
    }

    #[test]
    fn stacking_collision_with_resting_item_flags_start() {
        let item = Primitive::new(
            Shape::Box { half: Point3::new(0.04, 0.04, 0.04) },
            Pose::from_pos(Point3::new(0.0, 0.0, 0.04)),
        );
        let scene = Scene {
            bodies: vec![Body::fixed(Pose::IDENTITY, vec![item], false)],
            ground: Some(GroundPlane { visible: true }),
            camera: CameraSpec::standard(32, Point3::ZERO),
            countertop: None,
            fit_surface: None,
        };
        let obj = box_obj(0.08, 0.08, 0.05);
        // p on the item's own footprint: the acting object overlaps it.
        let out = run_stacking_trial(&scene, &obj, Point3::new(0.0, 0.0, 0.0));
        assert!(!out.success);
        assert_eq!(out.reason, Some(FailReason::StartCollision));
    }

    #[test]
    fn stacking_top_heavy_offset_slips() {
        // Base plate with an off-centre column: the dropped body's CoM sits
        // 4 mm off its bounding-box centre, past the 3 mm acceptance band
        // of the 8 mm-wide acting object.
        let plate = Primitive::new(
            Shape::Box { half: Point3::new(0.05, 0.05, 0.01) },
            Pose::from_pos(Point3::new(0.0, 0.0, 0.01)),
        );
        let column = Primitive::new(
            Shape::Box { half: Point3::new(0.01, 0.01, 0.05) },
            Pose::from_pos(Point3::new(0.048, 0.0, 0.07)),
        );
        let scene = Scene {
            bodies: vec![Body::fixed(Pose::from_pos(Point3::new(0.5, 0.5, 0.0)), vec![plate, column], false)],
            ground: Some(GroundPlane { visible: true }),
            camera: CameraSpec::standard(32, Point3::ZERO),
            countertop: None,
            fit_surface: None,
        };
        let obj = box_obj(0.004, 0.05, 0.1);
        let out = run_stacking_trial(&scene, &obj, Point3::new(0.0, 0.0, 0.0));
        assert!(!out.success, "{out:?}");
        assert_eq!(out.reason, Some(FailReason::TopSlipped));
    }

    // ---- dispatch ------------------------------------------------------

    #[test]
    fn impossible_marker_is_a_failure_without_simulation() {
        let out = TrialOutcome::impossible();
        assert!(!out.success);
        assert_eq!(out.reason, Some(FailReason::ImpossiblePoint));
        assert!(out.diagnostics.final_center.is_none());
    }

    #[test]
    fn dispatcher_routes_by_task() {
        let scene = slab_scene(Point3::new(0.6, 0.45, 0.03), 0.75);
        let obj = box_obj(0.05, 0.04, 0.06);
        let a = run_trial(&scene, &obj, Task::Placement, Point3::new(0.0, 0.0, 0.75));
        let b = run_placement_trial(&scene, &obj, Point3::new(0.0, 0.0, 0.75));
        assert_eq!(a, b);
    }
}
