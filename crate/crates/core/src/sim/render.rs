//! Virtual depth camera: ray-cast scans with exact normals and labels.
//!
//! A scan is what the network sees — a single-view, self-occluded point
//! cloud.  The camera orbits the scene at a fixed distance; its azimuth and
//! altitude are drawn fresh per render so the same scene yields different
//! viewpoints under different seeds.  Normals come analytically from the
//! hit primitive (no estimation) and are flipped to face the camera.
//! Per-point surface labels ride along for the task masks and metrics but
//! are never handed to the model.

use super::body::{GroundPlane, Pose, Primitive, Scene, Shape, SurfaceLabel};
use crate::error::{Error, Result};
use crate::geometry::{furthest_point_sample, Point3, PointCloud};
use crate::rng::rng_from_seed;
use rand::Rng;

/// Half-extent of the slab that stands in for a visible ground plane.
const GROUND_APRON: f64 = 6.0;

/// One rendered view, subsampled to a fixed point budget.
#[derive(Debug, Clone)]
pub struct Scan {
    /// Points with camera-facing normals.
    pub cloud: PointCloud,
    /// What each point lies on.
    pub labels: Vec<SurfaceLabel>,
    /// Set when the view produced fewer surface samples than requested and
    /// the scan was padded by cyclic repetition.
    pub padded: bool,
    /// Camera position the view was taken from.
    pub eye: Point3,
}

impl Scan {
    pub fn len(&self) -> usize {
        self.cloud.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cloud.is_empty()
    }
}

/// Ray-cast the scene from a randomly-drawn viewpoint and furthest-point
/// sample the hits down to `n` points.
pub fn render_scan(scene: &Scene, seed: u64, n: usize) -> Result<Scan> {
    if n == 0 {
        return Err(Error::invalid("scan size must be positive"));
    }
    let mut rng = rng_from_seed(seed);
    let azimuth = rng.gen_range(0.0..std::f64::consts::TAU);
    let altitude = rng.gen_range(30f64.to_radians()..=60f64.to_radians());

    let cam = &scene.camera;
    let eye = cam.target
        + Point3::new(
            altitude.cos() * azimuth.cos(),
            altitude.cos() * azimuth.sin(),
            altitude.sin(),
        ) * cam.distance;
    let forward = (cam.target - eye).normalized().expect("camera at target");
    let right = forward.cross(Point3::UP).normalized().expect("altitude below vertical");
    let up = right.cross(forward);
    let tan_half = (cam.fov_deg.to_radians() * 0.5).tan();

    let mut surfaces = scene.world_surfaces();
    if let Some(GroundPlane { visible: true }) = scene.ground {
        surfaces.push((
            SurfaceLabel::Ground,
            Primitive::new(
                Shape::Box { half: Point3::new(GROUND_APRON, GROUND_APRON, 0.05) },
                Pose::from_pos(Point3::new(0.0, 0.0, -0.05)),
            ),
        ));
    }

    let res = cam.resolution as usize;
    let mut pts: Vec<Point3> = Vec::new();
    let mut normals: Vec<Point3> = Vec::new();
    let mut labels: Vec<SurfaceLabel> = Vec::new();
    for row in 0..res {
        let v = (1.0 - (row as f64 + 0.5) / res as f64 * 2.0) * tan_half;
        for col in 0..res {
            let u = ((col as f64 + 0.5) / res as f64 * 2.0 - 1.0) * tan_half;
            let dir = (forward + right * u + up * v).normalized().expect("ray");
            let mut best: Option<(f64, Point3, SurfaceLabel)> = None;
            for (label, prim) in &surfaces {
                if let Some((t, nrm)) = ray_primitive(prim, eye, dir) {
                    if best.as_ref().map_or(true, |b| t < b.0) {
                        best = Some((t, nrm, *label));
                    }
                }
            }
            if let Some((t, mut nrm, label)) = best {
                if nrm.dot(dir) > 0.0 {
                    nrm = -nrm;
                }
                pts.push(eye + dir * t);
                normals.push(nrm);
                labels.push(label);
            }
        }
    }

    if pts.is_empty() {
        return Err(Error::Generation("scan saw no surface".into()));
    }
    let k = n.min(pts.len());
    let picked = furthest_point_sample(&pts, k, 0)?;
    let mut out_pts = Vec::with_capacity(n);
    let mut out_nrm = Vec::with_capacity(n);
    let mut out_lab = Vec::with_capacity(n);
    for pass in 0.. {
        for &i in &picked.indices {
            if out_pts.len() == n {
                break;
            }
            out_pts.push(pts[i]);
            out_nrm.push(normals[i]);
            out_lab.push(labels[i]);
        }
        if out_pts.len() == n {
            break;
        }
        debug_assert!(pass < n, "padding loop must terminate");
    }
    Ok(Scan {
        cloud: PointCloud::new(out_pts, Some(out_nrm), None)?,
        labels: out_lab,
        padded: k < n,
        eye,
    })
}

/// Nearest intersection of a world-frame ray with a primitive: returns the
/// ray parameter and the outward surface normal at the hit.
fn ray_primitive(prim: &Primitive, origin: Point3, dir: Point3) -> Option<(f64, Point3)> {
    let o = prim.pose.invert(origin);
    let d = dir.rotated_z(-prim.pose.yaw);
    let (t, local_n) = match prim.shape {
        Shape::Box { half } => ray_box(half, o, d)?,
        Shape::Cylinder { radius, half_height } => ray_cylinder(radius, half_height, o, d)?,
    };
    Some((t, local_n.rotated_z(prim.pose.yaw)))
}

fn ray_box(half: Point3, o: Point3, d: Point3) -> Option<(f64, Point3)> {
    let hs = [half.x, half.y, half.z];
    let os = [o.x, o.y, o.z];
    let ds = [d.x, d.y, d.z];
    let mut t_enter = 1e-9;
    let mut t_exit = f64::INFINITY;
    let mut axis = usize::MAX;
    let mut side = 0.0;
    for k in 0..3 {
        if ds[k].abs() < 1e-14 {
            if os[k].abs() > hs[k] {
                return None;
            }
            continue;
        }
        let inv = 1.0 / ds[k];
        let t0 = (-hs[k] - os[k]) * inv;
        let t1 = (hs[k] - os[k]) * inv;
        let (lo, hi) = if t0 < t1 { (t0, t1) } else { (t1, t0) };
        if lo > t_enter {
            t_enter = lo;
            axis = k;
            side = -ds[k].signum();
        }
        t_exit = t_exit.min(hi);
        if t_enter > t_exit {
            return None;
        }
    }
    if axis == usize::MAX {
        return None; // origin inside the box
    }
    let mut n = [0.0; 3];
    n[axis] = side;
    Some((t_enter, Point3::new(n[0], n[1], n[2])))
}

fn ray_cylinder(radius: f64, half_height: f64, o: Point3, d: Point3) -> Option<(f64, Point3)> {
    let mut best: Option<(f64, Point3)> = None;
    let mut consider = |t: f64, n: Point3| {
        if t > 1e-9 && best.map_or(true, |b| t < b.0) {
            best = Some((t, n));
        }
    };
    let a = d.x * d.x + d.y * d.y;
    if a > 1e-16 {
        let b = 2.0 * (o.x * d.x + o.y * d.y);
        let c = o.x * o.x + o.y * o.y - radius * radius;
        let disc = b * b - 4.0 * a * c;
        if disc >= 0.0 {
            let t = (-b - disc.sqrt()) / (2.0 * a);
            let z = o.z + t * d.z;
            if z.abs() <= half_height {
                consider(t, Point3::new((o.x + t * d.x) / radius, (o.y + t * d.y) / radius, 0.0));
            }
        }
    }
    if d.z.abs() > 1e-14 {
        for (cap, nz) in [(half_height, 1.0), (-half_height, -1.0)] {
            let t = (cap - o.z) / d.z;
            let x = o.x + t * d.x;
            let y = o.y + t * d.y;
            if x * x + y * y <= radius * radius {
                consider(t, Point3::new(0.0, 0.0, nz));
            }
        }
    }
    best
}
