//! Collision queries and contact patches for yaw-posed boxes and cylinders.
//!
//! Because nothing ever pitches or rolls, a primitive occupies a vertical
//! extrusion of a 2-D footprint (an oriented rectangle or a circle).  Two
//! primitives interpenetrate iff their z-intervals overlap *and* their
//! footprints overlap, so every 3-D query reduces to an interval test plus
//! planar geometry.  Overlap is strict: touching at exactly zero depth is
//! contact, not collision, with [`CONTACT_TOL`] absorbing round-off.

use super::body::{Body, Primitive, Shape};

/// Penetration deeper than this counts as collision; at or below it two
/// surfaces are merely touching.
pub const CONTACT_TOL: f64 = 1e-6;

/// How far a centre of mass must sit inside its support polygon to count
/// as stable (the polygon is effectively shrunk by this much).
pub const STABILITY_MARGIN: f64 = 1e-3;

/// Number of segments used when a circular footprint needs a polygon.
const CIRCLE_SEGMENTS: usize = 32;

/// Planar footprint of a primitive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Footprint {
    Rect { cx: f64, cy: f64, hx: f64, hy: f64, yaw: f64 },
    Circle { cx: f64, cy: f64, r: f64 },
}

pub fn footprint(prim: &Primitive) -> Footprint {
    let c = prim.pose.pos;
    match prim.shape {
        Shape::Box { half } => {
            Footprint::Rect { cx: c.x, cy: c.y, hx: half.x, hy: half.y, yaw: prim.pose.yaw }
        }
        Shape::Cylinder { radius, .. } => Footprint::Circle { cx: c.x, cy: c.y, r: radius },
    }
}

/// Overlap depth of two z-intervals (negative when separated).
pub fn z_overlap(a: (f64, f64), b: (f64, f64)) -> f64 {
    a.1.min(b.1) - a.0.max(b.0)
}

fn rect_axes(yaw: f64) -> ([f64; 2], [f64; 2]) {
    let (s, c) = yaw.sin_cos();
    ([c, s], [-s, c])
}

/// Penetration depth of two footprints; positive means overlap.  Exact for
/// rect–rect (2-D separating axes) and circle–circle; for circle–rect the
/// sign is exact and the depth is the boundary distance.
pub fn xy_penetration(a: &Footprint, b: &Footprint) -> f64 {
    match (*a, *b) {
        (Footprint::Circle { cx, cy, r }, Footprint::Circle { cx: dx, cy: dy, r: s }) => {
            r + s - ((cx - dx).powi(2) + (cy - dy).powi(2)).sqrt()
        }
        (Footprint::Rect { .. }, Footprint::Rect { .. }) => rect_rect_penetration(a, b),
        (Footprint::Rect { .. }, Footprint::Circle { .. }) => rect_circle_penetration(a, b),
        (Footprint::Circle { .. }, Footprint::Rect { .. }) => rect_circle_penetration(b, a),
    }
}

fn rect_rect_penetration(a: &Footprint, b: &Footprint) -> f64 {
    let (&Footprint::Rect { cx, cy, hx, hy, yaw },
         &Footprint::Rect { cx: dx, cy: dy, hx: gx, hy: gy, yaw: byaw }) = (a, b)
    else {
        unreachable!()
    };
    let d = [dx - cx, dy - cy];
    let (au, av) = rect_axes(yaw);
    let (bu, bv) = rect_axes(byaw);
    let mut depth = f64::INFINITY;
    for axis in [au, av, bu, bv] {
        let ra = hx * (axis[0] * au[0] + axis[1] * au[1]).abs()
            + hy * (axis[0] * av[0] + axis[1] * av[1]).abs();
        let rb = gx * (axis[0] * bu[0] + axis[1] * bu[1]).abs()
            + gy * (axis[0] * bv[0] + axis[1] * bv[1]).abs();
        let dist = (d[0] * axis[0] + d[1] * axis[1]).abs();
        depth = depth.min(ra + rb - dist);
    }
    depth
}

fn rect_circle_penetration(rect: &Footprint, circle: &Footprint) -> f64 {
    let (&Footprint::Rect { cx, cy, hx, hy, yaw }, &Footprint::Circle { cx: px, cy: py, r }) =
        (rect, circle)
    else {
        unreachable!()
    };
    // Circle centre in the rect frame.
    let (s, c) = yaw.sin_cos();
    let rx = c * (px - cx) + s * (py - cy);
    let ry = -s * (px - cx) + c * (py - cy);
    let dx = rx.abs() - hx;
    let dy = ry.abs() - hy;
    if dx > 0.0 || dy > 0.0 {
        let ox = dx.max(0.0);
        let oy = dy.max(0.0);
        r - (ox * ox + oy * oy).sqrt()
    } else {
        // Centre inside: overlap is the radius plus the inner clearance.
        r + (-dx).min(-dy)
    }
}

/// Strict interpenetration test for two world-frame primitives.
pub fn prims_collide(a: &Primitive, b: &Primitive, tol: f64) -> bool {
    if z_overlap(a.z_interval(), b.z_interval()) <= tol {
        return false;
    }
    xy_penetration(&footprint(a), &footprint(b)) > tol
}

/// Any primitive of `a` against any primitive of `b`.
pub fn bodies_collide(a: &Body, b: &Body, tol: f64) -> bool {
    let pa = a.world_prims();
    let pb = b.world_prims();
    pa.iter().any(|(_, _, x)| pb.iter().any(|(_, _, y)| prims_collide(x, y, tol)))
}

/// Convex planar polygon, counter-clockwise.
pub type Polygon = Vec<[f64; 2]>;

/// Footprint as a convex polygon; circles become regular inscribed 32-gons
/// (only contact patches use polygons — boolean collision tests stay exact).
pub fn footprint_polygon(foot: &Footprint) -> Polygon {
    match *foot {
        Footprint::Rect { cx, cy, hx, hy, yaw } => {
            let (u, v) = rect_axes(yaw);
            [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)]
                .iter()
                .map(|&(sx, sy)| {
                    [
                        cx + sx * hx * u[0] + sy * hy * v[0],
                        cy + sx * hx * u[1] + sy * hy * v[1],
                    ]
                })
                .collect()
        }
        Footprint::Circle { cx, cy, r } => (0..CIRCLE_SEGMENTS)
            .map(|i| {
                let a = i as f64 / CIRCLE_SEGMENTS as f64 * std::f64::consts::TAU;
                [cx + r * a.cos(), cy + r * a.sin()]
            })
            .collect(),
    }
}

/// Sutherland–Hodgman clip of one convex polygon by another (both CCW).
pub fn clip_convex(subject: &Polygon, clip: &Polygon) -> Polygon {
    let mut out = subject.clone();
    let m = clip.len();
    for i in 0..m {
        if out.is_empty() {
            break;
        }
        let a = clip[i];
        let b = clip[(i + 1) % m];
        let input = std::mem::take(&mut out);
        let inside = |p: [f64; 2]| {
            (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]) >= 0.0
        };
        let cross = |p: [f64; 2], q: [f64; 2]| -> [f64; 2] {
            let dx = q[0] - p[0];
            let dy = q[1] - p[1];
            let num = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
            let den = (b[1] - a[1]) * dx - (b[0] - a[0]) * dy;
            let t = if den.abs() < 1e-300 { 0.0 } else { num / den };
            [p[0] + t * dx, p[1] + t * dy]
        };
        let k = input.len();
        for j in 0..k {
            let p = input[j];
            let q = input[(j + 1) % k];
            match (inside(p), inside(q)) {
                (true, true) => out.push(q),
                (true, false) => out.push(cross(p, q)),
                (false, true) => {
                    out.push(cross(p, q));
                    out.push(q);
                }
                (false, false) => {}
            }
        }
    }
    out
}

/// Signed area × 2 (positive for CCW).
fn shoelace(poly: &Polygon) -> f64 {
    let n = poly.len();
    let mut s = 0.0;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        s += a[0] * b[1] - b[0] * a[1];
    }
    s
}

pub fn polygon_area(poly: &Polygon) -> f64 {
    shoelace(poly).abs() * 0.5
}

/// Area centroid; falls back to the vertex mean for degenerate slivers.
pub fn polygon_centroid(poly: &Polygon) -> [f64; 2] {
    let n = poly.len();
    if n == 0 {
        return [0.0, 0.0];
    }
    let a2 = shoelace(poly);
    if a2.abs() < 1e-18 {
        let mut m = [0.0, 0.0];
        for p in poly {
            m[0] += p[0];
            m[1] += p[1];
        }
        return [m[0] / n as f64, m[1] / n as f64];
    }
    let mut cx = 0.0;
    let mut cy = 0.0;
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        let w = p[0] * q[1] - q[0] * p[1];
        cx += (p[0] + q[0]) * w;
        cy += (p[1] + q[1]) * w;
    }
    [cx / (3.0 * a2), cy / (3.0 * a2)]
}

/// Convex hull (Andrew's monotone chain), CCW, no duplicate endpoint.
pub fn convex_hull(points: &[[f64; 2]]) -> Polygon {
    let mut pts: Vec<[f64; 2]> = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let turn = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && turn(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && turn(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// True iff `p` lies inside the CCW convex polygon with at least `margin`
/// clearance from every edge.  Degenerate polygons support nothing.
pub fn inside_with_margin(poly: &Polygon, p: [f64; 2], margin: f64) -> bool {
    if poly.len() < 3 {
        return false;
    }
    let n = poly.len();
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let ex = b[0] - a[0];
        let ey = b[1] - a[1];
        let len = (ex * ex + ey * ey).sqrt();
        if len < 1e-15 {
            continue;
        }
        let signed = (ex * (p[1] - a[1]) - ey * (p[0] - a[0])) / len;
        if signed < margin {
            return false;
        }
    }
    true
}
