//! Quasi-static settling: straight-line descent onto the first support.
//!
//! The falling object is rigid and never rotates, so the classic
//! step-until-contact loop has a closed form: for every (object primitive,
//! scene surface) pair whose footprints overlap, the descent that brings
//! them into contact is `object_bottom - surface_top`, and the first
//! contact is the pair needing the least descent.  Computing the resting
//! height as `surface_top - bottom_offset` (all start-independent terms)
//! makes the settled pose bit-for-bit identical no matter how high the
//! drop began — the discretization artefacts a literal stepper would
//! suffer cannot appear.
//!
//! Stability is the support-polygon test: the centre of mass must project
//! inside the convex hull of all contact patches, shrunk by
//! [`STABILITY_MARGIN`](super::collide::STABILITY_MARGIN).

use super::body::{Primitive, SurfaceLabel};
use super::collide::{
    convex_hull, clip_convex, footprint, footprint_polygon, inside_with_margin, prims_collide,
    xy_penetration, Polygon, CONTACT_TOL, STABILITY_MARGIN,
};
use crate::geometry::Point3;

/// Two support planes within this of each other count as one contact event.
const CONTACT_PLANE_TOL: f64 = 1e-9;

/// One resting contact: what the object touches and where.
#[derive(Debug, Clone)]
pub struct Support {
    pub label: SurfaceLabel,
    /// Planar overlap region between the touching faces.
    pub patch: Polygon,
    pub plane_z: f64,
}

/// Outcome of a vertical drop.
#[derive(Debug, Clone)]
pub enum Settle {
    /// The start pose already interpenetrates the scene.
    StartCollision,
    /// Nothing lies underneath within the descent bound.
    OffSurface,
    Rests {
        /// Final world position of the object's reference point.
        center: Point3,
        /// Centre of mass inside the (shrunk) support hull.
        stable: bool,
        supports: Vec<Support>,
        /// Convex hull of all contact-patch vertices.
        hull: Polygon,
    },
}

impl Settle {
    pub fn is_stable_rest(&self) -> bool {
        matches!(self, Settle::Rests { stable: true, .. })
    }
}

/// Drop an object (primitives posed relative to a reference point) from
/// `start` straight down onto `surfaces`, plus the ground plane z = 0 when
/// `ground` is set.  `com_local` is the centre of mass relative to the
/// reference point; `max_descent` is the fall-through bound.
pub fn drop_settle(
    local_prims: &[Primitive],
    com_local: Point3,
    start: Point3,
    surfaces: &[(SurfaceLabel, Primitive)],
    ground: bool,
    max_descent: f64,
) -> Settle {
    let world: Vec<Primitive> = local_prims
        .iter()
        .map(|p| {
            let mut w = *p;
            w.pose.pos = start + p.pose.pos;
            w
        })
        .collect();

    for w in &world {
        for (_, s) in surfaces {
            if prims_collide(w, s, CONTACT_TOL) {
                return Settle::StartCollision;
            }
        }
        if ground && w.z_interval().0 < -CONTACT_TOL {
            return Settle::StartCollision;
        }
    }

    // Candidate supports: (resting centre height, object prim, label, surface).
    let mut candidates: Vec<(f64, usize, SurfaceLabel, Option<usize>)> = Vec::new();
    for (i, (local, w)) in local_prims.iter().zip(&world).enumerate() {
        let bottom_offset = local.z_interval().0;
        let foot = footprint(w);
        for (j, (label, s)) in surfaces.iter().enumerate() {
            let top = s.z_interval().1;
            if w.z_interval().0 < top - CONTACT_TOL {
                continue; // object part is below this surface; it descends away
            }
            if xy_penetration(&foot, &footprint(s)) <= CONTACT_TOL {
                continue;
            }
            candidates.push((top - bottom_offset, i, *label, Some(j)));
        }
        if ground {
            candidates.push((-bottom_offset, i, SurfaceLabel::Ground, None));
        }
    }

    let Some(best) = candidates.iter().map(|c| c.0).max_by(f64::total_cmp) else {
        return Settle::OffSurface;
    };
    if start.z - best > max_descent {
        return Settle::OffSurface;
    }

    let center = Point3::new(start.x, start.y, best);
    let mut supports = Vec::new();
    let mut verts: Vec<[f64; 2]> = Vec::new();
    for (z, i, label, j) in candidates {
        if (z - best).abs() > CONTACT_PLANE_TOL {
            continue;
        }
        let foot_poly = footprint_polygon(&footprint(&world[i]));
        let (patch, plane_z) = match j {
            Some(j) => {
                let s = &surfaces[j].1;
                (clip_convex(&foot_poly, &footprint_polygon(&footprint(s))), s.z_interval().1)
            }
            None => (foot_poly, 0.0),
        };
        verts.extend_from_slice(&patch);
        supports.push(Support { label, patch, plane_z });
    }
    let hull = convex_hull(&verts);
    let com = start + com_local;
    let stable = inside_with_margin(&hull, [com.x, com.y], STABILITY_MARGIN);
    Settle::Rests { center, stable, supports, hull }
}
