//! Geometric signed distance between zonotopes.
//!
//! The set-to-set distance is reduced to a point-to-boundary distance: the
//! obstacle is buffered with the generators of the query zonotope, and the
//! query center is measured against the boundary segments of that buffered
//! polygon. The value is negative when the center lies inside.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::zonotope::{cross, enumerate_vertices, Vec2, Zonotope, CONTAINMENT_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Segment {
    pub a: Vec2,
    pub b: Vec2,
}

impl Segment {
    pub fn new(a: Vec2, b: Vec2) -> Self {
        Segment { a, b }
    }

    pub fn is_degenerate(&self) -> bool {
        self.a == self.b
    }

    pub fn point_at(&self, t: f64) -> Vec2 {
        self.a + (self.b - self.a) * t
    }
}

/// Distance from `x` to the segment and the clamped projection parameter.
/// A degenerate segment is treated as the point `a` with `t* = 0`.
pub fn point_segment_distance(x: &Vec2, s: &Segment) -> (f64, f64) {
    let e = s.b - s.a;
    let len2 = e.dot(&e);
    if len2 == 0.0 {
        return ((x - s.a).norm(), 0.0);
    }
    let t_hat = (x - s.a).dot(&e) / len2;
    let t = t_hat.clamp(0.0, 1.0);
    ((x - s.point_at(t)).norm(), t)
}

/// `<c_o, [G_z, G_o]>`: the obstacle grown by the shape of `z`.
pub fn buffered_obstacle(z: &Zonotope, o: &Zonotope) -> Zonotope {
    let mut gens = z.generators().to_vec();
    gens.extend_from_slice(o.generators());
    Zonotope::new(o.center(), gens)
}

/// Boundary of a buffered obstacle, prepared once and queried many times.
#[derive(Debug, Clone)]
pub struct BufferedBoundary {
    pub zonotope: Zonotope,
    pub vertices: Vec<Vec2>,
    pub segments: Vec<Segment>,
    /// Only full-dimensional polygons can contain a point in their interior.
    pub solid: bool,
}

impl BufferedBoundary {
    pub fn new(buffered: Zonotope) -> Self {
        match buffered.order() {
            0 => {
                let c = buffered.center();
                BufferedBoundary {
                    zonotope: buffered,
                    vertices: vec![c],
                    segments: vec![Segment::new(c, c)],
                    solid: false,
                }
            }
            _ => {
                let poly = enumerate_vertices(&buffered).expect("order checked above");
                let vertices = poly.vertices.clone();
                let segments = if vertices.len() == 2 {
                    vec![Segment::new(vertices[0], vertices[1])]
                } else {
                    poly.edges().map(|(a, b)| Segment::new(a, b)).collect()
                };
                BufferedBoundary {
                    zonotope: buffered,
                    vertices,
                    segments,
                    solid: poly.len() >= 3,
                }
            }
        }
    }

    pub fn from_pair(z: &Zonotope, o: &Zonotope) -> Self {
        Self::new(buffered_obstacle(z, o))
    }

    /// Whether `x` is inside or on the boundary of the buffered polygon.
    /// Point and segment boundaries enclose no interior and never contain.
    pub fn contains(&self, x: &Vec2) -> bool {
        self.solid
            && self
                .segments
                .iter()
                .all(|s| cross(&(s.b - s.a), &(x - s.a)) >= -CONTAINMENT_TOL)
    }

    /// Unsigned distance to the boundary, with the lowest-index minimizing
    /// segment and its projection parameter.
    pub fn boundary_distance(&self, x: &Vec2) -> (f64, usize, f64) {
        let mut best = (f64::INFINITY, 0, 0.0);
        for (l, s) in self.segments.iter().enumerate() {
            let (d, t) = point_segment_distance(x, s);
            if d < best.0 {
                best = (d, l, t);
            }
        }
        best
    }

    /// Signed distance from `x` to this boundary: negative when inside.
    pub fn signed(&self, x: &Vec2) -> (f64, usize, f64) {
        let (d, l, t) = self.boundary_distance(x);
        let d = if self.contains(x) { -d } else { d };
        (d, l, t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignedDistanceResult {
    /// Meters; negative means penetration.
    pub value: f64,
    pub obstacle_index: usize,
    pub witness_segment_index: usize,
    pub witness_point: Vec2,
}

/// Signed distance of the center `cz` against prepared buffered obstacles.
/// Each obstacle is signed on its own and the overall minimum is returned;
/// ties go to the lowest `(obstacle, segment)` index.
pub fn signed_distance_from_boundaries(
    cz: &Vec2,
    boundaries: &[BufferedBoundary],
) -> Result<SignedDistanceResult> {
    if boundaries.is_empty() {
        return Err(Error::NoObstacles);
    }
    let mut best: Option<SignedDistanceResult> = None;
    for (i, b) in boundaries.iter().enumerate() {
        let (value, l, t) = b.signed(cz);
        if best.is_none_or(|r| value < r.value) {
            best = Some(SignedDistanceResult {
                value,
                obstacle_index: i,
                witness_segment_index: l,
                witness_point: b.segments[l].point_at(t),
            });
        }
    }
    Ok(best.expect("non-empty"))
}

pub fn signed_distance_zonotopes(z: &Zonotope, obstacles: &[Zonotope]) -> Result<SignedDistanceResult> {
    if obstacles.is_empty() {
        return Err(Error::NoObstacles);
    }
    let boundaries: Vec<BufferedBoundary> = obstacles
        .iter()
        .map(|o| BufferedBoundary::from_pair(z, o))
        .collect();
    signed_distance_from_boundaries(&z.center(), &boundaries)
}

/// Minimum over time intervals of the signed distance between the reach-set
/// slice and the obstacle slice of the same interval. Returns the value and
/// the minimizing interval index (first on ties).
pub fn rdf(reach: &[Zonotope], obstacle: &[Zonotope]) -> Result<(f64, usize)> {
    if reach.len() != obstacle.len() {
        return Err(Error::IntervalMismatch {
            reach: reach.len(),
            obstacle: obstacle.len(),
        });
    }
    if reach.is_empty() {
        return Err(Error::EmptyInput("rdf"));
    }
    let mut best = (f64::INFINITY, 0);
    for (j, (z, o)) in reach.iter().zip(obstacle).enumerate() {
        let r = signed_distance_zonotopes(z, std::slice::from_ref(o))?;
        if r.value < best.0 {
            best = (r.value, j);
        }
    }
    Ok(best)
}
