//! Planar zonotopes: representation, arithmetic and vertex enumeration.
//!
//! A zonotope `<c, G>` is the set `{ c + Σ β_k g_k : β_k ∈ [-1, 1] }`. Every
//! value built through this module is normalized: generators shorter than
//! [`ZERO_GENERATOR_TOL`] are dropped and parallel generators are merged, so
//! the vertex enumeration below always sees pairwise non-parallel generators.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec2 = Vector2<f64>;
pub type Mat2 = Matrix2<f64>;

/// Generators with a norm below this are treated as zero.
pub const ZERO_GENERATOR_TOL: f64 = 1e-12;
/// Two generators are parallel when `|sin(angle)|` is below this.
pub const PARALLEL_TOL: f64 = 1e-10;
/// Half-plane tolerance used by [`contains_point`].
pub const CONTAINMENT_TOL: f64 = 1e-12;

#[inline]
pub fn cross(a: &Vec2, b: &Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

#[inline]
pub fn rotation(angle: f64) -> Mat2 {
    let (s, c) = angle.sin_cos();
    Mat2::new(c, -s, s, c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ZonotopeJson", into = "ZonotopeJson")]
pub struct Zonotope {
    center: Vec2,
    generators: Vec<Vec2>,
}

/// Wire form: `{"c":[x,y],"G":[[gx,gy],...]}`.
#[derive(Serialize, Deserialize)]
struct ZonotopeJson {
    c: [f64; 2],
    #[serde(rename = "G")]
    g: Vec<[f64; 2]>,
}

impl TryFrom<ZonotopeJson> for Zonotope {
    type Error = Error;

    fn try_from(value: ZonotopeJson) -> Result<Self> {
        Zonotope::try_new(
            Vec2::new(value.c[0], value.c[1]),
            value.g.iter().map(|g| Vec2::new(g[0], g[1])).collect(),
        )
    }
}

impl From<Zonotope> for ZonotopeJson {
    fn from(z: Zonotope) -> Self {
        ZonotopeJson {
            c: [z.center.x, z.center.y],
            g: z.generators.iter().map(|g| [g.x, g.y]).collect(),
        }
    }
}

impl Zonotope {
    /// Builds a normalized zonotope. Inputs must be finite.
    pub fn new(center: Vec2, generators: Vec<Vec2>) -> Self {
        debug_assert!(center.iter().all(|v| v.is_finite()));
        debug_assert!(generators.iter().all(|g| g.iter().all(|v| v.is_finite())));
        Zonotope {
            center,
            generators: normalize_generators(generators),
        }
    }

    pub fn try_new(center: Vec2, generators: Vec<Vec2>) -> Result<Self> {
        if !center.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("zonotope center"));
        }
        if !generators.iter().all(|g| g.iter().all(|v| v.is_finite())) {
            return Err(Error::NonFinite("zonotope generators"));
        }
        Ok(Self::new(center, generators))
    }

    pub fn point(center: Vec2) -> Self {
        Zonotope {
            center,
            generators: Vec::new(),
        }
    }

    pub fn center(&self) -> Vec2 {
        self.center
    }

    pub fn generators(&self) -> &[Vec2] {
        &self.generators
    }

    pub fn order(&self) -> usize {
        self.generators.len()
    }

    pub fn translated(&self, offset: Vec2) -> Self {
        Zonotope {
            center: self.center + offset,
            generators: self.generators.clone(),
        }
    }

    pub fn with_center(&self, center: Vec2) -> Self {
        Zonotope {
            center,
            generators: self.generators.clone(),
        }
    }

    /// `max_{x ∈ Z} <x, u>`.
    pub fn support(&self, direction: &Vec2) -> f64 {
        self.center.dot(direction)
            + self
                .generators
                .iter()
                .map(|g| g.dot(direction).abs())
                .sum::<f64>()
    }

    /// Half-widths of the axis-aligned bounding box.
    pub fn half_extent(&self) -> Vec2 {
        self.generators
            .iter()
            .fold(Vec2::zeros(), |acc, g| acc + g.abs())
    }

    /// Sum of generator norms; the zonotope lies in a ball of this radius.
    pub fn radius_bound(&self) -> f64 {
        self.generators.iter().map(|g| g.norm()).sum()
    }

    /// Exact membership from the facet description: for each generator `g_i`
    /// the zonotope lies in the slab `|n_i·(x-c)| <= Σ_k |n_i·g_k|` with
    /// `n_i ⟂ g_i`. Works for any order.
    pub fn contains(&self, x: &Vec2, tol: f64) -> bool {
        let d = x - self.center;
        match self.generators.len() {
            0 => d.norm() <= tol,
            1 => {
                let g = self.generators[0];
                let len = g.norm();
                let along = d.dot(&g) / len;
                let off = cross(&g, &d).abs() / len;
                off <= tol && along.abs() <= len + tol
            }
            _ => self.generators.iter().all(|gi| {
                let n = Vec2::new(-gi.y, gi.x) / gi.norm();
                let reach: f64 = self.generators.iter().map(|gk| n.dot(gk).abs()).sum();
                n.dot(&d).abs() <= reach + tol
            }),
        }
    }
}

/// Drops near-zero generators and merges parallel ones in place, keeping the
/// position of the first occurrence. A parallel generator is added to the
/// first occurrence with its sign aligned, so lengths add.
fn normalize_generators(generators: Vec<Vec2>) -> Vec<Vec2> {
    let mut out: Vec<Vec2> = Vec::with_capacity(generators.len());
    for g in generators {
        let norm = g.norm();
        if norm < ZERO_GENERATOR_TOL {
            continue;
        }
        let mut merged = false;
        for existing in out.iter_mut() {
            let sin = cross(existing, &g) / (existing.norm() * norm);
            if sin.abs() < PARALLEL_TOL {
                let sign = if existing.dot(&g) >= 0.0 { 1.0 } else { -1.0 };
                *existing += sign * g;
                merged = true;
                break;
            }
        }
        if !merged {
            out.push(g);
        }
    }
    out.retain(|g| g.norm() >= ZERO_GENERATOR_TOL);
    out
}

pub fn minkowski_sum(a: &Zonotope, b: &Zonotope) -> Zonotope {
    let mut gens = a.generators.clone();
    gens.extend_from_slice(&b.generators);
    Zonotope::new(a.center + b.center, gens)
}

pub fn linear_map(matrix: &Mat2, z: &Zonotope) -> Zonotope {
    Zonotope::new(
        matrix * z.center,
        z.generators.iter().map(|g| matrix * g).collect(),
    )
}

/// The box `Int(lo, hi)` as a zonotope with axis-aligned generators.
pub fn interval_zonotope(lo: Vec2, hi: Vec2) -> Result<Zonotope> {
    if lo.x > hi.x || lo.y > hi.y {
        return Err(Error::InvalidInterval {
            lo: [lo.x, lo.y],
            hi: [hi.x, hi.y],
        });
    }
    let half = (hi - lo) / 2.0;
    Zonotope::try_new(
        (lo + hi) / 2.0,
        vec![Vec2::new(half.x, 0.0), Vec2::new(0.0, half.y)],
    )
}

/// Convex polygon with vertices in counterclockwise order, starting from the
/// lexicographically smallest vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexPolygon {
    pub vertices: Vec<Vec2>,
    pub source: Zonotope,
}

impl VertexPolygon {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Consecutive vertex pairs, closing back to the first vertex.
    pub fn edges(&self) -> impl Iterator<Item = (Vec2, Vec2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }
}

/// Vertices of `z` together with the sign pattern `β ∈ {-1,1}^m` (in the
/// original generator order) that produces each of them.
pub fn enumerate_vertices_with_signs(z: &Zonotope) -> Result<(VertexPolygon, Vec<Vec<i8>>)> {
    let m = z.generators.len();
    if m == 0 {
        return Err(Error::NoGenerators);
    }

    // Flip into the upper half-plane; generators on the negative x axis are
    // flipped as well so every angle lies in [0, π).
    let mut flipped: Vec<(usize, Vec2, i8, f64)> = z
        .generators
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let flip = g.y < 0.0 || (g.y == 0.0 && g.x < 0.0);
            let (g, s) = if flip { (-g, -1) } else { (*g, 1) };
            let angle = g.y.atan2(g.x);
            // atan2 of (+0, x>0) is 0; guard -0.0 artifacts.
            let angle = if angle < 0.0 { 0.0 } else { angle };
            (i, g, s, angle)
        })
        .collect();
    flipped.sort_by(|a, b| a.3.total_cmp(&b.3).then(a.0.cmp(&b.0)));

    // v_k = c + Σ_j C(k,j) g_j with C(k,j) = 1 for j >= k and -1 otherwise,
    // v_{m+k} = c - Σ_j C(k,j) g_j. Walking k upward subtracts 2 g_{k-1}.
    let total: Vec2 = flipped.iter().map(|f| f.1).sum();
    let mut vertices = Vec::with_capacity(2 * m);
    let mut signs = Vec::with_capacity(2 * m);
    let mut partial = total;
    let mut upper = Vec::with_capacity(m);
    for k in 0..m {
        if k > 0 {
            partial -= 2.0 * flipped[k - 1].1;
        }
        upper.push(partial);
    }
    for (k, p) in upper.iter().enumerate() {
        vertices.push(z.center + p);
        signs.push(row_signs(&flipped, k, 1, m));
    }
    for (k, p) in upper.iter().enumerate() {
        vertices.push(z.center - p);
        signs.push(row_signs(&flipped, k, -1, m));
    }

    let start = (0..vertices.len())
        .min_by(|&a, &b| {
            vertices[a]
                .x
                .total_cmp(&vertices[b].x)
                .then(vertices[a].y.total_cmp(&vertices[b].y))
        })
        .unwrap_or(0);
    vertices.rotate_left(start);
    signs.rotate_left(start);

    Ok((
        VertexPolygon {
            vertices,
            source: z.clone(),
        },
        signs,
    ))
}

fn row_signs(sorted: &[(usize, Vec2, i8, f64)], row: usize, outer: i8, m: usize) -> Vec<i8> {
    let mut beta = vec![0i8; m];
    for (j, (orig, _, flip, _)) in sorted.iter().enumerate() {
        let c = if j >= row { 1 } else { -1 };
        beta[*orig] = outer * c * flip;
    }
    beta
}

pub fn enumerate_vertices(z: &Zonotope) -> Result<VertexPolygon> {
    enumerate_vertices_with_signs(z).map(|(poly, _)| poly)
}

/// Inside-or-on-boundary test against a convex CCW polygon.
pub fn contains_point(poly: &VertexPolygon, x: &Vec2) -> bool {
    match poly.vertices.len() {
        0 => false,
        1 => (x - poly.vertices[0]).norm() <= CONTAINMENT_TOL,
        2 => {
            let (a, b) = (poly.vertices[0], poly.vertices[1]);
            let e = b - a;
            let len2 = e.norm_squared();
            let t = (x - a).dot(&e) / len2;
            cross(&e, &(x - a)).abs() <= CONTAINMENT_TOL * e.norm().max(1.0)
                && (-CONTAINMENT_TOL..=1.0 + CONTAINMENT_TOL).contains(&t)
        }
        _ => poly
            .edges()
            .all(|(a, b)| cross(&(b - a), &(x - a)) >= -CONTAINMENT_TOL),
    }
}
