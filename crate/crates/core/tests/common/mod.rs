//! Brute-force geometry used as independent reference values.
#![allow(dead_code)]

use rand::Rng;
use zonoplan::{Vec2, Zonotope};

pub fn random_zonotope<R: Rng>(rng: &mut R, m: usize, center_range: f64, gen_len: f64) -> Zonotope {
    let c = Vec2::new(
        rng.gen_range(-center_range..=center_range),
        rng.gen_range(-center_range..=center_range),
    );
    let gens = (0..m)
        .map(|_| {
            let a = rng.gen_range(0.0..std::f64::consts::TAU);
            let l = rng.gen_range(0.05..=gen_len);
            Vec2::new(l * a.cos(), l * a.sin())
        })
        .collect();
    Zonotope::new(c, gens)
}

/// All `2^m` points `c + Σ σ_i g_i`.
pub fn corners(z: &Zonotope) -> Vec<Vec2> {
    let g = z.generators();
    (0..1usize << g.len())
        .map(|mask| {
            g.iter().enumerate().fold(z.center(), |acc, (i, gi)| {
                if mask >> i & 1 == 1 {
                    acc + gi
                } else {
                    acc - gi
                }
            })
        })
        .collect()
}

fn cross3(o: Vec2, a: Vec2, b: Vec2) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Monotone-chain hull: counter-clockwise, starting at the lexicographically
/// smallest point, collinear points dropped.
pub fn convex_hull(mut pts: Vec<Vec2>) -> Vec<Vec2> {
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<Vec2> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross3(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Vec2> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross3(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

pub fn hull_of(z: &Zonotope) -> Vec<Vec2> {
    convex_hull(corners(z))
}

/// Same vertex sequence up to rotation, within `tol` per coordinate.
pub fn same_cycle(a: &[Vec2], b: &[Vec2], tol: f64) -> bool {
    if a.len() != b.len() {
        return false;
    }
    if a.is_empty() {
        return true;
    }
    (0..b.len()).any(|shift| {
        a.iter()
            .enumerate()
            .all(|(i, p)| (p - b[(i + shift) % b.len()]).amax() <= tol)
    })
}

pub fn point_segment(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let e = b - a;
    let l2 = e.norm_squared();
    if l2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&e) / l2).clamp(0.0, 1.0);
    (p - (a + e * t)).norm()
}

fn segments_cross(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    let d1 = cross3(a, b, c);
    let d2 = cross3(a, b, d);
    let d3 = cross3(c, d, a);
    let d4 = cross3(c, d, b);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

pub fn segment_segment(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> f64 {
    if segments_cross(a, b, c, d) {
        return 0.0;
    }
    point_segment(a, c, d)
        .min(point_segment(b, c, d))
        .min(point_segment(c, a, b))
        .min(point_segment(d, a, b))
}

fn edges(poly: &[Vec2]) -> Vec<(Vec2, Vec2)> {
    if poly.len() == 1 {
        return vec![(poly[0], poly[0])];
    }
    let n = poly.len();
    (0..n).map(|i| (poly[i], poly[(i + 1) % n])).collect()
}

fn support(pts: &[Vec2], n: Vec2) -> f64 {
    pts.iter().map(|p| p.dot(&n)).fold(f64::NEG_INFINITY, f64::max)
}

/// Unit normals of every edge of both polygons, both orientations.
fn axes(a: &[Vec2], b: &[Vec2]) -> Vec<Vec2> {
    let mut out = Vec::new();
    for poly in [a, b] {
        for (p, q) in edges(poly) {
            let e = q - p;
            if e.norm() > 0.0 {
                let n = Vec2::new(-e.y, e.x).normalize();
                out.push(n);
                out.push(-n);
            }
        }
    }
    out
}

/// Smallest translation that separates the polygons (0 when already apart).
pub fn penetration_depth(a: &[Vec2], b: &[Vec2]) -> f64 {
    axes(a, b)
        .into_iter()
        .map(|n| support(a, n) + support(b, -n))
        .fold(f64::INFINITY, f64::min)
        .max(0.0)
}

pub fn polygons_intersect(a: &[Vec2], b: &[Vec2]) -> bool {
    axes(a, b)
        .into_iter()
        .all(|n| support(a, n) + support(b, -n) >= 0.0)
}

/// Closest distance between polygon boundaries.
pub fn boundary_distance(a: &[Vec2], b: &[Vec2]) -> f64 {
    let mut best = f64::INFINITY;
    for (p, q) in edges(a) {
        for (r, s) in edges(b) {
            best = best.min(segment_segment(p, q, r, s));
        }
    }
    best
}

/// Signed distance between two zonotopes from their corner hulls.
pub fn signed_distance_oracle(z: &Zonotope, o: &Zonotope) -> f64 {
    let a = hull_of(z);
    let b = hull_of(o);
    if polygons_intersect(&a, &b) {
        -penetration_depth(&a, &b)
    } else {
        boundary_distance(&a, &b)
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}
