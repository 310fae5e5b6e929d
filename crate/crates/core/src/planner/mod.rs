//! Per-iteration trajectory optimization over all parameter bins.
//!
//! Each planning iteration builds, for every speed-valid bin, one constraint
//! per (time interval, nearby obstacle) pair, then minimizes the distance of
//! the predicted end-of-maneuver position to the waypoint subject to every
//! constraint staying above a small margin. Two constraint backends share
//! the solver: the exact ReLU signed-distance graph (`sdf`) and a
//! polytope face-offset encoding (`halfspace`) used as the comparison
//! baseline. A returned plan is always re-checked with the geometric signed
//! distance before it is reported feasible.

pub mod hlp;
pub mod solver;

use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distance::{buffered_obstacle, signed_distance_zonotopes, BufferedBoundary};
use crate::error::{Error, Result};
use crate::frs::{CenterMap, FrsFile, InitialState, ObstaclePrediction, ReachableSet, Timing};
use crate::relu::{ParamInput, SdfGraph};
use crate::zonotope::{rotation, Vec2, Zonotope};

pub use hlp::{high_level_planner, Road, Waypoint};
pub use solver::{solve_bin, BinObjective, SolveOutcome, SolveStats, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Sdf,
    Halfspace,
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sdf" => Ok(Backend::Sdf),
            "halfspace" => Ok(Backend::Halfspace),
            other => Err(Error::Config(format!(
                "unknown backend '{other}' (expected sdf or halfspace)"
            ))),
        }
    }
}

impl std::fmt::Display for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Backend::Sdf => "sdf",
            Backend::Halfspace => "halfspace",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlannerConfig {
    pub backend: Backend,
    pub max_iter: usize,
    /// Wall-clock budget of one planning call, seconds.
    pub time_budget: f64,
    /// Constraints must stay at or above this signed distance (m).
    pub margin: f64,
    pub kkt_tol: f64,
    pub samples_per_bin: usize,
    /// Waypoint stand-off behind the nearest obstacle in the chosen lane (m).
    pub d_safe: f64,
    /// Farthest waypoint distance ahead of the ego (m).
    pub d_wp_max: f64,
    /// Clearance kept between the footprint and the road edge when clipping
    /// lateral targets (m).
    pub edge_margin: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            backend: Backend::Sdf,
            max_iter: 15,
            time_budget: 0.35,
            margin: 0.01,
            kkt_tol: 1e-6,
            samples_per_bin: 10,
            d_safe: 20.0,
            d_wp_max: 60.0,
            edge_margin: 0.05,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        if !(self.time_budget > 0.0) {
            return Err(Error::Config("time budget must be positive".into()));
        }
        if !(self.margin > 0.0) {
            return Err(Error::Config("constraint margin must be positive".into()));
        }
        if self.samples_per_bin == 0 {
            return Err(Error::Config("samples_per_bin must be at least 1".into()));
        }
        Ok(())
    }
}

/// Distance from the predicted end-of-maneuver position to the waypoint.
#[derive(Debug, Clone, Copy)]
pub struct CostModel {
    pub z0: InitialState,
    pub t_m: f64,
    pub waypoint: Vec2,
}

impl CostModel {
    pub fn end_position(&self, p: &Vec2) -> Vec2 {
        let body = Vec2::new(0.5 * self.t_m * (self.z0.v + p.x), p.y);
        self.z0.pos() + rotation(self.z0.h) * body
    }

    pub fn eval(&self, p: &Vec2) -> (f64, Vec2) {
        let d = self.end_position(p) - self.waypoint;
        let n = d.norm();
        if n < 1e-12 {
            return (n, Vec2::zeros());
        }
        let dir = rotation(self.z0.h).transpose() * (d / n);
        (n, Vec2::new(0.5 * self.t_m * dir.x, dir.y))
    }
}

#[derive(Debug, Clone)]
enum Encoding {
    Sdf(SdfGraph),
    Halfspace {
        boundary: BufferedBoundary,
        normals: Vec<Vec2>,
        offsets: Vec<f64>,
    },
}

/// One `(interval, obstacle)` constraint of a bin.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub interval: usize,
    pub obstacle: usize,
    pub map: CenterMap,
    encoding: Encoding,
}

impl Constraint {
    fn new(interval: usize, obstacle: usize, map: CenterMap, boundary: BufferedBoundary, backend: Backend) -> Result<Self> {
        let encoding = match backend {
            Backend::Sdf => Encoding::Sdf(SdfGraph::from_boundaries(vec![boundary])?),
            Backend::Halfspace => {
                let (normals, offsets) = if boundary.solid {
                    boundary
                        .segments
                        .iter()
                        .map(|s| {
                            let e = s.b - s.a;
                            let n = Vec2::new(e.y, -e.x) / e.norm();
                            (n, n.dot(&s.a))
                        })
                        .unzip()
                } else {
                    (Vec::new(), Vec::new())
                };
                Encoding::Halfspace {
                    boundary,
                    normals,
                    offsets,
                }
            }
        };
        Ok(Constraint {
            interval,
            obstacle,
            map,
            encoding,
        })
    }

    pub fn boundary(&self) -> &BufferedBoundary {
        match &self.encoding {
            Encoding::Sdf(g) => &g.boundaries()[0],
            Encoding::Halfspace { boundary, .. } => boundary,
        }
    }

    /// The ReLU graph of an sdf-backend constraint.
    pub fn graph(&self) -> Option<&SdfGraph> {
        match &self.encoding {
            Encoding::Sdf(g) => Some(g),
            Encoding::Halfspace { .. } => None,
        }
    }

    pub fn center(&self, p: &Vec2) -> Vec2 {
        self.map.base + self.map.jac * p
    }

    /// Backend value; positive means the reach slice misses the obstacle.
    pub fn value(&self, p: &Vec2) -> f64 {
        let cz = self.center(p);
        match &self.encoding {
            Encoding::Sdf(g) => g.forward(&cz),
            Encoding::Halfspace { .. } => self.halfspace(&cz).0,
        }
    }

    pub fn value_and_gradient(&self, p: &Vec2) -> (f64, Vec2) {
        match &self.encoding {
            Encoding::Sdf(g) => g.forward_backward(&ParamInput {
                base: self.map.base,
                jac: self.map.jac,
                p: *p,
            }),
            Encoding::Halfspace { .. } => {
                let (v, n) = self.halfspace(&self.center(p));
                (v, self.map.jac.transpose() * n)
            }
        }
    }

    /// Largest face offset and its outward normal.
    fn halfspace(&self, cz: &Vec2) -> (f64, Vec2) {
        let Encoding::Halfspace {
            boundary,
            normals,
            offsets,
        } = &self.encoding
        else {
            unreachable!("halfspace evaluation on a graph constraint")
        };
        if normals.is_empty() {
            let (d, l, t) = boundary.boundary_distance(cz);
            let w = boundary.segments[l].point_at(t);
            let n = if d > 0.0 { (cz - w) / d } else { Vec2::zeros() };
            return (d, n);
        }
        let mut best = (f64::NEG_INFINITY, Vec2::zeros());
        for (n, o) in normals.iter().zip(offsets) {
            let v = n.dot(cz) - o;
            if v > best.0 {
                best = (v, *n);
            }
        }
        best
    }
}

/// Face-offset non-intersection value of `z` against `o`: positive iff the
/// two zonotopes are disjoint.
pub fn halfspace_value(z: &Zonotope, o: &Zonotope) -> f64 {
    let c = Constraint::new(
        0,
        0,
        CenterMap {
            base: z.center(),
            jac: crate::zonotope::Mat2::zeros(),
        },
        BufferedBoundary::from_pair(z, o),
        Backend::Halfspace,
    )
    .expect("halfspace encoding never fails");
    c.value(&Vec2::zeros())
}

/// Constraints and bounds of one bin for the current iteration.
#[derive(Debug, Clone)]
pub struct BinProblem {
    pub bin: usize,
    pub lo: Vec2,
    pub hi: Vec2,
    pub constraints: Vec<Constraint>,
    pub cost: CostModel,
}

impl BinObjective for BinProblem {
    fn n_constraints(&self) -> usize {
        self.constraints.len()
    }

    fn cost(&self, p: &Vec2) -> (f64, Vec2) {
        self.cost.eval(p)
    }

    fn constraint_values(&self, p: &Vec2, out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(&self.constraints) {
            *o = c.value(p);
        }
    }

    fn constraint_gradients(&self, p: &Vec2, values: &mut [f64], grads: &mut [Vec2]) {
        for ((v, g), c) in values.iter_mut().zip(grads.iter_mut()).zip(&self.constraints) {
            (*v, *g) = c.value_and_gradient(p);
        }
    }
}

impl BinProblem {
    pub fn center(&self) -> Vec2 {
        (self.lo + self.hi) / 2.0
    }

    /// `n` points on a Latin diagonal of the bin box.
    pub fn samples(&self, n: usize) -> Vec<Vec2> {
        let denom = (n.max(2) - 1) as f64;
        let stride = if n.is_multiple_of(3) { 1 } else { 3 };
        (0..n)
            .map(|i| {
                let a = i as f64 / denom;
                let b = ((stride * i) % n) as f64 / denom;
                Vec2::new(self.lo.x + (self.hi.x - self.lo.x) * a, self.lo.y + (self.hi.y - self.lo.y) * b)
            })
            .collect()
    }

    /// Whether every constraint holds at `p` according to the geometric
    /// signed distance.
    pub fn geometric_feasible(&self, p: &Vec2, margin: f64) -> bool {
        self.constraints
            .iter()
            .all(|c| c.boundary().signed(&c.center(p)).0 >= margin)
    }
}

/// Inputs of one planning call.
#[derive(Debug, Clone)]
pub struct PlanRequest<'a> {
    pub z0: InitialState,
    pub predictions: &'a [ObstaclePrediction],
    pub waypoint: Waypoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct PlanStats {
    pub constraint_evals: usize,
    pub gradient_evals: usize,
    pub solver_iterations: usize,
    pub speed_valid_bins: usize,
    pub active_bins: usize,
    pub constraints: usize,
    pub sampling_time: f64,
    pub wall_time: f64,
    pub timed_out: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanChoice {
    pub bin: usize,
    pub p: Vec2,
    pub cost: f64,
    /// Smallest geometric signed distance over all intervals and obstacles.
    pub clearance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult {
    pub choice: Option<PlanChoice>,
    pub stats: PlanStats,
}

impl PlanResult {
    pub fn is_feasible(&self) -> bool {
        self.choice.is_some()
    }
}

/// Lateral target range of a bin after keeping the final footprint on the
/// road. `None` when nothing remains.
fn clipped_bounds(rs: &ReachableSet, z0: &InitialState, road: &Road, half_width: f64, edge: f64) -> Option<(Vec2, Vec2)> {
    let (mut lo, mut hi) = (rs.bin.p_lo(), rs.bin.p_hi());
    if z0.h.abs() < 1e-9 {
        let y_min = road.y_min() + half_width + edge - z0.y;
        let y_max = road.y_max() - half_width - edge - z0.y;
        lo.y = lo.y.max(y_min);
        hi.y = hi.y.min(y_max);
        if lo.y > hi.y {
            return None;
        }
    }
    Some((lo, hi))
}

/// Builds the problem of one bin, dropping constraints that provably hold
/// for every `p` in the box.
pub fn build_bin_problem(
    rs: &ReachableSet,
    bounds: (Vec2, Vec2),
    z0: &InitialState,
    predictions: &[ObstaclePrediction],
    cost: CostModel,
    cfg: &PlannerConfig,
) -> Result<BinProblem> {
    let (lo, hi) = bounds;
    let half = (hi - lo) / 2.0;
    let pc = (lo + hi) / 2.0;
    let maps = rs.world_maps(z0)?;
    let mut constraints = Vec::new();
    for (j, (map, shape)) in maps.iter().enumerate() {
        let c0 = map.base + map.jac * pc;
        let spread = map.jac.column(0).norm() * half.x + map.jac.column(1).norm() * half.y;
        let r_shape = shape.radius_bound();
        for (k, pred) in predictions.iter().enumerate() {
            let o = &pred.intervals[j];
            let lower = (c0 - o.center()).norm() - spread - r_shape - o.radius_bound();
            if lower > cfg.margin {
                continue;
            }
            let boundary = BufferedBoundary::new(buffered_obstacle(shape, o));
            constraints.push(Constraint::new(j, k, *map, boundary, cfg.backend)?);
        }
    }
    Ok(BinProblem {
        bin: rs.bin.id,
        lo,
        hi,
        constraints,
        cost,
    })
}

/// Smallest geometric signed distance between the instantiated reachable
/// sets of `(bin, p)` and every prediction, recomputed from scratch.
pub fn verify_plan(rs: &ReachableSet, z0: &InitialState, p: &Vec2, predictions: &[ObstaclePrediction]) -> Result<f64> {
    let reach = rs.instantiate(z0, p)?;
    let mut min = f64::INFINITY;
    for pred in predictions {
        for (z, o) in reach.iter().zip(&pred.intervals) {
            min = min.min(signed_distance_zonotopes(z, std::slice::from_ref(o))?.value);
        }
    }
    Ok(min)
}

pub struct Planner<'a> {
    pub frs: &'a FrsFile,
    pub road: Road,
    pub cfg: PlannerConfig,
}

impl<'a> Planner<'a> {
    pub fn new(frs: &'a FrsFile, road: Road, cfg: PlannerConfig) -> Self {
        Planner { frs, road, cfg }
    }

    pub fn timing(&self) -> &Timing {
        &self.frs.timing
    }

    /// Builds the problems of all speed-valid bins with a non-empty box.
    pub fn build_problems(&self, req: &PlanRequest) -> Result<Vec<BinProblem>> {
        let cost = CostModel {
            z0: req.z0,
            t_m: self.frs.timing.t_m,
            waypoint: req.waypoint.position,
        };
        let half_width = 0.5 * self.frs.footprint.w;
        let bins: Vec<(&ReachableSet, (Vec2, Vec2))> = self
            .frs
            .bins
            .iter()
            .filter(|rs| rs.bin.speed_valid(req.z0.v))
            .filter_map(|rs| {
                clipped_bounds(rs, &req.z0, &self.road, half_width, self.cfg.edge_margin).map(|b| (rs, b))
            })
            .collect();
        bins.par_iter()
            .map(|(rs, b)| build_bin_problem(rs, *b, &req.z0, req.predictions, cost, &self.cfg))
            .collect()
    }

    pub fn plan(&self, req: &PlanRequest) -> Result<PlanResult> {
        let start = Instant::now();
        let deadline = start + Duration::from_secs_f64(self.cfg.time_budget);
        let problems = self.build_problems(req)?;
        let mut stats = PlanStats {
            speed_valid_bins: problems.len(),
            constraints: problems.iter().map(|p| p.constraints.len()).sum(),
            ..Default::default()
        };
        let solver_cfg = SolverConfig {
            max_iter: self.cfg.max_iter,
            kkt_tol: self.cfg.kkt_tol,
            margin: self.cfg.margin,
            deadline: Some(deadline),
            ..Default::default()
        };

        // Candidates are (bin, p, cost); sampled feasible points count too.
        let mut candidates: Vec<(usize, Vec2, f64)> = Vec::new();
        match self.cfg.backend {
            Backend::Sdf => {
                let t_sample = Instant::now();
                let sampled: Vec<Option<(Vec2, f64)>> = problems
                    .par_iter()
                    .map(|prob| {
                        prob.samples(self.cfg.samples_per_bin)
                            .into_iter()
                            .filter(|p| prob.geometric_feasible(p, self.cfg.margin))
                            .map(|p| (p, prob.cost.eval(&p).0))
                            .min_by(|a, b| a.1.total_cmp(&b.1))
                    })
                    .collect();
                stats.sampling_time = t_sample.elapsed().as_secs_f64();
                let active: Vec<(&BinProblem, (Vec2, f64))> = problems
                    .iter()
                    .zip(sampled)
                    .filter_map(|(prob, s)| s.map(|s| (prob, s)))
                    .collect();
                stats.active_bins = active.len();
                let outcomes: Vec<SolveOutcome> = active
                    .par_iter()
                    .map(|(prob, _)| solve_bin(*prob, prob.lo, prob.hi, prob.center(), &solver_cfg))
                    .collect();
                // All bins are evaluated together, so one batched call serves
                // every bin that still needs an evaluation.
                for ((prob, sample), out) in active.iter().zip(&outcomes) {
                    stats.constraint_evals = stats.constraint_evals.max(out.stats.constraint_evals);
                    stats.gradient_evals = stats.gradient_evals.max(out.stats.gradient_evals);
                    stats.solver_iterations = stats.solver_iterations.max(out.stats.iterations);
                    stats.timed_out |= out.stats.timed_out;
                    candidates.push((prob.bin, sample.0, sample.1));
                    if let Some((p, c)) = out.best {
                        candidates.push((prob.bin, p, c));
                    }
                }
            }
            Backend::Halfspace => {
                stats.active_bins = problems.len();
                for prob in &problems {
                    if Instant::now() >= deadline {
                        stats.timed_out = true;
                        break;
                    }
                    let out = solve_bin(prob, prob.lo, prob.hi, prob.center(), &solver_cfg);
                    stats.constraint_evals += out.stats.constraint_evals;
                    stats.gradient_evals += out.stats.gradient_evals;
                    stats.solver_iterations += out.stats.iterations;
                    stats.timed_out |= out.stats.timed_out;
                    if let Some((p, c)) = out.best {
                        candidates.push((prob.bin, p, c));
                    }
                }
            }
        }

        candidates.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)));
        let mut choice = None;
        for (bin, p, cost) in candidates {
            let rs = &self.frs.bins[bin];
            let clearance = verify_plan(rs, &req.z0, &p, req.predictions)?;
            if clearance > 0.0 {
                choice = Some(PlanChoice {
                    bin,
                    p,
                    cost,
                    clearance,
                });
                break;
            }
        }
        stats.wall_time = start.elapsed().as_secs_f64();
        Ok(PlanResult { choice, stats })
    }
}
