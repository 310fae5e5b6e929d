//! Single-iteration planning benchmark over dense random traffic.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frs::{predict_obstacle, FrsFile, InitialState, ObstaclePrediction, ObstacleState};
use crate::planner::{high_level_planner, Backend, PlanRequest, PlanResult, Planner, PlannerConfig, Road, Waypoint};
use crate::zonotope::Vec2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchConfig {
    pub obstacle_counts: Vec<usize>,
    pub instances: usize,
    pub seed: u64,
    pub road: Road,
    /// Obstacles are placed in slots from `x_min` to `x_max` ahead of the ego.
    pub x_min: f64,
    pub x_max: f64,
    pub slot_spacing: f64,
    pub static_fraction: f64,
    pub obs_speed_min: f64,
    pub obs_speed_max: f64,
    pub ego_speed_min: f64,
    pub ego_speed_max: f64,
    pub obs_l: f64,
    pub obs_w: f64,
    pub sensor_radius: f64,
    /// Planner budget during the benchmark; large so timings reflect work.
    pub time_budget: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            obstacle_counts: vec![10, 20, 30, 40, 50],
            instances: 500,
            seed: 0,
            road: Road::default(),
            x_min: -40.0,
            x_max: 200.0,
            slot_spacing: 8.0,
            static_fraction: 0.1,
            obs_speed_min: 15.0,
            obs_speed_max: 25.0,
            ego_speed_min: 15.0,
            ego_speed_max: 25.0,
            obs_l: 4.8,
            obs_w: 2.2,
            sensor_radius: 200.0,
            time_budget: 30.0,
        }
    }
}

impl BenchConfig {
    fn slots(&self) -> Vec<(usize, f64)> {
        let per_lane = ((self.x_max - self.x_min) / self.slot_spacing).floor() as usize + 1;
        (0..self.road.lanes)
            .flat_map(|lane| (0..per_lane).map(move |k| (lane, k)))
            .map(|(lane, k)| (lane, self.x_min + k as f64 * self.slot_spacing))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.slot_spacing > self.obs_l) {
            return Err(Error::Config("slot spacing must exceed the obstacle length".into()));
        }
        if !(self.time_budget > 0.0) {
            return Err(Error::Config("bench time budget must be positive".into()));
        }
        let free = self.slots().len().saturating_sub(1);
        if let Some(&n) = self.obstacle_counts.iter().find(|&&n| n > free) {
            return Err(Error::Config(format!("{n} obstacles do not fit in {free} free slots")));
        }
        Ok(())
    }
}

/// One planning problem: ego state, sensed obstacles and the waypoint.
#[derive(Debug, Clone)]
pub struct BenchInstance {
    pub n_obstacles: usize,
    pub index: usize,
    pub z0: InitialState,
    pub obstacles: Vec<ObstacleState>,
}

fn instance_seed(seed: u64, n: usize, index: usize) -> u64 {
    seed ^ ((n as u64) << 32) ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

pub fn generate_instance(cfg: &BenchConfig, n: usize, index: usize) -> BenchInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(instance_seed(cfg.seed, n, index));
    let lane = rng.gen_range(0..cfg.road.lanes);
    let z0 = InitialState {
        x: 0.0,
        y: cfg.road.lane_center(lane),
        h: 0.0,
        v: rng.gen_range(cfg.ego_speed_min..=cfg.ego_speed_max),
    };
    // The slot closest to the ego in its own lane stays empty.
    let mut slots: Vec<(usize, f64)> = cfg.slots();
    let own = slots
        .iter()
        .enumerate()
        .filter(|(_, s)| s.0 == lane)
        .min_by(|a, b| a.1 .1.abs().total_cmp(&b.1 .1.abs()))
        .map(|(k, _)| k)
        .expect("ego lane has slots");
    slots.remove(own);
    slots.shuffle(&mut rng);
    let obstacles = slots[..n]
        .iter()
        .enumerate()
        .map(|(id, &(l, x))| {
            let v = if rng.gen::<f64>() < cfg.static_fraction {
                0.0
            } else {
                rng.gen_range(cfg.obs_speed_min..=cfg.obs_speed_max)
            };
            ObstacleState {
                id,
                pos: Vec2::new(x, cfg.road.lane_center(l)),
                vel: Vec2::new(v, 0.0),
                l: cfg.obs_l,
                w: cfg.obs_w,
            }
        })
        .collect();
    BenchInstance {
        n_obstacles: n,
        index,
        z0,
        obstacles,
    }
}

impl BenchInstance {
    pub fn predictions(&self, frs: &FrsFile, radius: f64) -> Vec<ObstaclePrediction> {
        self.obstacles
            .iter()
            .filter_map(|o| predict_obstacle(o, &frs.timing, &self.z0.pos(), radius))
            .collect()
    }

    pub fn waypoint(&self, frs: &FrsFile, road: &Road, cfg: &PlannerConfig) -> Waypoint {
        high_level_planner(road, &self.z0, frs.footprint.l, &self.obstacles, cfg.d_safe, cfg.d_wp_max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub n_obstacles: usize,
    pub instance: usize,
    pub backend: Backend,
    pub feasible: bool,
    pub bin: Option<usize>,
    pub constraints: usize,
    pub active_bins: usize,
    pub constraint_evals: usize,
    pub gradient_evals: usize,
    pub solver_iterations: usize,
    pub timed_out: bool,
    pub solve_time: f64,
    pub sampling_time: f64,
}

impl BenchRow {
    fn new(inst: &BenchInstance, backend: Backend, r: &PlanResult) -> Self {
        BenchRow {
            n_obstacles: inst.n_obstacles,
            instance: inst.index,
            backend,
            feasible: r.is_feasible(),
            bin: r.choice.map(|c| c.bin),
            constraints: r.stats.constraints,
            active_bins: r.stats.active_bins,
            constraint_evals: r.stats.constraint_evals,
            gradient_evals: r.stats.gradient_evals,
            solver_iterations: r.stats.solver_iterations,
            timed_out: r.stats.timed_out,
            solve_time: r.stats.wall_time,
            sampling_time: r.stats.sampling_time,
        }
    }
}

/// Plans every instance with each backend. Instances run one after another
/// so that timings are not distorted by competing work.
pub fn run_bench(frs: &FrsFile, planner_cfg: &PlannerConfig, cfg: &BenchConfig, backends: &[Backend]) -> Result<Vec<BenchRow>> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for &n in &cfg.obstacle_counts {
        for index in 0..cfg.instances {
            let inst = generate_instance(cfg, n, index);
            let preds = inst.predictions(frs, cfg.sensor_radius);
            for &backend in backends {
                let pcfg = PlannerConfig {
                    backend,
                    time_budget: cfg.time_budget,
                    ..*planner_cfg
                };
                let planner = Planner::new(frs, cfg.road, pcfg);
                let res = planner.plan(&PlanRequest {
                    z0: inst.z0,
                    predictions: &preds,
                    waypoint: inst.waypoint(frs, &cfg.road, &pcfg),
                })?;
                rows.push(BenchRow::new(&inst, backend, &res));
            }
        }
    }
    Ok(rows)
}

/// Columns that depend only on seeds and configuration.
pub fn write_counts_csv<W: Write>(rows: &[BenchRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "n_obstacles",
        "instance",
        "backend",
        "feasible",
        "bin",
        "constraints",
        "active_bins",
        "constraint_evals",
        "gradient_evals",
        "solver_iterations",
        "timed_out",
    ])?;
    for r in rows {
        w.write_record([
            r.n_obstacles.to_string(),
            r.instance.to_string(),
            r.backend.to_string(),
            r.feasible.to_string(),
            r.bin.map(|b| b.to_string()).unwrap_or_default(),
            r.constraints.to_string(),
            r.active_bins.to_string(),
            r.constraint_evals.to_string(),
            r.gradient_evals.to_string(),
            r.solver_iterations.to_string(),
            r.timed_out.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))
}

fn per_eval(time: f64, count: usize) -> String {
    if count == 0 {
        String::new()
    } else {
        format!("{:.9}", time / count as f64)
    }
}

pub fn write_timing_csv<W: Write>(rows: &[BenchRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "n_obstacles",
        "instance",
        "backend",
        "solve_time_s",
        "sampling_time_s",
        "time_per_constraint_eval_s",
        "time_per_gradient_eval_s",
    ])?;
    for r in rows {
        w.write_record([
            r.n_obstacles.to_string(),
            r.instance.to_string(),
            r.backend.to_string(),
            format!("{:.9}", r.solve_time),
            format!("{:.9}", r.sampling_time),
            per_eval(r.solve_time, r.constraint_evals),
            per_eval(r.solve_time, r.gradient_evals),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
    pub median: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Stat {
                mean: f64::NAN,
                std: f64::NAN,
                median: f64::NAN,
            };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mid = sorted.len() / 2;
        let median = if sorted.len().is_multiple_of(2) {
            0.5 * (sorted[mid - 1] + sorted[mid])
        } else {
            sorted[mid]
        };
        Stat {
            mean,
            std: var.sqrt(),
            median,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchGroup {
    pub backend: Backend,
    pub n_obstacles: usize,
    pub instances: usize,
    pub feasible: usize,
    pub solve_time: Stat,
    pub constraint_evals: Stat,
    pub gradient_evals: Stat,
    pub solver_iterations: Stat,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchSummary {
    pub groups: Vec<BenchGroup>,
    /// Least-squares slope of log median solve time against log obstacle count.
    pub growth_exponent: Vec<(Backend, f64)>,
}

pub fn summarize(rows: &[BenchRow], backends: &[Backend], counts: &[usize]) -> BenchSummary {
    let mut groups = Vec::new();
    let mut growth_exponent = Vec::new();
    for &backend in backends {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for &n in counts {
            let sel: Vec<&BenchRow> = rows.iter().filter(|r| r.backend == backend && r.n_obstacles == n).collect();
            let col = |f: fn(&BenchRow) -> f64| Stat::of(&sel.iter().map(|r| f(r)).collect::<Vec<_>>());
            let g = BenchGroup {
                backend,
                n_obstacles: n,
                instances: sel.len(),
                feasible: sel.iter().filter(|r| r.feasible).count(),
                solve_time: col(|r| r.solve_time),
                constraint_evals: col(|r| r.constraint_evals as f64),
                gradient_evals: col(|r| r.gradient_evals as f64),
                solver_iterations: col(|r| r.solver_iterations as f64),
            };
            if !sel.is_empty() {
                xs.push(n as f64);
                ys.push(g.solve_time.median);
            }
            groups.push(g);
        }
        growth_exponent.push((backend, growth_exponent_fit(&xs, &ys)));
    }
    BenchSummary { groups, growth_exponent }
}

/// Slope of the least-squares line through `(ln x, ln y)`.
pub fn growth_exponent_fit(xs: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
