//! Highway simulator running the receding-horizon planning loop.
//!
//! Each plan is executed for `t_m` seconds. While it runs, the planner
//! prepares the next plan for the state the current plan reaches at `t_m`,
//! using obstacle states sensed `t_plan` seconds before that. When no
//! feasible plan is found the current plan simply continues, which brings
//! the ego to rest. Ground truth is checked for collisions every `dt_sim`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frs::{
    maneuver_state, predict_obstacle, required_sensor_radius, FrsFile, InitialState, ObstaclePrediction,
    ObstacleState, V_EGO_MAX,
};
use crate::planner::{high_level_planner, PlanRequest, Planner, PlannerConfig, Road, Waypoint};
use crate::zonotope::{Vec2, Zonotope};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleSpec {
    pub x: f64,
    pub y: f64,
    pub lane: usize,
    pub v: f64,
    pub l: f64,
    pub w: f64,
}

impl ObstacleSpec {
    /// Ground-truth state at time `t` (constant speed along the lane).
    pub fn state_at(&self, id: usize, t: f64) -> ObstacleState {
        ObstacleState {
            id,
            pos: Vec2::new(self.x + self.v * t, self.y),
            vel: Vec2::new(self.v, 0.0),
            l: self.l,
            w: self.w,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub seed: u64,
    pub road: Road,
    pub goal_x: f64,
    pub ego: InitialState,
    pub obstacles: Vec<ObstacleSpec>,
}

impl Scenario {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n").map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub road: Road,
    pub min_moving: usize,
    pub max_moving: usize,
    pub max_static: usize,
    pub obs_speed_min: f64,
    pub obs_speed_max: f64,
    pub spawn_x_min: f64,
    pub spawn_x_max: f64,
    /// Minimum bumper gap between obstacles spawned in the same lane (m).
    pub spawn_gap: f64,
    pub obs_l: f64,
    pub obs_w: f64,
    pub ego_lane: usize,
    pub goal_x: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            road: Road::default(),
            min_moving: 0,
            max_moving: 15,
            max_static: 3,
            obs_speed_min: 15.0,
            obs_speed_max: 25.0,
            spawn_x_min: 30.0,
            spawn_x_max: 1000.0,
            spawn_gap: 2.0,
            obs_l: 4.8,
            obs_w: 2.2,
            ego_lane: 1,
            goal_x: 1000.0,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.road.lanes == 0 || !(self.road.lane_width > 0.0) {
            return Err(Error::Config("road needs at least one lane of positive width".into()));
        }
        if self.ego_lane >= self.road.lanes {
            return Err(Error::Config(format!("ego lane {} does not exist", self.ego_lane)));
        }
        if self.min_moving > self.max_moving {
            return Err(Error::Config("min_moving exceeds max_moving".into()));
        }
        if !(self.obs_speed_min >= 0.0 && self.obs_speed_min <= self.obs_speed_max) {
            return Err(Error::Config("obstacle speed range is empty".into()));
        }
        if !(self.spawn_x_min < self.spawn_x_max) {
            return Err(Error::Config("spawn range is empty".into()));
        }
        Ok(())
    }
}

fn spawn_overlaps(existing: &[ObstacleSpec], lane: usize, x: f64, l: f64, gap: f64) -> bool {
    existing
        .iter()
        .any(|o| o.lane == lane && (o.x - x).abs() < 0.5 * (o.l + l) + gap)
}

/// Deterministic random scenario: `min_moving..=max_moving` moving and up to `max_static`
/// static obstacles ahead of an ego at rest.
pub fn generate_scenario(seed: u64, cfg: &ScenarioConfig) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_moving = rng.gen_range(cfg.min_moving..=cfg.max_moving);
    let n_static = rng.gen_range(0..=cfg.max_static);
    let mut obstacles: Vec<ObstacleSpec> = Vec::new();
    for k in 0..n_moving + n_static {
        let v = if k < n_moving {
            rng.gen_range(cfg.obs_speed_min..=cfg.obs_speed_max)
        } else {
            0.0
        };
        for _attempt in 0..100 {
            let lane = rng.gen_range(0..cfg.road.lanes);
            let x = rng.gen_range(cfg.spawn_x_min..cfg.spawn_x_max);
            if !spawn_overlaps(&obstacles, lane, x, cfg.obs_l, cfg.spawn_gap) {
                obstacles.push(ObstacleSpec {
                    x,
                    y: cfg.road.lane_center(lane),
                    lane,
                    v,
                    l: cfg.obs_l,
                    w: cfg.obs_w,
                });
                break;
            }
        }
    }
    Scenario {
        seed,
        road: cfg.road,
        goal_x: cfg.goal_x,
        ego: InitialState {
            x: 0.0,
            y: cfg.road.lane_center(cfg.ego_lane),
            h: 0.0,
            v: 0.0,
        },
        obstacles,
    }
}

/// Separating-axis overlap test for convex polygons (touching counts).
pub fn polygons_overlap(a: &[Vec2], b: &[Vec2]) -> bool {
    for poly in [a, b] {
        let n = poly.len();
        for i in 0..n {
            let e = poly[(i + 1) % n] - poly[i];
            let axis = Vec2::new(-e.y, e.x);
            let (amin, amax) = project(a, &axis);
            let (bmin, bmax) = project(b, &axis);
            if amax < bmin || bmax < amin {
                return false;
            }
        }
    }
    true
}

fn project(poly: &[Vec2], axis: &Vec2) -> (f64, f64) {
    poly.iter()
        .map(|p| p.dot(axis))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Whether the ego footprint overlaps any obstacle at one instant.
pub fn collision_check(ego: &[Vec2; 4], obstacles: &[ObstacleState]) -> bool {
    obstacles.iter().any(|o| {
        let rect = o.footprint().corners(o.pos, 0.0);
        polygons_overlap(ego, &rect)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Success,
    SafeStop,
    Crash,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Outcome::Success => "success",
            Outcome::SafeStop => "safe_stop",
            Outcome::Crash => "crash",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub dt_sim: f64,
    pub t_max: f64,
    pub sensor_radius: f64,
    pub v_obs_max: f64,
    /// Consecutive failed plans at rest before the trial ends as a stop.
    pub stuck_limit: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt_sim: 0.01,
            t_max: 300.0,
            sensor_radius: 200.0,
            v_obs_max: 25.0,
            stuck_limit: 5,
        }
    }
}

impl SimConfig {
    pub fn validate(&self, frs: &FrsFile) -> Result<()> {
        let need = required_sensor_radius(&frs.timing, V_EGO_MAX, self.v_obs_max, &frs.footprint);
        if !(self.sensor_radius > need) {
            return Err(Error::Config(format!(
                "sensor radius {} m must exceed {need:.3} m for the configured horizon and speeds",
                self.sensor_radius
            )));
        }
        if !(self.dt_sim > 0.0 && self.t_max > 0.0) {
            return Err(Error::Config("dt_sim and t_max must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub time: f64,
    pub feasible: bool,
    pub bin: Option<usize>,
    pub p: Option<[f64; 2]>,
    pub solve_time: f64,
    pub constraint_evals: usize,
    pub gradient_evals: usize,
    pub solver_iterations: usize,
    pub timed_out: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    pub seed: u64,
    pub outcome: Outcome,
    pub sim_time: f64,
    pub distance: f64,
    pub final_speed: f64,
    pub iterations: Vec<IterationRecord>,
    /// Overlaps observed while the ego was at rest (not at fault).
    pub contacts_at_rest: usize,
    /// Obstacles outside the sensor radius whose motion could have touched
    /// an accepted reachable set.
    pub sensing_violations: usize,
}

impl TrialResult {
    pub fn plans(&self) -> usize {
        self.iterations.len()
    }

    pub fn infeasible(&self) -> usize {
        self.iterations.iter().filter(|r| !r.feasible).count()
    }

    pub fn constraint_evals(&self) -> usize {
        self.iterations.iter().map(|r| r.constraint_evals).sum()
    }

    pub fn gradient_evals(&self) -> usize {
        self.iterations.iter().map(|r| r.gradient_evals).sum()
    }

    pub fn solver_iterations(&self) -> usize {
        self.iterations.iter().map(|r| r.solver_iterations).sum()
    }

    pub fn mean_solve_time(&self) -> f64 {
        if self.iterations.is_empty() {
            return 0.0;
        }
        self.iterations.iter().map(|r| r.solve_time).sum::<f64>() / self.iterations.len() as f64
    }

    pub fn max_solve_time(&self) -> f64 {
        self.iterations.iter().map(|r| r.solve_time).fold(0.0, f64::max)
    }

    pub fn timed_out_plans(&self) -> usize {
        self.iterations.iter().filter(|r| r.timed_out).count()
    }
}

/// A committed plan: parameter `p` of `bin` started from `z0` at `t_start`.
#[derive(Debug, Clone, Copy)]
struct ActivePlan {
    z0: InitialState,
    bin: usize,
    p: Vec2,
    t_start: f64,
}

pub struct Simulator<'a> {
    pub frs: &'a FrsFile,
    pub planner_cfg: PlannerConfig,
    pub sim_cfg: SimConfig,
    pub svg_dir: Option<PathBuf>,
}

impl<'a> Simulator<'a> {
    pub fn new(frs: &'a FrsFile, planner_cfg: PlannerConfig, sim_cfg: SimConfig) -> Result<Self> {
        planner_cfg.validate()?;
        sim_cfg.validate(frs)?;
        Ok(Simulator {
            frs,
            planner_cfg,
            sim_cfg,
            svg_dir: None,
        })
    }

    fn ego_pose(&self, plan: &ActivePlan, t: f64) -> (Vec2, f64, f64, f64) {
        let s = maneuver_state(&self.frs.timing, plan.z0.v, plan.p, t - plan.t_start);
        let (pos, h) = plan.z0.to_world(&s);
        (pos, h, s.speed, s.lateral_rate)
    }

    pub fn run_trial(&self, scenario: &Scenario) -> Result<TrialResult> {
        let timing = self.frs.timing;
        let planner = Planner::new(self.frs, scenario.road, self.planner_cfg);
        let fp = self.frs.footprint;
        let rest_bin = self
            .frs
            .bins
            .iter()
            .find(|b| b.bin.contains_p(&Vec2::zeros()) && b.bin.speed_valid(0.0))
            .ok_or_else(|| Error::Config("FRS has no bin that holds the vehicle at rest".into()))?
            .bin
            .id;
        if scenario.ego.v != 0.0 {
            return Err(Error::Config("the ego must start at rest".into()));
        }

        let mut plan = ActivePlan {
            z0: scenario.ego,
            bin: rest_bin,
            p: Vec2::zeros(),
            t_start: 0.0,
        };
        let mut offset = timing.t_m;
        let mut step: u64 = 0;
        let mut records = Vec::new();
        let mut contacts_at_rest = 0;
        let mut sensing_violations = 0;
        let mut stuck = 0;
        let mut trace = vec![scenario.ego.pos()];

        let outcome = 'trial: loop {
            let t_next = plan.t_start + offset;
            let (pos, h, speed, lateral) = self.ego_pose(&plan, t_next);
            if lateral.abs() > 1e-9 || speed < -1e-12 {
                return Err(Error::Inconsistency(format!(
                    "plan handover at t = {t_next:.2} s with lateral rate {lateral} and speed {speed}"
                )));
            }
            let z_next = InitialState {
                x: pos.x,
                y: pos.y,
                h,
                v: speed.max(0.0),
            };

            // Sense and plan for the handover state.
            let t_sense = t_next - timing.t_plan;
            let (ego_at_sense, ..) = self.ego_pose(&plan, t_sense);
            let sensed: Vec<ObstacleState> = scenario
                .obstacles
                .iter()
                .enumerate()
                .map(|(k, o)| o.state_at(k, t_sense))
                .collect();
            let predictions: Vec<ObstaclePrediction> = sensed
                .iter()
                .filter_map(|o| predict_obstacle(o, &timing, &ego_at_sense, self.sim_cfg.sensor_radius))
                .collect();
            let visible: Vec<ObstacleState> = predictions.iter().map(|p| p.source).collect();
            let waypoint = high_level_planner(
                &scenario.road,
                &z_next,
                fp.l,
                &visible,
                self.planner_cfg.d_safe,
                self.planner_cfg.d_wp_max,
            );
            let result = planner.plan(&PlanRequest {
                z0: z_next,
                predictions: &predictions,
                waypoint,
            })?;
            records.push(IterationRecord {
                time: t_next,
                feasible: result.is_feasible(),
                bin: result.choice.map(|c| c.bin),
                p: result.choice.map(|c| [c.p.x, c.p.y]),
                solve_time: result.stats.wall_time,
                constraint_evals: result.stats.constraint_evals,
                gradient_evals: result.stats.gradient_evals,
                solver_iterations: result.stats.solver_iterations,
                timed_out: result.stats.timed_out,
            });

            let mut next_plan = result.choice.map(|c| ActivePlan {
                z0: z_next,
                bin: c.bin,
                p: c.p,
                t_start: t_next,
            });
            let mut velocity_invalid = false;
            if let Some(np) = next_plan {
                let rs = &self.frs.bins[np.bin];
                if !rs.bin.speed_valid(np.z0.v) {
                    return Err(Error::Inconsistency(format!(
                        "plan in bin {} starts at {} m/s outside its validity range",
                        np.bin, np.z0.v
                    )));
                }
                // The state handed to the following plan must be plannable.
                let (.., v_after, _) = self.ego_pose(&np, np.t_start + timing.t_m);
                if !self.frs.bins.iter().any(|b| b.bin.speed_valid(v_after)) {
                    velocity_invalid = true;
                    next_plan = None;
                }
                sensing_violations += self.audit_sensing(scenario, &np, &predictions)?;
            }
            if let Some(dir) = &self.svg_dir {
                let frame = render_frame(self.frs, scenario, &plan, next_plan.as_ref(), &waypoint, &predictions, &trace, t_next)?;
                let path = dir.join(format!("frame_{:06}_{:04}.svg", scenario.seed, records.len() - 1));
                std::fs::write(&path, frame).map_err(|e| Error::io(&path, e))?;
            }

            // Execute the current plan up to the handover time.
            let end_step = (t_next / self.sim_cfg.dt_sim).round() as u64;
            while step < end_step {
                step += 1;
                let t = step as f64 * self.sim_cfg.dt_sim;
                let (pos, h, speed, lateral) = self.ego_pose(&plan, t);
                let corners = fp.corners(pos, h);
                let obs: Vec<ObstacleState> = scenario
                    .obstacles
                    .iter()
                    .enumerate()
                    .map(|(k, o)| o.state_at(k, t))
                    .filter(|o| (o.pos - pos).norm() < 20.0)
                    .collect();
                if collision_check(&corners, &obs) {
                    if speed.abs() > 1e-9 || lateral.abs() > 1e-9 {
                        trace.push(pos);
                        break 'trial Outcome::Crash;
                    }
                    contacts_at_rest += 1;
                }
                if step.is_multiple_of(10) {
                    trace.push(pos);
                }
                if pos.x >= scenario.goal_x {
                    break 'trial Outcome::Success;
                }
                if t >= self.sim_cfg.t_max {
                    break 'trial Outcome::SafeStop;
                }
            }

            if velocity_invalid {
                // Let the current plan brake to rest, then stop the trial.
                offset += timing.t_f;
                let stop = plan.t_start + offset;
                let end_step = (stop / self.sim_cfg.dt_sim).round() as u64;
                while step < end_step {
                    step += 1;
                    let t = step as f64 * self.sim_cfg.dt_sim;
                    let (pos, h, speed, lateral) = self.ego_pose(&plan, t);
                    let obs: Vec<ObstacleState> = scenario
                        .obstacles
                        .iter()
                        .enumerate()
                        .map(|(k, o)| o.state_at(k, t))
                        .collect();
                    if collision_check(&fp.corners(pos, h), &obs) && (speed.abs() > 1e-9 || lateral.abs() > 1e-9) {
                        break 'trial Outcome::Crash;
                    }
                }
                break 'trial Outcome::SafeStop;
            }

            match next_plan {
                Some(np) => {
                    plan = np;
                    offset = timing.t_m;
                    stuck = 0;
                }
                None => {
                    offset += timing.t_m;
                    if z_next.v == 0.0 {
                        stuck += 1;
                        if stuck >= self.sim_cfg.stuck_limit {
                            break 'trial Outcome::SafeStop;
                        }
                    }
                }
            }
        };

        let t_end = step as f64 * self.sim_cfg.dt_sim;
        let (pos, _, speed, _) = self.ego_pose(&plan, t_end);
        Ok(TrialResult {
            seed: scenario.seed,
            outcome,
            sim_time: t_end,
            distance: pos.x - scenario.ego.x,
            final_speed: speed,
            iterations: records,
            contacts_at_rest,
            sensing_violations,
        })
    }

    /// Counts obstacles left out of the prediction set whose true motion
    /// comes within reach of the accepted plan.
    fn audit_sensing(&self, scenario: &Scenario, plan: &ActivePlan, predictions: &[ObstaclePrediction]) -> Result<usize> {
        let timing = self.frs.timing;
        let reach = self.frs.bins[plan.bin].instantiate(&plan.z0, &plan.p)?;
        let t_sense = plan.t_start - timing.t_plan;
        let mut violations = 0;
        for (k, spec) in scenario.obstacles.iter().enumerate() {
            if predictions.iter().any(|p| p.id == k) {
                continue;
            }
            let truth = spec.state_at(k, t_sense);
            let sweep = predict_obstacle(&truth, &timing, &truth.pos, f64::INFINITY).expect("unbounded radius");
            for (z, o) in reach.iter().zip(&sweep.intervals) {
                let gap = (z.center() - o.center()).norm() - z.radius_bound() - o.radius_bound();
                if gap <= 0.0 {
                    violations += 1;
                    break;
                }
            }
        }
        Ok(violations)
    }
}

/// One row per trial; every column is a function of seed and configuration.
pub fn write_results_csv<W: std::io::Write>(results: &[TrialResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "seed",
        "outcome",
        "plans",
        "infeasible_plans",
        "timed_out_plans",
        "distance_m",
        "sim_time_s",
        "constraint_evals",
        "gradient_evals",
        "solver_iterations",
        "contacts_at_rest",
        "sensing_violations",
    ])?;
    for r in results {
        w.write_record([
            r.seed.to_string(),
            r.outcome.to_string(),
            r.plans().to_string(),
            r.infeasible().to_string(),
            r.timed_out_plans().to_string(),
            format!("{:.6}", r.distance),
            format!("{:.2}", r.sim_time),
            r.constraint_evals().to_string(),
            r.gradient_evals().to_string(),
            r.solver_iterations().to_string(),
            r.contacts_at_rest.to_string(),
            r.sensing_violations.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))
}

/// Wall-clock solve times, kept apart from the reproducible columns.
pub fn write_timing_csv<W: std::io::Write>(results: &[TrialResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["seed", "mean_solve_time_s", "max_solve_time_s"])?;
    for r in results {
        w.write_record([
            r.seed.to_string(),
            format!("{:.6}", r.mean_solve_time()),
            format!("{:.6}", r.max_solve_time()),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OutcomeCounts {
    pub trials: usize,
    pub success: usize,
    pub safe_stop: usize,
    pub crash: usize,
}

impl OutcomeCounts {
    pub fn of(results: &[TrialResult]) -> Self {
        let count = |o| results.iter().filter(|r| r.outcome == o).count();
        OutcomeCounts {
            trials: results.len(),
            success: count(Outcome::Success),
            safe_stop: count(Outcome::SafeStop),
            crash: count(Outcome::Crash),
        }
    }
}

fn svg_polygon(out: &mut String, pts: &[Vec2], style: &str, map: &impl Fn(Vec2) -> (f64, f64)) {
    let coords: Vec<String> = pts
        .iter()
        .map(|p| {
            let (x, y) = map(*p);
            format!("{x:.2},{y:.2}")
        })
        .collect();
    let _ = writeln!(out, r#"<polygon points="{}" style="{style}"/>"#, coords.join(" "));
}

fn zonotope_outline(z: &Zonotope) -> Vec<Vec2> {
    match crate::zonotope::enumerate_vertices(z) {
        Ok(poly) => poly.vertices,
        Err(_) => vec![z.center()],
    }
}

#[allow(clippy::too_many_arguments)]
fn render_frame(
    frs: &FrsFile,
    scenario: &Scenario,
    current: &ActivePlan,
    next: Option<&ActivePlan>,
    waypoint: &Waypoint,
    predictions: &[ObstaclePrediction],
    trace: &[Vec2],
    t: f64,
) -> Result<String> {
    let road = scenario.road;
    let (ego_pos, ..) = {
        let s = maneuver_state(&frs.timing, current.z0.v, current.p, t - current.t_start);
        current.z0.to_world(&s)
    };
    let (x0, x1) = (ego_pos.x - 40.0, ego_pos.x + 120.0);
    let scale = 6.0;
    let height = road.y_max() * scale + 20.0;
    let map = |p: Vec2| ((p.x - x0) * scale, height - 10.0 - p.y * scale);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{height:.0}">"#,
        (x1 - x0) * scale
    );
    let _ = writeln!(out, r#"<text x="5" y="12" font-size="10">t = {t:.2} s</text>"#);
    for lane in 0..=road.lanes {
        let y = lane as f64 * road.lane_width;
        let (ax, ay) = map(Vec2::new(x0, y));
        let (bx, by) = map(Vec2::new(x1, y));
        let _ = writeln!(out, r#"<line x1="{ax:.2}" y1="{ay:.2}" x2="{bx:.2}" y2="{by:.2}" stroke="gray"/>"#);
    }
    for pred in predictions {
        for z in &pred.intervals {
            svg_polygon(&mut out, &zonotope_outline(z), "fill:red;fill-opacity:0.05;stroke:none", &map);
        }
    }
    for (k, o) in scenario.obstacles.iter().enumerate() {
        let s = o.state_at(k, t);
        svg_polygon(&mut out, &s.footprint().corners(s.pos, 0.0), "fill:red;stroke:black", &map);
    }
    if let Some(np) = next {
        if let Ok(reach) = frs.bins[np.bin].instantiate(&np.z0, &np.p) {
            for z in &reach {
                svg_polygon(&mut out, &zonotope_outline(z), "fill:green;fill-opacity:0.08;stroke:green;stroke-opacity:0.3", &map);
            }
        }
    }
    let trace_pts: Vec<String> = trace
        .iter()
        .map(|p| {
            let (x, y) = map(*p);
            format!("{x:.2},{y:.2}")
        })
        .collect();
    let _ = writeln!(out, r#"<polyline points="{}" style="fill:none;stroke:blue"/>"#, trace_pts.join(" "));
    svg_polygon(&mut out, &frs.footprint.corners(ego_pos, current.z0.h), "fill:blue;stroke:black", &map);
    let (wx, wy) = map(waypoint.position);
    let _ = writeln!(out, r#"<circle cx="{wx:.2}" cy="{wy:.2}" r="3" fill="orange"/>"#);
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_is_deterministic() {
        let cfg = ScenarioConfig::default();
        assert_eq!(generate_scenario(7, &cfg), generate_scenario(7, &cfg));
        assert_ne!(generate_scenario(7, &cfg), generate_scenario(8, &cfg));
    }

    #[test]
    fn rectangles() {
        let fp = crate::frs::Footprint::default();
        let a = fp.corners(Vec2::zeros(), 0.0);
        assert!(polygons_overlap(&a, &a));
        let b = fp.corners(Vec2::new(10.0, 0.0), 0.0);
        assert!(!polygons_overlap(&a, &b));
        let c = fp.corners(Vec2::new(3.0, 1.0), 0.7);
        assert!(polygons_overlap(&a, &c));
    }

    #[test]
    fn empty_road_succeeds() {
        let frs = FrsFile::builtin();
        let mut sc = generate_scenario(1, &ScenarioConfig::default());
        sc.obstacles.clear();
        let sim = Simulator::new(&frs, PlannerConfig::default(), SimConfig::default()).unwrap();
        let r = sim.run_trial(&sc).unwrap();
        assert_eq!(r.outcome, Outcome::Success);
        assert!(r.distance >= 1000.0);
    }
}
