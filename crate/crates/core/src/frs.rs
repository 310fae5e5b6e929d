//! Parameterized forward reachable sets of the ego vehicle and obstacle
//! predictions.
//!
//! The ego follows a closed-form kinematic maneuver in its body frame: over
//! `[0, t_m]` the longitudinal speed blends from `v0` to the target `v_t`
//! while the lateral position blends to the offset `y_off`; over
//! `[t_m, t_stop]` the vehicle brakes to rest and then stays put until `t_f`.
//! Heading follows the velocity direction. With the smoothstep
//! `s(τ) = 3τ² − 2τ³` and its integral `S(τ) = τ³ − τ⁴/2`, the position is
//! linear in `(v0, v_t, y_off)` at every instant, so a least-squares affine fit
//! of the interval centers is nearly exact and the generators mostly have to
//! cover motion within the interval and the rotated footprint.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::zonotope::{rotation, Mat2, Vec2, Zonotope};

pub const FRS_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Timing {
    pub t_f: f64,
    pub t_m: f64,
    pub dt: f64,
    pub t_plan: f64,
    /// Time at which the braking maneuver reaches zero speed.
    pub t_stop: f64,
}

impl Default for Timing {
    fn default() -> Self {
        Timing {
            t_f: 3.0,
            t_m: 1.5,
            dt: 0.1,
            t_plan: 0.35,
            t_stop: 2.8,
        }
    }
}

impl Timing {
    pub fn intervals(&self) -> usize {
        (self.t_f / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.t_f / self.dt;
        if !(self.dt > 0.0 && self.t_f > 0.0) || (n - n.round()).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "dt = {} must divide t_f = {} exactly",
                self.dt, self.t_f
            )));
        }
        if !(0.0 < self.t_m && self.t_m < self.t_stop && self.t_stop <= self.t_f) {
            return Err(Error::Config(format!(
                "need 0 < t_m < t_stop <= t_f, got t_m = {}, t_stop = {}, t_f = {}",
                self.t_m, self.t_stop, self.t_f
            )));
        }
        if !(self.t_plan > 0.0 && self.t_plan < self.t_m) {
            return Err(Error::Config(format!(
                "need 0 < t_plan < t_m, got t_plan = {}",
                self.t_plan
            )));
        }
        Ok(())
    }

    /// Start and end of interval `j` (0-based), relative to the plan start.
    pub fn interval_bounds(&self, j: usize) -> (f64, f64) {
        (j as f64 * self.dt, (j + 1) as f64 * self.dt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Footprint {
    pub l: f64,
    pub w: f64,
}

impl Default for Footprint {
    fn default() -> Self {
        Footprint { l: 4.8, w: 2.2 }
    }
}

impl Footprint {
    pub fn validate(&self) -> Result<()> {
        if self.l > 0.0 && self.w > 0.0 {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "footprint dimensions must be positive, got {} x {}",
                self.l, self.w
            )))
        }
    }

    pub fn half_diagonal(&self) -> f64 {
        0.5 * self.l.hypot(self.w)
    }

    /// Corners of the footprint rotated by `h` and placed at `pos`.
    pub fn corners(&self, pos: Vec2, h: f64) -> [Vec2; 4] {
        let r = rotation(h);
        let (a, b) = (0.5 * self.l, 0.5 * self.w);
        [
            pos + r * Vec2::new(-a, -b),
            pos + r * Vec2::new(a, -b),
            pos + r * Vec2::new(a, b),
            pos + r * Vec2::new(-a, b),
        ]
    }

    pub fn zonotope(&self, pos: Vec2, h: f64) -> Zonotope {
        let r = rotation(h);
        Zonotope::new(
            pos,
            vec![r * Vec2::new(0.5 * self.l, 0.0), r * Vec2::new(0.0, 0.5 * self.w)],
        )
    }
}

fn smooth(tau: f64) -> f64 {
    tau * tau * (3.0 - 2.0 * tau)
}

fn smooth_rate(tau: f64) -> f64 {
    6.0 * tau * (1.0 - tau)
}

fn smooth_integral(tau: f64) -> f64 {
    tau * tau * tau * (1.0 - 0.5 * tau)
}

/// Body-frame state along the maneuver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyState {
    pub pos: Vec2,
    pub heading: f64,
    /// Longitudinal speed.
    pub speed: f64,
    pub lateral_rate: f64,
}

/// Closed-form maneuver state at time `t` after the plan start for initial
/// speed `v0` and parameter `p = (v_t, y_off)`.
pub fn maneuver_state(timing: &Timing, v0: f64, p: Vec2, t: f64) -> BodyState {
    let (vt, y_off) = (p.x, p.y);
    let t_m = timing.t_m;
    let (pos, speed, lateral_rate) = if t <= t_m {
        let tau = (t / t_m).max(0.0);
        let x = v0 * t + (vt - v0) * t_m * smooth_integral(tau);
        let u = v0 + (vt - v0) * smooth(tau);
        (
            Vec2::new(x, y_off * smooth(tau)),
            u,
            y_off * smooth_rate(tau) / t_m,
        )
    } else {
        let t_b = timing.t_stop - t_m;
        let x_m = 0.5 * t_m * (v0 + vt);
        let sigma = ((t - t_m) / t_b).min(1.0);
        let x = x_m + vt * t_b * (sigma - smooth_integral(sigma));
        (Vec2::new(x, y_off), vt * (1.0 - smooth(sigma)), 0.0)
    };
    let heading = if speed == 0.0 && lateral_rate == 0.0 {
        0.0
    } else {
        lateral_rate.atan2(speed)
    };
    BodyState {
        pos,
        heading,
        speed,
        lateral_rate,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Keep,
    Left,
    Right,
}

/// Descriptor of one parameter bin: the box `P_b` and the initial-speed range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinSpec {
    pub id: usize,
    pub family: Family,
    pub p_lo: [f64; 2],
    pub p_hi: [f64; 2],
    pub v0_lo: f64,
    pub v0_hi: f64,
}

impl BinSpec {
    pub fn p_lo(&self) -> Vec2 {
        Vec2::new(self.p_lo[0], self.p_lo[1])
    }

    pub fn p_hi(&self) -> Vec2 {
        Vec2::new(self.p_hi[0], self.p_hi[1])
    }

    pub fn p_center(&self) -> Vec2 {
        (self.p_lo() + self.p_hi()) / 2.0
    }

    pub fn contains_p(&self, p: &Vec2) -> bool {
        (self.p_lo[0]..=self.p_hi[0]).contains(&p.x) && (self.p_lo[1]..=self.p_hi[1]).contains(&p.y)
    }

    pub fn speed_valid(&self, v0: f64) -> bool {
        (self.v0_lo..=self.v0_hi).contains(&v0)
    }

    pub fn project(&self, p: &Vec2) -> Vec2 {
        Vec2::new(
            p.x.clamp(self.p_lo[0], self.p_hi[0]),
            p.y.clamp(self.p_lo[1], self.p_hi[1]),
        )
    }
}

pub const V_EGO_MAX: f64 = 30.0;

/// The 13 default bins: five speed bands for lane keeping and four each for
/// left and right lane changes.
pub fn default_bins() -> Vec<BinSpec> {
    let mut bins = Vec::new();
    let mut push = |family, vlo: f64, vhi: f64, ylo, yhi, v0_min: f64| {
        bins.push(BinSpec {
            id: bins.len(),
            family,
            p_lo: [vlo, ylo],
            p_hi: [vhi, yhi],
            v0_lo: (vlo - 3.0).max(v0_min),
            v0_hi: (vhi + 3.0).min(V_EGO_MAX),
        });
    };
    for k in 0..5 {
        let lo = 6.0 * k as f64;
        push(Family::Keep, lo, lo + 6.0, -0.8, 0.8, 0.0);
    }
    for (family, ylo, yhi) in [(Family::Left, 2.9, 4.5), (Family::Right, -4.5, -2.9)] {
        for k in 0..4 {
            let lo = 8.0 + 5.5 * k as f64;
            push(family, lo, lo + 5.5, ylo, yhi, 5.0);
        }
    }
    bins
}

/// Per-interval reachable set in the body frame:
/// `<c_base + C·v0 + A·p, G>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntervalSet {
    pub c_base: [f64; 2],
    #[serde(rename = "C")]
    pub c_v0: [f64; 2],
    #[serde(rename = "A")]
    pub a: [[f64; 2]; 2],
    #[serde(rename = "G")]
    pub g: Vec<[f64; 2]>,
}

impl IntervalSet {
    pub fn c_base(&self) -> Vec2 {
        Vec2::new(self.c_base[0], self.c_base[1])
    }

    pub fn c_v0(&self) -> Vec2 {
        Vec2::new(self.c_v0[0], self.c_v0[1])
    }

    pub fn a(&self) -> Mat2 {
        Mat2::new(self.a[0][0], self.a[0][1], self.a[1][0], self.a[1][1])
    }

    pub fn generators(&self) -> Vec<Vec2> {
        self.g.iter().map(|g| Vec2::new(g[0], g[1])).collect()
    }

    pub fn body_center(&self, v0: f64, p: &Vec2) -> Vec2 {
        self.c_base() + self.c_v0() * v0 + self.a() * p
    }

    pub fn body_zonotope(&self, v0: f64, p: &Vec2) -> Zonotope {
        Zonotope::new(self.body_center(v0, p), self.generators())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReachableSet {
    #[serde(flatten)]
    pub bin: BinSpec,
    pub intervals: Vec<IntervalSet>,
}

/// Ego pose at the start of a plan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialState {
    pub x: f64,
    pub y: f64,
    pub h: f64,
    pub v: f64,
}

impl InitialState {
    pub fn pos(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    /// World position and heading of a body-frame state.
    pub fn to_world(&self, s: &BodyState) -> (Vec2, f64) {
        (self.pos() + rotation(self.h) * s.pos, self.h + s.heading)
    }
}

/// World-frame reach-set center as an affine function of `p`:
/// `c_j(z0, p) = base + jac · p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CenterMap {
    pub base: Vec2,
    pub jac: Mat2,
}

impl ReachableSet {
    fn check(&self, z0: &InitialState, p: &Vec2) -> Result<()> {
        if !self.bin.contains_p(p) {
            return Err(Error::ParamOutOfBin {
                p: [p.x, p.y],
                bin: self.bin.id,
            });
        }
        self.check_speed(z0.v)
    }

    pub fn check_speed(&self, v0: f64) -> Result<()> {
        if !self.bin.speed_valid(v0) {
            return Err(Error::SpeedOutOfRange {
                v: v0,
                lo: self.bin.v0_lo,
                hi: self.bin.v0_hi,
                bin: self.bin.id,
            });
        }
        Ok(())
    }

    /// World-frame zonotopes `ξ_j(z0, p)` for every interval.
    pub fn instantiate(&self, z0: &InitialState, p: &Vec2) -> Result<Vec<Zonotope>> {
        self.check(z0, p)?;
        let r = rotation(z0.h);
        Ok(self
            .intervals
            .iter()
            .map(|iv| {
                Zonotope::new(
                    r * iv.body_center(z0.v, p) + z0.pos(),
                    iv.generators().iter().map(|g| r * g).collect(),
                )
            })
            .collect())
    }

    /// Center maps and world-frame generator sets for every interval.
    pub fn world_maps(&self, z0: &InitialState) -> Result<Vec<(CenterMap, Zonotope)>> {
        self.check_speed(z0.v)?;
        let r = rotation(z0.h);
        Ok(self
            .intervals
            .iter()
            .map(|iv| {
                let base = r * (iv.c_base() + iv.c_v0() * z0.v) + z0.pos();
                let shape = Zonotope::new(Vec2::zeros(), iv.generators().iter().map(|g| r * g).collect());
                (
                    CenterMap {
                        base,
                        jac: r * iv.a(),
                    },
                    shape,
                )
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrsFile {
    pub schema_version: u32,
    pub timing: Timing,
    pub footprint: Footprint,
    pub bins: Vec<ReachableSet>,
}

impl FrsFile {
    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let frs: FrsFile = serde_json::from_str(text)?;
        if frs.schema_version != FRS_SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported FRS schema version {} (expected {FRS_SCHEMA_VERSION})",
                frs.schema_version
            )));
        }
        frs.timing.validate()?;
        frs.footprint.validate()?;
        let n = frs.timing.intervals();
        for b in &frs.bins {
            if b.intervals.len() != n {
                return Err(Error::IntervalMismatch {
                    reach: b.intervals.len(),
                    obstacle: n,
                });
            }
        }
        Ok(frs)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    /// The FRS shipped with the crate.
    pub fn builtin() -> Self {
        Self::from_json(include_str!("../data/frs_default.json")).expect("bundled FRS is valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FrsGenConfig {
    pub timing: Timing,
    pub footprint: Footprint,
    /// Samples per parameter dimension used for the affine fit.
    pub fit_per_dim: usize,
    pub fit_subtimes: usize,
    /// Samples per parameter dimension used for the a-posteriori check.
    pub verify_per_dim: usize,
    pub verify_subtimes: usize,
    pub residual_factor: f64,
    /// Covers motion between verification subtimes.
    pub pad: f64,
    pub inflation: f64,
    pub max_rounds: usize,
}

impl Default for FrsGenConfig {
    fn default() -> Self {
        FrsGenConfig {
            timing: Timing::default(),
            footprint: Footprint::default(),
            fit_per_dim: 3,
            fit_subtimes: 11,
            verify_per_dim: 7,
            verify_subtimes: 101,
            residual_factor: 1.5,
            pad: 0.02,
            inflation: 1.1,
            max_rounds: 5,
        }
    }
}

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Samples `(v0, p)` on a tensor grid over the bin.
fn param_grid(bin: &BinSpec, n: usize) -> Vec<(f64, Vec2)> {
    let mut out = Vec::with_capacity(n * n * n);
    for v0 in grid(bin.v0_lo, bin.v0_hi, n) {
        for vt in grid(bin.p_lo[0], bin.p_hi[0], n) {
            for y in grid(bin.p_lo[1], bin.p_hi[1], n) {
                out.push((v0, Vec2::new(vt, y)));
            }
        }
    }
    out
}

fn footprint_half_extent(fp: &Footprint, h: f64) -> Vec2 {
    let (s, c) = h.sin_cos();
    Vec2::new(
        0.5 * (fp.l * c.abs() + fp.w * s.abs()),
        0.5 * (fp.l * s.abs() + fp.w * c.abs()),
    )
}

/// Whether every footprint corner over the sampled `(v0, p, t)` lies in the
/// interval set. Returns the worst facet excess.
fn interval_excess(
    cfg: &FrsGenConfig,
    iv: &IntervalSet,
    samples: &[(f64, Vec2)],
    t0: f64,
    t1: f64,
) -> f64 {
    let mut worst: f64 = 0.0;
    for (v0, p) in samples {
        let z = iv.body_zonotope(*v0, p);
        let gens = z.generators();
        let normals: Vec<(Vec2, f64)> = gens
            .iter()
            .map(|gi| {
                let n = Vec2::new(-gi.y, gi.x) / gi.norm();
                (n, gens.iter().map(|gk| n.dot(gk).abs()).sum())
            })
            .collect();
        for k in 0..cfg.verify_subtimes {
            let t = t0 + (t1 - t0) * k as f64 / (cfg.verify_subtimes - 1).max(1) as f64;
            let s = maneuver_state(&cfg.timing, *v0, *p, t);
            for corner in cfg.footprint.corners(s.pos, s.heading) {
                let d = corner - z.center();
                for (n, reach) in &normals {
                    worst = worst.max(n.dot(&d).abs() - reach);
                }
            }
        }
    }
    worst
}

fn fit_interval(cfg: &FrsGenConfig, bin: &BinSpec, j: usize) -> Result<IntervalSet> {
    let (t0, t1) = cfg.timing.interval_bounds(j);
    let fit = param_grid(bin, cfg.fit_per_dim);

    // Least-squares fit of the chord midpoint against (1, v0, v_t, y_off).
    let mut design = DMatrix::zeros(fit.len(), 4);
    let mut rhs = DMatrix::zeros(fit.len(), 2);
    for (r, (v0, p)) in fit.iter().enumerate() {
        let a = maneuver_state(&cfg.timing, *v0, *p, t0).pos;
        let b = maneuver_state(&cfg.timing, *v0, *p, t1).pos;
        let mid = 0.5 * (a + b);
        design.set_row(r, &nalgebra::RowDVector::from_row_slice(&[1.0, *v0, p.x, p.y]));
        rhs[(r, 0)] = mid.x;
        rhs[(r, 1)] = mid.y;
    }
    let coef = design
        .svd(true, true)
        .solve(&rhs, 1e-12)
        .map_err(|e| Error::Inconsistency(format!("least-squares fit failed: {e}")))?;
    let col = |k: usize| [coef[(k, 0)], coef[(k, 1)]];
    let (cb, cv, cvt, cy) = (col(0), col(1), col(2), col(3));
    let center = |v0: f64, p: &Vec2| {
        Vec2::new(
            cb[0] + cv[0] * v0 + cvt[0] * p.x + cy[0] * p.y,
            cb[1] + cv[1] * v0 + cvt[1] * p.x + cy[1] * p.y,
        )
    };

    // Motion generator: half chord of the bin-center maneuver.
    let vc = 0.5 * (bin.v0_lo + bin.v0_hi);
    let pc = bin.p_center();
    let g_motion = 0.5
        * (maneuver_state(&cfg.timing, vc, pc, t1).pos - maneuver_state(&cfg.timing, vc, pc, t0).pos);
    let motion_len2 = g_motion.norm_squared();

    let mut half = Vec2::zeros();
    for (v0, p) in &fit {
        let c = center(*v0, p);
        for k in 0..cfg.fit_subtimes {
            let t = t0 + (t1 - t0) * k as f64 / (cfg.fit_subtimes - 1).max(1) as f64;
            let s = maneuver_state(&cfg.timing, *v0, *p, t);
            let r = s.pos - c;
            let beta = if motion_len2 > 0.0 {
                (r.dot(&g_motion) / motion_len2).clamp(-1.0, 1.0)
            } else {
                0.0
            };
            let rem = r - beta * g_motion;
            let ext = footprint_half_extent(&cfg.footprint, s.heading);
            half.x = half.x.max(cfg.residual_factor * rem.x.abs() + ext.x);
            half.y = half.y.max(cfg.residual_factor * rem.y.abs() + ext.y);
        }
    }
    half += Vec2::new(cfg.pad, cfg.pad);

    let verify = param_grid(bin, cfg.verify_per_dim);
    let mut excess = f64::INFINITY;
    for _round in 0..=cfg.max_rounds {
        let mut g = Vec::with_capacity(3);
        if motion_len2 > 0.0 {
            g.push([g_motion.x, g_motion.y]);
        }
        g.push([half.x, 0.0]);
        g.push([0.0, half.y]);
        let iv = IntervalSet {
            c_base: cb,
            c_v0: cv,
            a: [[cvt[0], cy[0]], [cvt[1], cy[1]]],
            g,
        };
        excess = interval_excess(cfg, &iv, &verify, t0, t1);
        if excess <= 0.0 {
            return Ok(iv);
        }
        half *= cfg.inflation;
    }
    Err(Error::ContainmentFailed {
        bin: bin.id,
        interval: j,
        rounds: cfg.max_rounds,
        excess,
    })
}

/// Builds the reachable sets of all bins. Deterministic; bins are processed
/// in parallel.
pub fn generate_frs(cfg: &FrsGenConfig, bins: &[BinSpec]) -> Result<FrsFile> {
    cfg.timing.validate()?;
    cfg.footprint.validate()?;
    let n = cfg.timing.intervals();
    let sets: Result<Vec<ReachableSet>> = bins
        .par_iter()
        .map(|bin| {
            let intervals = (0..n).map(|j| fit_interval(cfg, bin, j)).collect::<Result<_>>()?;
            Ok(ReachableSet {
                bin: *bin,
                intervals,
            })
        })
        .collect();
    Ok(FrsFile {
        schema_version: FRS_SCHEMA_VERSION,
        timing: cfg.timing,
        footprint: cfg.footprint,
        bins: sets?,
    })
}

/// Obstacle pose and velocity at sensing time. Obstacles keep their lane, so
/// the footprint is axis-aligned.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObstacleState {
    pub id: usize,
    pub pos: Vec2,
    pub vel: Vec2,
    pub l: f64,
    pub w: f64,
}

impl ObstacleState {
    pub fn position_at(&self, t: f64) -> Vec2 {
        self.pos + self.vel * t
    }

    pub fn footprint(&self) -> Footprint {
        Footprint { l: self.l, w: self.w }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObstaclePrediction {
    pub id: usize,
    pub source: ObstacleState,
    /// `ϑ(j, k)` for every interval of the plan.
    pub intervals: Vec<Zonotope>,
}

/// Constant-velocity sweep of an obstacle sensed `t_plan` seconds before the
/// plan starts. Returns `None` when the obstacle is beyond the sensor radius.
pub fn predict_obstacle(
    obs: &ObstacleState,
    timing: &Timing,
    ego_pos: &Vec2,
    sensor_radius: f64,
) -> Option<ObstaclePrediction> {
    if (obs.pos - ego_pos).norm() > sensor_radius {
        return None;
    }
    let box_gens = [Vec2::new(0.5 * obs.l, 0.0), Vec2::new(0.0, 0.5 * obs.w)];
    let intervals = (0..timing.intervals())
        .map(|j| {
            let (a, b) = timing.interval_bounds(j);
            let mid = timing.t_plan + 0.5 * (a + b);
            let mut gens = vec![obs.vel * (0.5 * timing.dt)];
            gens.extend_from_slice(&box_gens);
            Zonotope::new(obs.position_at(mid), gens)
        })
        .collect();
    Some(ObstaclePrediction {
        id: obs.id,
        source: *obs,
        intervals,
    })
}

/// The smallest sensor radius for which every obstacle that can reach the
/// ego's reachable sets within the horizon is sensed.
pub fn required_sensor_radius(timing: &Timing, v_ego_max: f64, v_obs_max: f64, fp: &Footprint) -> f64 {
    (timing.t_f + timing.t_plan) * (v_ego_max + v_obs_max) + fp.half_diagonal()
}
