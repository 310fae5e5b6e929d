//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failed hard gate.

mod common;

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zonoplan::bench::{generate_instance, run_bench, write_counts_csv, BenchConfig, BenchRow};
use zonoplan::cli::simulate;
use zonoplan::config::RunConfig;
use zonoplan::distance::{rdf, signed_distance_zonotopes};
use zonoplan::frs::{maneuver_state, predict_obstacle, FrsFile, InitialState, ObstacleState};
use zonoplan::planner::{Backend, PlanRequest, Planner, PlannerConfig};
use zonoplan::relu::{build_sdf_graph, ParamInput, SdfGraph};
use zonoplan::sim::{generate_scenario, write_results_csv, OutcomeCounts};
use zonoplan::zonotope::enumerate_vertices;
use zonoplan::{Vec2, Zonotope};

const VERTEX_TOL: f64 = 1e-9;
const SDF_TOL: f64 = 1e-9;
const FD_STEP: f64 = 1e-6;
const GRAD_REL_TOL: f64 = 1e-5;
const CONSERVATISM_TOL: f64 = 1e-9;
const MAX_GROWTH_EXPONENT: f64 = 1.5;

struct Report {
    failures: usize,
}

impl Report {
    fn line(&mut self, id: u32, name: &str, pass: bool, detail: String) {
        if !pass {
            self.failures += 1;
        }
        println!("[{}] AC{id} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    }
}

fn width_limit(n: usize) -> usize {
    4 * n.div_ceil(2) + 8
}

fn depth_limit(n: usize) -> usize {
    2 * (n as f64).log2().floor() as usize + 4
}

fn vertex_enumeration(r: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut mismatches = 0;
    for k in 0..10_000 {
        let m = 1 + k % 8;
        let z = common::random_zonotope(&mut rng, m, 10.0, 3.0);
        let poly = enumerate_vertices(&z).expect("generators present");
        if !common::same_cycle(&poly.vertices, &common::hull_of(&z), VERTEX_TOL) {
            mismatches += 1;
        }
    }
    r.line(
        1,
        "vertex enumeration equals corner hull",
        mismatches == 0,
        format!("10000 zonotopes, m in 1..=8, {mismatches} mismatches (tol {VERTEX_TOL:e})"),
    );
}

fn sdf_exactness(r: &mut Report, graphs: &mut Vec<SdfGraph>) {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let (mut worst_graph, mut worst_pos, mut worst_neg) = (0.0f64, 0.0f64, 0.0f64);
    let (mut n_pos, mut n_neg) = (0, 0);
    for k in 0..10_000 {
        let mz = rng.gen_range(1..=6);
        let mo = rng.gen_range(1..=6);
        let z = common::random_zonotope(&mut rng, mz, 6.0, 2.5);
        let mut o = common::random_zonotope(&mut rng, mo, 6.0, 2.5);
        if k % 2 == 0 {
            // Forced overlap: obstacle centered near the reach-set center.
            let off = Vec2::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
            o = o.with_center(z.center() + off);
        }
        let geo = signed_distance_zonotopes(&z, std::slice::from_ref(&o)).unwrap().value;
        let g = build_sdf_graph(&z, std::slice::from_ref(&o)).unwrap();
        worst_graph = worst_graph.max((g.forward(&z.center()) - geo).abs());
        let a = common::hull_of(&z);
        let b = common::hull_of(&o);
        if common::polygons_intersect(&a, &b) {
            n_neg += 1;
            worst_neg = worst_neg.max((geo + common::penetration_depth(&a, &b)).abs());
        } else {
            n_pos += 1;
            worst_pos = worst_pos.max((geo - common::boundary_distance(&a, &b)).abs());
        }
        if k % 50 == 0 {
            graphs.push(g);
        }
    }
    let pass = worst_graph <= SDF_TOL && worst_pos <= SDF_TOL && worst_neg <= SDF_TOL;
    r.line(
        2,
        "signed distance exactness",
        pass,
        format!(
            "10000 pairs ({n_pos} separated, {n_neg} overlapping): graph-geometry {worst_graph:.2e}, \
             separated-oracle {worst_pos:.2e}, penetration-oracle {worst_neg:.2e} (tol {SDF_TOL:e})"
        ),
    );
}

fn network_bounds(r: &mut Report, mut graphs: Vec<SdfGraph>, frs: &FrsFile) {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    // Multi-obstacle graphs over a wide range of segment counts.
    for _ in 0..500 {
        let k = rng.gen_range(1..=8);
        let mz = rng.gen_range(1..=8);
        let z = common::random_zonotope(&mut rng, mz, 5.0, 2.0);
        let obs: Vec<Zonotope> = (0..k)
            .map(|_| {
                let m = rng.gen_range(1..=8);
                common::random_zonotope(&mut rng, m, 20.0, 2.0)
            })
            .collect();
        graphs.push(build_sdf_graph(&z, &obs).unwrap());
    }
    // Graphs the planner builds for its constraints.
    let bench = BenchConfig::default();
    let planner = Planner::new(frs, bench.road, PlannerConfig::default());
    for index in 0..10 {
        let inst = generate_instance(&bench, 30, index);
        let preds = inst.predictions(frs, bench.sensor_radius);
        let wp = inst.waypoint(frs, &bench.road, &planner.cfg);
        let req = PlanRequest { z0: inst.z0, predictions: &preds, waypoint: wp };
        for prob in planner.build_problems(&req).unwrap() {
            graphs.extend(prob.constraints.iter().filter_map(|c| c.graph().cloned()));
        }
    }
    let violations = graphs
        .iter()
        .filter(|g| {
            let n = g.segment_count();
            g.width() > width_limit(n) || g.depth() > depth_limit(n) || g.audit().is_err()
        })
        .count();
    let max_n = graphs.iter().map(SdfGraph::segment_count).max().unwrap_or(0);
    r.line(
        3,
        "network width and depth bounds",
        violations == 0,
        format!("{} graphs audited (N up to {max_n}), {violations} violations", graphs.len()),
    );
}

fn random_config<R: Rng>(rng: &mut R, frs: &FrsFile) -> (usize, InitialState, Vec2) {
    let bin = rng.gen_range(0..frs.bins.len());
    let b = frs.bins[bin].bin;
    let z0 = InitialState {
        x: rng.gen_range(-20.0..20.0),
        y: rng.gen_range(0.0..11.1),
        h: rng.gen_range(-0.2..0.2),
        v: rng.gen_range(b.v0_lo..=b.v0_hi),
    };
    let p = Vec2::new(rng.gen_range(b.p_lo[0]..=b.p_hi[0]), rng.gen_range(b.p_lo[1]..=b.p_hi[1]));
    (bin, z0, p)
}

fn gradient_check(r: &mut Report, frs: &FrsFile) {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let (mut accepted, mut skipped, mut failed) = (0, 0, 0);
    let mut worst = 0.0f64;
    while accepted < 200 {
        let (bin, z0, p) = random_config(&mut rng, frs);
        let maps = frs.bins[bin].world_maps(&z0).unwrap();
        let j = rng.gen_range(0..maps.len());
        let (map, shape) = &maps[j];
        let c = map.base + map.jac * p;
        let mo = rng.gen_range(1..=4);
        let mut o = common::random_zonotope(&mut rng, mo, 1.0, 3.0);
        o = o.with_center(c + Vec2::new(rng.gen_range(-12.0..12.0), rng.gen_range(-6.0..6.0)));
        let g = build_sdf_graph(shape, std::slice::from_ref(&o)).unwrap();
        let input = ParamInput { base: map.base, jac: map.jac, p };
        let (value, grad) = g.forward_backward(&input);
        let at = |q: Vec2| g.forward(&(map.base + map.jac * q));
        let fd = |h: f64| {
            Vec2::new(
                (at(p + Vec2::new(h, 0.0)) - at(p - Vec2::new(h, 0.0))) / (2.0 * h),
                (at(p + Vec2::new(0.0, h)) - at(p - Vec2::new(0.0, h))) / (2.0 * h),
            )
        };
        let near = fd(FD_STEP);
        let wide = fd(FD_STEP * 10.0);
        // Smooth configurations only: away from the zero level set and from
        // kinks, where two stencils of different width agree.
        if value.abs() < 1e-3 || (near - wide).norm() > 1e-6 * near.norm().max(1e-3) {
            skipped += 1;
            continue;
        }
        accepted += 1;
        let rel = (grad - near).norm() / near.norm().max(1e-3);
        worst = worst.max(rel);
        if rel > GRAD_REL_TOL {
            failed += 1;
        }
    }
    r.line(
        4,
        "gradient matches central differences",
        failed == 0,
        format!(
            "200 smooth configurations ({skipped} non-smooth draws skipped), worst relative error {worst:.2e} \
             (h {FD_STEP:e}, tol {GRAD_REL_TOL:e})"
        ),
    );
}

fn conservatism(r: &mut Report, frs: &FrsFile) {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let timing = frs.timing;
    let (mut violations, mut penetrating) = (0, 0);
    let mut worst = f64::INFINITY;
    for _ in 0..1000 {
        let (bin, z0, p) = random_config(&mut rng, frs);
        let t = rng.gen_range(0.0..timing.t_f);
        let (pos, h) = z0.to_world(&maneuver_state(&timing, z0.v, p, t));
        let vel = Vec2::new(rng.gen_range(0.0..25.0), 0.0);
        let target = pos + Vec2::new(rng.gen_range(-10.0..10.0), rng.gen_range(-4.0..4.0));
        let obs = ObstacleState { id: 0, pos: target - vel * (timing.t_plan + t), vel, l: 4.8, w: 2.2 };
        let pred = predict_obstacle(&obs, &timing, &z0.pos(), f64::INFINITY).unwrap();
        let reach = frs.bins[bin].instantiate(&z0, &p).unwrap();
        let (bound, _) = rdf(&reach, &pred.intervals).unwrap();
        let ego = frs.footprint.zonotope(pos, h);
        let truth = obs.footprint().zonotope(target, 0.0);
        let sd = common::signed_distance_oracle(&ego, &truth);
        if sd < 0.0 {
            penetrating += 1;
        }
        worst = worst.min(sd - bound);
        if sd < bound - CONSERVATISM_TOL {
            violations += 1;
        }
    }
    r.line(
        5,
        "reachability distance is conservative",
        violations == 0,
        format!(
            "1000 (z0, p, t) samples ({penetrating} with true overlap), min(true − rdf) {worst:.3e}, \
             {violations} violations (tol {CONSERVATISM_TOL:e})"
        ),
    );
}

fn safety(r: &mut Report, frs: &FrsFile) {
    let cfg = RunConfig::default();
    let scenarios: Vec<_> = (0..50).map(|s| generate_scenario(s, &cfg.scenario)).collect();
    let start = Instant::now();
    let results = simulate(frs, &cfg, &scenarios, None).unwrap();
    let counts = OutcomeCounts::of(&results);
    let audit: usize = results.iter().map(|t| t.sensing_violations).sum();
    r.line(
        6,
        "closed-loop safety",
        counts.crash == 0 && audit == 0,
        format!(
            "50 scenarios: {} crash, {} success, {} safe_stop, {audit} sensing-audit violations ({:.1} s); \
             advisory success >= safe_stop: {}",
            counts.crash,
            counts.success,
            counts.safe_stop,
            start.elapsed().as_secs_f64(),
            if counts.success >= counts.safe_stop { "met" } else { "not met" }
        ),
    );
}

fn bench_rows(frs: &FrsFile) -> (Vec<BenchRow>, Vec<usize>) {
    let cfg = BenchConfig { instances: 100, ..Default::default() };
    let rows = run_bench(frs, &PlannerConfig::default(), &cfg, &[Backend::Sdf, Backend::Halfspace]).unwrap();
    (rows, cfg.obstacle_counts)
}

fn scaling(r: &mut Report, rows: &[BenchRow], counts: &[usize]) {
    let exponent = |backend: Backend| {
        let medians: Vec<f64> = counts
            .iter()
            .map(|&n| {
                let times: Vec<f64> = rows
                    .iter()
                    .filter(|x| x.backend == backend && x.n_obstacles == n)
                    .map(|x| x.solve_time)
                    .collect();
                common::median(&times)
            })
            .collect();
        let xs: Vec<f64> = counts.iter().map(|&n| n as f64).collect();
        (common::log_log_slope(&xs, &medians), medians)
    };
    let (sdf, sdf_med) = exponent(Backend::Sdf);
    let (hs, hs_med) = exponent(Backend::Halfspace);
    let ms = |v: &[f64]| v.iter().map(|t| format!("{:.2}", t * 1e3)).collect::<Vec<_>>().join("/");
    r.line(
        7,
        "runtime growth with obstacle count",
        sdf < MAX_GROWTH_EXPONENT && sdf < hs,
        format!(
            "exponent sdf {sdf:.3} vs halfspace {hs:.3} (limit {MAX_GROWTH_EXPONENT}); median ms over N={counts:?}: \
             sdf {} halfspace {}",
            ms(&sdf_med),
            ms(&hs_med)
        ),
    );
}

fn eval_economy(r: &mut Report, rows: &[BenchRow]) {
    let mean = |backend: Backend| {
        let v: Vec<f64> = rows
            .iter()
            .filter(|x| x.backend == backend)
            .map(|x| x.constraint_evals as f64)
            .collect();
        (v.iter().sum::<f64>() / v.len() as f64, v.len())
    };
    let (sdf, n_sdf) = mean(Backend::Sdf);
    let (hs, n_hs) = mean(Backend::Halfspace);
    r.line(
        8,
        "constraint evaluations per planning iteration",
        n_sdf == 500 && n_hs == 500 && sdf < hs,
        format!("max_iter 15, {n_sdf} paired instances: sdf mean {sdf:.1} vs halfspace mean {hs:.1}"),
    );
}

fn determinism(r: &mut Report, frs: &FrsFile) {
    let cfg = RunConfig::default();
    let scenarios: Vec<_> = (0..10).map(|s| generate_scenario(s, &cfg.scenario)).collect();
    let sim_csv = || {
        let mut buf = Vec::new();
        write_results_csv(&simulate(frs, &cfg, &scenarios, None).unwrap(), &mut buf).unwrap();
        buf
    };
    let bench = BenchConfig { instances: 10, ..Default::default() };
    let bench_csv = || {
        let rows = run_bench(frs, &PlannerConfig::default(), &bench, &[Backend::Sdf, Backend::Halfspace]).unwrap();
        let mut buf = Vec::new();
        write_counts_csv(&rows, &mut buf).unwrap();
        buf
    };
    let sim_same = sim_csv() == sim_csv();
    let bench_same = bench_csv() == bench_csv();
    r.line(
        9,
        "byte-identical reruns",
        sim_same && bench_same,
        format!("simulate results.csv identical: {sim_same}; bench.csv identical: {bench_same}"),
    );
}

fn main() {
    let frs = FrsFile::builtin();
    let mut r = Report { failures: 0 };
    let mut graphs = Vec::new();
    vertex_enumeration(&mut r);
    sdf_exactness(&mut r, &mut graphs);
    network_bounds(&mut r, graphs, &frs);
    gradient_check(&mut r, &frs);
    conservatism(&mut r, &frs);
    safety(&mut r, &frs);
    let (rows, counts) = bench_rows(&frs);
    scaling(&mut r, &rows, &counts);
    eval_economy(&mut r, &rows);
    determinism(&mut r, &frs);
    if r.failures > 0 {
        println!("{} acceptance criteria failed", r.failures);
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
