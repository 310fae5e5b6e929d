mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zonoplan::bench::{generate_instance, BenchConfig};
use zonoplan::frs::{
    default_bins, generate_frs, maneuver_state, predict_obstacle, required_sensor_radius, FrsFile, FrsGenConfig,
    InitialState, ObstacleState, Timing,
};
use zonoplan::planner::{high_level_planner, verify_plan, Backend, PlanRequest, Planner, PlannerConfig, Road};
use zonoplan::{Error, Vec2};

fn random_state<R: Rng>(rng: &mut R, frs: &FrsFile, bin: usize) -> (InitialState, Vec2) {
    let b = frs.bins[bin].bin;
    let v = rng.gen_range(b.v0_lo..=b.v0_hi);
    let z0 = InitialState {
        x: rng.gen_range(-50.0..50.0),
        y: rng.gen_range(0.0..11.1),
        h: rng.gen_range(-0.3..0.3),
        v,
    };
    let p = Vec2::new(rng.gen_range(b.p_lo[0]..=b.p_hi[0]), rng.gen_range(b.p_lo[1]..=b.p_hi[1]));
    (z0, p)
}

#[test]
fn maneuver_reaches_targets() {
    let t = Timing::default();
    let p = Vec2::new(20.0, -3.7);
    let mid = maneuver_state(&t, 14.0, p, t.t_m);
    assert!((mid.speed - 20.0).abs() < 1e-12);
    assert!((mid.pos.y + 3.7).abs() < 1e-12);
    assert!((mid.pos.x - 0.5 * t.t_m * (14.0 + 20.0)).abs() < 1e-9);
    assert_eq!(mid.lateral_rate, 0.0);
    let end = maneuver_state(&t, 14.0, p, t.t_f);
    assert_eq!(end.speed, 0.0);
    let later = maneuver_state(&t, 14.0, p, t.t_f + 5.0);
    assert_eq!(later.pos, end.pos);
}

#[test]
fn bundled_frs_is_reproducible() {
    let fresh = generate_frs(&FrsGenConfig::default(), &default_bins()).unwrap();
    let bundled = FrsFile::builtin();
    assert_eq!(fresh.bins.len(), 13);
    assert_eq!(fresh.timing, bundled.timing);
    for (a, b) in fresh.bins.iter().zip(&bundled.bins) {
        assert_eq!(a.bin, b.bin);
        for (ia, ib) in a.intervals.iter().zip(&b.intervals) {
            let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * x.abs().max(1.0);
            assert!(ia.g.iter().flatten().zip(ib.g.iter().flatten()).all(|(x, y)| close(*x, *y)));
            assert!(ia.c_base.iter().zip(&ib.c_base).all(|(x, y)| close(*x, *y)));
        }
    }
}

#[test]
fn frs_json_roundtrip_and_schema() {
    let frs = FrsFile::builtin();
    let back = FrsFile::from_json(&frs.to_json().unwrap()).unwrap();
    assert_eq!(back, frs);
    let bad = frs.to_json().unwrap().replacen("\"schema_version\": 1", "\"schema_version\": 99", 1);
    assert!(FrsFile::from_json(&bad).is_err());
}

#[test]
fn instantiate_rejects_out_of_bin() {
    let frs = FrsFile::builtin();
    let z0 = InitialState { x: 0.0, y: 5.55, h: 0.0, v: 10.0 };
    assert!(matches!(frs.bins[1].instantiate(&z0, &Vec2::new(100.0, 0.0)), Err(Error::ParamOutOfBin { .. })));
    let fast = InitialState { v: 29.0, ..z0 };
    assert!(matches!(frs.bins[0].instantiate(&fast, &Vec2::new(3.0, 0.0)), Err(Error::SpeedOutOfRange { .. })));
}

#[test]
fn sensor_radius_bound() {
    let frs = FrsFile::builtin();
    let r = required_sensor_radius(&frs.timing, 30.0, 25.0, &frs.footprint);
    let expected = (3.0 + 0.35) * (30.0 + 25.0) + 0.5 * (4.8f64 * 4.8 + 2.2 * 2.2).sqrt();
    assert!((r - expected).abs() < 1e-12);
    assert!(r < 200.0);
}

#[test]
fn far_obstacles_are_not_predicted() {
    let t = Timing::default();
    let o = ObstacleState { id: 0, pos: Vec2::new(250.0, 0.0), vel: Vec2::zeros(), l: 4.8, w: 2.2 };
    assert!(predict_obstacle(&o, &t, &Vec2::zeros(), 200.0).is_none());
    assert!(predict_obstacle(&o, &t, &Vec2::new(60.0, 0.0), 200.0).is_some());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn true_footprint_stays_inside_reach_sets(seed in any::<u64>(), bin in 0usize..13) {
        let frs = FrsFile::builtin();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (z0, p) = random_state(&mut rng, &frs, bin);
        let reach = frs.bins[bin].instantiate(&z0, &p).unwrap();
        for (j, z) in reach.iter().enumerate() {
            let (a, b) = frs.timing.interval_bounds(j);
            for k in 0..=4 {
                let t = a + (b - a) * k as f64 / 4.0;
                let (pos, h) = z0.to_world(&maneuver_state(&frs.timing, z0.v, p, t));
                for c in frs.footprint.corners(pos, h) {
                    prop_assert!(z.contains(&c, 1e-9), "bin {} interval {} t {}", bin, j, t);
                }
            }
        }
    }

    #[test]
    fn predictions_contain_true_obstacle(
        pos in (-100.0..100.0f64, 0.0..11.1f64),
        v in 0.0..25.0f64,
        t_frac in 0.0..1.0f64,
        j in 0usize..30,
    ) {
        let t = Timing::default();
        let o = ObstacleState { id: 3, pos: Vec2::new(pos.0, pos.1), vel: Vec2::new(v, 0.0), l: 4.8, w: 2.2 };
        let pred = predict_obstacle(&o, &t, &Vec2::zeros(), 1e9).unwrap();
        let (a, b) = t.interval_bounds(j);
        let s = a + (b - a) * t_frac;
        let at = o.pos + o.vel * (t.t_plan + s);
        for c in o.footprint().corners(at, 0.0) {
            prop_assert!(pred.intervals[j].contains(&c, 1e-9));
        }
    }

    #[test]
    fn world_maps_agree_with_instantiate(seed in any::<u64>(), bin in 0usize..13) {
        let frs = FrsFile::builtin();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (z0, p) = random_state(&mut rng, &frs, bin);
        let reach = frs.bins[bin].instantiate(&z0, &p).unwrap();
        let maps = frs.bins[bin].world_maps(&z0).unwrap();
        for (z, (map, shape)) in reach.iter().zip(&maps) {
            prop_assert!((z.center() - (map.base + map.jac * p)).norm() < 1e-9);
            prop_assert_eq!(z.generators(), shape.generators());
        }
    }
}

#[test]
fn chosen_plans_clear_every_prediction() {
    let frs = FrsFile::builtin();
    let bench = BenchConfig::default();
    for backend in [Backend::Sdf, Backend::Halfspace] {
        let cfg = PlannerConfig { backend, time_budget: 10.0, ..Default::default() };
        let planner = Planner::new(&frs, bench.road, cfg);
        let mut feasible = 0;
        for index in 0..40 {
            let inst = generate_instance(&bench, 10 + index % 3 * 10, index);
            let preds = inst.predictions(&frs, bench.sensor_radius);
            let wp = inst.waypoint(&frs, &bench.road, &cfg);
            let res = planner.plan(&PlanRequest { z0: inst.z0, predictions: &preds, waypoint: wp }).unwrap();
            if let Some(c) = res.choice {
                feasible += 1;
                // Independent check against every obstacle slice.
                let reach = frs.bins[c.bin].instantiate(&inst.z0, &c.p).unwrap();
                for pred in &preds {
                    for (z, o) in reach.iter().zip(&pred.intervals) {
                        assert!(common::signed_distance_oracle(z, o) > 0.0, "{backend} instance {index}");
                    }
                }
                assert!((verify_plan(&frs.bins[c.bin], &inst.z0, &c.p, &preds).unwrap() - c.clearance).abs() < 1e-12);
                assert!(frs.bins[c.bin].bin.speed_valid(inst.z0.v));
            }
        }
        assert!(feasible > 10, "{backend}: only {feasible} feasible");
    }
}

#[test]
fn planning_is_repeatable() {
    let frs = FrsFile::builtin();
    let bench = BenchConfig::default();
    let cfg = PlannerConfig { time_budget: 10.0, ..Default::default() };
    let planner = Planner::new(&frs, bench.road, cfg);
    let inst = generate_instance(&bench, 30, 4);
    let preds = inst.predictions(&frs, bench.sensor_radius);
    let wp = inst.waypoint(&frs, &bench.road, &cfg);
    let req = PlanRequest { z0: inst.z0, predictions: &preds, waypoint: wp };
    let a = planner.plan(&req).unwrap();
    let b = planner.plan(&req).unwrap();
    assert_eq!(a.choice, b.choice);
    assert_eq!(a.stats.constraint_evals, b.stats.constraint_evals);
}

#[test]
fn waypoint_targets_free_lane() {
    let road = Road::default();
    let ego = InitialState { x: 0.0, y: road.lane_center(1), h: 0.0, v: 20.0 };
    let blocker = ObstacleState { id: 0, pos: Vec2::new(30.0, road.lane_center(1)), vel: Vec2::zeros(), l: 4.8, w: 2.2 };
    let wp = high_level_planner(&road, &ego, 4.8, &[blocker], 20.0, 60.0);
    assert_eq!(wp.lane_id, 0);
    assert_eq!(wp.position, Vec2::new(60.0, road.lane_center(0)));
}
