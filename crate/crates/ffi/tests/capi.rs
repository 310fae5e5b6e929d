use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::ptr;

use zonoplan::sim::{generate_scenario, ScenarioConfig};
use zonoplan_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(zp_last_error()) }.to_string_lossy().into_owned()
}

fn take(s: *mut c_char) -> serde_json::Value {
    let v = serde_json::from_str(unsafe { CStr::from_ptr(s) }.to_str().unwrap()).unwrap();
    unsafe { zp_string_free(s) };
    v
}

fn planner(config: Option<&str>) -> *mut ZpPlanner {
    let cfg = config.map(|c| CString::new(c).unwrap());
    let mut p = ptr::null_mut();
    let st = unsafe { zp_planner_new(cfg.as_ref().map_or(ptr::null(), |c| c.as_ptr()), &mut p) };
    assert_eq!(st, ZpStatus::Ok, "{}", last_error());
    p
}

fn scenario_json(seed: u64, v: f64) -> CString {
    let mut sc = generate_scenario(seed, &ScenarioConfig::default());
    sc.ego.v = v;
    CString::new(serde_json::to_string(&sc).unwrap()).unwrap()
}

#[test]
fn plan_and_simulate_roundtrip() {
    let p = planner(None);
    let mut bins = 0;
    assert_eq!(unsafe { zp_planner_bin_count(p, &mut bins) }, ZpStatus::Ok);
    assert_eq!(bins, 13);

    let mut out = ptr::null_mut();
    assert_eq!(unsafe { zp_plan_json(p, scenario_json(3, 20.0).as_ptr(), &mut out) }, ZpStatus::Ok);
    let report = take(out);
    assert!(report["feasible"].is_boolean());
    assert_eq!(last_error(), "");

    let mut out = ptr::null_mut();
    assert_eq!(unsafe { zp_simulate_json(p, scenario_json(1, 0.0).as_ptr(), &mut out) }, ZpStatus::Ok);
    let trial = take(out);
    assert_ne!(trial["outcome"], "crash");
    unsafe { zp_planner_free(p) };
}

#[test]
fn errors_map_to_status_codes() {
    let mut p = ptr::null_mut();
    let bad = CString::new(r#"{"planner": {"max_iters": 3}}"#).unwrap();
    assert_eq!(unsafe { zp_planner_new(bad.as_ptr(), &mut p) }, ZpStatus::Config);
    assert!(last_error().contains("max_iters"));
    assert!(p.is_null());
    assert_eq!(unsafe { zp_planner_new(ptr::null(), ptr::null_mut()) }, ZpStatus::NullArgument);

    let p = planner(Some(r#"{"planner": {"max_iter": 5}}"#));
    let mut out = ptr::null_mut();
    let junk = CString::new("{").unwrap();
    assert_eq!(unsafe { zp_plan_json(p, junk.as_ptr(), &mut out) }, ZpStatus::InvalidJson);
    assert_eq!(unsafe { zp_plan_json(p, ptr::null(), &mut out) }, ZpStatus::NullArgument);
    // Trials must start at rest.
    assert_eq!(unsafe { zp_simulate_json(p, scenario_json(0, 12.0).as_ptr(), &mut out) }, ZpStatus::Config);
    assert!(out.is_null());
    unsafe {
        zp_planner_free(p);
        zp_planner_free(ptr::null_mut());
        zp_string_free(ptr::null_mut());
    }
}

#[test]
fn signed_distance_of_boxes() {
    let ca = [0.0, 0.0];
    let ga = [1.0, 0.0, 0.0, 1.0];
    let cb = [5.0, 0.0];
    let gb = [1.0, 0.0, 0.0, 2.0];
    let mut d = f64::NAN;
    let st = unsafe { zp_signed_distance(ca.as_ptr(), ga.as_ptr(), 2, cb.as_ptr(), gb.as_ptr(), 2, &mut d) };
    assert_eq!(st, ZpStatus::Ok);
    assert!((d - 3.0).abs() < 1e-12);
    let cb = [1.5, 0.0];
    unsafe { zp_signed_distance(ca.as_ptr(), ga.as_ptr(), 2, cb.as_ptr(), gb.as_ptr(), 2, &mut d) };
    assert!((d + 0.5).abs() < 1e-12);
    let st = unsafe { zp_signed_distance(ca.as_ptr(), ptr::null(), 2, cb.as_ptr(), gb.as_ptr(), 2, &mut d) };
    assert_eq!(st, ZpStatus::NullArgument);
    // A point against the box spanning x in [0.5, 2.5].
    let st = unsafe { zp_signed_distance(ca.as_ptr(), ptr::null(), 0, cb.as_ptr(), gb.as_ptr(), 2, &mut d) };
    assert_eq!(st, ZpStatus::Ok);
    assert!((d - 0.5).abs() < 1e-12);
}

#[test]
fn header_is_valid_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/zonoplan.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in ["zp_planner_new", "zp_plan_json", "zp_simulate_json", "zp_signed_distance", "zp_last_error", "zp_string_free"] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"zonoplan.h\"\nint main(void) { ZpPlanner *p = 0; return zp_planner_new(0, &p) == ZP_STATUS_OK ? 0 : 1; }\n",
    )
    .unwrap();
    let status = std::process::Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(header.parent().unwrap())
        .arg(&src)
        .status();
    match status {
        Ok(s) => assert!(s.success(), "header does not compile"),
        Err(_) => eprintln!("no C compiler found; syntax check skipped"),
    }
}
