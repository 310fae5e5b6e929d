//! C interface to the zonoplan planner.
//!
//! Every function returns a [`ZpStatus`]. On failure the message is available
//! from [`zp_last_error`] on the same thread until the next call. Strings
//! handed out by the library must be released with [`zp_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use zonoplan::cli::plan_once;
use zonoplan::config::RunConfig;
use zonoplan::distance::signed_distance_zonotopes;
use zonoplan::frs::FrsFile;
use zonoplan::sim::{Scenario, Simulator};
use zonoplan::{Error, Vec2, Zonotope};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZpStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidJson = 3,
    Config = 4,
    Runtime = 5,
    Panic = 6,
}

/// Planner with its reachable sets and run configuration.
pub struct ZpPlanner {
    frs: FrsFile,
    cfg: RunConfig,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn fail(status: ZpStatus, msg: impl Into<String>) -> ZpStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> ZpStatus {
    let status = match e {
        Error::Config(_) => ZpStatus::Config,
        Error::Json(_) => ZpStatus::InvalidJson,
        _ => ZpStatus::Runtime,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> ZpStatus) -> ZpStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(ZpStatus::Panic, format!("panic: {msg}"))
        }
    }
}

unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, ZpStatus> {
    if s.is_null() {
        return Err(fail(ZpStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(ZpStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn write_json(out: *mut *mut c_char, json: String) -> ZpStatus {
    match CString::new(json) {
        Ok(s) => {
            *out = s.into_raw();
            ZpStatus::Ok
        }
        Err(_) => fail(ZpStatus::Runtime, "output contains a NUL byte"),
    }
}

unsafe fn read_scenario(json: *const c_char) -> Result<Scenario, ZpStatus> {
    let text = read_str(json, "scenario_json")?;
    serde_json::from_str(text).map_err(|e| fail(ZpStatus::InvalidJson, format!("scenario: {e}")))
}

unsafe fn read_points<'a>(ptr: *const f64, n: usize, what: &str) -> Result<&'a [f64], ZpStatus> {
    if n == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(fail(ZpStatus::NullArgument, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(ptr, 2 * n))
}

/// Message of the last failed call on this thread, empty after a success.
/// The pointer stays valid until the next library call on this thread.
#[no_mangle]
pub extern "C" fn zp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Releases a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn zp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Creates a planner from a JSON run configuration. A null `config_json`
/// selects the defaults and the bundled reachable sets.
///
/// # Safety
/// `config_json` is null or a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn zp_planner_new(config_json: *const c_char, out: *mut *mut ZpPlanner) -> ZpStatus {
    guard(|| {
        if out.is_null() {
            return fail(ZpStatus::NullArgument, "out is null");
        }
        let mut cfg = if config_json.is_null() {
            RunConfig::default()
        } else {
            let text = match read_str(config_json, "config_json") {
                Ok(t) => t,
                Err(s) => return s,
            };
            match serde_json::from_str::<RunConfig>(text) {
                Ok(c) => c,
                Err(e) => return fail(ZpStatus::Config, format!("config: {e}")),
            }
        };
        let frs = match cfg.resolve_frs().and_then(|frs| cfg.validate(&frs).map(|_| frs)) {
            Ok(f) => f,
            Err(e) => return from_error(e),
        };
        *out = Box::into_raw(Box::new(ZpPlanner { frs, cfg }));
        ZpStatus::Ok
    })
}

/// Destroys a planner. Null is ignored.
///
/// # Safety
/// `planner` comes from [`zp_planner_new`] and is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn zp_planner_free(planner: *mut ZpPlanner) {
    if !planner.is_null() {
        drop(Box::from_raw(planner));
    }
}

/// Number of maneuver bins in the planner's reachable sets.
///
/// # Safety
/// `planner` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn zp_planner_bin_count(planner: *const ZpPlanner, out: *mut usize) -> ZpStatus {
    guard(|| {
        let (Some(p), false) = (planner.as_ref(), out.is_null()) else {
            return fail(ZpStatus::NullArgument, "planner or out is null");
        };
        *out = p.frs.bins.len();
        ZpStatus::Ok
    })
}

/// Plans once from the scenario's initial state and writes a JSON report
/// to `out_json`.
///
/// # Safety
/// `planner` is a live handle, `scenario_json` a NUL-terminated string and
/// `out_json` writable. Free the result with [`zp_string_free`].
#[no_mangle]
pub unsafe extern "C" fn zp_plan_json(
    planner: *const ZpPlanner,
    scenario_json: *const c_char,
    out_json: *mut *mut c_char,
) -> ZpStatus {
    guard(|| {
        let (Some(p), false) = (planner.as_ref(), out_json.is_null()) else {
            return fail(ZpStatus::NullArgument, "planner or out_json is null");
        };
        let sc = match read_scenario(scenario_json) {
            Ok(s) => s,
            Err(s) => return s,
        };
        match plan_once(&p.frs, &p.cfg, &sc).and_then(|r| serde_json::to_string(&r).map_err(Error::from)) {
            Ok(json) => write_json(out_json, json),
            Err(e) => from_error(e),
        }
    })
}

/// Runs one closed-loop trial and writes the trial result as JSON.
///
/// # Safety
/// Same contract as [`zp_plan_json`].
#[no_mangle]
pub unsafe extern "C" fn zp_simulate_json(
    planner: *const ZpPlanner,
    scenario_json: *const c_char,
    out_json: *mut *mut c_char,
) -> ZpStatus {
    guard(|| {
        let (Some(p), false) = (planner.as_ref(), out_json.is_null()) else {
            return fail(ZpStatus::NullArgument, "planner or out_json is null");
        };
        let sc = match read_scenario(scenario_json) {
            Ok(s) => s,
            Err(s) => return s,
        };
        let result = Simulator::new(&p.frs, p.cfg.planner, p.cfg.sim)
            .and_then(|sim| sim.run_trial(&sc))
            .and_then(|r| serde_json::to_string(&r).map_err(Error::from));
        match result {
            Ok(json) => write_json(out_json, json),
            Err(e) => from_error(e),
        }
    })
}

/// Signed distance between two zonotopes given as a center `[x, y]` and
/// `n` generators stored as interleaved `x, y` pairs. Negative values are
/// penetration depths.
///
/// # Safety
/// Centers point to 2 doubles and generator arrays to `2 * n` doubles.
#[no_mangle]
pub unsafe extern "C" fn zp_signed_distance(
    center_a: *const f64,
    gens_a: *const f64,
    n_a: usize,
    center_b: *const f64,
    gens_b: *const f64,
    n_b: usize,
    out: *mut f64,
) -> ZpStatus {
    guard(|| {
        if out.is_null() || center_a.is_null() || center_b.is_null() {
            return fail(ZpStatus::NullArgument, "center or out is null");
        }
        let zonotope = |c: *const f64, g: *const f64, n: usize, what: &str| -> Result<Zonotope, ZpStatus> {
            let c = std::slice::from_raw_parts(c, 2);
            let g = read_points(g, n, what)?;
            let gens = g.chunks_exact(2).map(|v| Vec2::new(v[0], v[1])).collect();
            Ok(Zonotope::new(Vec2::new(c[0], c[1]), gens))
        };
        let (a, b) = match (zonotope(center_a, gens_a, n_a, "gens_a"), zonotope(center_b, gens_b, n_b, "gens_b")) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        match signed_distance_zonotopes(&a, std::slice::from_ref(&b)) {
            Ok(r) => {
                *out = r.value;
                ZpStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}
