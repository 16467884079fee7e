//! C ABI for craternav.
//!
//! Every function returns a [`CnStatus`]; on failure a message is kept per
//! thread and read with [`cn_last_error`]. Catalogs and runs are opaque handles
//! created by `cn_*_load`/`cn_*_generate`/`cn_run_scenario` and released with
//! the matching `*_free`. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::BufReader;
use std::panic::{catch_unwind, AssertUnwindSafe};

use craternav::catalog::{generate_synthetic, load_catalog, CraterCatalog, LoadOptions, SyntheticSpec};
use craternav::config::parse_config;
use craternav::estimator::{centroid_guess, estimate_attitude_quest, solve_position, NlsSettings, PositionStatus};
use craternav::scenario::{rmse_window, run_scenario, ScenarioConfig, ScenarioRun};
use craternav::{Error, Quaternion, Vec3};

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CnStatus {
    Ok = 0,
    /// A required pointer was null.
    NullPointer = 1,
    /// An argument was out of range or malformed.
    InvalidArgument = 2,
    /// A file, catalog or configuration could not be used.
    InputData = 3,
    /// The estimation problem has too little information.
    Underdetermined = 4,
    /// The computation failed.
    Runtime = 5,
    /// An internal panic was caught.
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CnVec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// Scalar-first, Hamilton convention; `q_ib` maps body to inertial.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CnQuaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CnPositionStatus {
    Converged = 0,
    Skipped = 1,
    Diverged = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CnSyntheticSpec {
    pub count: usize,
    pub d_min_km: f64,
    pub d_max_km: f64,
    pub exponent: f64,
    pub seed: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CnPositionFix {
    pub position: CnVec3,
    pub status: CnPositionStatus,
    pub iterations: usize,
    pub final_step_norm: f64,
}

/// One epoch of a scenario run. Estimate fields are valid only when the
/// matching `has_*` flag is nonzero.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CnStep {
    pub t: f64,
    pub position: CnVec3,
    pub velocity: CnVec3,
    pub attitude: CnQuaternion,
    pub altitude_km: f64,
    pub visible: usize,
    pub identified: usize,
    pub used: usize,
    pub status: CnPositionStatus,
    pub has_position: u8,
    pub has_attitude: u8,
    pub est_position: CnVec3,
    pub est_attitude: CnQuaternion,
    /// Metres, MCI axes.
    pub position_error_m: CnVec3,
    /// φ, θ, ψ in degrees.
    pub attitude_error_deg: CnVec3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CnRmse {
    pub position_m: CnVec3,
    pub attitude_deg: CnVec3,
    pub converged_steps: usize,
    pub skipped_steps: usize,
}

/// Opaque crater catalog.
pub struct CnCatalog(CraterCatalog);

/// Opaque scenario run.
pub struct CnRun(ScenarioRun);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> CnStatus {
    match e {
        Error::Underdetermined(_) => CnStatus::Underdetermined,
        Error::InvalidParameter(_) | Error::Domain(_) | Error::DegenerateOrbit => CnStatus::InvalidArgument,
        e if e.is_input_error() => CnStatus::InputData,
        _ => CnStatus::Runtime,
    }
}

fn fail(status: CnStatus, msg: &str) -> CnStatus {
    set_error(msg);
    status
}

/// Runs `f`, recording its error message and converting panics.
fn guard<F: FnOnce() -> Result<(), CnStatus>>(f: F) -> CnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            CnStatus::Ok
        }
        Ok(Err(status)) => status,
        Err(_) => fail(CnStatus::Panic, "internal panic"),
    }
}

fn check(r: Result<(), Error>) -> Result<(), CnStatus> {
    r.map_err(|e| fail(status_of(&e), &e.to_string()))
}

fn lift<T>(r: craternav::Result<T>) -> Result<T, CnStatus> {
    r.map_err(|e| fail(status_of(&e), &e.to_string()))
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), CnStatus> {
    if p.is_null() {
        Err(fail(CnStatus::NullPointer, &format!("`{name}` is null")))
    } else {
        Ok(())
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, CnStatus> {
    non_null(p, name)?;
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(CnStatus::InvalidArgument, &format!("`{name}` is not valid UTF-8")))
}

unsafe fn slice_arg<'a, T>(p: *const T, n: usize, name: &str) -> Result<&'a [T], CnStatus> {
    if n == 0 {
        return Ok(&[]);
    }
    non_null(p, name)?;
    Ok(std::slice::from_raw_parts(p, n))
}

impl From<Vec3> for CnVec3 {
    fn from(v: Vec3) -> Self {
        CnVec3 { x: v.x, y: v.y, z: v.z }
    }
}

impl From<CnVec3> for Vec3 {
    fn from(v: CnVec3) -> Self {
        Vec3::new(v.x, v.y, v.z)
    }
}

impl From<Quaternion> for CnQuaternion {
    fn from(q: Quaternion) -> Self {
        CnQuaternion {
            w: q.w,
            x: q.x,
            y: q.y,
            z: q.z,
        }
    }
}

impl From<PositionStatus> for CnPositionStatus {
    fn from(s: PositionStatus) -> Self {
        match s {
            PositionStatus::Converged => CnPositionStatus::Converged,
            PositionStatus::SkippedInsufficientCraters => CnPositionStatus::Skipped,
            PositionStatus::Diverged => CnPositionStatus::Diverged,
        }
    }
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cn_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

/// Message of the last failed call on this thread, empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn cn_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Loads a canonical catalog CSV (`lat,lon,diameter_km` in degrees and km).
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn cn_catalog_load_csv(path: *const c_char, out: *mut *mut CnCatalog) -> CnStatus {
    guard(|| {
        non_null(out, "out")?;
        let path = str_arg(path, "path")?;
        let file = File::open(path).map_err(|e| fail(CnStatus::InputData, &format!("{path}: {e}")))?;
        let opts = LoadOptions {
            source_name: Some(path.to_string()),
            ..Default::default()
        };
        let (cat, _) = lift(load_catalog(BufReader::new(file), &opts))?;
        *out = Box::into_raw(Box::new(CnCatalog(cat)));
        Ok(())
    })
}

/// Defaults calibrated to the lunar size distribution.
#[no_mangle]
pub extern "C" fn cn_synthetic_spec_lunar(seed: u64) -> CnSyntheticSpec {
    let s = SyntheticSpec::lunar(seed);
    CnSyntheticSpec {
        count: s.count,
        d_min_km: s.d_min_km,
        d_max_km: s.d_max_km,
        exponent: s.exponent,
        seed: s.seed,
    }
}

/// Generates a synthetic catalog.
///
/// # Safety
/// `spec` must point to a valid spec and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn cn_catalog_generate(spec: *const CnSyntheticSpec, out: *mut *mut CnCatalog) -> CnStatus {
    guard(|| {
        non_null(spec, "spec")?;
        non_null(out, "out")?;
        let s = &*spec;
        let cat = lift(generate_synthetic(&SyntheticSpec {
            count: s.count,
            d_min_km: s.d_min_km,
            d_max_km: s.d_max_km,
            exponent: s.exponent,
            seed: s.seed,
        }))?;
        *out = Box::into_raw(Box::new(CnCatalog(cat)));
        Ok(())
    })
}

/// Number of craters, 0 for a null handle.
///
/// # Safety
/// `catalog` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cn_catalog_len(catalog: *const CnCatalog) -> usize {
    catalog.as_ref().map_or(0, |c| c.0.len())
}

/// Releases a catalog. Null is ignored.
///
/// # Safety
/// `catalog` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cn_catalog_free(catalog: *mut CnCatalog) {
    if !catalog.is_null() {
        drop(Box::from_raw(catalog));
    }
}

/// Runs one descent. `config_toml` uses the same keys as the command-line
/// config file; null means all defaults.
///
/// # Safety
/// `catalog` must be a live handle, `config_toml` null or NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cn_run_scenario(
    catalog: *const CnCatalog,
    config_toml: *const c_char,
    out: *mut *mut CnRun,
) -> CnStatus {
    guard(|| {
        non_null(catalog, "catalog")?;
        non_null(out, "out")?;
        let cfg = if config_toml.is_null() {
            ScenarioConfig::default()
        } else {
            lift(parse_config(str_arg(config_toml, "config_toml")?))?
        };
        let run = lift(run_scenario(&cfg, &(*catalog).0))?;
        *out = Box::into_raw(Box::new(CnRun(run)));
        Ok(())
    })
}

/// Number of recorded steps, 0 for a null handle.
///
/// # Safety
/// `run` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cn_run_len(run: *const CnRun) -> usize {
    run.as_ref().map_or(0, |r| r.0.records.len())
}

/// Copies step `index` into `out`.
///
/// # Safety
/// `run` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cn_run_step(run: *const CnRun, index: usize, out: *mut CnStep) -> CnStatus {
    guard(|| {
        non_null(run, "run")?;
        non_null(out, "out")?;
        let records = &(*run).0.records;
        let r = records.get(index).ok_or_else(|| {
            fail(
                CnStatus::InvalidArgument,
                &format!("step {index} out of range (run has {})", records.len()),
            )
        })?;
        let e = &r.estimate;
        let err = r.attitude_error_deg.unwrap_or_default();
        *out = CnStep {
            t: r.t,
            position: r.truth.position.into(),
            velocity: r.truth.velocity.into(),
            attitude: r.truth.attitude.into(),
            altitude_km: r.altitude_km,
            visible: r.visible_count,
            identified: r.identified_count,
            used: r.used_count,
            status: e.status.into(),
            has_position: e.position.is_some() as u8,
            has_attitude: e.attitude.is_some() as u8,
            est_position: e.position.unwrap_or_default().into(),
            est_attitude: e.attitude.map(Into::into).unwrap_or_default(),
            position_error_m: r.position_error_m.unwrap_or_default().into(),
            attitude_error_deg: CnVec3 {
                x: err[0],
                y: err[1],
                z: err[2],
            },
        };
        Ok(())
    })
}

/// Per-axis RMSE over converged steps with `t_start ≤ t ≤ t_end`.
///
/// # Safety
/// `run` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cn_run_rmse(run: *const CnRun, t_start: f64, t_end: f64, out: *mut CnRmse) -> CnStatus {
    guard(|| {
        non_null(run, "run")?;
        non_null(out, "out")?;
        let row = lift(rmse_window(&(*run).0.records, t_start, t_end))?;
        let v = |a: [f64; 3]| CnVec3 {
            x: a[0],
            y: a[1],
            z: a[2],
        };
        *out = CnRmse {
            position_m: v(row.position_m),
            attitude_deg: v(row.attitude_deg),
            converged_steps: row.converged_steps,
            skipped_steps: row.skipped_steps,
        };
        Ok(())
    })
}

/// Releases a run. Null is ignored.
///
/// # Safety
/// `run` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cn_run_free(run: *mut CnRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Position from crater positions and ranges (km). `initial_guess` may be null
/// for the crater-centroid cold start. Fewer than three craters gives status
/// `Skipped` with `CN_STATUS_OK`.
///
/// # Safety
/// `craters` and `ranges` must hold `n` elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cn_estimate_position(
    craters: *const CnVec3,
    ranges: *const f64,
    n: usize,
    tolerance_km: f64,
    max_iterations: usize,
    initial_guess: *const CnVec3,
    out: *mut CnPositionFix,
) -> CnStatus {
    guard(|| {
        non_null(out, "out")?;
        let craters: Vec<Vec3> = slice_arg(craters, n, "craters")?.iter().map(|c| (*c).into()).collect();
        let ranges = slice_arg(ranges, n, "ranges")?;
        let settings = NlsSettings {
            tolerance_km,
            max_iterations,
            ..Default::default()
        };
        check(settings.validate())?;
        let start = match initial_guess.as_ref() {
            Some(g) => (*g).into(),
            None if n > 0 => centroid_guess(&craters, ranges),
            None => Vec3::zeros(),
        };
        let fix = solve_position(&craters, ranges, &settings, start);
        *out = CnPositionFix {
            position: fix.position.unwrap_or_default().into(),
            status: fix.status.into(),
            iterations: fix.iterations,
            final_step_norm: fix.final_step_norm,
        };
        Ok(())
    })
}

/// QUEST solution `q_ib` of Wahba's problem for `n` body/reference unit-vector
/// pairs and nonnegative weights. The scalar part of the result is nonnegative.
///
/// # Safety
/// `body`, `reference` and `weights` must hold `n` elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cn_quest(
    body: *const CnVec3,
    reference: *const CnVec3,
    weights: *const f64,
    n: usize,
    out: *mut CnQuaternion,
) -> CnStatus {
    guard(|| {
        non_null(out, "out")?;
        let body: Vec<Vec3> = slice_arg(body, n, "body")?.iter().map(|v| (*v).into()).collect();
        let reference: Vec<Vec3> = slice_arg(reference, n, "reference")?
            .iter()
            .map(|v| (*v).into())
            .collect();
        let weights = slice_arg(weights, n, "weights")?;
        let q = lift(estimate_attitude_quest(&body, &reference, weights))?;
        *out = q.into();
        Ok(())
    })
}
