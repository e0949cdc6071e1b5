//! C ABI over `kml-core`.
//!
//! Every fallible call returns a [`KmlStatus`]; on failure the message is
//! kept per thread and read back with [`kml_last_error_length`] and
//! [`kml_last_error_message`]. Pipeline results live behind the opaque
//! [`KmlPipeline`] handle, released with [`kml_pipeline_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::ptr;

use kml_core::artifacts::ArtifactWriter;
use kml_core::geon::{counterexample_report, GeonConfig};
use kml_core::pipeline::{run_pipeline, PipelineConfig, PipelineRun};
use kml_core::radial::{
    mass_integrand_diagnostic, penrose_constant, solve_radial, RadialBoundary, Warp,
};
use kml_core::KmlError;

/// Status codes. Values 1 and 2 match the CLI exit codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KmlStatus {
    Ok = 0,
    Solver = 1,
    Hypothesis = 2,
    Input = 3,
    Io = 4,
    NullPointer = 5,
    Panic = 6,
}

/// Opaque result of a pipeline run.
pub struct KmlPipeline {
    run: PipelineRun,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct KmlMass {
    pub m_by_static: f64,
    pub m_total: f64,
    pub m_total_error_estimate: f64,
    pub final_series_value: f64,
    pub gap: f64,
    pub monotonicity_violation: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct KmlGeonReport {
    pub h_outer: f64,
    /// NaN when the inner level degenerates (r_h = 1)
    pub h_inner_toward_outer: f64,
    pub area_outer: f64,
    pub m_exact: f64,
    pub m_leading: f64,
    pub remainder: f64,
    pub mass_negative: bool,
    pub trapping_violated: bool,
    pub homotopy_case: bool,
    pub smooth_closure: bool,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KmlWarpKind {
    Kottler = 0,
    Linear = 1,
    Perturbed = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct KmlRadialSummary {
    pub inner_slope: f64,
    pub penrose_constant: f64,
    pub integrand_max: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<String>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(err: &KmlError) -> KmlStatus {
    match err {
        KmlError::Hypothesis(_) => KmlStatus::Hypothesis,
        KmlError::Solver(_) => KmlStatus::Solver,
        KmlError::Io(_) => KmlStatus::Io,
        KmlError::Input(_) | KmlError::Json(_) | KmlError::Csv(_) => KmlStatus::Input,
    }
}

/// Run `f`, recording any error or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), (KmlStatus, String)>) -> KmlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            KmlStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            set_error(format!("panic: {msg}"));
            KmlStatus::Panic
        }
    }
}

fn core(err: KmlError) -> (KmlStatus, String) {
    (status_of(&err), err.to_string())
}

fn null(what: &str) -> (KmlStatus, String) {
    (KmlStatus::NullPointer, format!("{what} is null"))
}

unsafe fn utf8<'a>(p: *const c_char, what: &str) -> Result<&'a str, (KmlStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (KmlStatus::Input, format!("{what} is not valid UTF-8")))
}

/// Length in bytes of the last error message, excluding the terminating NUL;
/// 0 when the last call succeeded.
#[no_mangle]
pub extern "C" fn kml_last_error_length() -> usize {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(0, |s| s.len()))
}

/// Copy the last error message into `buf` (NUL-terminated, truncated to
/// `len − 1` bytes). Returns the number of bytes written excluding the NUL,
/// or −1 if `buf` is null or `len` is 0.
///
/// # Safety
/// `buf` must point to at least `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn kml_last_error_message(buf: *mut c_char, len: usize) -> isize {
    if buf.is_null() || len == 0 {
        return -1;
    }
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let msg = e.as_deref().unwrap_or("").as_bytes();
        let n = msg.len().min(len - 1);
        ptr::copy_nonoverlapping(msg.as_ptr(), buf as *mut u8, n);
        *buf.add(n) = 0;
        n as isize
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn kml_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Parse a JSON pipeline config and run it. Relative field files resolve
/// against `base_dir` (may be null for the working directory). On success
/// `*out` owns a new handle.
///
/// # Safety
/// `config_json` and a non-null `base_dir` must be NUL-terminated strings;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kml_pipeline_run(
    config_json: *const c_char,
    base_dir: *const c_char,
    out: *mut *mut KmlPipeline,
) -> KmlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let text = utf8(config_json, "config_json")?;
        let base = if base_dir.is_null() {
            PathBuf::from(".")
        } else {
            PathBuf::from(utf8(base_dir, "base_dir")?)
        };
        let cfg = PipelineConfig::from_json(text).map_err(core)?;
        let run = run_pipeline(&cfg, &base).map_err(core)?;
        *out = Box::into_raw(Box::new(KmlPipeline { run }));
        Ok(())
    })
}

/// Release a handle from [`kml_pipeline_run`]. Null is ignored.
///
/// # Safety
/// `p` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kml_pipeline_free(p: *mut KmlPipeline) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn kml_pipeline_mass(p: *const KmlPipeline, out: *mut KmlMass) -> KmlStatus {
    guard(|| {
        let p = p.as_ref().ok_or_else(|| null("pipeline"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let m = &p.run.mass;
        *out = KmlMass {
            m_by_static: m.m_by_static,
            m_total: m.m_total,
            m_total_error_estimate: m.m_total_error_estimate,
            final_series_value: m.final_series_value,
            gap: m.gap,
            monotonicity_violation: m.monotonicity_violation,
        };
        Ok(())
    })
}

/// Number of (t, 𝔪(t)) samples; 0 for a null handle.
///
/// # Safety
/// `p` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn kml_pipeline_series_len(p: *const KmlPipeline) -> usize {
    p.as_ref().map_or(0, |p| p.run.series.len())
}

/// Copy up to `len` samples of the mass series into `t` and `m`.
///
/// # Safety
/// `t` and `m` must each hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn kml_pipeline_series(
    p: *const KmlPipeline,
    t: *mut f64,
    m: *mut f64,
    len: usize,
) -> KmlStatus {
    guard(|| {
        let p = p.as_ref().ok_or_else(|| null("pipeline"))?;
        if t.is_null() || m.is_null() {
            return Err(null("output buffer"));
        }
        for (i, (ti, mi)) in p.run.series.iter().take(len).enumerate() {
            *t.add(i) = *ti;
            *m.add(i) = *mi;
        }
        Ok(())
    })
}

/// Number of violated run checks (monotonicity, boundary gap, height barriers).
///
/// # Safety
/// `p` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn kml_pipeline_violation_count(p: *const KmlPipeline) -> usize {
    p.as_ref().map_or(0, |p| p.run.violations.len())
}

/// Write the run artifacts (without a manifest) into directory `dir`.
///
/// # Safety
/// `p` must be a live handle and `dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn kml_pipeline_write_artifacts(
    p: *const KmlPipeline,
    dir: *const c_char,
) -> KmlStatus {
    guard(|| {
        let p = p.as_ref().ok_or_else(|| null("pipeline"))?;
        let dir = utf8(dir, "dir")?;
        let mut w = ArtifactWriter::new(Path::new(dir)).map_err(core)?;
        p.run.write_artifacts(&mut w).map_err(core)
    })
}

/// Closed-form geon shell report.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kml_geon_report(
    r_h: f64,
    r_0: f64,
    p_xi: f64,
    p_theta: f64,
    out: *mut KmlGeonReport,
) -> KmlStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let cfg = GeonConfig::new(r_h, r_0, p_xi, p_theta).map_err(core)?;
        let r = counterexample_report(&cfg).map_err(core)?;
        *out = KmlGeonReport {
            h_outer: r.boundary.h_outer,
            h_inner_toward_outer: r.boundary.h_inner_toward_outer.unwrap_or(f64::NAN),
            area_outer: r.boundary.area_outer,
            m_exact: r.mass.m_exact,
            m_leading: r.mass.m_leading,
            remainder: r.mass.remainder,
            mass_negative: r.mass_negative,
            trapping_violated: r.trapping_violated,
            homotopy_case: r.homotopy_case,
            smooth_closure: r.smooth_closure,
        };
        Ok(())
    })
}

/// Radial solution on [s0, s1]. `a` and `b` parametrize the warp: the slope
/// for `Linear`, amplitude and frequency for `Perturbed`; ignored for `Kottler`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kml_radial_solve(
    kind: KmlWarpKind,
    a: f64,
    b: f64,
    s0: f64,
    s1: f64,
    u_inner: f64,
    slope_outer: f64,
    samples: usize,
    out: *mut KmlRadialSummary,
) -> KmlStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let warp = match kind {
            KmlWarpKind::Kottler => Warp::Kottler,
            KmlWarpKind::Linear => Warp::Linear { slope: a },
            KmlWarpKind::Perturbed => Warp::Perturbed {
                amplitude: a,
                frequency: b,
            },
        };
        let bc = RadialBoundary {
            value_inner: u_inner,
            slope_outer,
        };
        let sol = solve_radial(warp, s0, s1, bc, samples).map_err(core)?;
        *out = KmlRadialSummary {
            inner_slope: sol.du[0],
            penrose_constant: penrose_constant(&sol).map_err(core)?,
            integrand_max: mass_integrand_diagnostic(&sol)
                .into_iter()
                .fold(0.0, f64::max),
        };
        Ok(())
    })
}
