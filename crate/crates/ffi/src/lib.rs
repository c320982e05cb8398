//! C ABI over `lel`.
//!
//! Every function returns a `LelStatus`; results go through out-pointers.
//! Matrices are n×n, row-major, with real and imaginary parts interleaved
//! (2n² doubles). On failure `lel_last_error_message` describes the error
//! for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use lel::balance::{check_gns, check_kms, srd_residual};
use lel::divergence::{fisher_information, sandwiched_renyi};
use lel::flow::{gradient_flow_residual, integrate_with, suggest_dt, IntegrateOptions};
use lel::generator::{check_primitive, spectral_gap};
use lel::io::{generator_from_json, load_generator, LoadedGenerator};
use lel::matcore::{matrix_from_rows, CMatrix, DensityMatrix};
use lel::LelError;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LelStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Validation = 3,
    Numerical = 4,
    Panic = 5,
}

/// Opaque generator handle.
pub struct LelGenerator(LoadedGenerator);

/// Opaque trajectory handle.
pub struct LelTrajectory {
    dim: usize,
    times: Vec<f64>,
    states: Vec<DensityMatrix>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior NUL");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &LelError) -> LelStatus {
    match e {
        LelError::Validation { .. } | LelError::Structural(_) => LelStatus::Validation,
        LelError::Numerical(_) | LelError::Singular { .. } => LelStatus::Numerical,
        LelError::Domain(_) | LelError::Parse(_) | LelError::Io(_) | LelError::Json(_) => LelStatus::InvalidArgument,
    }
}

enum Fail {
    Null(&'static str),
    Arg(String),
    Lib(LelError),
}

impl From<LelError> for Fail {
    fn from(e: LelError) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> LelStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LelStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            LelStatus::NullPointer
        }
        Ok(Err(Fail::Arg(msg))) => {
            set_error(msg);
            LelStatus::InvalidArgument
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            LelStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

unsafe fn string(p: *const c_char, what: &'static str) -> Result<String, Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(str::to_owned)
        .map_err(|_| Fail::Arg(format!("{what} is not valid UTF-8")))
}

unsafe fn read_matrix(n: usize, data: *const f64, what: &'static str) -> Result<CMatrix, Fail> {
    if data.is_null() {
        return Err(Fail::Null(what));
    }
    if n == 0 {
        return Err(Fail::Arg(format!("{what}: dimension must be positive")));
    }
    let flat = std::slice::from_raw_parts(data, 2 * n * n);
    let rows: Vec<Vec<f64>> = flat.chunks(2 * n).map(<[f64]>::to_vec).collect();
    Ok(matrix_from_rows(&rows)?)
}

unsafe fn read_state(n: usize, data: *const f64, what: &'static str) -> Result<DensityMatrix, Fail> {
    Ok(DensityMatrix::new(read_matrix(n, data, what)?)?)
}

unsafe fn write_matrix(m: &CMatrix, data: *mut f64) -> Result<(), Fail> {
    if data.is_null() {
        return Err(Fail::Null("output matrix"));
    }
    let n = m.nrows();
    let flat = std::slice::from_raw_parts_mut(data, 2 * n * n);
    for i in 0..n {
        for j in 0..n {
            flat[2 * (i * n + j)] = m[(i, j)].re;
            flat[2 * (i * n + j) + 1] = m[(i, j)].im;
        }
    }
    Ok(())
}

fn into_handle(g: LoadedGenerator, handle: &mut *mut LelGenerator) {
    *handle = Box::into_raw(Box::new(LelGenerator(g)));
}

/// Loads `builtin:<name>[?query]` or a JSON generator file.
///
/// # Safety
/// `spec` must be a NUL-terminated string; `handle` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lel_generator_load(spec: *const c_char, handle: *mut *mut LelGenerator) -> LelStatus {
    guard(|| {
        let h = out(handle, "handle")?;
        *h = ptr::null_mut();
        into_handle(load_generator(&string(spec, "spec")?)?, h);
        Ok(())
    })
}

/// Parses generator JSON text; CSV references resolve against the working directory.
///
/// # Safety
/// `json` must be a NUL-terminated string; `handle` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lel_generator_from_json(json: *const c_char, handle: *mut *mut LelGenerator) -> LelStatus {
    guard(|| {
        let h = out(handle, "handle")?;
        *h = ptr::null_mut();
        let g = generator_from_json(&string(json, "json")?, Path::new("."))?;
        into_handle(LoadedGenerator::Gns(g), h);
        Ok(())
    })
}

/// # Safety
/// `handle` must come from a `lel_generator_*` constructor or be null.
#[no_mangle]
pub unsafe extern "C" fn lel_generator_free(handle: *mut LelGenerator) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn lel_generator_dim(g: *const LelGenerator, dim: *mut usize) -> LelStatus {
    guard(|| {
        *out(dim, "dim")? = deref(g, "generator")?.0.as_dyn().dim();
        Ok(())
    })
}

/// # Safety
/// Pointers must be valid; `sigma` holds 2n² doubles.
#[no_mangle]
pub unsafe extern "C" fn lel_generator_stationary(g: *const LelGenerator, sigma: *mut f64) -> LelStatus {
    guard(|| {
        let g = deref(g, "generator")?.0.require_gns()?;
        write_matrix(g.stationary().matrix(), sigma)
    })
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn lel_spectral_gap(g: *const LelGenerator, gap: *mut f64) -> LelStatus {
    guard(|| {
        let g = deref(g, "generator")?.0.require_gns()?;
        *out(gap, "gap")? = spectral_gap(g)?.gap;
        Ok(())
    })
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn lel_check_primitive(g: *const LelGenerator, primitive: *mut bool) -> LelStatus {
    guard(|| {
        *out(primitive, "primitive")? = check_primitive(deref(g, "generator")?.0.as_dyn()).primitive;
        Ok(())
    })
}

/// Raw trace-norm residual of sandwiched Rényi detailed balance at `alpha`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn lel_srd_residual(g: *const LelGenerator, alpha: f64, residual: *mut f64) -> LelStatus {
    guard(|| {
        *out(residual, "residual")? = srd_residual(deref(g, "generator")?.0.as_dyn(), alpha)?;
        Ok(())
    })
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn lel_kms_residual(g: *const LelGenerator, residual: *mut f64) -> LelStatus {
    guard(|| {
        *out(residual, "residual")? = check_kms(deref(g, "generator")?.0.as_dyn())?;
        Ok(())
    })
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn lel_gns_residual(g: *const LelGenerator, residual: *mut f64) -> LelStatus {
    guard(|| {
        *out(residual, "residual")? = check_gns(deref(g, "generator")?.0.as_dyn())?;
        Ok(())
    })
}

/// D̃_α(ρ‖σ) for finite α > 0.
///
/// # Safety
/// `rho` and `sigma` hold 2n² doubles; `value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lel_sandwiched_renyi(
    n: usize,
    rho: *const f64,
    sigma: *const f64,
    alpha: f64,
    value: *mut f64,
) -> LelStatus {
    guard(|| {
        let v = out(value, "value")?;
        *v = sandwiched_renyi(&read_state(n, rho, "rho")?, &read_state(n, sigma, "sigma")?, alpha)?.value;
        Ok(())
    })
}

/// Rényi Fisher information of `rho` relative to the generator's stationary state.
///
/// # Safety
/// `rho` holds 2n² doubles for the generator dimension n; pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn lel_fisher_information(
    g: *const LelGenerator,
    rho: *const f64,
    alpha: f64,
    value: *mut f64,
) -> LelStatus {
    guard(|| {
        let g = deref(g, "generator")?.0.require_gns()?;
        let rho = read_state(g.dim(), rho, "rho")?;
        *out(value, "value")? = fisher_information(&rho, g.stationary(), alpha, g)?;
        Ok(())
    })
}

/// Relative residual of L†ρ against the metric gradient of D̃_α.
///
/// # Safety
/// `rho` holds 2n² doubles for the generator dimension n; pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn lel_gradient_flow_residual(
    g: *const LelGenerator,
    rho: *const f64,
    alpha: f64,
    residual: *mut f64,
) -> LelStatus {
    guard(|| {
        let g = deref(g, "generator")?.0.require_gns()?;
        let rho = read_state(g.dim(), rho, "rho")?;
        *out(residual, "residual")? = gradient_flow_residual(g, &rho, alpha)?;
        Ok(())
    })
}

/// Integrates ρ̇ = L†ρ to `t_end`. `dt ≤ 0` picks a step automatically;
/// every `record_every`-th state is kept (0 is treated as 1).
///
/// # Safety
/// `rho0` holds 2n² doubles for the generator dimension n; pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn lel_trajectory_new(
    g: *const LelGenerator,
    rho0: *const f64,
    t_end: f64,
    dt: f64,
    record_every: usize,
    handle: *mut *mut LelTrajectory,
) -> LelStatus {
    guard(|| {
        let h = out(handle, "handle")?;
        *h = ptr::null_mut();
        let g = deref(g, "generator")?.0.as_dyn();
        let rho0 = read_state(g.dim(), rho0, "rho0")?;
        if !(t_end.is_finite() && t_end >= 0.0) {
            return Err(Fail::Arg(format!("t_end must be finite and nonnegative, got {t_end}")));
        }
        let dt = if dt > 0.0 { dt } else { suggest_dt(g, 0.01) };
        let opts = IntegrateOptions {
            t_end,
            dt,
            record_every: record_every.max(1),
        };
        let traj = integrate_with(g, &rho0, opts)?;
        *h = Box::into_raw(Box::new(LelTrajectory {
            dim: g.dim(),
            times: traj.times,
            states: traj.states,
        }));
        Ok(())
    })
}

/// # Safety
/// `handle` must come from `lel_trajectory_new` or be null.
#[no_mangle]
pub unsafe extern "C" fn lel_trajectory_free(handle: *mut LelTrajectory) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn lel_trajectory_len(t: *const LelTrajectory, len: *mut usize) -> LelStatus {
    guard(|| {
        *out(len, "len")? = deref(t, "trajectory")?.times.len();
        Ok(())
    })
}

fn index(t: &LelTrajectory, i: usize) -> Result<usize, Fail> {
    if i < t.times.len() {
        Ok(i)
    } else {
        Err(Fail::Arg(format!("index {i} out of range (len {})", t.times.len())))
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn lel_trajectory_time(t: *const LelTrajectory, i: usize, time: *mut f64) -> LelStatus {
    guard(|| {
        let t = deref(t, "trajectory")?;
        *out(time, "time")? = t.times[index(t, i)?];
        Ok(())
    })
}

/// # Safety
/// `state` holds 2n² doubles; pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn lel_trajectory_state(t: *const LelTrajectory, i: usize, state: *mut f64) -> LelStatus {
    guard(|| {
        let t = deref(t, "trajectory")?;
        let s = &t.states[index(t, i)?];
        debug_assert_eq!(s.dim(), t.dim);
        write_matrix(s.matrix(), state)
    })
}

/// Message for the last failing call on this thread; valid until the next failing call.
#[no_mangle]
pub extern "C" fn lel_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn lel_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
