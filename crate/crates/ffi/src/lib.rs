//! C interface to the `stfem` space-time solver.
//!
//! All objects are opaque handles created by a `*_new`/`*_run`/`*_solve`
//! function and released with the matching `*_free`. Every fallible call
//! returns a [`StfemStatus`]; on failure a description is available from
//! [`stfem_last_error_message`] on the same thread.
//!
//! The generated header lives in `include/stfem.h`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use stfem::{emit, run_convergence, run_level, ConvergenceRow, Error, LevelResult, OutputFormat, RunConfig};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StfemStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    MemoryGuard = 4,
    NotDiagonalizable = 5,
    SolverFailure = 6,
    Io = 7,
    Panic = 8,
}

/// Run configuration (opaque).
pub struct StfemConfig(RunConfig);

/// Rows of a convergence study (opaque).
pub struct StfemResults(Vec<ConvergenceRow>);

/// Discrete solution of one level (opaque).
pub struct StfemSolution(LevelResult);

/// One line of a convergence table. Orders of convergence are NaN where
/// undefined (first level).
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct StfemRow {
    pub n: usize,
    pub hx: f64,
    pub ht: f64,
    pub l2: f64,
    pub eoc_l2: f64,
    pub h1: f64,
    pub eoc_h1: f64,
    pub solve_seconds: f64,
    pub kappa2: f64,
}

impl From<&ConvergenceRow> for StfemRow {
    fn from(r: &ConvergenceRow) -> Self {
        StfemRow {
            n: r.n,
            hx: r.hx,
            ht: r.ht,
            l2: r.l2,
            eoc_l2: r.eoc_l2.unwrap_or(f64::NAN),
            h1: r.h1,
            eoc_h1: r.eoc_h1.unwrap_or(f64::NAN),
            solve_seconds: r.solve_seconds,
            kappa2: r.kappa2,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(e: &Error) -> StfemStatus {
    match e.root() {
        Error::Config(_) | Error::Parse(_) => StfemStatus::Config,
        Error::MemoryGuard { .. } => StfemStatus::MemoryGuard,
        Error::NotDiagonalizable { .. } => StfemStatus::NotDiagonalizable,
        Error::InvalidArgument(_) | Error::DimensionMismatch { .. } | Error::OutsideDomain(_) => {
            StfemStatus::InvalidArgument
        }
        Error::Io(_) => StfemStatus::Io,
        _ => StfemStatus::SolverFailure,
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard<F: FnOnce() -> Result<(), (StfemStatus, String)>>(f: F) -> StfemStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => StfemStatus::Ok,
        Ok(Err((status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(format!("internal panic: {msg}"));
            StfemStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (StfemStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (StfemStatus, String) {
    (StfemStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (StfemStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (StfemStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn stfem_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// New configuration holding the defaults (square m = 32, T = 5, n_t = 64,
/// level 0, fast diagonalization, one thread).
#[no_mangle]
pub extern "C" fn stfem_config_new() -> *mut StfemConfig {
    Box::into_raw(Box::new(StfemConfig(RunConfig::default())))
}

/// Parses `key = value` text on top of the defaults.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn stfem_config_parse(text: *const c_char, out: *mut *mut StfemConfig) -> StfemStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = str_arg(text, "text")?;
        let config = RunConfig::parse(text).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(StfemConfig(config)));
        Ok(())
    })
}

/// Sets one configuration key; see the `harness` documentation for keys.
///
/// # Safety
/// `config` must come from this library; `key` and `value` must be
/// NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn stfem_config_set(
    config: *mut StfemConfig,
    key: *const c_char,
    value: *const c_char,
) -> StfemStatus {
    guard(|| {
        let config = config.as_mut().ok_or_else(|| null("config"))?;
        let key = str_arg(key, "key")?;
        let value = str_arg(value, "value")?;
        let mut next = config.0.clone();
        next.set(key, value).map_err(lib_err)?;
        config.0 = next;
        Ok(())
    })
}

/// Serialized configuration as a newly allocated string; release it with
/// [`stfem_string_free`].
///
/// # Safety
/// `config` must come from this library and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn stfem_config_serialize(config: *const StfemConfig, out: *mut *mut c_char) -> StfemStatus {
    guard(|| {
        let config = config.as_ref().ok_or_else(|| null("config"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = CString::new(config.0.serialize()).unwrap_or_default().into_raw();
        Ok(())
    })
}

/// # Safety
/// `config` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn stfem_config_free(config: *mut StfemConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Runs levels `0..=levels` of the configured study.
///
/// # Safety
/// `config` must come from this library and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn stfem_run_convergence(config: *const StfemConfig, out: *mut *mut StfemResults) -> StfemStatus {
    guard(|| {
        let config = config.as_ref().ok_or_else(|| null("config"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let rows = run_convergence(&config.0).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(StfemResults(rows)));
        Ok(())
    })
}

/// # Safety
/// `results` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn stfem_results_len(results: *const StfemResults) -> usize {
    results.as_ref().map_or(0, |r| r.0.len())
}

/// # Safety
/// `results` must come from this library and `row` must be valid.
#[no_mangle]
pub unsafe extern "C" fn stfem_results_row(results: *const StfemResults, index: usize, row: *mut StfemRow) -> StfemStatus {
    guard(|| {
        let results = results.as_ref().ok_or_else(|| null("results"))?;
        if row.is_null() {
            return Err(null("row"));
        }
        let r = results.0.get(index).ok_or_else(|| {
            (
                StfemStatus::InvalidArgument,
                format!("row {index} out of range ({} rows)", results.0.len()),
            )
        })?;
        *row = r.into();
        Ok(())
    })
}

/// Renders the rows as CSV (`csv != 0`) or as a table. Release the string
/// with [`stfem_string_free`].
///
/// # Safety
/// `results` must come from this library and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn stfem_results_emit(results: *const StfemResults, csv: i32, out: *mut *mut c_char) -> StfemStatus {
    guard(|| {
        let results = results.as_ref().ok_or_else(|| null("results"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let format = if csv != 0 { OutputFormat::Csv } else { OutputFormat::Table };
        let text = emit(&results.0, format).map_err(lib_err)?;
        *out = CString::new(text).unwrap_or_default().into_raw();
        Ok(())
    })
}

/// # Safety
/// `results` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn stfem_results_free(results: *mut StfemResults) {
    if !results.is_null() {
        drop(Box::from_raw(results));
    }
}

/// Solves a single refinement level.
///
/// # Safety
/// `config` must come from this library and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn stfem_solve_level(
    config: *const StfemConfig,
    level: usize,
    out: *mut *mut StfemSolution,
) -> StfemStatus {
    guard(|| {
        let config = config.as_ref().ok_or_else(|| null("config"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let result = run_level(&config.0, level).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(StfemSolution(result)));
        Ok(())
    })
}

/// Spatial (`n_x`) and temporal (`n_t`) unknown counts.
///
/// # Safety
/// `solution` must come from this library; `n_x` and `n_t` may be null.
#[no_mangle]
pub unsafe extern "C" fn stfem_solution_dims(solution: *const StfemSolution, n_x: *mut usize, n_t: *mut usize) -> StfemStatus {
    guard(|| {
        let s = solution.as_ref().ok_or_else(|| null("solution"))?;
        if let Some(p) = n_x.as_mut() {
            *p = s.0.n_x;
        }
        if let Some(p) = n_t.as_mut() {
            *p = s.0.n_t;
        }
        Ok(())
    })
}

/// Table row of the solved level.
///
/// # Safety
/// `solution` must come from this library and `row` must be valid.
#[no_mangle]
pub unsafe extern "C" fn stfem_solution_row(solution: *const StfemSolution, row: *mut StfemRow) -> StfemStatus {
    guard(|| {
        let s = solution.as_ref().ok_or_else(|| null("solution"))?;
        if row.is_null() {
            return Err(null("row"));
        }
        *row = (&s.0.row()).into();
        Ok(())
    })
}

/// Copies the coefficients, temporal index outer, as interleaved
/// `(re, im)` pairs into `buffer`, which must hold `2 * n_x * n_t` doubles.
///
/// # Safety
/// `solution` must come from this library and `buffer` must point to
/// `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn stfem_solution_coefficients(
    solution: *const StfemSolution,
    buffer: *mut f64,
    len: usize,
) -> StfemStatus {
    guard(|| {
        let s = solution.as_ref().ok_or_else(|| null("solution"))?;
        if buffer.is_null() {
            return Err(null("buffer"));
        }
        let coeffs = s.0.solution().as_slice();
        if len != 2 * coeffs.len() {
            return Err((
                StfemStatus::InvalidArgument,
                format!("buffer holds {len} doubles, need {}", 2 * coeffs.len()),
            ));
        }
        let out = std::slice::from_raw_parts_mut(buffer, len);
        for (pair, z) in out.chunks_exact_mut(2).zip(coeffs) {
            pair[0] = z.re;
            pair[1] = z.im;
        }
        Ok(())
    })
}

/// # Safety
/// `solution` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn stfem_solution_free(solution: *mut StfemSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// # Safety
/// `s` must be a string returned by this library or null.
#[no_mangle]
pub unsafe extern "C" fn stfem_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cstr(s: &str) -> CString {
        CString::new(s).unwrap()
    }

    fn last_error() -> String {
        let p = stfem_last_error_message();
        assert!(!p.is_null());
        unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
    }

    #[test]
    fn config_set_and_serialize() {
        unsafe {
            let c = stfem_config_new();
            assert_eq!(stfem_config_set(c, cstr("nt").as_ptr(), cstr("8").as_ptr()), StfemStatus::Ok);
            let mut s = ptr::null_mut();
            assert_eq!(stfem_config_serialize(c, &mut s), StfemStatus::Ok);
            let text = CStr::from_ptr(s).to_str().unwrap().to_owned();
            assert!(text.contains("nt = 8"));
            stfem_string_free(s);

            let mut parsed = ptr::null_mut();
            let t = cstr(&text);
            assert_eq!(stfem_config_parse(t.as_ptr(), &mut parsed), StfemStatus::Ok);
            assert_eq!((*parsed).0, (*c).0);
            stfem_config_free(parsed);
            stfem_config_free(c);
        }
    }

    #[test]
    fn errors_map_to_status_codes() {
        unsafe {
            let c = stfem_config_new();
            let st = stfem_config_set(c, cstr("solver").as_ptr(), cstr("lu").as_ptr());
            assert_eq!(st, StfemStatus::Config);
            assert!(last_error().contains("solver"));
            assert_eq!((*c).0, RunConfig::default());

            assert_eq!(
                stfem_config_set(c, ptr::null(), cstr("1").as_ptr()),
                StfemStatus::NullPointer
            );
            let mut out = ptr::null_mut();
            assert_eq!(stfem_run_convergence(ptr::null(), &mut out), StfemStatus::NullPointer);

            stfem_config_set(c, cstr("levels").as_ptr(), cstr("9").as_ptr());
            assert_eq!(stfem_run_convergence(c, &mut out), StfemStatus::MemoryGuard);
            assert!(out.is_null());
            stfem_config_free(c);
        }
    }

    #[test]
    fn solve_small_level() {
        unsafe {
            let mut c = ptr::null_mut();
            let text = cstr("spatial = interval:8,1\nT = 1\nnt = 4\nsolver = bs");
            assert_eq!(stfem_config_parse(text.as_ptr(), &mut c), StfemStatus::Ok);
            let mut sol = ptr::null_mut();
            assert_eq!(stfem_solve_level(c, 1, &mut sol), StfemStatus::Ok);
            let (mut nx, mut nt) = (0, 0);
            assert_eq!(stfem_solution_dims(sol, &mut nx, &mut nt), StfemStatus::Ok);
            assert_eq!((nx, nt), (15, 8));
            let mut buf = vec![0.0; 2 * nx * nt];
            assert_eq!(
                stfem_solution_coefficients(sol, buf.as_mut_ptr(), buf.len() - 1),
                StfemStatus::InvalidArgument
            );
            assert_eq!(stfem_solution_coefficients(sol, buf.as_mut_ptr(), buf.len()), StfemStatus::Ok);
            let expected = (*sol).0.solution().as_slice();
            assert_eq!(buf[2], expected[1].re);
            assert_eq!(buf[3], expected[1].im);
            let mut row = StfemRow::default();
            assert_eq!(stfem_solution_row(sol, &mut row), StfemStatus::Ok);
            assert_eq!(row.n, 120);
            assert!(row.eoc_l2.is_nan());
            assert!(row.l2 > 0.0 && row.l2 < 1.0);
            stfem_solution_free(sol);
            stfem_config_free(c);
        }
    }

    #[test]
    fn convergence_rows_and_emit() {
        unsafe {
            let mut c = ptr::null_mut();
            let text = cstr("spatial = interval:8,1\nT = 1\nnt = 8\nlevels = 1");
            assert_eq!(stfem_config_parse(text.as_ptr(), &mut c), StfemStatus::Ok);
            let mut res = ptr::null_mut();
            assert_eq!(stfem_run_convergence(c, &mut res), StfemStatus::Ok);
            assert_eq!(stfem_results_len(res), 2);
            let mut row = StfemRow::default();
            assert_eq!(stfem_results_row(res, 1, &mut row), StfemStatus::Ok);
            assert!(row.eoc_l2 > 1.5 && row.eoc_l2 < 2.5);
            assert_eq!(stfem_results_row(res, 2, &mut row), StfemStatus::InvalidArgument);
            let mut s = ptr::null_mut();
            assert_eq!(stfem_results_emit(res, 1, &mut s), StfemStatus::Ok);
            let csv = CStr::from_ptr(s).to_str().unwrap();
            assert!(csv.starts_with("n,hx,ht,errL2,eocL2,errH1,eocH1,solve_s,kappa2\n"));
            assert_eq!(csv.lines().count(), 3);
            stfem_string_free(s);
            stfem_results_free(res);
            stfem_config_free(c);
        }
    }

    #[test]
    fn free_functions_accept_null() {
        unsafe {
            stfem_config_free(ptr::null_mut());
            stfem_results_free(ptr::null_mut());
            stfem_solution_free(ptr::null_mut());
            stfem_string_free(ptr::null_mut());
            assert_eq!(stfem_results_len(ptr::null()), 0);
        }
    }
}
