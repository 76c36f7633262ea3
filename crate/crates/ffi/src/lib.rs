//! C ABI for `spflow`.
//!
//! Every entry point returns a [`SpflowStatus`]; on failure the message is
//! available from [`spflow_last_error_message`] on the same thread. Strings
//! returned through out-parameters are owned by the caller and released with
//! [`spflow_string_free`]; paths with [`spflow_path_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use spflow::cli::{self, Overrides};
use spflow::oppath::{self, Verdict};
use spflow::specflow::{self, FlowConfig, Route};
use spflow::{AElement, AlgebraShape, CMatrix, Error, HermPath, C64};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpflowStatus {
    Ok = 0,
    /// The input was well formed but the computation was refused (e.g. a path
    /// whose verdict is not valid).
    Refused = 2,
    SchemaError = 3,
    /// An internal cross-check failed; this indicates a bug.
    InternalError = 4,
    NullArgument = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpflowRoute {
    Winding = 0,
    Sections = 1,
    Crossings = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpflowVerdict {
    Valid = 0,
    Refine = 1,
    Invalid = 2,
}

/// Opaque sampled path of hermitian matrices over scalar blocks.
pub struct SpflowPath {
    inner: HermPath,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let c = CString::new(msg.into().replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(code: i32) -> SpflowStatus {
    match code {
        cli::EXIT_OK => SpflowStatus::Ok,
        cli::EXIT_REFUSED => SpflowStatus::Refused,
        cli::EXIT_SCHEMA => SpflowStatus::SchemaError,
        _ => SpflowStatus::InternalError,
    }
}

fn fail(e: &Error) -> SpflowStatus {
    set_error(format!("{}: {e}", e.kind()));
    status_of(cli::exit_code_for(e))
}

fn guarded(f: impl FnOnce() -> SpflowStatus) -> SpflowStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("panic inside spflow");
            SpflowStatus::Panic
        }
    }
}

/// Message of the last failure on this thread, or NULL. The pointer stays
/// valid until the next spflow call on the same thread.
#[no_mangle]
pub extern "C" fn spflow_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Runs a problem file given as JSON and writes the result file JSON to
/// `*output` (also on refusals and errors, when the result could be built).
///
/// # Safety
/// `input` must be a valid NUL-terminated string and `output` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn spflow_run_json(input: *const c_char, output: *mut *mut c_char) -> SpflowStatus {
    guarded(|| {
        if input.is_null() || output.is_null() {
            set_error("null argument");
            return SpflowStatus::NullArgument;
        }
        *output = ptr::null_mut();
        let text = match CStr::from_ptr(input).to_str() {
            Ok(t) => t,
            Err(_) => {
                set_error("input is not valid UTF-8");
                return SpflowStatus::SchemaError;
            }
        };
        let outcome = cli::execute(text, &Overrides::default());
        if let Some(err) = &outcome.result.error {
            set_error(format!("{}: {}", err.kind, err.message));
        }
        let json = CString::new(outcome.result.to_json()).expect("json has no nul");
        *output = json.into_raw();
        status_of(outcome.exit_code)
    })
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn spflow_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds a path over scalar blocks of sizes `dims[0..n_blocks]`.
///
/// `t` holds `n_samples` grid points from 0 to 1. `data` holds, for each sample
/// and then each block, the `d x d` matrix in row-major order as interleaved
/// `(re, im)` doubles.
///
/// # Safety
/// All pointers must be valid for the lengths implied above; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn spflow_path_new(
    dims: *const usize,
    n_blocks: usize,
    t: *const f64,
    n_samples: usize,
    data: *const f64,
    out: *mut *mut SpflowPath,
) -> SpflowStatus {
    guarded(|| {
        if dims.is_null() || t.is_null() || data.is_null() || out.is_null() {
            set_error("null argument");
            return SpflowStatus::NullArgument;
        }
        *out = ptr::null_mut();
        let dims = std::slice::from_raw_parts(dims, n_blocks);
        let shape = match AlgebraShape::scalars(dims) {
            Ok(s) => s,
            Err(e) => return fail(&e),
        };
        let per_sample: usize = dims.iter().map(|d| 2 * d * d).sum();
        let grid = std::slice::from_raw_parts(t, n_samples).to_vec();
        let data = std::slice::from_raw_parts(data, per_sample * n_samples);
        let mut samples = Vec::with_capacity(n_samples);
        let mut off = 0;
        for _ in 0..n_samples {
            let mut blocks = Vec::with_capacity(dims.len());
            for &d in dims {
                let m = CMatrix::from_fn(d, d, |i, j| {
                    let k = off + 2 * (i * d + j);
                    C64::new(data[k], data[k + 1])
                });
                off += 2 * d * d;
                blocks.push(vec![m]);
            }
            match AElement::new(shape.clone(), 1, blocks) {
                Ok(x) => samples.push(x),
                Err(e) => return fail(&e),
            }
        }
        match HermPath::new(shape, 1, grid, samples) {
            Ok(p) => {
                *out = Box::into_raw(Box::new(SpflowPath { inner: p }));
                SpflowStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Validity verdict of a path for gap threshold `gap_min` (default motion cap).
///
/// # Safety
/// `path` must come from [`spflow_path_new`]; `verdict` must be valid.
#[no_mangle]
pub unsafe extern "C" fn spflow_path_validate(path: *const SpflowPath, gap_min: f64, verdict: *mut SpflowVerdict) -> SpflowStatus {
    guarded(|| {
        if path.is_null() || verdict.is_null() {
            set_error("null argument");
            return SpflowStatus::NullArgument;
        }
        match oppath::validate_path(&(*path).inner, gap_min, None) {
            Ok(v) => {
                *verdict = match v.verdict {
                    Verdict::Valid => SpflowVerdict::Valid,
                    Verdict::Refine => SpflowVerdict::Refine,
                    Verdict::Invalid => SpflowVerdict::Invalid,
                };
                SpflowStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Spectral flow per block, written to `out[0..out_len]`; `out_len` must equal
/// the number of blocks.
///
/// # Safety
/// `path` must come from [`spflow_path_new`]; `out` must hold `out_len` values.
#[no_mangle]
pub unsafe extern "C" fn spflow_path_spectral_flow(
    path: *const SpflowPath,
    route: SpflowRoute,
    out: *mut i64,
    out_len: usize,
) -> SpflowStatus {
    guarded(|| {
        if path.is_null() || out.is_null() {
            set_error("null argument");
            return SpflowStatus::NullArgument;
        }
        let p = &(*path).inner;
        if out_len != p.shape.len() {
            set_error(format!("output holds {out_len} values, path has {} blocks", p.shape.len()));
            return SpflowStatus::SchemaError;
        }
        let route = match route {
            SpflowRoute::Winding => Route::Winding,
            SpflowRoute::Sections => Route::Sections,
            SpflowRoute::Crossings => Route::Crossings,
        };
        match specflow::spectral_flow(p, route, &FlowConfig::default()) {
            Ok(r) => {
                std::slice::from_raw_parts_mut(out, out_len).copy_from_slice(&r.value.components);
                SpflowStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Releases a path. NULL is ignored.
///
/// # Safety
/// `path` must come from [`spflow_path_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn spflow_path_free(path: *mut SpflowPath) {
    if !path.is_null() {
        drop(Box::from_raw(path));
    }
}
