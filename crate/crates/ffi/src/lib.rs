//! C ABI for the nondistortion-interrogation library.
//!
//! The surface is deliberately narrow: models travel as JSON documents in
//! the schema the CLI uses, reports come back as JSON strings, and the only
//! stateful object is an opaque parsed-model handle. Every function returns
//! a status code; `niqs_last_error` recovers the message for the most
//! recent failure on the calling thread.
//!
//! Ownership rules:
//! - `*mut NiqsModel` from `niqs_model_parse`/`niqs_model_example` is freed
//!   with `niqs_model_free`.
//! - `*mut c_char` outputs are freed with `niqs_string_free`.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::path::Path;

use libc::c_char;

use niqs::cli::{self, ReportDoc, RunOptions};
use niqs::modelfile::{self, LoadedModel};

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NiqsStatus {
    /// Success.
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The model document failed to parse or validate.
    InvalidModel = 3,
    /// The analysis ran but found no feasible interrogation; the report
    /// explains why.
    Infeasible = 4,
    /// Configuration or runtime failure; see `niqs_last_error`.
    RuntimeError = 5,
}

/// Opaque parsed model handle.
pub struct NiqsModel {
    loaded: LoadedModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let cstring = CString::new(msg).unwrap_or_else(|_| CString::new("invalid error").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(cstring));
}

fn clear_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

/// Message for the most recent failure on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn niqs_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map(|s| s.as_ptr())
            .unwrap_or(std::ptr::null())
    })
}

/// # Safety
/// `s` must be null or a pointer previously returned by one of the
/// string-producing functions in this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn niqs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

unsafe fn read_str<'a>(ptr: *const c_char) -> Result<&'a str, NiqsStatus> {
    if ptr.is_null() {
        set_error("null string argument".into());
        return Err(NiqsStatus::NullPointer);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error("argument is not valid UTF-8".into());
        NiqsStatus::InvalidUtf8
    })
}

fn hand_out_string(s: String, out: *mut *mut c_char) -> NiqsStatus {
    match CString::new(s) {
        Ok(cstring) => {
            unsafe { *out = cstring.into_raw() };
            NiqsStatus::Ok
        }
        Err(_) => {
            set_error("report contained an interior NUL byte".into());
            NiqsStatus::RuntimeError
        }
    }
}

/// Parse a JSON model document into an opaque handle.
///
/// # Safety
/// `json` must point to a NUL-terminated string and `out` to writable
/// storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn niqs_model_parse(
    json: *const c_char,
    out: *mut *mut NiqsModel,
) -> NiqsStatus {
    clear_error();
    if out.is_null() {
        set_error("null output pointer".into());
        return NiqsStatus::NullPointer;
    }
    let text = match read_str(json) {
        Ok(t) => t,
        Err(status) => return status,
    };
    match modelfile::parse_model(text) {
        Ok(loaded) => {
            *out = Box::into_raw(Box::new(NiqsModel { loaded }));
            NiqsStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            NiqsStatus::InvalidModel
        }
    }
}

/// Load a JSON model document from a file path.
///
/// # Safety
/// As `niqs_model_parse`, with `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn niqs_model_load(
    path: *const c_char,
    out: *mut *mut NiqsModel,
) -> NiqsStatus {
    clear_error();
    if out.is_null() {
        set_error("null output pointer".into());
        return NiqsStatus::NullPointer;
    }
    let path_str = match read_str(path) {
        Ok(t) => t,
        Err(status) => return status,
    };
    match modelfile::read_model(Path::new(path_str)) {
        Ok(loaded) => {
            *out = Box::into_raw(Box::new(NiqsModel { loaded }));
            NiqsStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            NiqsStatus::InvalidModel
        }
    }
}

/// Build one of the shipped example models
/// (`mach-zehnder-atom`, `absorber`, `identity`).
///
/// # Safety
/// As `niqs_model_parse`.
#[no_mangle]
pub unsafe extern "C" fn niqs_model_example(
    name: *const c_char,
    out: *mut *mut NiqsModel,
) -> NiqsStatus {
    clear_error();
    if out.is_null() {
        set_error("null output pointer".into());
        return NiqsStatus::NullPointer;
    }
    let name = match read_str(name) {
        Ok(t) => t,
        Err(status) => return status,
    };
    let file = match niqs::builtin::example_model(name) {
        Ok(f) => f,
        Err(e) => {
            set_error(e.to_string());
            return NiqsStatus::InvalidModel;
        }
    };
    match modelfile::from_file(&file) {
        Ok(loaded) => {
            *out = Box::into_raw(Box::new(NiqsModel { loaded }));
            NiqsStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            NiqsStatus::InvalidModel
        }
    }
}

/// Serialize a shipped example model to JSON.
///
/// # Safety
/// `name` NUL-terminated, `out` writable; free the result with
/// `niqs_string_free`.
#[no_mangle]
pub unsafe extern "C" fn niqs_example_json(
    name: *const c_char,
    out: *mut *mut c_char,
) -> NiqsStatus {
    clear_error();
    if out.is_null() {
        set_error("null output pointer".into());
        return NiqsStatus::NullPointer;
    }
    let name = match read_str(name) {
        Ok(t) => t,
        Err(status) => return status,
    };
    match cli::cmd_example(name) {
        Ok((doc, _)) => hand_out_string(doc.to_json(), out),
        Err(e) => {
            set_error(e.to_string());
            NiqsStatus::InvalidModel
        }
    }
}

/// # Safety
/// `model` must be null or a pointer from `niqs_model_parse`,
/// `niqs_model_load`, or `niqs_model_example`, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn niqs_model_free(model: *mut NiqsModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Witness-search and simulation settings. Zeroed fields select defaults.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct NiqsOptions {
    /// RNG seed (default 42; pass `has_seed = false` for the default).
    pub seed: u64,
    pub has_seed: bool,
    /// Random starts in the witness search (0 = default 48).
    pub starts: u32,
    /// Witness acceptance residual (0 = default 1e-8).
    pub tol_witness: f64,
    /// Monte Carlo trials (0 = default 100000).
    pub trials: u64,
    /// |alpha| grid points for optimization (0 = default 201).
    pub alpha_grid: u32,
}

fn run_options(opts: *const NiqsOptions) -> RunOptions {
    let mut out = RunOptions::default();
    if opts.is_null() {
        return out;
    }
    let o = unsafe { &*opts };
    if o.has_seed {
        out.seed = o.seed;
    }
    if o.starts > 0 {
        out.starts = o.starts as usize;
    }
    if o.tol_witness > 0.0 {
        out.tol_witness = o.tol_witness;
    }
    if o.trials > 0 {
        out.trials = o.trials;
    }
    if o.alpha_grid > 0 {
        out.alpha_grid = o.alpha_grid as usize;
    }
    out
}

unsafe fn run_command<F>(
    model: *const NiqsModel,
    out_json: *mut *mut c_char,
    f: F,
) -> NiqsStatus
where
    F: FnOnce(&LoadedModel) -> niqs::Result<(ReportDoc, i32)>,
{
    clear_error();
    if model.is_null() || out_json.is_null() {
        set_error("null pointer argument".into());
        return NiqsStatus::NullPointer;
    }
    let loaded = &(*model).loaded;
    match f(loaded) {
        Ok((doc, code)) => {
            let status = hand_out_string(doc.to_json(), out_json);
            if status != NiqsStatus::Ok {
                return status;
            }
            if code == cli::EXIT_INFEASIBLE {
                NiqsStatus::Infeasible
            } else {
                NiqsStatus::Ok
            }
        }
        Err(e) => {
            set_error(e.to_string());
            NiqsStatus::RuntimeError
        }
    }
}

/// Decide feasibility. Writes the analyze report as JSON.
///
/// # Safety
/// `model` from a constructor, `out_json` writable, `options` null or valid.
#[no_mangle]
pub unsafe extern "C" fn niqs_analyze(
    model: *const NiqsModel,
    options: *const NiqsOptions,
    out_json: *mut *mut c_char,
) -> NiqsStatus {
    let opts = run_options(options);
    run_command(model, out_json, |loaded| cli::analyze_doc(loaded, &opts))
}

/// Build the success projector. Writes the construct report as JSON.
///
/// # Safety
/// As `niqs_analyze`.
#[no_mangle]
pub unsafe extern "C" fn niqs_construct(
    model: *const NiqsModel,
    options: *const NiqsOptions,
    out_json: *mut *mut c_char,
) -> NiqsStatus {
    let opts = run_options(options);
    run_command(model, out_json, |loaded| cli::construct_doc(loaded, &opts))
}

/// Optimize the success probability over the probe split.
///
/// # Safety
/// As `niqs_analyze`.
#[no_mangle]
pub unsafe extern "C" fn niqs_optimize(
    model: *const NiqsModel,
    options: *const NiqsOptions,
    out_json: *mut *mut c_char,
) -> NiqsStatus {
    let opts = run_options(options);
    run_command(model, out_json, |loaded| cli::optimize_doc(loaded, &opts))
}

/// Monte Carlo interrogation runs with the analytic distribution attached.
///
/// # Safety
/// As `niqs_analyze`.
#[no_mangle]
pub unsafe extern "C" fn niqs_simulate(
    model: *const NiqsModel,
    options: *const NiqsOptions,
    out_json: *mut *mut c_char,
) -> NiqsStatus {
    let opts = run_options(options);
    run_command(model, out_json, |loaded| cli::simulate_doc(loaded, &opts))
}
