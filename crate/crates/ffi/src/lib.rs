//! C ABI for mixsel.
//!
//! Objects cross the boundary as opaque handles created by `*_from_json`,
//! `mixsel_fit` or `mixsel_select` and released with the matching `*_free`.
//! Every fallible call returns a [`MixselStatus`]; on failure the message is
//! available from [`mixsel_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use mixsel::cli::output::{to_json, CriterionResult};
use mixsel::cli::CriterionInput;
use mixsel::entropy::relative_entropy;
use mixsel::mixture::{em_fit, EmConfig, MapPriorSpec};
use mixsel::quadrature::DEFAULT_QUAD_POINTS;
use mixsel::search::{select_model, SearchConfig, SelectionTrace};
use mixsel::{GaussianMixture, InputDistribution, MixselError};

/// Opaque input distribution.
pub struct MixselInput(InputDistribution);

/// Opaque Gaussian mixture.
pub struct MixselMixture(GaussianMixture);

/// Opaque selection trace.
pub struct MixselTrace(SelectionTrace);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixselStatus {
    Ok = 0,
    ConfigError = 2,
    Infeasible = 3,
    NumericError = 4,
    NullPointer = 5,
    Unsupported = 6,
    OutOfRange = 7,
    Panic = 8,
}

/// One row of a selection trace.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct MixselRow {
    pub m: usize,
    pub accuracy: f64,
    pub penalty: f64,
    pub objective: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(err: &MixselError) -> MixselStatus {
    match err {
        MixselError::Config(_) | MixselError::Json(_) | MixselError::Io(_) => MixselStatus::ConfigError,
        MixselError::Unsupported { .. } => MixselStatus::Unsupported,
        MixselError::InfeasibleOrder { .. } => MixselStatus::Infeasible,
        MixselError::Numeric(_) => MixselStatus::NumericError,
    }
}

fn fail(status: MixselStatus, msg: impl Into<String>) -> MixselStatus {
    set_error(msg);
    status
}

fn from_core(err: MixselError) -> MixselStatus {
    fail(status_of(&err), err.to_string())
}

/// Runs `body`, mapping panics to [`MixselStatus::Panic`].
fn guard(body: impl FnOnce() -> MixselStatus) -> MixselStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => fail(MixselStatus::Panic, "internal panic"),
    }
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, MixselStatus> {
    if p.is_null() {
        return Err(fail(MixselStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(MixselStatus::ConfigError, "string argument is not valid UTF-8"))
}

macro_rules! try_status {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(MixselStatus::NullPointer, concat!("`", stringify!($p), "` is null"));
        })+
    };
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

fn owned_string(s: String, out: *mut *mut c_char) -> MixselStatus {
    match CString::new(s) {
        Ok(c) => {
            unsafe { *out = c.into_raw() };
            MixselStatus::Ok
        }
        Err(_) => fail(MixselStatus::NumericError, "output contains an interior NUL"),
    }
}

/// Message of the last failed call on this thread; empty if none. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mixsel_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must come from a `mixsel_*_to_json` call and not be freed already.
#[no_mangle]
pub unsafe extern "C" fn mixsel_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses an input distribution such as `{"kind":"exponential","rate":1.0,"n_equiv":100}`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mixsel_input_from_json(json: *const c_char, out: *mut *mut MixselInput) -> MixselStatus {
    guard(|| {
        non_null!(out);
        let text = try_status!(str_arg(json));
        match serde_json::from_str::<InputDistribution>(text) {
            Ok(d) => {
                *out = boxed(MixselInput(d));
                MixselStatus::Ok
            }
            Err(e) => fail(MixselStatus::ConfigError, format!("malformed input distribution: {e}")),
        }
    })
}

/// # Safety
/// `input` must be null or a handle from [`mixsel_input_from_json`].
#[no_mangle]
pub unsafe extern "C" fn mixsel_input_free(input: *mut MixselInput) {
    if !input.is_null() {
        drop(Box::from_raw(input));
    }
}

/// Equivalent sample size; 0 for a null handle.
///
/// # Safety
/// `input` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mixsel_input_n_equiv(input: *const MixselInput) -> u64 {
    input.as_ref().map_or(0, |i| i.0.n_equiv())
}

/// # Safety
/// `input` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mixsel_input_density(input: *const MixselInput, x: f64, out: *mut f64) -> MixselStatus {
    guard(|| {
        non_null!(input, out);
        match (*input).0.density(x) {
            Ok(v) => {
                *out = v;
                MixselStatus::Ok
            }
            Err(e) => from_core(e),
        }
    })
}

/// Differential entropy of a continuous input.
///
/// # Safety
/// `input` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mixsel_input_entropy(input: *const MixselInput, out: *mut f64) -> MixselStatus {
    guard(|| {
        non_null!(input, out);
        match (*input).0.entropy() {
            Ok(v) => {
                *out = v;
                MixselStatus::Ok
            }
            Err(e) => from_core(e),
        }
    })
}

/// Parses `{"components":[{"weight":..,"mean":..,"variance":..}, ...]}`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mixsel_mixture_from_json(json: *const c_char, out: *mut *mut MixselMixture) -> MixselStatus {
    guard(|| {
        non_null!(out);
        let text = try_status!(str_arg(json));
        match serde_json::from_str::<GaussianMixture>(text) {
            Ok(g) => {
                *out = boxed(MixselMixture(g));
                MixselStatus::Ok
            }
            Err(e) => fail(MixselStatus::ConfigError, format!("malformed mixture: {e}")),
        }
    })
}

/// Serializes a mixture; free the result with [`mixsel_string_free`].
///
/// # Safety
/// `mixture` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mixsel_mixture_to_json(mixture: *const MixselMixture, out: *mut *mut c_char) -> MixselStatus {
    guard(|| {
        non_null!(mixture, out);
        match serde_json::to_string(&(*mixture).0) {
            Ok(s) => owned_string(s, out),
            Err(e) => fail(MixselStatus::NumericError, e.to_string()),
        }
    })
}

/// # Safety
/// `mixture` must be null or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn mixsel_mixture_free(mixture: *mut MixselMixture) {
    if !mixture.is_null() {
        drop(Box::from_raw(mixture));
    }
}

/// Number of components; 0 for a null handle.
///
/// # Safety
/// `mixture` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mixsel_mixture_order(mixture: *const MixselMixture) -> usize {
    mixture.as_ref().map_or(0, |g| g.0.order())
}

/// # Safety
/// `mixture` must be a live handle; the output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn mixsel_mixture_component(
    mixture: *const MixselMixture,
    index: usize,
    weight: *mut f64,
    mean: *mut f64,
    variance: *mut f64,
) -> MixselStatus {
    guard(|| {
        non_null!(mixture, weight, mean, variance);
        match (*mixture).0.components().get(index) {
            Some(c) => {
                *weight = c.weight;
                *mean = c.mean;
                *variance = c.variance;
                MixselStatus::Ok
            }
            None => fail(MixselStatus::OutOfRange, format!("component {index} out of range")),
        }
    })
}

/// Mixture density at `x`; NaN for a null handle.
///
/// # Safety
/// `mixture` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mixsel_mixture_density(mixture: *const MixselMixture, x: f64) -> f64 {
    mixture.as_ref().map_or(f64::NAN, |g| g.0.density(x))
}

/// Maximum-likelihood fit of an `m`-component mixture with default EM settings.
/// `expected_log_density` may be null.
///
/// # Safety
/// `input` must be a live handle, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mixsel_fit(
    input: *const MixselInput,
    m: usize,
    seed: u64,
    out: *mut *mut MixselMixture,
    expected_log_density: *mut f64,
) -> MixselStatus {
    guard(|| {
        non_null!(input, out);
        let d = &(*input).0;
        let pts = match d.fitting_points(DEFAULT_QUAD_POINTS) {
            Ok(p) => p,
            Err(e) => return from_core(e),
        };
        let cfg = EmConfig {
            seed,
            sample_size: d.n_equiv() as f64,
            ..EmConfig::default()
        };
        match em_fit(&pts, m, &MapPriorSpec::uniform(), &cfg) {
            Ok(fit) => {
                if !expected_log_density.is_null() {
                    *expected_log_density = fit.expected_log_density;
                }
                *out = boxed(MixselMixture(fit.mixture));
                MixselStatus::Ok
            }
            Err(e) => from_core(e),
        }
    })
}

/// Relative entropy from a continuous input to a mixture.
///
/// # Safety
/// Handles must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mixsel_relative_entropy(
    input: *const MixselInput,
    mixture: *const MixselMixture,
    out: *mut f64,
) -> MixselStatus {
    guard(|| {
        non_null!(input, mixture, out);
        match relative_entropy(&(*input).0, &(*mixture).0) {
            Ok(v) => {
                *out = v;
                MixselStatus::Ok
            }
            Err(e) => from_core(e),
        }
    })
}

/// Runs the order search for one criterion, e.g. `{"kind":"bic","n":100}`;
/// an omitted `n` defaults to the input's equivalent sample size.
///
/// # Safety
/// `input` must be a live handle, `criterion_json` a NUL-terminated string, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mixsel_select(
    input: *const MixselInput,
    criterion_json: *const c_char,
    m_max: usize,
    lookahead: usize,
    seed: u64,
    out: *mut *mut MixselTrace,
) -> MixselStatus {
    guard(|| {
        non_null!(input, out);
        let text = try_status!(str_arg(criterion_json));
        let d = &(*input).0;
        let criterion: CriterionInput = match serde_json::from_str(text) {
            Ok(c) => c,
            Err(e) => return fail(MixselStatus::ConfigError, format!("malformed criterion: {e}")),
        };
        let spec = match criterion.resolve(d) {
            Ok(s) => s,
            Err(e) => return from_core(e),
        };
        let defaults = SearchConfig::default();
        let cfg = SearchConfig {
            m_max,
            lookahead,
            em: EmConfig {
                seed,
                ..defaults.em.clone()
            },
            ..defaults
        };
        match select_model(d, &spec, &cfg) {
            Ok(trace) => {
                *out = boxed(MixselTrace(trace));
                MixselStatus::Ok
            }
            Err(e) => from_core(e),
        }
    })
}

/// # Safety
/// `trace` must be null or a handle from [`mixsel_select`].
#[no_mangle]
pub unsafe extern "C" fn mixsel_trace_free(trace: *mut MixselTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Selected order; 0 for a null handle.
///
/// # Safety
/// `trace` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mixsel_trace_chosen_m(trace: *const MixselTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.0.chosen_m)
}

/// Number of fitted orders; 0 for a null handle.
///
/// # Safety
/// `trace` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mixsel_trace_len(trace: *const MixselTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.0.rows.len())
}

/// # Safety
/// `trace` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mixsel_trace_row(
    trace: *const MixselTrace,
    index: usize,
    out: *mut MixselRow,
) -> MixselStatus {
    guard(|| {
        non_null!(trace, out);
        let rows = &(*trace).0.rows;
        match rows.get(index) {
            Some(r) => {
                *out = MixselRow {
                    m: r.m,
                    accuracy: r.accuracy,
                    penalty: r.penalty,
                    objective: r.objective,
                };
                MixselStatus::Ok
            }
            None => fail(MixselStatus::OutOfRange, format!("row {index} out of range")),
        }
    })
}

/// Copy of the selected mixture as a new handle.
///
/// # Safety
/// `trace` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mixsel_trace_chosen_mixture(
    trace: *const MixselTrace,
    out: *mut *mut MixselMixture,
) -> MixselStatus {
    guard(|| {
        non_null!(trace, out);
        *out = boxed(MixselMixture((*trace).0.chosen().fit.mixture.clone()));
        MixselStatus::Ok
    })
}

/// JSON envelope of the trace, as emitted by `mixsel select`. Free with [`mixsel_string_free`].
///
/// # Safety
/// `trace` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mixsel_trace_to_json(trace: *const MixselTrace, out: *mut *mut c_char) -> MixselStatus {
    guard(|| {
        non_null!(trace, out);
        match to_json(&CriterionResult::from_trace(&(*trace).0, None)) {
            Ok(s) => owned_string(s, out),
            Err(e) => from_core(e),
        }
    })
}
