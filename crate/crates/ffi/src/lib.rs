//! C interface to the solver.
//!
//! Games and results are opaque handles. Every fallible call returns a
//! [`CsgStatus`]; on failure the message is available from
//! [`csg_last_error`] until the next call on the same thread. Strings handed
//! out by a result stay valid until the result is freed.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use csg::error::Error;
use csg::io::{parse_game_str, safety_result, to_pretty_json, IoError, LoadedGame, DEFAULT_DIGITS};
use csg::model::ObjectiveKind;
use csg::rational::parse_rational;
use csg::reach::anytime_solve;
use csg::safety::{solve_safety, SafetyOptions};

/// Status codes. The nonzero values below 4 match the command-line exit codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CsgStatus {
    Ok = 0,
    /// Usage error, e.g. wrong objective kind or a bad argument.
    Failure = 1,
    /// The game document is malformed or violates a model invariant.
    Invalid = 2,
    /// A support enumeration exceeded its budget.
    Budget = 3,
    NullPointer = 4,
    /// A Rust panic was caught at the boundary.
    Panic = 5,
}

/// A parsed game with its objective.
pub struct CsgGame {
    loaded: LoadedGame,
}

/// A solver result, kept as rendered JSON plus exact per-state values.
pub struct CsgResult {
    json: CString,
    values: Vec<CString>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn core_status(e: &Error) -> CsgStatus {
    match e {
        Error::Usage(_) => CsgStatus::Failure,
        Error::Invalid(_) => CsgStatus::Invalid,
        Error::Budget { .. } => CsgStatus::Budget,
    }
}

fn io_status(e: &IoError) -> CsgStatus {
    match e {
        IoError::Invalid(_) => CsgStatus::Invalid,
        _ => CsgStatus::Failure,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (CsgStatus, String)>) -> CsgStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CsgStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            CsgStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (CsgStatus, String)> {
    if p.is_null() {
        return Err((CsgStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (CsgStatus::Failure, format!("{what} is not UTF-8")))
}

fn into_result(json: String, values: Vec<String>) -> Box<CsgResult> {
    Box::new(CsgResult {
        json: CString::new(json).expect("JSON has no NUL"),
        values: values.into_iter().map(|v| CString::new(v).expect("no NUL")).collect(),
    })
}

fn safety_options(game: &LoadedGame, max_iterations: usize) -> Result<SafetyOptions, (CsgStatus, String)> {
    if game.objective.kind != ObjectiveKind::Safety {
        return Err((CsgStatus::Failure, "game does not have a safety objective".into()));
    }
    let mut opts = SafetyOptions::default();
    if max_iterations > 0 {
        opts.max_iterations = max_iterations;
    }
    Ok(opts)
}

/// Parses a game document. On success `*out` owns a new handle that must be
/// released with [`csg_game_free`].
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn csg_game_from_json(json: *const c_char, out: *mut *mut CsgGame) -> CsgStatus {
    guard(|| {
        if out.is_null() {
            return Err((CsgStatus::NullPointer, "out is null".into()));
        }
        *out = ptr::null_mut();
        let text = str_arg(json, "json")?;
        let loaded = parse_game_str(text).map_err(|e| (io_status(&e), e.to_string()))?;
        *out = Box::into_raw(Box::new(CsgGame { loaded }));
        Ok(())
    })
}

/// # Safety
/// `game` must come from [`csg_game_from_json`] and not be used afterwards.
/// Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn csg_game_free(game: *mut CsgGame) {
    if !game.is_null() {
        drop(Box::from_raw(game));
    }
}

/// Number of states, or 0 for a null handle.
///
/// # Safety
/// `game` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn csg_game_num_states(game: *const CsgGame) -> usize {
    game.as_ref().map_or(0, |g| g.loaded.game.num_states())
}

/// Runs strategy improvement on a safety game. `max_iterations` of 0 keeps
/// the default cap.
///
/// # Safety
/// `game` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn csg_solve_safety(
    game: *const CsgGame,
    max_iterations: usize,
    out: *mut *mut CsgResult,
) -> CsgStatus {
    guard(|| {
        if out.is_null() {
            return Err((CsgStatus::NullPointer, "out is null".into()));
        }
        *out = ptr::null_mut();
        let g = game.as_ref().ok_or((CsgStatus::NullPointer, "game is null".to_string()))?;
        let opts = safety_options(&g.loaded, max_iterations)?;
        let cg = g.loaded.game.concurrent();
        let report =
            solve_safety(&cg, &g.loaded.objective.states, &opts).map_err(|e| (core_status(&e), e.to_string()))?;
        let result = safety_result(&cg, &g.loaded.objective, &report, "solve-safety", DEFAULT_DIGITS);
        let values = report.final_valuation.values().iter().map(|v| v.to_string()).collect();
        *out = Box::into_raw(into_result(to_pretty_json(&result), values));
        Ok(())
    })
}

/// Interleaves lower and upper bounds until they are within `epsilon`
/// (a rational such as `"1/1000"`). The exact values reported are the lower
/// bounds.
///
/// # Safety
/// `game` must be a live handle, `epsilon` a NUL-terminated string and `out`
/// a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn csg_anytime(
    game: *const CsgGame,
    epsilon: *const c_char,
    max_iterations: usize,
    out: *mut *mut CsgResult,
) -> CsgStatus {
    guard(|| {
        if out.is_null() {
            return Err((CsgStatus::NullPointer, "out is null".into()));
        }
        *out = ptr::null_mut();
        let g = game.as_ref().ok_or((CsgStatus::NullPointer, "game is null".to_string()))?;
        let eps = parse_rational(str_arg(epsilon, "epsilon")?)
            .map_err(|e| (CsgStatus::Failure, format!("epsilon: {}", e.reason)))?;
        let opts = safety_options(&g.loaded, max_iterations)?;
        let cg = g.loaded.game.concurrent();
        let rep = anytime_solve(&cg, &g.loaded.objective.states, &eps, &opts)
            .map_err(|e| (core_status(&e), e.to_string()))?;
        let result = safety_result(&cg, &g.loaded.objective, &rep.report, "anytime", DEFAULT_DIGITS);
        let values = rep.final_lower().values().iter().map(|v| v.to_string()).collect();
        *out = Box::into_raw(into_result(to_pretty_json(&result), values));
        Ok(())
    })
}

/// The result document as JSON. Owned by the result.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn csg_result_json(result: *const CsgResult) -> *const c_char {
    result.as_ref().map_or(ptr::null(), |r| r.json.as_ptr())
}

/// Exact value of state `index` as `"p/q"`, or null when out of range.
/// Owned by the result.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn csg_result_value(result: *const CsgResult, index: usize) -> *const c_char {
    result
        .as_ref()
        .and_then(|r| r.values.get(index))
        .map_or(ptr::null(), |v| v.as_ptr())
}

/// # Safety
/// `result` must come from a solve call and not be used afterwards. Null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn csg_result_free(result: *mut CsgResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into the library on this thread.
#[no_mangle]
pub extern "C" fn csg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}
