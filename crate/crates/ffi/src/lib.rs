//! C ABI for the supercompiler. All functions are `extern "C"`, use opaque
//! handles, and report failures through status codes plus a thread-local
//! error message. The matching declarations live in `include/mrscp.h`.
//!
//! Ownership rules:
//! - every `*_new`/`*_parse`/`*_supercompile` output must be released with
//!   the corresponding `*_free`;
//! - every returned string must be released with `mrscp_string_free`;
//! - handles are immutable after creation and may be shared across threads.

use mrscp::cli::{query_results, QuerySpec};
use mrscp::engine::{mr_scp_with, EngineConfig};
use mrscp::graphset::{count_graphs, to_dot, GraphSet, SizeMeasure};
use mrscp::lang::parse::parse_program;
use mrscp::lang::print::pretty_program_with_main;
use mrscp::lang::{Exp, Program};
use mrscp::residual::residual_program;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::ptr;

/// Status codes shared with the header. Zero is success; everything else
/// leaves an explanation in `mrscp_last_error_message`.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum MrscpStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    NoTargetExpression = 4,
    NodeBudgetExceeded = 5,
    EmptyResultSet = 6,
    InvalidQuery = 7,
}

/// Query selectors shared with the header.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum MrscpQuery {
    First = 0,
    Last = 1,
    MinAllNodes = 2,
    MaxAllNodes = 3,
    MinSkipUnfold = 4,
    MaxSkipUnfold = 5,
}

/// A parsed program together with its target expression.
pub struct MrscpProgram {
    program: Program,
    target: Option<Exp>,
}

/// The compact set of all residual graphs of one supercompilation run.
pub struct MrscpGraphSet {
    set: GraphSet,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn fail(status: MrscpStatus, message: impl Into<Vec<u8>>) -> MrscpStatus {
    let c = CString::new(message).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
    status
}

fn leak_string(s: String) -> *mut c_char {
    // residual programs and DOT text never contain NUL bytes
    CString::new(s).unwrap_or_default().into_raw()
}

/// Returns the message of the last failure on this thread. The pointer is
/// valid until the next failing call on the same thread; do not free it.
#[no_mangle]
pub extern "C" fn mrscp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parses a program (with its mandatory `expression:` target) from a
/// NUL-terminated UTF-8 string into `*out`.
#[no_mangle]
pub unsafe extern "C" fn mrscp_program_parse(
    source: *const c_char,
    out: *mut *mut MrscpProgram,
) -> MrscpStatus {
    if source.is_null() || out.is_null() {
        return fail(MrscpStatus::NullArgument, "source and out must be non-NULL");
    }
    let text = match CStr::from_ptr(source).to_str() {
        Ok(t) => t,
        Err(e) => return fail(MrscpStatus::InvalidUtf8, e.to_string()),
    };
    match parse_program(text) {
        Ok((program, target)) => {
            *out = Box::into_raw(Box::new(MrscpProgram { program, target }));
            MrscpStatus::Ok
        }
        Err(e) => fail(MrscpStatus::ParseError, e.to_string()),
    }
}

/// Releases a program handle. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn mrscp_program_free(p: *mut MrscpProgram) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Pretty-prints the program and its target expression. Free the result
/// with `mrscp_string_free`.
#[no_mangle]
pub unsafe extern "C" fn mrscp_program_render(p: *const MrscpProgram) -> *mut c_char {
    let Some(p) = p.as_ref() else {
        return ptr::null_mut();
    };
    let text = match &p.target {
        Some(t) => pretty_program_with_main(&p.program, t),
        None => mrscp::lang::print::pretty_program(&p.program),
    };
    leak_string(text)
}

/// Supercompiles the program's target expression into the set of all
/// residual graphs. `max_nodes` caps the internal node count (0 selects the
/// default of 10^7).
#[no_mangle]
pub unsafe extern "C" fn mrscp_supercompile(
    p: *const MrscpProgram,
    max_nodes: u64,
    out: *mut *mut MrscpGraphSet,
) -> MrscpStatus {
    let (Some(p), false) = (p.as_ref(), out.is_null()) else {
        return fail(MrscpStatus::NullArgument, "program and out must be non-NULL");
    };
    let Some(target) = &p.target else {
        return fail(
            MrscpStatus::NoTargetExpression,
            "the program has no `expression:` target",
        );
    };
    let cfg = EngineConfig {
        max_nodes: if max_nodes == 0 { EngineConfig::default().max_nodes } else { max_nodes },
    };
    match mr_scp_with(&p.program, target, &cfg) {
        Ok(set) => {
            *out = Box::into_raw(Box::new(MrscpGraphSet { set }));
            MrscpStatus::Ok
        }
        Err(e) => fail(MrscpStatus::NodeBudgetExceeded, e.to_string()),
    }
}

/// Releases a graph-set handle. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn mrscp_graphset_free(gs: *mut MrscpGraphSet) {
    if !gs.is_null() {
        drop(Box::from_raw(gs));
    }
}

/// Number of graphs in the set as a decimal string (the count routinely
/// exceeds 64 bits). Free the result with `mrscp_string_free`.
#[no_mangle]
pub unsafe extern "C" fn mrscp_graphset_count(gs: *const MrscpGraphSet) -> *mut c_char {
    let Some(gs) = gs.as_ref() else {
        return ptr::null_mut();
    };
    leak_string(count_graphs(&gs.set).to_string())
}

/// Runs a single-result query, residualizes the selected graph, and stores
/// the pretty-printed residual program in `*out_program` (free with
/// `mrscp_string_free`). `out_size` may be NULL; otherwise it receives the
/// graph size under the query's measure (node count for First/Last).
#[no_mangle]
pub unsafe extern "C" fn mrscp_query_residual(
    gs: *const MrscpGraphSet,
    query: MrscpQuery,
    out_size: *mut u64,
    out_program: *mut *mut c_char,
) -> MrscpStatus {
    let (Some(gs), false) = (gs.as_ref(), out_program.is_null()) else {
        return fail(MrscpStatus::NullArgument, "graph set and out_program must be non-NULL");
    };
    let spec = match query {
        MrscpQuery::First => QuerySpec::First,
        MrscpQuery::Last => QuerySpec::Last,
        MrscpQuery::MinAllNodes => QuerySpec::Min(SizeMeasure::AllNodes),
        MrscpQuery::MaxAllNodes => QuerySpec::Max(SizeMeasure::AllNodes),
        MrscpQuery::MinSkipUnfold => QuerySpec::Min(SizeMeasure::SkipUnfold),
        MrscpQuery::MaxSkipUnfold => QuerySpec::Max(SizeMeasure::SkipUnfold),
    };
    let Some((graph, size)) = query_results(&gs.set, &spec).into_iter().next() else {
        return fail(MrscpStatus::EmptyResultSet, "the result set is empty");
    };
    match residual_program(&graph) {
        Ok((program, main)) => {
            if !out_size.is_null() {
                *out_size = size;
            }
            *out_program = leak_string(pretty_program_with_main(&program, &main));
            MrscpStatus::Ok
        }
        // residualization of an engine-produced graph cannot fail; keep
        // the error channel anyway
        Err(e) => fail(MrscpStatus::InvalidQuery, e.to_string()),
    }
}

/// Renders the whole graph set in Graphviz DOT syntax. Free the result
/// with `mrscp_string_free`.
#[no_mangle]
pub unsafe extern "C" fn mrscp_graphset_dot(gs: *const MrscpGraphSet) -> *mut c_char {
    let Some(gs) = gs.as_ref() else {
        return ptr::null_mut();
    };
    leak_string(to_dot(&gs.set))
}

/// Releases a string returned by this library. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn mrscp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
