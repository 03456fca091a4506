//! C ABI over the `rpl` library.
//!
//! Objects cross the boundary as opaque handles created by `*_parse` / `*_new`
//! functions and released by the matching `*_free`. Every call returns an
//! [`RplStatus`]; on a nonzero status `rpl_last_error` describes the failure.
//! Strings returned through out-parameters are owned by the caller and must be
//! released with [`rpl_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use rpl::fractal::fractal_perm;
use rpl::largeness::is_omega_n_large;
use rpl::perm_algebra::separating_tree;
use rpl::{find_realization, Error, FiniteColoring, Permutation, SearchOutcome, VertexSet};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RplStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    /// The requested object does not exist (no tree, no realization).
    Absent = 3,
    BudgetExhausted = 4,
    /// The output buffer is too small; the needed length was written.
    BufferTooSmall = 5,
    Internal = 6,
}

/// Opaque permutation handle.
pub struct RplPermutation(Permutation);

/// Opaque finite coloring handle.
pub struct RplColoring(FiniteColoring);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = CString::new(msg.into().replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(text));
}

fn fail(status: RplStatus, msg: impl Into<String>) -> RplStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> RplStatus {
    let status = match e {
        Error::Resource(_) => RplStatus::BudgetExhausted,
        _ => RplStatus::InvalidInput,
    };
    fail(status, e.to_string())
}

/// Runs `body`, turning panics into `Internal`.
fn guard(body: impl FnOnce() -> RplStatus) -> RplStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(s) => s,
        Err(_) => fail(RplStatus::Internal, "internal panic"),
    }
}

unsafe fn read_str<'a>(text: *const c_char) -> Result<&'a str, RplStatus> {
    if text.is_null() {
        return Err(fail(RplStatus::NullPointer, "null string"));
    }
    CStr::from_ptr(text)
        .to_str()
        .map_err(|_| fail(RplStatus::InvalidInput, "string is not UTF-8"))
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> RplStatus {
    match CString::new(s) {
        Ok(c) => {
            *out = c.into_raw();
            RplStatus::Ok
        }
        Err(_) => fail(RplStatus::Internal, "string contains a nul byte"),
    }
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn rpl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn rpl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a permutation such as `"2031"` or `"10,0,3,..."`.
///
/// # Safety
/// `text` must be a nul-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rpl_permutation_parse(text: *const c_char, out: *mut *mut RplPermutation) -> RplStatus {
    guard(|| {
        if out.is_null() {
            return fail(RplStatus::NullPointer, "null output");
        }
        let s = match read_str(text) {
            Ok(s) => s,
            Err(st) => return st,
        };
        match s.parse::<Permutation>() {
            Ok(p) => {
                *out = Box::into_raw(Box::new(RplPermutation(p)));
                RplStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// The `k`-fractal of dimension `n`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rpl_fractal_new(k: usize, n: usize, out: *mut *mut RplPermutation) -> RplStatus {
    guard(|| {
        if out.is_null() {
            return fail(RplStatus::NullPointer, "null output");
        }
        match fractal_perm(k, n) {
            Ok(p) => {
                *out = Box::into_raw(Box::new(RplPermutation(p)));
                RplStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `p` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn rpl_permutation_free(p: *mut RplPermutation) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rpl_permutation_len(p: *const RplPermutation, out: *mut usize) -> RplStatus {
    if p.is_null() || out.is_null() {
        return fail(RplStatus::NullPointer, "null argument");
    }
    *out = (*p).0.len();
    RplStatus::Ok
}

/// Text form of the permutation; free with [`rpl_string_free`].
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rpl_permutation_to_string(p: *const RplPermutation, out: *mut *mut c_char) -> RplStatus {
    if p.is_null() || out.is_null() {
        return fail(RplStatus::NullPointer, "null argument");
    }
    guard(|| write_string(out, (*p).0.to_string()))
}

/// Separating tree term such as `(-(+(0,0),+(0,0)))`; `Absent` when the
/// permutation is not separable.
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rpl_permutation_separating_term(
    p: *const RplPermutation,
    out: *mut *mut c_char,
) -> RplStatus {
    if p.is_null() || out.is_null() {
        return fail(RplStatus::NullPointer, "null argument");
    }
    guard(|| match separating_tree(&(*p).0) {
        Some(t) => write_string(out, t.term()),
        None => fail(RplStatus::Absent, format!("{} is not separable", (*p).0)),
    })
}

/// Parses a coloring in the text format (`N`, then one row of bits per vertex).
///
/// # Safety
/// `text` must be a nul-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rpl_coloring_parse(text: *const c_char, out: *mut *mut RplColoring) -> RplStatus {
    guard(|| {
        if out.is_null() {
            return fail(RplStatus::NullPointer, "null output");
        }
        let s = match read_str(text) {
            Ok(s) => s,
            Err(st) => return st,
        };
        match FiniteColoring::parse_file(s) {
            Ok(f) => {
                *out = Box::into_raw(Box::new(RplColoring(f)));
                RplStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Coloring induced by a permutation: a pair is 0 when the earlier value is smaller.
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rpl_coloring_from_permutation(
    p: *const RplPermutation,
    out: *mut *mut RplColoring,
) -> RplStatus {
    if p.is_null() || out.is_null() {
        return fail(RplStatus::NullPointer, "null argument");
    }
    guard(|| {
        *out = Box::into_raw(Box::new(RplColoring(FiniteColoring::from_perm(&(*p).0))));
        RplStatus::Ok
    })
}

/// # Safety
/// `f` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn rpl_coloring_free(f: *mut RplColoring) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// # Safety
/// `f` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rpl_coloring_size(f: *const RplColoring, out: *mut usize) -> RplStatus {
    if f.is_null() || out.is_null() {
        return fail(RplStatus::NullPointer, "null argument");
    }
    *out = rpl::Coloring::horizon(&(*f).0);
    RplStatus::Ok
}

/// Color of the pair `x < y`.
///
/// # Safety
/// `f` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rpl_coloring_color(f: *const RplColoring, x: usize, y: usize, out: *mut u8) -> RplStatus {
    if f.is_null() || out.is_null() {
        return fail(RplStatus::NullPointer, "null argument");
    }
    let f = &(*f).0;
    let n = rpl::Coloring::horizon(f);
    if x >= y || y >= n {
        return fail(RplStatus::InvalidInput, format!("need x < y < {n}, got ({x}, {y})"));
    }
    *out = rpl::Coloring::color(f, x, y);
    RplStatus::Ok
}

/// Lexicographically first set of vertices realizing the pattern of `p`.
///
/// On `Ok` the vertices are written to `buf` and their count to `len`. When
/// `cap` is too small, `BufferTooSmall` is returned with `len` set to the
/// needed length.
///
/// # Safety
/// `f` and `p` must be live handles, `buf` must hold `cap` entries, `len` writable.
#[no_mangle]
pub unsafe extern "C" fn rpl_find_realization(
    f: *const RplColoring,
    p: *const RplPermutation,
    budget: u64,
    buf: *mut usize,
    cap: usize,
    len: *mut usize,
) -> RplStatus {
    if f.is_null() || p.is_null() || len.is_null() || (buf.is_null() && cap > 0) {
        return fail(RplStatus::NullPointer, "null argument");
    }
    guard(|| {
        let f = &(*f).0;
        let host = VertexSet::range(0, rpl::Coloring::horizon(f));
        match find_realization(f, &host, &(*p).0.pattern(), budget) {
            Ok(SearchOutcome::Found(set)) => {
                *len = set.len();
                if set.len() > cap {
                    return fail(RplStatus::BufferTooSmall, format!("need room for {} vertices", set.len()));
                }
                ptr::copy_nonoverlapping(set.as_slice().as_ptr(), buf, set.len());
                RplStatus::Ok
            }
            Ok(SearchOutcome::ProvenAbsent) => {
                *len = 0;
                fail(RplStatus::Absent, "no realization")
            }
            Ok(SearchOutcome::BudgetExhausted { nodes }) => {
                *len = 0;
                fail(RplStatus::BudgetExhausted, format!("search stopped after {nodes} nodes"))
            }
            Err(e) => from_error(e),
        }
    })
}

/// Whether the strictly increasing set of `len` values is `ω^n`-large.
///
/// # Safety
/// `set` must hold `len` entries and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn rpl_is_omega_n_large(set: *const usize, len: usize, n: usize, out: *mut bool) -> RplStatus {
    if out.is_null() || (set.is_null() && len > 0) {
        return fail(RplStatus::NullPointer, "null argument");
    }
    let items: &[usize] = if len == 0 { &[] } else { std::slice::from_raw_parts(set, len) };
    if items.windows(2).any(|w| w[0] >= w[1]) {
        return fail(RplStatus::InvalidInput, "set must increase strictly");
    }
    guard(|| {
        *out = is_omega_n_large(items, n);
        RplStatus::Ok
    })
}
