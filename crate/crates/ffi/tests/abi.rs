use std::ffi::{CStr, CString};
use std::ptr;

use rpl_ffi::*;

fn perm(text: &str) -> *mut RplPermutation {
    let c = CString::new(text).unwrap();
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { rpl_permutation_parse(c.as_ptr(), &mut p) }, RplStatus::Ok);
    p
}

fn take_string(s: *mut std::ffi::c_char) -> String {
    let out = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_owned();
    unsafe { rpl_string_free(s) };
    out
}

#[test]
fn separating_terms() {
    let p = perm("2301");
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { rpl_permutation_separating_term(p, &mut s) }, RplStatus::Ok);
    assert_eq!(take_string(s), "(-(+(0,0),+(0,0)))");
    unsafe { rpl_permutation_free(p) };

    let q = perm("2031");
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { rpl_permutation_separating_term(q, &mut s) }, RplStatus::Absent);
    assert!(s.is_null());
    let msg = unsafe { CStr::from_ptr(rpl_last_error()) }.to_str().unwrap();
    assert!(msg.contains("not separable"));
    unsafe { rpl_permutation_free(q) };
}

#[test]
fn fractal_round_trip() {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { rpl_fractal_new(2, 2, &mut p) }, RplStatus::Ok);
    let mut len = 0;
    assert_eq!(unsafe { rpl_permutation_len(p, &mut len) }, RplStatus::Ok);
    assert_eq!(len, 4);
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { rpl_permutation_to_string(p, &mut s) }, RplStatus::Ok);
    assert_eq!(take_string(s), "2301");
    unsafe { rpl_permutation_free(p) };
}

#[test]
fn realization_through_handles() {
    let host = perm("2031");
    let mut f = ptr::null_mut();
    assert_eq!(unsafe { rpl_coloring_from_permutation(host, &mut f) }, RplStatus::Ok);
    let mut c = 9;
    assert_eq!(unsafe { rpl_coloring_color(f, 0, 1, &mut c) }, RplStatus::Ok);
    assert_eq!(c, 1);
    assert_eq!(unsafe { rpl_coloring_color(f, 1, 1, &mut c) }, RplStatus::InvalidInput);

    let p = perm("201");
    let mut buf = [0usize; 4];
    let mut len = 0;
    let st = unsafe { rpl_find_realization(f, p, 1000, buf.as_mut_ptr(), buf.len(), &mut len) };
    assert_eq!(st, RplStatus::Ok);
    assert_eq!(&buf[..len], &[0, 1, 3]);
    let st = unsafe { rpl_find_realization(f, p, 1000, buf.as_mut_ptr(), 1, &mut len) };
    assert_eq!((st, len), (RplStatus::BufferTooSmall, 3));

    let q = perm("1302");
    let st = unsafe { rpl_find_realization(f, q, 1000, buf.as_mut_ptr(), buf.len(), &mut len) };
    assert_eq!(st, RplStatus::Absent);
    unsafe {
        rpl_permutation_free(host);
        rpl_permutation_free(p);
        rpl_permutation_free(q);
        rpl_coloring_free(f);
    }
}

#[test]
fn coloring_text_and_errors() {
    let text = CString::new("3\n01\n1\n").unwrap();
    let mut f = ptr::null_mut();
    assert_eq!(unsafe { rpl_coloring_parse(text.as_ptr(), &mut f) }, RplStatus::Ok);
    let mut n = 0;
    assert_eq!(unsafe { rpl_coloring_size(f, &mut n) }, RplStatus::Ok);
    assert_eq!(n, 3);
    unsafe { rpl_coloring_free(f) };

    let bad = CString::new("3\n012\n").unwrap();
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { rpl_coloring_parse(bad.as_ptr(), &mut g) }, RplStatus::InvalidInput);
    assert!(g.is_null());
    assert_eq!(unsafe { rpl_permutation_parse(ptr::null(), &mut ptr::null_mut()) }, RplStatus::NullPointer);
}

#[test]
fn largeness() {
    let mut out = false;
    let set = [2usize, 5, 9];
    assert_eq!(unsafe { rpl_is_omega_n_large(set.as_ptr(), 3, 1, &mut out) }, RplStatus::Ok);
    assert!(out);
    let unsorted = [5usize, 2];
    assert_eq!(unsafe { rpl_is_omega_n_large(unsorted.as_ptr(), 2, 1, &mut out) }, RplStatus::InvalidInput);
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/rpl.h")).unwrap();
    for name in ["rpl_last_error", "rpl_find_realization", "RPL_STATUS_OK", "typedef struct RplColoring"] {
        assert!(header.contains(name), "{name} missing from the header");
    }
}
