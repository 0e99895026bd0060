use std::ffi::CStr;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use qtrace_ffi::*;

const RHO_RE: [f64; 4] = [0.7, 0.2, 0.2, 0.3];
const RHO_IM: [f64; 4] = [0.0, 0.1, -0.1, 0.0];
const SIGMA_RE: [f64; 4] = [0.4, 0.0, 0.0, 0.6];
const SIGMA_IM: [f64; 4] = [0.0, -0.1, 0.1, 0.0];

fn last_error() -> String {
    unsafe { CStr::from_ptr(qt_last_error_message()) }.to_string_lossy().into_owned()
}

fn reference_pair() -> *mut QtPair {
    let mut pair = ptr::null_mut();
    let st = unsafe {
        qt_pair_new(2, RHO_RE.as_ptr(), RHO_IM.as_ptr(), SIGMA_RE.as_ptr(), SIGMA_IM.as_ptr(), &mut pair)
    };
    assert_eq!(st, QtStatus::Ok, "{}", last_error());
    pair
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn scalar_entry_points() {
    let mut c = QtConstants::default();
    assert_eq!(unsafe { qt_g_constant(0.5, &mut c) }, QtStatus::Ok);
    assert!(rel(c.g_s, 0.80474234254941181121) < 1e-13);
    assert!(rel(c.r_star, 3.9215536345675050925) < 1e-11);
    assert_eq!(c.s, 0.5);

    let mut v = 0.0;
    assert_eq!(unsafe { qt_critical_r(0.25, &mut v) }, QtStatus::Ok);
    assert!(rel(v, 49.435253001058201937) < 1e-11);
    assert_eq!(unsafe { qt_c_constant(0.5, &mut v) }, QtStatus::Ok);
    assert!((v - 0.5).abs() < 1e-15);
    assert_eq!(unsafe { qt_lambert_w_minus1(-0.1, &mut v) }, QtStatus::Ok);
    assert!(rel(v, -3.5771520639572972184) < 1e-14);

    assert_eq!(unsafe { qt_lambert_w_minus1(0.5, &mut v) }, QtStatus::InvalidArgument);
    assert!(!last_error().is_empty());
    assert_eq!(unsafe { qt_g_constant(0.0, &mut c) }, QtStatus::InvalidArgument);
    assert_eq!(unsafe { qt_g_constant(f64::NAN, &mut c) }, QtStatus::InvalidArgument);
    assert_eq!(unsafe { qt_g_constant(0.5, ptr::null_mut()) }, QtStatus::NullPointer);
    assert_eq!(unsafe { qt_critical_r(0.5, ptr::null_mut()) }, QtStatus::NullPointer);
    assert_eq!(unsafe { qt_critical_r(0.5, &mut v) }, QtStatus::Ok);
    assert_eq!(last_error(), "");
}

#[test]
fn pair_divergences() {
    let pair = reference_pair();
    unsafe {
        assert_eq!(qt_pair_dim(pair), 2);
        let mut q = 0.0;
        assert_eq!(qt_q_direct(pair, &mut q), QtStatus::Ok);
        assert!(rel(q, 0.95461652920945113061) < 1e-13);
        let mut v = 0.0;
        assert_eq!(qt_q_layercake(pair, &mut v), QtStatus::Ok);
        assert!(rel(v, q) < 1e-11);
        assert_eq!(qt_q_bkm_route(pair, &mut v), QtStatus::Ok);
        assert!(rel(v, q) < 1e-11);
        assert_eq!(qt_q2_bkm(pair, &mut v), QtStatus::Ok);
        assert!(rel(v, 1.7285227033046936931) < 1e-13);
        assert_eq!(qt_q2_collision(pair, &mut v), QtStatus::Ok);
        assert!(rel(v, 0.58819761629352196593) < 1e-11);
        assert_eq!(qt_q_alpha_layercake(pair, 0.5, &mut v), QtStatus::Ok);
        assert!(rel(v, 1.2664965231157803835) < 1e-11);
        assert_eq!(qt_q_alpha_sandwiched(pair, 0.9, &mut v), QtStatus::Ok);
        assert!(rel(v, 1.6204107749619802483) < 1e-13);
        assert_eq!(qt_relative_sup(pair, &mut v), QtStatus::Ok);
        assert!(rel(v, 2.10417730671178850054778667559508) < 1e-13);

        assert_eq!(qt_q_alpha_sandwiched(pair, 1.5, &mut v), QtStatus::InvalidArgument);
        assert_eq!(qt_q_direct(pair, ptr::null_mut()), QtStatus::NullPointer);
        qt_pair_free(pair);
    }
}

#[test]
fn real_only_pair_and_bad_inputs() {
    let mut pair = ptr::null_mut();
    let rho = [0.5, 0.0, 0.0, 0.5];
    let sigma = [1.0, 0.0, 0.0, 1.0];
    unsafe {
        assert_eq!(qt_pair_new(2, rho.as_ptr(), ptr::null(), sigma.as_ptr(), ptr::null(), &mut pair), QtStatus::Ok);
        let mut q = 0.0;
        assert_eq!(qt_q_direct(pair, &mut q), QtStatus::Ok);
        assert!((q - 1.5f64.ln()).abs() < 1e-15);
        qt_pair_free(pair);

        let mut out = ptr::null_mut();
        let singular = [1.0, 0.0, 0.0, 0.0];
        assert_eq!(
            qt_pair_new(2, rho.as_ptr(), ptr::null(), singular.as_ptr(), ptr::null(), &mut out),
            QtStatus::InvalidMatrix
        );
        assert!(out.is_null());
        let skew = [0.5, 0.3, 0.0, 0.5];
        assert_eq!(
            qt_pair_new(2, skew.as_ptr(), ptr::null(), sigma.as_ptr(), ptr::null(), &mut out),
            QtStatus::InvalidMatrix
        );
        let nan = [f64::NAN, 0.0, 0.0, 0.5];
        assert_eq!(qt_pair_new(2, nan.as_ptr(), ptr::null(), sigma.as_ptr(), ptr::null(), &mut out), QtStatus::InvalidMatrix);
        assert_eq!(qt_pair_new(0, rho.as_ptr(), ptr::null(), sigma.as_ptr(), ptr::null(), &mut out), QtStatus::InvalidArgument);
        assert_eq!(qt_pair_new(2, ptr::null(), ptr::null(), sigma.as_ptr(), ptr::null(), &mut out), QtStatus::NullPointer);
        assert_eq!(
            qt_pair_new(2, rho.as_ptr(), ptr::null(), sigma.as_ptr(), ptr::null(), ptr::null_mut()),
            QtStatus::NullPointer
        );
        assert!(last_error().contains("NULL"));

        let mut v = 0.0;
        assert_eq!(qt_q_direct(ptr::null(), &mut v), QtStatus::NullPointer);
        assert_eq!(qt_pair_dim(ptr::null()), 0);
        qt_pair_free(ptr::null_mut());
    }
}

#[test]
fn witness_handle_attains_the_constant() {
    let s = 0.5;
    let mut c = QtConstants::default();
    unsafe {
        assert_eq!(qt_g_constant(s, &mut c), QtStatus::Ok);
        let (d, k) = (4usize, 1usize);
        let lambda = d as f64 / (k as f64 * c.r_star);
        let mut pair = ptr::null_mut();
        assert_eq!(qt_witness_new(d, k, lambda, &mut pair), QtStatus::Ok);
        let (mut q, mut qt) = (0.0, 0.0);
        assert_eq!(qt_q_direct(pair, &mut q), QtStatus::Ok);
        assert_eq!(qt_q_alpha_sandwiched(pair, s, &mut qt), QtStatus::Ok);
        assert!(rel(q / qt, c.g_s) < 1e-12);
        qt_pair_free(pair);

        assert_eq!(qt_witness_new(2, 3, 1.0, &mut pair), QtStatus::InvalidArgument);
        assert_eq!(qt_witness_new(2, 1, -1.0, &mut pair), QtStatus::InvalidArgument);
    }
}

#[test]
fn errors_are_thread_local() {
    let mut v = 0.0;
    assert_eq!(unsafe { qt_lambert_w_minus1(1.0, &mut v) }, QtStatus::InvalidArgument);
    let here = last_error();
    let there = std::thread::spawn(last_error).join().unwrap();
    assert!(!here.is_empty());
    assert_eq!(there, "");
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(qt_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_entry_point() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/qtrace.h")).unwrap();
    for name in [
        "qt_last_error_message",
        "qt_version",
        "qt_g_constant",
        "qt_c_constant",
        "qt_lambert_w_minus1",
        "qt_critical_r",
        "qt_pair_new",
        "qt_witness_new",
        "qt_pair_free",
        "qt_pair_dim",
        "qt_q_direct",
        "qt_q_layercake",
        "qt_q_bkm_route",
        "qt_q2_bkm",
        "qt_q2_collision",
        "qt_q_alpha_layercake",
        "qt_q_alpha_sandwiched",
        "qt_relative_sup",
        "typedef struct QtPair QtPair",
        "QT_STATUS_INVALID_MATRIX = 3",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}

const C_PROGRAM: &str = r#"
#include <math.h>
#include <stdio.h>
#include "qtrace.h"

int main(void) {
    QtConstants c;
    if (qt_g_constant(0.5, &c) != QT_STATUS_OK) return 1;
    double re[4] = {0.7, 0.2, 0.2, 0.3}, im[4] = {0.0, 0.1, -0.1, 0.0};
    double sre[4] = {0.4, 0.0, 0.0, 0.6}, sim[4] = {0.0, -0.1, 0.1, 0.0};
    QtPair *pair = NULL;
    if (qt_pair_new(2, re, im, sre, sim, &pair) != QT_STATUS_OK) return 2;
    double q = 0.0;
    if (qt_q_direct(pair, &q) != QT_STATUS_OK) return 3;
    qt_pair_free(pair);
    if (qt_q_direct(NULL, &q) != QT_STATUS_NULL_POINTER) return 4;
    printf("%s %.15f %.15f %s\n", qt_version(), c.g_s, q, qt_last_error_message());
    return 0;
}
"#;

fn compiler() -> Option<String> {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    Command::new(&cc).arg("--version").output().ok().filter(|o| o.status.success()).map(|_| cc)
}

#[test]
fn c_program_links_against_the_static_library() {
    let Some(cc) = compiler() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let deps: PathBuf = std::env::current_exe().unwrap().parent().unwrap().to_path_buf();
    let lib = deps.join("libqtrace_ffi.a");
    assert!(lib.exists(), "{} not built", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    let exe = dir.path().join("main");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let out = Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-I", concat!(env!("CARGO_MANIFEST_DIR"), "/include")])
        .arg(&src)
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(out.status.success(), "cc failed: {}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    let text = String::from_utf8(run.stdout).unwrap();
    let fields: Vec<&str> = text.split_whitespace().collect();
    assert_eq!(fields[0], env!("CARGO_PKG_VERSION"));
    assert!(rel(fields[1].parse().unwrap(), 0.80474234254941181121) < 1e-14);
    assert!(rel(fields[2].parse().unwrap(), 0.95461652920945113061) < 1e-14);
    assert_eq!(&fields[3..], ["pair", "is", "NULL"]);
}
