use std::ffi::{c_char, CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use stable_lab_ffi::*;

fn last_error() -> String {
    let len = sl_last_error_length();
    let mut buf = vec![0 as c_char; len + 1];
    assert_eq!(unsafe { sl_last_error_message(buf.as_mut_ptr(), buf.len()) }, SL_OK);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(sl_version()) }.to_str().unwrap();
    assert!(v.starts_with("stable-lab "));
}

#[test]
fn domain_and_field_round_trip() {
    unsafe {
        let mut d = ptr::null_mut();
        assert_eq!(sl_domain_new(2, ptr::null(), 1.0, 0.25, &mut d), SL_OK);
        let (mut n, mut ni) = (0usize, 0usize);
        assert_eq!(sl_domain_node_count(d, &mut n), SL_OK);
        assert_eq!(sl_domain_interior_count(d, &mut ni), SL_OK);
        assert!(ni > 0 && n > ni);
        let mut x = [0.0; 2];
        assert_eq!(sl_domain_coord(d, 0, x.as_mut_ptr(), 2), SL_OK);
        assert!(x[0].hypot(x[1]) < 1.0);
        assert_eq!(sl_domain_coord(d, n, x.as_mut_ptr(), 2), SL_ERR_INVALID_PARAMETER);

        let vals: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let mut f = ptr::null_mut();
        assert_eq!(sl_field_from_values(d, vals.as_ptr(), n, &mut f), SL_OK);
        let mut back = vec![0.0; n];
        assert_eq!(sl_field_values(f, back.as_mut_ptr(), n), SL_OK);
        assert_eq!(back, vals);
        assert_eq!(sl_field_values(f, back.as_mut_ptr(), n - 1), SL_ERR_BUFFER_TOO_SMALL);
        let mut g = ptr::null_mut();
        assert_eq!(sl_field_from_values(d, vals.as_ptr(), n - 1, &mut g), SL_ERR_INVALID_PARAMETER);
        assert!(g.is_null());
        sl_field_free(f);
        sl_domain_free(d);
        sl_domain_free(ptr::null_mut());
    }
}

#[test]
fn error_codes_and_messages() {
    unsafe {
        let mut d = ptr::null_mut();
        assert_eq!(sl_domain_new(7, ptr::null(), 1.0, 0.25, &mut d), SL_ERR_DIMENSION_OUT_OF_RANGE);
        assert!(!last_error().is_empty());
        assert_eq!(sl_domain_new(2, ptr::null(), 1.0, 0.25, ptr::null_mut()), SL_ERR_NULL_POINTER);
        assert!(last_error().contains("out"));
        let mut f = ptr::null_mut();
        let bad = CString::new("pow:q=2").unwrap();
        assert_eq!(sl_nonlinearity_parse(bad.as_ptr(), &mut f), SL_ERR_PARSE);
        let invalid = [0xffu8 as c_char, 0];
        assert_eq!(sl_nonlinearity_parse(invalid.as_ptr(), &mut f), SL_ERR_INVALID_UTF8);
        let mut small = [0 as c_char; 2];
        assert_eq!(sl_last_error_message(small.as_mut_ptr(), 2), SL_ERR_BUFFER_TOO_SMALL);
    }
}

#[test]
fn newton_and_stability() {
    unsafe {
        let mut d = ptr::null_mut();
        assert_eq!(sl_domain_new(2, ptr::null(), 0.5, 1.0 / 16.0, &mut d), SL_OK);
        let mut n = 0usize;
        sl_domain_node_count(d, &mut n);
        let zeros = vec![0.0; n];
        let mut g = ptr::null_mut();
        assert_eq!(sl_field_from_values(d, zeros.as_ptr(), n, &mut g), SL_OK);
        let spec = CString::new("exp").unwrap();
        let mut f = ptr::null_mut();
        assert_eq!(sl_nonlinearity_parse(spec.as_ptr(), &mut f), SL_OK);
        let mut v = 0.0;
        assert_eq!(sl_nonlinearity_eval(f, 0.0, &mut v), SL_OK);
        assert_eq!(v, 1.0);
        assert_eq!(sl_nonlinearity_left_derivative(f, 1.0, &mut v), SL_OK);
        assert!((v - std::f64::consts::E).abs() < 1e-12);

        let mut u = ptr::null_mut();
        assert_eq!(sl_newton_solve(g, f, 1e-12, &mut u), SL_OK);
        let mut vals = vec![0.0; n];
        sl_field_values(u, vals.as_mut_ptr(), n);
        assert!(vals.iter().all(|&x| x >= 0.0) && vals.iter().any(|&x| x > 0.0));
        let (mut verdict, mut l1) = (-1, 0.0);
        assert_eq!(sl_is_stable(u, f, f64::NAN, &mut verdict, &mut l1), SL_OK);
        assert_eq!(verdict, SL_STABLE);
        assert!(l1 > 0.0);

        sl_field_free(u);
        sl_field_free(g);
        sl_nonlinearity_free(f);
        sl_domain_free(d);
    }
}

#[test]
fn sweep_and_catalog() {
    unsafe {
        let (mut m, mut v) = (0.0, 1u64);
        assert_eq!(sl_matrix_sweep(3, 5000, 42, &mut m, &mut v), SL_OK);
        assert!(m >= -1e-9 && v == 0);
        let name = CString::new("gelfand:n=9").unwrap();
        let mut l1 = 0.0;
        assert_eq!(sl_catalog_radial_lambda1(name.as_ptr(), 1e-4, 10_000, &mut l1), SL_OK);
        assert!(l1 < 0.0);
        let name = CString::new("gelfand:n=10").unwrap();
        assert_eq!(sl_catalog_radial_lambda1(name.as_ptr(), 1e-4, 10_000, &mut l1), SL_OK);
        assert!(l1 >= -1e-2);
    }
}

#[test]
fn run_config_reports_exit_code() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("sweep.toml");
    std::fs::write(&cfg, "experiment = \"matrix-sweep\"\n[matrix]\ntrials = 500\ndims = [2]\n").unwrap();
    let c = CString::new(cfg.to_str().unwrap()).unwrap();
    let out = CString::new(tmp.path().join("out").to_str().unwrap()).unwrap();
    let mut code = -1;
    assert_eq!(unsafe { sl_run_config(c.as_ptr(), out.as_ptr(), &mut code) }, SL_OK);
    assert_eq!(code, 0);
    assert!(tmp.path().join("out/report.json").exists());

    std::fs::write(&cfg, "experiment = \"matrix-sweep\"\nbogus = 1\n").unwrap();
    assert_eq!(unsafe { sl_run_config(c.as_ptr(), out.as_ptr(), &mut code) }, SL_ERR_PARSE);
}

fn target_dir() -> PathBuf {
    // tests run from target/<profile>/deps
    std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf()
}

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include")
}

#[test]
fn header_declares_every_entry_point() {
    let h = std::fs::read_to_string(header().join("stable_lab.h")).unwrap();
    for sym in [
        "sl_version",
        "sl_last_error_message",
        "sl_domain_new",
        "sl_domain_free",
        "sl_field_from_values",
        "sl_field_values",
        "sl_nonlinearity_parse",
        "sl_newton_solve",
        "sl_is_stable",
        "sl_matrix_sweep",
        "sl_catalog_radial_lambda1",
        "sl_run_config",
        "typedef struct SlDomain SlDomain",
        "#define SL_ERR_PARSE 24",
    ] {
        assert!(h.contains(sym), "{sym}");
    }
}

#[test]
fn c_program_links_against_static_library() {
    let lib = target_dir().join("libstable_lab_ffi.a");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if !lib.exists() || Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler or static library at {}", lib.display());
        return;
    }
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("main.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include "stable_lab.h"
int main(void) {
    SlDomain *d = NULL;
    if (sl_domain_new(2, NULL, 1.0, 0.125, &d) != SL_OK) return 10;
    size_t n = 0;
    if (sl_domain_node_count(d, &n) != SL_OK || n == 0) return 11;
    double m = 0.0; uint64_t v = 0;
    if (sl_matrix_sweep(4, 1000, 1, &m, &v) != SL_OK || v != 0) return 12;
    SlDomain *bad = NULL;
    if (sl_domain_new(1, NULL, 1.0, 0.125, &bad) != SL_ERR_DIMENSION_OUT_OF_RANGE) return 13;
    char msg[256];
    if (sl_last_error_message(msg, sizeof msg) != SL_OK) return 14;
    sl_domain_free(d);
    printf("%s %zu\n", sl_version(), n);
    return 0;
}
"#,
    )
    .unwrap();
    let exe = tmp.path().join("main");
    let st = Command::new(&cc)
        .arg(&src)
        .arg("-I")
        .arg(header())
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(st.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("stable-lab "));
}
