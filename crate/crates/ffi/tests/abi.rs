use corrdetect_ffi::*;
use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

fn last_error() -> String {
    unsafe { CStr::from_ptr(cd_last_error_message()) }.to_string_lossy().into_owned()
}

#[test]
fn family_lifecycle_and_stats() {
    let mut fam = ptr::null_mut();
    assert_eq!(cd_family_ksets(12, 3, &mut fam), CdStatus::Ok);
    unsafe {
        assert_eq!(cd_family_n(fam), 12);
        assert_eq!(cd_family_k(fam), 3);
        assert!((cd_family_log_size(fam) - 220f64.ln()).abs() < 1e-12);
        let rng = cd_rng_new(7, 1, 0);
        let mut x = vec![0.0; 12];
        assert_eq!(cd_sample_null(rng, 12, x.as_mut_ptr()), CdStatus::Ok);
        let mut g = 0.0;
        assert_eq!(cd_glrt_stat(x.as_ptr(), 12, fam, 0.4, &mut g), CdStatus::Ok);
        let f = corrdetect::classes::SetFamily::k_sets(12, 3).unwrap();
        assert_eq!(g, corrdetect::detectors::glrt_stat(&x, &f, 0.4).unwrap());
        let mut set = [0usize; 3];
        assert_eq!(cd_family_sample_member(fam, rng, set.as_mut_ptr()), CdStatus::Ok);
        assert!(set[0] < set[1] && set[1] < set[2] && set[2] < 12);
        let mut q = 0.0;
        assert_eq!(cd_quad_form(x.as_ptr(), 12, set.as_ptr(), 3, 0.4, &mut q), CdStatus::Ok);
        assert!(q <= g);
        cd_rng_free(rng);
        cd_family_free(fam);
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    let mut fam = ptr::null_mut();
    assert_eq!(cd_family_ksets(3, 5, &mut fam), CdStatus::InvalidParameter);
    assert!(fam.is_null());
    assert!(!last_error().is_empty());
    let x = [1.0, 1.0];
    let set = [0usize, 1];
    let mut v = 0.0;
    unsafe {
        assert_eq!(cd_quad_form(x.as_ptr(), 2, set.as_ptr(), 2, 0.0, &mut v), CdStatus::InvalidParameter);
        assert_eq!(cd_quad_form(x.as_ptr(), 2, set.as_ptr(), 2, 0.5, ptr::null_mut()), CdStatus::NullPointer);
        assert!(last_error().contains("out_value"));
        assert_eq!(cd_quad_form(x.as_ptr(), 2, set.as_ptr(), 2, 0.5, &mut v), CdStatus::Ok);
        assert!((v - 2.0 / 3.0).abs() < 1e-12);
        let mut m = ptr::null_mut();
        assert_eq!(cd_family_matchings(3, &mut m), CdStatus::Ok);
        let mut b = 0.0;
        assert_eq!(
            cd_bayes_lower_bound(m, 0.3, 1.0, CdMgfMode::Exact, 0, 0, &mut b, ptr::null_mut()),
            CdStatus::ExactUnavailable
        );
        let (mut holds, mut floor) = (false, 0.0);
        assert_eq!(cd_corollary_condition(m, 0.5, &mut holds, &mut floor), CdStatus::Ok);
        assert!(holds && floor == 0.3);
        cd_family_free(m);
        cd_family_free(ptr::null_mut());
    }
}

#[test]
fn explicit_families_parse() {
    let text = CString::new("1 2\n3 4\n").unwrap();
    let mut fam = ptr::null_mut();
    unsafe {
        assert_eq!(cd_family_parse_explicit(text.as_ptr(), 0, &mut fam), CdStatus::Ok);
        assert_eq!(cd_family_n(fam), 4);
        let mut b = 0.0;
        assert_eq!(cd_bayes_lower_bound(fam, 0.0, 1.0, CdMgfMode::Exact, 0, 0, &mut b, ptr::null_mut()), CdStatus::Ok);
        assert_eq!(b, 0.6);
        cd_family_free(fam);
        let dup = CString::new("1 2\n2 1\n").unwrap();
        assert_eq!(cd_family_parse_explicit(dup.as_ptr(), 0, &mut fam), CdStatus::InvalidSet);
    }
}

#[test]
fn scalar_helpers() {
    assert!((cd_nu(0.5, 1.0) - 0.477174).abs() < 1e-6);
    assert!((cd_log_det_as(3, 0.5) - 0.5f64.ln()).abs() < 1e-12);
    assert!((cd_gof_threshold(10_000, 100) - 137.169).abs() < 1e-3);
    let v = unsafe { CStr::from_ptr(cd_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

fn header() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/corrdetect.h")
}

#[test]
fn header_declares_every_export() {
    let h = std::fs::read_to_string(header()).unwrap();
    let src = std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("src/lib.rs")).unwrap();
    let mut count = 0;
    for line in src.lines() {
        if let Some(rest) = line.split("extern \"C\" fn ").nth(1) {
            let name = rest.split('(').next().unwrap();
            assert!(h.contains(&format!("{name}(")), "{name} missing from header");
            count += 1;
        }
    }
    assert!(count >= 20);
}

/// Compiles and runs a small C program against the static library.
#[test]
fn c_program_links_against_the_header() {
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|d| d.parent()).unwrap().to_path_buf();
    let lib = profile_dir.join("libcorrdetect_ffi.a");
    assert!(lib.exists(), "static library not found at {}", lib.display());
    let tmp = tempfile::tempdir().unwrap();
    let c_src = tmp.path().join("smoke.c");
    std::fs::write(
        &c_src,
        r#"#include <stdio.h>
#include "corrdetect.h"
int main(void) {
    CdFamily *f = NULL;
    if (cd_family_intervals(16, 4, &f) != CD_STATUS_OK) return 1;
    CdRng *r = cd_rng_new(1, 2, 3);
    double x[16], g = 0.0;
    if (cd_sample_null(r, 16, x) != CD_STATUS_OK) return 2;
    if (cd_local_sq_stat(x, 16, f, &g) != CD_STATUS_OK) return 3;
    if (cd_family_ksets(2, 3, &f) != CD_STATUS_INVALID_PARAMETER) return 4;
    printf("%.17g %s\n", g, cd_last_error_message());
    cd_rng_free(r);
    return 0;
}
"#,
    )
    .unwrap();
    let bin = tmp.path().join("smoke");
    let status = Command::new("cc")
        .arg(&c_src)
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .expect("a C compiler is available");
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status);
    let text = String::from_utf8(out.stdout).unwrap();
    let g: f64 = text.split_whitespace().next().unwrap().parse().unwrap();
    assert!(g >= 0.0);
}
