use std::ffi::{c_char, CString};
use std::ptr;

use freebound_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    let n = unsafe { fb_last_error(buf.as_mut_ptr(), buf.len()) };
    let bytes: Vec<u8> = buf.iter().take(n.min(255)).map(|&c| c as u8).collect();
    String::from_utf8(bytes).unwrap()
}

#[test]
fn radial_round_trip() {
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(fb_problem_new(4, 0.1, 0.2, 1.0, &mut p), FbStatus::FbOk);
        let mut adm = false;
        assert_eq!(fb_problem_admissible(p, &mut adm), FbStatus::FbOk);
        assert!(adm);
        let (mut r, mut c) = (0.0, 0.0);
        assert_eq!(fb_support_radius(p, &mut r, &mut c), FbStatus::FbOk);
        assert!((r - 20.4755).abs() < 1e-3);
        let mut ls = 0.0;
        assert_eq!(fb_lambda_star(p, 1.0, &mut ls), FbStatus::FbOk);
        assert!((ls - 1.9560733).abs() < 1e-6);

        let mut b = ptr::null_mut();
        assert_eq!(fb_barrier_new(p, 1.5 * ls, 0.9, 1.5, &mut b), FbStatus::FbOk);
        let (mut delta, mut cc, mut l1) = (0.0, 0.0, 0.0);
        assert_eq!(fb_barrier_constants(b, &mut delta, &mut cc, &mut l1), FbStatus::FbOk);
        assert!((l1 - 1.5 - cc).abs() < 1e-15);
        let mut w = 0.0;
        assert_eq!(fb_barrier_w(b, 0.0, &mut w), FbStatus::FbOk);
        assert!((w - delta).abs() <= 1e-10);
        assert_eq!(fb_barrier_v(b, 1.0, &mut w), FbStatus::FbInvalidInput);
        assert!(!last_error().is_empty());
        fb_barrier_free(b);
        fb_problem_free(p);
    }
}

#[test]
fn invalid_input_and_null_arguments() {
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(fb_problem_new(4, 0.3, 0.2, 1.0, &mut p), FbStatus::FbInvalidInput);
        assert!(p.is_null());
        assert!(last_error().contains("alpha < beta"));
        assert_eq!(fb_problem_new(4, 0.1, 0.2, 1.0, ptr::null_mut()), FbStatus::FbNullArgument);
        let mut x = 0.0;
        assert_eq!(fb_domain_total_length(ptr::null(), &mut x), FbStatus::FbNullArgument);
        fb_problem_free(ptr::null_mut());
        fb_domain_free(ptr::null_mut());
    }
}

#[test]
fn domain_queries() {
    unsafe {
        let mut d = ptr::null_mut();
        assert_eq!(fb_domain_dumbbell(0.5, 2.56, 0.2, &mut d), FbStatus::FbOk);
        let mut inside = false;
        assert_eq!(fb_domain_contains(d, 0.0, 0.0, &mut inside), FbStatus::FbOk);
        assert!(inside);
        assert_eq!(fb_domain_contains(d, 2.0, 0.0, &mut inside), FbStatus::FbOk);
        assert!(!inside);
        let mut r = 0.0;
        assert_eq!(fb_domain_inradius(d, 0.02, &mut r), FbStatus::FbOk);
        assert!((r - 1.0).abs() <= 0.04);
        fb_domain_free(d);
        assert_eq!(fb_domain_dumbbell(0.95, 2.56, 0.2, &mut d), FbStatus::FbInvalidInput);
    }
}

#[test]
fn run_command_errors() {
    let dir = tempfile_dir();
    let out = CString::new(dir.clone()).unwrap();
    let bad = CString::new("plot").unwrap();
    let radial = CString::new("radial").unwrap();
    let verify = CString::new("verify").unwrap();
    unsafe {
        assert_eq!(fb_run_command(bad.as_ptr(), ptr::null(), out.as_ptr()), FbStatus::FbInvalidInput);
        assert_eq!(fb_run_command(verify.as_ptr(), ptr::null(), out.as_ptr()), FbStatus::FbInvalidInput);
        assert!(last_error().contains("missing input"));
        assert_eq!(fb_run_command(radial.as_ptr(), ptr::null(), out.as_ptr()), FbStatus::FbOk);
    }
    assert!(std::path::Path::new(&dir).join("radial/w_profile.csv").exists());
    std::fs::remove_dir_all(&dir).unwrap();
}

fn tempfile_dir() -> String {
    let p = std::env::temp_dir().join(format!("freebound-ffi-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&p);
    p.to_string_lossy().into_owned()
}

#[test]
fn header_declares_the_api() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/freebound.h")).unwrap();
    for name in [
        "FREEBOUND_H",
        "typedef struct FbProblem FbProblem",
        "FbStatus fb_problem_new(",
        "FbStatus fb_run_command(",
        "size_t fb_last_error(",
        "FbOk = 0",
    ] {
        assert!(h.contains(name), "header lacks {name}");
    }
}
