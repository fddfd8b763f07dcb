use shl_ffi::*;
use std::ffi::{c_char, CStr, CString};
use std::ptr;

fn last_error() -> String {
    unsafe { CStr::from_ptr(shl_last_error_message()) }.to_str().unwrap().to_string()
}

fn spec(key: &str) -> *mut ShlSpec {
    let k = CString::new(key).unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { shl_spec_new(k.as_ptr(), &mut h) }, ShlStatus::Ok);
    assert!(!h.is_null());
    h
}

#[test]
fn spec_lifecycle_and_values() {
    let h = spec("model:B=2");
    let mut v = 0.0;
    // f(s) = e^{s²}/s³ at s = 1
    assert_eq!(unsafe { shl_spec_evaluate(h, 1.0, 0, &mut v) }, ShlStatus::Ok);
    assert!((v - std::f64::consts::E).abs() < 1e-12);
    let mut big = 0.0;
    let mut back = 0.0;
    unsafe {
        assert_eq!(shl_spec_big_f(h, 2.0, &mut big), ShlStatus::Ok);
        assert_eq!(shl_spec_big_f_inv(h, big, &mut back), ShlStatus::Ok);
    }
    assert!((back - 2.0).abs() < 1e-9, "{back}");
    let mut beta = 0.0;
    assert_eq!(unsafe { shl_spec_beta(h, &mut beta) }, ShlStatus::Ok);
    assert!((beta - 1.27202).abs() < 1e-4, "{beta}");
    assert_eq!(last_error(), "");
    unsafe { shl_spec_free(h) };
}

#[test]
fn errors_map_to_status_codes() {
    let k = CString::new("nosuch").unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { shl_spec_new(k.as_ptr(), &mut h) }, ShlStatus::UnknownSpec);
    assert!(h.is_null());
    assert!(last_error().contains("nosuch"));

    assert_eq!(unsafe { shl_spec_new(ptr::null(), &mut h) }, ShlStatus::NullPointer);
    let mut v = 0.0;
    assert_eq!(unsafe { shl_spec_evaluate(ptr::null(), 1.0, 0, &mut v) }, ShlStatus::NullPointer);

    let bad = [0xffu8, 0];
    assert_eq!(unsafe { shl_spec_new(bad.as_ptr() as *const c_char, &mut h) }, ShlStatus::InvalidUtf8);

    let s = spec("smoothed:B=2");
    assert_eq!(unsafe { shl_spec_evaluate(s, -1.0, 0, &mut v) }, ShlStatus::Domain);
    assert!(!last_error().is_empty());
    unsafe {
        shl_spec_free(s);
        shl_spec_free(ptr::null_mut());
        shl_string_free(ptr::null_mut());
    }
}

#[test]
fn model_profile_matches_closed_form() {
    let h = spec("model:B=2");
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { shl_profile_build(h, 0.0, 0.0, &mut p) }, ShlStatus::Ok);
    let mut r = 0.0;
    assert_eq!(unsafe { shl_profile_radius(p, &mut r) }, ShlStatus::Ok);
    assert!((r - 1.0).abs() < 1e-6, "{r}");
    for x in [1e-3, 0.1, 0.5] {
        let (mut u, mut du) = (0.0, 0.0);
        assert_eq!(unsafe { shl_profile_eval(p, x, &mut u, &mut du) }, ShlStatus::Ok);
        let v = (-2.0 * f64::ln(x)).sqrt();
        assert!((u - v).abs() < 1e-6 * v, "{x}: {u} vs {v}");
        assert!((du + 1.0 / (x * v)).abs() < 1e-5 / (x * v));
    }
    let mut u = 0.0;
    assert_eq!(unsafe { shl_profile_eval(p, 2.0, &mut u, ptr::null_mut()) }, ShlStatus::Domain);
    unsafe {
        shl_profile_free(p);
        shl_spec_free(h);
    }
}

#[test]
fn classify_json_round_trip() {
    let h = spec("power_exp:q=2,r=0");
    let mut out: *mut c_char = ptr::null_mut();
    assert_eq!(unsafe { shl_spec_classify_json(h, &mut out) }, ShlStatus::Ok);
    let text = unsafe { CStr::from_ptr(out) }.to_str().unwrap().to_string();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["f1_finite"], true);
    assert!((v["beta"].as_f64().unwrap() - 0.84188).abs() < 1e-4);
    unsafe {
        shl_string_free(out);
        shl_spec_free(h);
    }
}

#[test]
fn demo_rejects_bad_config() {
    let cfg = CString::new("nosuch = 1").unwrap();
    let mut out: *mut c_char = ptr::null_mut();
    assert_eq!(unsafe { shl_demo_run_json(cfg.as_ptr(), &mut out) }, ShlStatus::Config);
    assert!(out.is_null());
}

#[test]
fn demo_report_over_the_abi() {
    let cfg = CString::new("[grid]\nintervals = 1024\n[demo]\nmodes = 128\n").unwrap();
    let mut out: *mut c_char = ptr::null_mut();
    assert_eq!(unsafe { shl_demo_run_json(cfg.as_ptr(), &mut out) }, ShlStatus::Ok, "{}", last_error());
    let v: serde_json::Value = serde_json::from_str(unsafe { CStr::from_ptr(out) }.to_str().unwrap()).unwrap();
    assert_eq!(v["verdict"], true);
    unsafe { shl_string_free(out) };
}
