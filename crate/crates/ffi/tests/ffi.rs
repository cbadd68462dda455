use std::ffi::{CStr, CString};
use std::ptr;

use meanspec_ffi::*;

fn domain(desc: &str) -> *mut MsDomain {
    let c = CString::new(desc).unwrap();
    let mut d = ptr::null_mut();
    assert_eq!(unsafe { ms_domain_parse(c.as_ptr(), &mut d) }, MsStatus::Ok);
    assert!(!d.is_null());
    d
}

#[test]
fn square_spectrum_round_trip() {
    let d = domain("box:1x1");
    let mut vol = 0.0;
    unsafe {
        assert_eq!(ms_domain_volume(d, &mut vol), MsStatus::Ok);
        assert!((vol - 1.0).abs() < 1e-14);
        let mut s = ptr::null_mut();
        assert_eq!(ms_spectrum_exact(d, 10, &mut s), MsStatus::Ok);
        assert_eq!(ms_spectrum_len(s), 10);
        let (mut lambda, mut mean) = (0.0, 0.0);
        assert_eq!(ms_spectrum_mode(s, 0, &mut lambda, &mut mean), MsStatus::Ok);
        let pi = std::f64::consts::PI;
        assert!((lambda - 2.0 * pi * pi).abs() < 1e-10);
        assert!((mean - 8.0 / (pi * pi)).abs() < 1e-12);
        assert_eq!(ms_spectrum_mode(s, 10, &mut lambda, &mut mean), MsStatus::InvalidInput);
        let mut count = 0usize;
        assert_eq!(ms_census_count(s, 0, &mut count), MsStatus::Ok);
        assert!(count >= 1 && count <= 10);
        assert_eq!(ms_census_count(s, 7, &mut count), MsStatus::InvalidInput);
        ms_spectrum_free(s);
        ms_domain_free(d);
    }
}

#[test]
fn errors_are_reported() {
    let bad = CString::new("hexagon:3").unwrap();
    let mut d = ptr::null_mut();
    unsafe {
        assert_eq!(ms_domain_parse(bad.as_ptr(), &mut d), MsStatus::InvalidInput);
        assert!(d.is_null());
        let msg = CStr::from_ptr(ms_last_error()).to_string_lossy().into_owned();
        assert!(!msg.is_empty());
        assert_eq!(ms_domain_parse(ptr::null(), &mut d), MsStatus::NullPointer);
        assert_eq!(ms_spectrum_len(ptr::null()), 0);
        ms_spectrum_free(ptr::null_mut());
        ms_domain_free(ptr::null_mut());
    }
}

#[test]
fn scalar_entry_points() {
    let mut z = 0.0;
    unsafe {
        assert_eq!(ms_bessel_zero(0, 1, &mut z), MsStatus::Ok);
        assert!((z - 2.404_825_557_695_773).abs() < 1e-12);
        let (mut v, mut se) = (0.0, 0.0);
        assert_eq!(ms_halfspace_survival(0.1, 0.01, 20_000, 1, &mut v, &mut se), MsStatus::Ok);
        let exact = erf(0.1 / (2.0f64 * 0.01).sqrt());
        assert!((v - exact).abs() < 5.0 * se + 0.01, "{v} vs {exact}");
        let (mut sum, mut ratio) = (0.0, 0.0);
        assert_eq!(ms_gamma_tail(4.0 * std::f64::consts::PI, 2, 0.05, 2.0, &mut sum, &mut ratio), MsStatus::Ok);
        assert!(sum > 0.0 && ratio > 0.0);
        assert_eq!(ms_gamma_tail(1.0, 2, 0.5, 2.0, &mut sum, &mut ratio), MsStatus::InvalidInput);
        let ver = CStr::from_ptr(ms_version()).to_str().unwrap();
        assert_eq!(ver, env!("CARGO_PKG_VERSION"));
    }
}

// Survival in standard Brownian time is 2Φ(ε/√t) − 1 = erf(ε/√(2t)).
fn erf(x: f64) -> f64 {
    1.0 - meanspec::special::erfc(x)
}

#[test]
fn disk_heat_mass() {
    let d = domain("disk:1");
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(ms_spectrum_exact(d, 2000, &mut s), MsStatus::Ok);
        let (mut v, mut b) = (0.0, 0.0);
        assert_eq!(ms_heat_mass(s, 0.1, 0.01, &mut v, &mut b), MsStatus::Ok);
        let strip = std::f64::consts::PI * (1.0 - 0.81);
        assert!(v > 0.0 && v < strip);
        assert!(b <= 0.01 * v);
        ms_spectrum_free(s);
        ms_domain_free(d);
    }
}

#[test]
fn header_declares_interface() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/meanspec.h")).unwrap();
    for needle in [
        "MEANSPEC_H",
        "typedef struct MsDomain MsDomain",
        "typedef struct MsSpectrum MsSpectrum",
        "MS_STATUS_OK = 0",
        "MS_STATUS_PANIC",
        "ms_domain_parse",
        "ms_spectrum_mode",
        "ms_heat_mass",
        "ms_last_error",
    ] {
        assert!(h.contains(needle), "header lacks {needle}");
    }
}
