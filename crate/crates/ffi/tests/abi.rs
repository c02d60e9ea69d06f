use std::ffi::{CStr, CString};
use std::ptr;

use smcurve_ffi::*;

unsafe fn take_string(p: *mut std::ffi::c_char) -> String {
    let s = CStr::from_ptr(p).to_str().unwrap().to_string();
    smc_string_free(p);
    s
}

unsafe fn last_error() -> String {
    CStr::from_ptr(smc_last_error())
        .to_str()
        .unwrap()
        .to_string()
}

#[test]
fn norm_handle_round_trip() {
    unsafe {
        let mut h = ptr::null_mut();
        assert_eq!(smc_norm_compute(10, -68, &mut h), SmcStatus::Ok);
        let mut s = ptr::null_mut();
        assert_eq!(
            smc_norm_string(h, SmcQuantity::Value, &mut s),
            SmcStatus::Ok
        );
        assert_eq!(take_string(s), "2^2*5^1");
        assert_eq!(
            smc_norm_string(h, SmcQuantity::Companion, &mut s),
            SmcStatus::Ok
        );
        assert_eq!(take_string(s), "2^4*17^1/5^2");
        let mut e = 0i64;
        assert_eq!(
            smc_norm_exponent(h, SmcQuantity::Companion, 5, &mut e),
            SmcStatus::Ok
        );
        assert_eq!(e, -2);
        assert_eq!(
            smc_norm_exponent(h, SmcQuantity::Value, 3, &mut e),
            SmcStatus::Ok
        );
        assert_eq!(e, 0);
        let (mut deg, mut res) = (0u64, 1.0f64);
        assert_eq!(smc_norm_degree(h, &mut deg, &mut res), SmcStatus::Ok);
        assert_eq!(deg, 2);
        assert!(res.abs() < 1e-9);
        assert_eq!(smc_norm_json(h, &mut s), SmcStatus::Ok);
        let json: serde_json::Value = serde_json::from_str(&take_string(s)).unwrap();
        assert_eq!(json["disc"], -68);
        smc_norm_free(h);
    }
}

#[test]
fn signs_of_rational_points() {
    unsafe {
        let mut h = ptr::null_mut();
        assert_eq!(smc_norm_compute(10, -120, &mut h), SmcStatus::Ok);
        let (mut sign, mut det) = (0i32, false);
        assert_eq!(smc_norm_sign(h, &mut sign, &mut det), SmcStatus::Ok);
        assert!(det);
        assert_eq!(sign, -1);
        smc_norm_free(h);
    }
}

#[test]
fn errors_map_to_status_codes() {
    unsafe {
        let mut h = ptr::null_mut();
        assert_eq!(smc_norm_compute(7, -20, &mut h), SmcStatus::InvalidArgument);
        assert!(h.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(smc_norm_compute(6, -5, &mut h), SmcStatus::InvalidArgument);
        // 3 splits in Q(√−8).
        assert_eq!(smc_norm_compute(6, -8, &mut h), SmcStatus::Domain);
        assert!(last_error().contains("splits"));
        assert_eq!(
            smc_norm_compute(6, -20, ptr::null_mut()),
            SmcStatus::NullPointer
        );
        let mut s = ptr::null_mut();
        assert_eq!(
            smc_norm_string(ptr::null(), SmcQuantity::Value, &mut s),
            SmcStatus::NullPointer
        );
        smc_norm_free(ptr::null_mut());
        smc_table_free(ptr::null_mut());
        smc_string_free(ptr::null_mut());
    }
}

#[test]
fn calibration_and_selfcheck() {
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(smc_calibrate(6, &mut s), SmcStatus::Ok);
        assert_eq!(take_string(s), "2^6*3^6");
        assert_eq!(smc_calibrate(10, &mut s), SmcStatus::Ok);
        assert_eq!(take_string(s), "1/2^2");
        let (mut passed, mut total) = (0u32, 0u32);
        assert_eq!(smc_selfcheck(&mut passed, &mut total), SmcStatus::Ok);
        assert!(total > 0);
        assert_eq!(passed, total);
    }
}

#[test]
fn table_rows() {
    unsafe {
        let mut t = ptr::null_mut();
        assert_eq!(smc_table_compute(10, 40, &mut t), SmcStatus::Ok);
        let mut n = 0usize;
        assert_eq!(smc_table_len(t, &mut n), SmcStatus::Ok);
        assert!(n > 0);
        let mut last = 0i64;
        for i in 0..n {
            let (mut disc, mut h) = (0i64, ptr::null_mut());
            assert_eq!(smc_table_row(t, i, &mut disc, &mut h), SmcStatus::Ok);
            assert!(disc.abs() >= last.abs());
            last = disc;
            smc_norm_free(h);
        }
        let (mut disc, mut h) = (0i64, ptr::null_mut());
        assert_eq!(
            smc_table_row(t, n, &mut disc, &mut h),
            SmcStatus::InvalidArgument
        );
        smc_table_free(t);
    }
}

#[test]
fn canonical_factored_strings() {
    unsafe {
        let input = CString::new("5*2^2/3^4").unwrap();
        let mut s = ptr::null_mut();
        assert_eq!(
            smc_canonical_factored(input.as_ptr(), &mut s),
            SmcStatus::Ok
        );
        assert_eq!(take_string(s), "2^2*5^1/3^4");
        let bad = CString::new("2^^3").unwrap();
        assert_eq!(
            smc_canonical_factored(bad.as_ptr(), &mut s),
            SmcStatus::InvalidArgument
        );
    }
}
