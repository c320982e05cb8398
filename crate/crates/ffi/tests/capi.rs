use std::ffi::{CStr, CString};
use std::ptr;

use lel_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(lel_last_error_message()) }.to_str().unwrap().to_owned()
}

fn load(spec: &str) -> *mut LelGenerator {
    let spec = CString::new(spec).unwrap();
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { lel_generator_load(spec.as_ptr(), &mut g) }, LelStatus::Ok, "{}", last_error());
    g
}

fn diag_state(p: &[f64]) -> Vec<f64> {
    let n = p.len();
    let mut m = vec![0.0; 2 * n * n];
    for (i, v) in p.iter().enumerate() {
        m[2 * (i * n + i)] = *v;
    }
    m
}

#[test]
fn generator_queries() {
    let g = load("builtin:depolarizing?gamma=1&sigma=0.7,0.3");
    unsafe {
        let mut n = 0usize;
        assert_eq!(lel_generator_dim(g, &mut n), LelStatus::Ok);
        assert_eq!(n, 2);
        let mut sigma = vec![0.0; 8];
        assert_eq!(lel_generator_stationary(g, sigma.as_mut_ptr()), LelStatus::Ok);
        assert_eq!(sigma, diag_state(&[0.7, 0.3]));
        let mut gap = 0.0;
        assert_eq!(lel_spectral_gap(g, &mut gap), LelStatus::Ok);
        assert!((gap - 1.0).abs() < 1e-12, "{gap}");
        let mut prim = false;
        assert_eq!(lel_check_primitive(g, &mut prim), LelStatus::Ok);
        assert!(prim);
        let (mut kms, mut gns, mut srd) = (1.0, 1.0, 1.0);
        assert_eq!(lel_kms_residual(g, &mut kms), LelStatus::Ok);
        assert_eq!(lel_gns_residual(g, &mut gns), LelStatus::Ok);
        assert_eq!(lel_srd_residual(g, 2.0, &mut srd), LelStatus::Ok);
        assert!(kms < 1e-12 && gns < 1e-12 && srd < 1e-12);

        let rho = diag_state(&[0.4, 0.6]);
        let (mut fisher, mut resid) = (0.0, 1.0);
        assert_eq!(lel_fisher_information(g, rho.as_ptr(), 2.0, &mut fisher), LelStatus::Ok);
        assert!(fisher > 0.0);
        assert_eq!(lel_gradient_flow_residual(g, rho.as_ptr(), 1.5, &mut resid), LelStatus::Ok);
        assert!(resid < 1e-8);
        lel_generator_free(g);
    }
}

#[test]
fn renyi_of_commuting_states() {
    let rho = diag_state(&[0.4, 0.6]);
    let sigma = diag_state(&[0.7, 0.3]);
    let mut v = 0.0;
    assert_eq!(unsafe { lel_sandwiched_renyi(2, rho.as_ptr(), sigma.as_ptr(), 2.0, &mut v) }, LelStatus::Ok);
    let expect = (0.4f64.powi(2) / 0.7 + 0.6f64.powi(2) / 0.3).ln();
    assert!((v - expect).abs() < 1e-14);

    let s = unsafe { lel_sandwiched_renyi(2, rho.as_ptr(), sigma.as_ptr(), f64::INFINITY, &mut v) };
    assert_eq!(s, LelStatus::InvalidArgument);
}

#[test]
fn trajectory_handle() {
    let g = load("builtin:qubit-xz");
    let rho = diag_state(&[1.0, 0.0]);
    let mut t = ptr::null_mut();
    unsafe {
        assert_eq!(lel_trajectory_new(g, rho.as_ptr(), 1.0, 0.0, 10, &mut t), LelStatus::Ok, "{}", last_error());
        let mut len = 0usize;
        assert_eq!(lel_trajectory_len(t, &mut len), LelStatus::Ok);
        assert!(len >= 2);
        let (mut t0, mut t1) = (-1.0, -1.0);
        assert_eq!(lel_trajectory_time(t, 0, &mut t0), LelStatus::Ok);
        assert_eq!(lel_trajectory_time(t, len - 1, &mut t1), LelStatus::Ok);
        assert_eq!(t0, 0.0);
        assert!((t1 - 1.0).abs() < 1e-12);
        let mut state = vec![0.0; 8];
        assert_eq!(lel_trajectory_state(t, len - 1, state.as_mut_ptr()), LelStatus::Ok);
        assert!((state[0] + state[6] - 1.0).abs() < 1e-12);
        assert_eq!(lel_trajectory_time(t, len, &mut t0), LelStatus::InvalidArgument);
        assert!(last_error().contains("out of range"));
        lel_trajectory_free(t);
        lel_generator_free(g);
    }
}

#[test]
fn error_statuses() {
    unsafe {
        let mut g = ptr::null_mut();
        let bad = CString::new("builtin:nope").unwrap();
        assert_eq!(lel_generator_load(bad.as_ptr(), &mut g), LelStatus::InvalidArgument);
        assert!(g.is_null());
        assert!(last_error().contains("nope"));

        assert_eq!(lel_generator_load(ptr::null(), &mut g), LelStatus::NullPointer);
        let mut n = 0usize;
        assert_eq!(lel_generator_dim(ptr::null(), &mut n), LelStatus::NullPointer);

        let cm = load("builtin:carlen-maas");
        let mut gap = 0.0;
        assert_eq!(lel_spectral_gap(cm, &mut gap), LelStatus::Validation);
        let mut gns = 0.0;
        assert_eq!(lel_gns_residual(cm, &mut gns), LelStatus::Ok);
        assert!(gns > 1e-3);
        lel_generator_free(cm);

        let not_state = diag_state(&[0.5, 0.7]);
        let sigma = diag_state(&[0.5, 0.5]);
        let mut v = 0.0;
        let s = lel_sandwiched_renyi(2, not_state.as_ptr(), sigma.as_ptr(), 2.0, &mut v);
        assert_eq!(s, LelStatus::Validation);

        let json = CString::new(r#"{"sigma": [[0.5, 0, 0, 0], [0, 0, 0.5, 0]], "terms": []}"#).unwrap();
        let s = lel_generator_from_json(json.as_ptr(), &mut g);
        assert!(matches!(s, LelStatus::Ok | LelStatus::Validation));
        lel_generator_free(g);

        lel_generator_free(ptr::null_mut());
        lel_trajectory_free(ptr::null_mut());
    }
}

#[test]
fn version_matches_package() {
    let v = unsafe { CStr::from_ptr(lel_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
