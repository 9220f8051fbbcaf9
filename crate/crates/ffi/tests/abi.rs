use std::ffi::CStr;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use pspin_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 256];
    let n = unsafe { pspin_last_error(buf.as_mut_ptr(), buf.len()) };
    assert!(n > 0);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

fn mixture(pairs: &[(u32, f64)]) -> *mut PspinMixture {
    let d: Vec<u32> = pairs.iter().map(|p| p.0).collect();
    let g: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { pspin_mixture_new(d.as_ptr(), g.as_ptr(), d.len(), &mut m) }, PspinStatus::Ok);
    m
}

#[test]
fn solve_pure_two_spin() {
    let m = mixture(&[(2, 1.0)]);
    let mut s = ptr::null_mut();
    unsafe {
        assert_eq!(pspin_solve(m, 400, &mut s), PspinStatus::Ok);
        let mut p = PspinPrediction::default();
        assert_eq!(pspin_solution_prediction(s, &mut p), PspinStatus::Ok);
        assert!((p.gs - 2f64.sqrt()).abs() < 1e-6);
        assert_eq!(p.full_rsb_endpoint, 1);
        let len = pspin_solution_len(s);
        assert_eq!(len, 401);
        let mut z = vec![0.0; len];
        assert_eq!(pspin_solution_zhat(s, z.as_mut_ptr(), len), len);
        assert!(z.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        let mut b = 0.0;
        assert_eq!(pspin_replica_bound(m, s, 2, 0.0, &mut b), PspinStatus::Ok);
        assert!((b - 4.0 * p.gs).abs() < 1e-6);
        assert_eq!(pspin_replica_bound(m, s, 5, 0.0, &mut b), PspinStatus::Domain);
        pspin_solution_free(s);
        pspin_mixture_free(m);
    }
}

#[test]
fn invalid_input_reports_status_and_message() {
    let mut m = ptr::null_mut();
    let d = [2u32];
    let g = [f64::NAN];
    unsafe {
        assert_eq!(pspin_mixture_new(d.as_ptr(), g.as_ptr(), 1, &mut m), PspinStatus::InvalidMixture);
        assert!(m.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(pspin_mixture_new(ptr::null(), ptr::null(), 1, &mut m), PspinStatus::NullPointer);
        assert!(last_error().contains("null"));
        let mut v = 0.0;
        assert_eq!(pspin_mixture_xi(ptr::null(), 0.5, 0, &mut v), PspinStatus::NullPointer);
        pspin_mixture_free(ptr::null_mut());
    }
}

#[test]
fn hamiltonian_round_trip() {
    let m = mixture(&[(3, 1.0)]);
    let mut h = ptr::null_mut();
    unsafe {
        assert_eq!(pspin_hamiltonian_sample(m, 8, 3, &mut h), PspinStatus::Ok);
        let x = [1.0; 8];
        let mut v = 0.0;
        let mut g = [0.0; 8];
        assert_eq!(pspin_hamiltonian_eval(h, x.as_ptr(), 8, &mut v, g.as_mut_ptr()), PspinStatus::Ok);
        // Euler: x·∇H = 3H for a homogeneous cubic.
        let dot: f64 = g.iter().sum();
        assert!((dot - 3.0 * v).abs() < 1e-9 * (1.0 + v.abs()));
        assert_eq!(
            pspin_hamiltonian_eval(h, x.as_ptr(), 7, &mut v, ptr::null_mut()),
            PspinStatus::DimensionMismatch
        );
        pspin_hamiltonian_free(h);
        pspin_mixture_free(m);
    }
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(pspin_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

/// Compiles a C program against the generated header and the static library.
#[test]
fn header_links_from_c() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = manifest.join("include");
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap();
    let lib = profile_dir.join("libpspin_ffi.a");
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler or static library");
        return;
    }
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("main.c");
    std::fs::write(
        &src,
        r#"#include <math.h>
#include <stdio.h>
#include "pspin.h"
int main(void) {
    uint32_t d[] = {2};
    double g[] = {1.0};
    PspinMixture *m = NULL;
    PspinSolution *s = NULL;
    PspinPrediction p;
    if (pspin_mixture_new(d, g, 1, &m) != PSPIN_STATUS_OK) return 1;
    if (pspin_solve(m, 200, &s) != PSPIN_STATUS_OK) return 2;
    if (pspin_solution_prediction(s, &p) != PSPIN_STATUS_OK) return 3;
    printf("%.9f\n", p.gs);
    pspin_solution_free(s);
    pspin_mixture_free(m);
    return fabs(p.gs - sqrt(2.0)) < 1e-6 ? 0 : 4;
}
"#,
    )
    .unwrap();
    let bin = tmp.path().join("main");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(&header)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C build failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
}
