use std::f64::consts::PI;
use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use torus_eig_ffi::*;

fn last_error() -> String {
    let p = torus_eig_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn spectrum_lifecycle() {
    let mut h = ptr::null_mut();
    assert_eq!(
        unsafe { torus_eig_spectrum_new(0.0, 1.0, 4, &mut h) },
        TorusEigStatus::Ok
    );
    assert!(!h.is_null());
    assert_eq!(unsafe { torus_eig_spectrum_len(h) }, 5);
    let mut v = -1.0;
    assert_eq!(unsafe { torus_eig_spectrum_get(h, 0, &mut v) }, TorusEigStatus::Ok);
    assert_eq!(v, 0.0);
    for k in 1..=4 {
        assert_eq!(unsafe { torus_eig_spectrum_get(h, k, &mut v) }, TorusEigStatus::Ok);
        assert!((v - 4.0 * PI * PI).abs() < 1e-10);
    }
    assert_eq!(
        unsafe { torus_eig_spectrum_get(h, 5, &mut v) },
        TorusEigStatus::InvalidInput
    );
    assert!(last_error().contains("index 5"));
    unsafe { torus_eig_spectrum_free(h) };

    assert_eq!(unsafe { torus_eig_spectrum_len(ptr::null()) }, 0);
    assert_eq!(
        unsafe { torus_eig_spectrum_get(ptr::null(), 0, &mut v) },
        TorusEigStatus::NullPointer
    );
    unsafe { torus_eig_spectrum_free(ptr::null_mut()) };
    let mut h = ptr::null_mut();
    assert_eq!(
        unsafe { torus_eig_spectrum_new(0.0, 0.0, 4, &mut h) },
        TorusEigStatus::InvalidInput
    );
    assert!(h.is_null());
}

#[test]
fn certificate_lifecycle() {
    let w = CString::new("exp(0.5*sin(u)*sin(v))").unwrap();
    let mut c = ptr::null_mut();
    assert_eq!(
        unsafe { torus_eig_certificate_new(0.0, 1.2, w.as_ptr(), 400.0, &mut c) },
        TorusEigStatus::Ok
    );
    let (mut l1, mut l2, mut u, mut n, mut ok) = (0.0, 0.0, 0.0, 0usize, false);
    unsafe {
        assert_eq!(torus_eig_certificate_lambda1(c, &mut l1), TorusEigStatus::Ok);
        assert_eq!(torus_eig_certificate_lambda2(c, &mut l2), TorusEigStatus::Ok);
        assert_eq!(torus_eig_certificate_bound(c, &mut u), TorusEigStatus::Ok);
        assert_eq!(torus_eig_certificate_basis_size(c, &mut n), TorusEigStatus::Ok);
        assert_eq!(torus_eig_certificate_certified(c, &mut ok), TorusEigStatus::Ok);
        torus_eig_certificate_free(c);
    }
    assert!(0.0 < l1 && l1 <= l2 && l2 < u && n > 10 && ok);
    let mut up = 0.0;
    assert_eq!(unsafe { torus_eig_upper_bound(0.0, 1.2, &mut up) }, TorusEigStatus::Ok);
    assert_eq!(u, up);

    let bad = CString::new("cos(u)").unwrap();
    let mut c = ptr::null_mut();
    assert_eq!(
        unsafe { torus_eig_certificate_new(0.0, 1.0, bad.as_ptr(), 400.0, &mut c) },
        TorusEigStatus::InvalidInput
    );
    assert!(c.is_null());
    assert!(!last_error().is_empty());
    assert_eq!(
        unsafe { torus_eig_certificate_new(0.0, 1.0, ptr::null(), 400.0, &mut c) },
        TorusEigStatus::NullPointer
    );
    assert_eq!(
        unsafe { torus_eig_certificate_lambda2(ptr::null(), &mut l2) },
        TorusEigStatus::NullPointer
    );
}

#[test]
fn constants_match_bound() {
    let mut u = 0.0;
    assert_eq!(
        unsafe { torus_eig_upper_bound(0.5, 0.75f64.sqrt(), &mut u) },
        TorusEigStatus::Ok
    );
    assert!((u - torus_eig_uniform_bound()).abs() < 1e-10);
    assert!((torus_eig_conjectured_sup() - (8.0 * PI * PI / 3f64.sqrt() + 8.0 * PI)).abs() < 1e-12);
}

#[test]
fn header_declares_the_api() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/torus_eig.h");
    let header = std::fs::read_to_string(&path).unwrap();
    for name in [
        "torus_eig_last_error",
        "torus_eig_upper_bound",
        "torus_eig_threshold",
        "torus_eig_spectrum_new",
        "torus_eig_spectrum_get",
        "torus_eig_spectrum_free",
        "torus_eig_certificate_new",
        "torus_eig_certificate_lambda2",
        "torus_eig_certificate_free",
        "typedef struct TorusEigSpectrum TorusEigSpectrum",
        "TORUS_EIG_STATUS_NUMERIC = 4",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
    // the header must compile as C where a compiler is available
    if let Ok(out) = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-x", "c"])
        .arg(&path)
        .output()
    {
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn c_program_links_against_static_library() {
    let Ok(exe) = std::env::current_exe() else { return };
    // target/<profile>/deps/c_api-* -> target/<profile>
    let profile = exe.parent().and_then(Path::parent).unwrap();
    let lib = profile.join("libtorus_eig_ffi.a");
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no static library or C compiler");
        return;
    }
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let out_dir = tempfile::tempdir().unwrap();
    let bin = out_dir.path().join("smoke");
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-D_DEFAULT_SOURCE")
        .arg("-I")
        .arg(dir.join("include"))
        .arg(dir.join("tests/smoke.c"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let run = Command::new(&bin).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    let text = String::from_utf8(run.stdout).unwrap();
    let vals: Vec<f64> = text.split_whitespace().map(|x| x.parse().unwrap()).collect();
    assert!((vals[0] - 8.0 * PI * PI).abs() < 1e-9);
}
