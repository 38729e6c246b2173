//! The C ABI called from Rust, plus a C program built against the generated
//! header.

use std::ffi::{c_char, c_int, CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use wforge_ffi::*;

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn take_json(p: *mut c_char) -> serde_json::Value {
    assert!(!p.is_null());
    let v = serde_json::from_str(unsafe { CStr::from_ptr(p) }.to_str().unwrap()).unwrap();
    unsafe { wforge_string_free(p) };
    v
}

fn last_error() -> String {
    let p = wforge_last_error_message();
    assert!(!p.is_null(), "no error message recorded");
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn surface(name: &str, n: usize) -> *mut WforgeSurface {
    let mut s = ptr::null_mut();
    let st = unsafe { wforge_surface_new(cstr(name).as_ptr(), n, n, &mut s) };
    assert_eq!(st, WforgeStatus::Ok, "{}", last_error());
    s
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(wforge_version()) }
        .to_str()
        .unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn energy_and_reports() {
    let s = surface("clifford", 48);
    let mut w = 0.0;
    assert_eq!(
        unsafe { wforge_willmore_energy(s, &mut w) },
        WforgeStatus::Ok
    );
    assert!((w - 2.0 * std::f64::consts::PI.powi(2)).abs() < 1e-6, "{w}");
    let mut h = 1.0;
    assert_eq!(
        unsafe { wforge_harmonicity_residual(s, &mut h) },
        WforgeStatus::Ok
    );
    assert!(h < 1e-6);

    let mut out = ptr::null_mut();
    let lambdas = [2.0, 0.0, 1.0, 1.0];
    assert_eq!(
        unsafe { wforge_flatness_report_json(s, lambdas.as_ptr(), 2, 2.0, 0.0, &mut out) },
        WforgeStatus::Ok
    );
    let r = take_json(out);
    assert_eq!(r["curvature"].as_array().unwrap().len(), 2);
    assert!(r["monodromy_commutator"].as_f64().unwrap() < 1e-6);

    assert_eq!(
        unsafe { wforge_sequence_report_json(s, 1, &mut out) },
        WforgeStatus::Ok
    );
    let r = take_json(out);
    assert!(r["normal_degree"]["value"].as_f64().unwrap().abs() < 1e-3);
    unsafe { wforge_surface_free(s) };
}

#[test]
fn darboux_on_a_patch() {
    let s = surface("clifford_patch", 32);
    let mut out = ptr::null_mut();
    let st =
        unsafe { wforge_darboux_report_json(s, 2.0, 0.0, WFORGE_CONJUGATION_T_INV_S_T, &mut out) };
    assert_eq!(st, WforgeStatus::Ok, "{}", last_error());
    let r = take_json(out);
    assert!(r["basis_independence"].as_f64().unwrap() < 1e-8);
    let st = unsafe { wforge_darboux_report_json(s, 2.0, 0.0, 7, &mut out) };
    assert_eq!(st, WforgeStatus::InvalidArgument);
    unsafe { wforge_surface_free(s) };
}

#[test]
fn errors_map_to_codes() {
    let mut s = ptr::null_mut();
    assert_eq!(
        unsafe { wforge_surface_new(ptr::null(), 16, 16, &mut s) },
        WforgeStatus::NullPointer
    );
    assert_eq!(
        unsafe { wforge_surface_new(cstr("torus").as_ptr(), 16, 16, &mut s) },
        WforgeStatus::BadSpec
    );
    assert!(last_error().contains("torus"));
    assert!(s.is_null());
    // Under-resolved: the conformality precondition fails.
    assert_eq!(
        unsafe { wforge_surface_new(cstr("twistor_torus").as_ptr(), 32, 32, &mut s) },
        WforgeStatus::Validation
    );
    assert_eq!(
        unsafe { wforge_surface_new(cstr("clifford").as_ptr(), 2, 2, &mut s) },
        WforgeStatus::BadSpec
    );
    let mut w = 0.0;
    assert_eq!(
        unsafe { wforge_willmore_energy(ptr::null(), &mut w) },
        WforgeStatus::NullPointer
    );

    let s = surface("revolution", 32);
    let mut out = ptr::null_mut();
    assert_eq!(
        unsafe { wforge_sequence_report_json(s, 2, &mut out) },
        WforgeStatus::Validation
    );
    assert!(last_error().contains("not Willmore"));
    // Success clears the message.
    assert_eq!(
        unsafe { wforge_willmore_energy(s, &mut w) },
        WforgeStatus::Ok
    );
    assert!(wforge_last_error_message().is_null());
    unsafe { wforge_surface_free(s) };
    unsafe { wforge_surface_free(ptr::null_mut()) };
    unsafe { wforge_string_free(ptr::null_mut()) };
}

#[test]
fn run_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!(
        "[surface]\nname = mercator\n[grid]\nn = 32\n[output]\ndir = {}\n",
        dir.path().display()
    );
    let (mut code, mut out): (c_int, *mut c_char) = (-1, ptr::null_mut());
    let st = unsafe {
        wforge_run(
            cstr("analyze").as_ptr(),
            cstr(&cfg).as_ptr(),
            &mut code,
            &mut out,
        )
    };
    assert_eq!(st, WforgeStatus::Ok, "{}", last_error());
    assert_eq!(code, 0);
    let r = take_json(out);
    assert_eq!(r["validation"]["passed"], true);
    assert!(dir.path().join("report.json").exists());

    let st = unsafe {
        wforge_run(
            cstr("analyze").as_ptr(),
            cstr("[grid]\nbogus = 1\n").as_ptr(),
            &mut code,
            ptr::null_mut(),
        )
    };
    assert_eq!(st, WforgeStatus::Config);
    assert!(last_error().contains(":2"), "{}", last_error());
    let st = unsafe {
        wforge_run(
            cstr("plot").as_ptr(),
            cstr("").as_ptr(),
            &mut code,
            ptr::null_mut(),
        )
    };
    assert_eq!(st, WforgeStatus::InvalidArgument);
}

/// Compiles `tests/c/smoke.c` against `include/wforge.h` and the shared
/// library cargo built next to this test binary, then runs it.
#[test]
fn c_program_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::current_exe().unwrap();
    let lib_dir = exe.parent().and_then(|d| d.parent()).unwrap().to_path_buf();
    let so = lib_dir.join(format!(
        "{}wforge_ffi{}",
        std::env::consts::DLL_PREFIX,
        std::env::consts::DLL_SUFFIX
    ));
    assert!(so.exists(), "shared library not built at {}", so.display());
    let tmp = tempfile::tempdir().unwrap();
    let bin = tmp.path().join("smoke");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(&cc)
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-std=c11")
        .arg("-D_DEFAULT_SOURCE")
        .arg("-Wall")
        .arg("-Werror")
        .arg(format!("-I{}", manifest.join("include").display()))
        .arg(format!("-L{}", lib_dir.display()))
        .arg(format!("-Wl,-rpath,{}", lib_dir.display()))
        .arg("-lwforge_ffi")
        .arg("-lm")
        .arg("-o")
        .arg(&bin)
        .status()
        .unwrap_or_else(|e| panic!("running {cc}: {e}"));
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("C smoke test passed"));
}
