//! End-to-end tests of the `wforge` binary.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn wforge(dir: &Path, args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_wforge"));
    cmd.current_dir(dir).args(args);
    match threads {
        Some(t) => cmd.env("WFORGE_THREADS", t),
        None => cmd.env_remove("WFORGE_THREADS"),
    };
    cmd.output().expect("spawn wforge")
}

fn report(dir: &Path, out: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join(out).join("report.json")).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn analyze_clifford_96() {
    let tmp = tempfile::tempdir().unwrap();
    let o = wforge(
        tmp.path(),
        &["analyze", "surface=clifford", "grid=96", "out=o"],
        None,
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = report(tmp.path(), "o");
    let w = r["analysis"]["willmore_energy"].as_f64().unwrap();
    assert!((w / (2.0 * PI * PI) - 1.0).abs() < 0.01, "{w}");
    assert_eq!(r["validation"]["passed"], true);
    assert!(tmp.path().join("o/surface.obj").exists());
    assert!(tmp.path().join("o/surface.clamped.txt").exists());
    assert!(
        !tmp.path().join("o/fields.csv").exists(),
        "fields.csv is written only on request"
    );
}

#[test]
fn analyze_mercator() {
    let tmp = tempfile::tempdir().unwrap();
    let o = wforge(tmp.path(), &["analyze", "surface=mercator", "out=o"], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(
        report(tmp.path(), "o")["analysis"]["willmore_energy"]
            .as_f64()
            .unwrap()
            .abs()
            < 1e-5
    );
}

#[test]
fn darboux_clifford_patch() {
    let tmp = tempfile::tempdir().unwrap();
    let o = wforge(
        tmp.path(),
        &[
            "darboux",
            "surface=clifford",
            "mu=2+0i",
            "patch=true",
            "out=o",
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = report(tmp.path(), "o");
    let d = r["darboux"].as_object().expect("darboux section");
    for key in [
        "hat_a_residual",
        "hat_q_residual",
        "riccati_residual",
        "hat_s_closed_form",
        "hat_incidence",
        "hat_s_harmonicity",
        "basis_independence",
    ] {
        assert!(d[key].as_f64().unwrap() < 1e-3, "{key}");
    }
    assert_eq!(r["validation"]["passed"], true);
    assert!(tmp.path().join("o/surface_hat.obj").exists());
}

#[test]
fn config_file_with_sections_and_fields_csv() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("run.conf"),
        "# comment\n[surface]\nname = catenoid\n\n[grid]\nn = 32\n\n[output]\ndir = o\nfields = true\nobj = false\n",
    )
    .unwrap();
    let o = wforge(tmp.path(), &["analyze", "--config", "run.conf"], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(tmp.path().join("o/fields.csv")).unwrap();
    assert!(csv.starts_with("i,j,x,y,f_re,f_i,f_j,f_k,willmore_density,abs_a,abs_q,abs_ds\n"));
    assert_eq!(csv.lines().count(), 1 + 32 * 32);
    assert!(!tmp.path().join("o/surface.obj").exists());
    let r = report(tmp.path(), "o");
    assert_eq!(r["config"]["surface.name"], "catenoid");
}

#[test]
fn config_errors_carry_line_numbers() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("bad.conf"), "[grid]\nn = 16\nbogus = 3\n").unwrap();
    let o = wforge(tmp.path(), &["analyze", "--config", "bad.conf"], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("bad.conf:3"), "{}", stderr(&o));
    fs::write(tmp.path().join("bad2.conf"), "[grid]\n\n[nowhere]\n").unwrap();
    let o = wforge(tmp.path(), &["analyze", "--config", "bad2.conf"], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("bad2.conf:3"), "{}", stderr(&o));
    let o = wforge(tmp.path(), &["analyze", "--set", "grid.n=many"], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("grid.n"), "{}", stderr(&o));
    let o = wforge(tmp.path(), &["analyze", "--config", "missing.conf"], None);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn validation_failure_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    // 32² cannot resolve the twistor torus; conformality fails its threshold.
    let o = wforge(
        tmp.path(),
        &["analyze", "surface=twistor_torus", "grid=32", "out=o"],
        None,
    );
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let r = report(tmp.path(), "o");
    assert_eq!(r["validation"]["passed"], false);
    // A tightened tolerance turns a passing run into a validation failure.
    let o = wforge(
        tmp.path(),
        &[
            "analyze",
            "surface=clifford",
            "grid=32",
            "out=p",
            "--set",
            "tolerances.discretization=1e-14",
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn module_errors_exit_1() {
    let tmp = tempfile::tempdir().unwrap();
    let o = wforge(
        tmp.path(),
        &["darboux", "surface=clifford", "grid=32", "out=o"],
        None,
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stderr(&o).to_lowercase().contains("simply connected"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn reports_are_deterministic_across_runs_and_threads() {
    let tmp = tempfile::tempdir().unwrap();
    let args = [
        "flatness",
        "surface=clifford",
        "grid=32",
        "out=o",
        "--set",
        "output.fields=true",
    ];
    let mut reports = Vec::new();
    for t in [Some("1"), Some("4"), None] {
        let o = wforge(tmp.path(), &args, t);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        reports.push((
            fs::read(tmp.path().join("o/report.json")).unwrap(),
            fs::read(tmp.path().join("o/fields.csv")).unwrap(),
        ));
    }
    assert!(reports.windows(2).all(|w| w[0] == w[1]));
    assert!(!String::from_utf8_lossy(&reports[0].0).contains("timestamp_unix"));
}

#[test]
fn timestamp_only_when_enabled() {
    let tmp = tempfile::tempdir().unwrap();
    let o = wforge(
        tmp.path(),
        &[
            "analyze",
            "surface=mercator",
            "grid=16",
            "out=o",
            "--set",
            "output.timestamp=true",
        ],
        None,
    );
    assert!(o.status.code() != Some(1), "{}", stderr(&o));
    assert!(report(tmp.path(), "o")["timestamp_unix"].as_u64().is_some());
}

#[test]
fn invalid_thread_count_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    for bad in ["0", "many"] {
        let o = wforge(tmp.path(), &["analyze", "grid=16"], Some(bad));
        assert_eq!(o.status.code(), Some(1), "WFORGE_THREADS={bad}");
        assert!(stderr(&o).contains("WFORGE_THREADS"));
    }
}

#[test]
fn stereographic_pole_is_configurable_and_clamps() {
    let tmp = tempfile::tempdir().unwrap();
    // The pole (½,½,½,½) is the Clifford-torus vertex at x = y = π/4, i.e. (i, j) = (2, 2) on 16².
    let o = wforge(
        tmp.path(),
        &[
            "export",
            "surface=clifford",
            "grid=16",
            "out=o",
            "--set",
            "output.pole=0.5,0.5,0.5,0.5",
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = report(tmp.path(), "o");
    assert_eq!(r["config"]["output.pole"], "0.5,0.5,0.5,0.5");
    let side = fs::read_to_string(tmp.path().join("o/surface.clamped.txt")).unwrap();
    let clamped = r["artifacts"][0]["clamped_vertices"].as_u64().unwrap() as usize;
    assert_eq!(clamped, 1);
    let listed: Vec<&str> = side.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(listed, ["35"]);
    let obj = fs::read_to_string(tmp.path().join("o/surface.obj")).unwrap();
    assert_eq!(obj.lines().filter(|l| l.starts_with("v ")).count(), 16 * 16);
    assert!(obj.lines().any(|l| l.starts_with("f ")));
}
