use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn magswim(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_magswim"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("run magswim")
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn validate_reference_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = magswim(dir.path(), &["validate", "--params", data("reference.json").to_str().unwrap(), "--seed", "11"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(dir.path().join("validate.json"));
    assert_eq!(v["report"]["magnetization_combination"], -8.0);
    assert_eq!(v["seed"], 11);
    assert_eq!(v["failed"].as_array().unwrap().len(), 0);
}

#[test]
fn validate_isotropic_file_names_the_drag_condition() {
    let dir = tempfile::tempdir().unwrap();
    let o = magswim(dir.path(), &["validate", "--params", data("isotropic.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("drag anisotropy               FAIL"));
    let v = json(dir.path().join("validate.json"));
    assert_eq!(v["failed"], serde_json::json!(["drag anisotropy"]));
}

#[test]
fn missing_field_is_a_parse_error_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let o = magswim(dir.path(), &["validate", "--params", data("missing_kappa.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    let e = stderr(&o);
    assert!(e.contains("missing field `kappa`") && e.contains("line 10"), "{e}");
}

#[test]
fn invalid_value_is_an_assumption_failure() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("neg.json");
    std::fs::write(&p, r#"{"l1":-1,"l2":1,"xi1":1,"xi2":1,"eta1":2,"eta2":2,"m1":1,"m2":2,"kappa":1}"#).unwrap();
    let o = magswim(dir.path(), &["validate", "--params", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("`l1`"));
}

#[test]
fn zero_signal_keeps_every_row() {
    let dir = tempfile::tempdir().unwrap();
    let o = magswim(dir.path(), &["simulate", "--signal", "zero", "--z0", "0.1,-0.2,0.3,0"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = magswim::io::read_trajectory_csv(&dir.path().join("trajectory.csv")).unwrap();
    assert_eq!(rows.len(), 1001);
    assert!(rows.iter().all(|r| r.state() == rows[0].state() && r.h_par == 0.0 && r.h_perp == 0.0));
}

#[test]
fn symmetric_swimmer_stays_straight() {
    let dir = tempfile::tempdir().unwrap();
    let params = data("symmetric.json");
    for seed in ["1", "2", "3"] {
        let args = ["simulate", "--params", params.to_str().unwrap(), "--signal", "random", "--amplitude", "2"];
        let o = magswim(dir.path(), &[&args[..], &["--seed", seed]].concat());
        assert_eq!(o.status.code(), Some(0));
        let v = json(dir.path().join("simulate.json"));
        assert!(v["max_abs_alpha"].as_f64().unwrap() < 1e-9);
        assert_eq!(v["seed"].as_str().map(str::to_owned), None);
        assert_eq!(v["seed"].as_u64(), Some(seed.parse().unwrap()));
        assert!(v["first_integral_drift"].is_null());
    }
}

#[test]
fn isotropic_summary_reports_first_integral_drift() {
    let dir = tempfile::tempdir().unwrap();
    let params = data("isotropic.json");
    let args = ["simulate", "--params", params.to_str().unwrap(), "--signal", "random", "--amplitude", "1"];
    assert_eq!(magswim(dir.path(), &args).status.code(), Some(0));
    let v = json(dir.path().join("simulate.json"));
    let d = v["first_integral_drift"].as_array().unwrap();
    assert!(d.iter().all(|x| x.as_f64().unwrap() < 1e-8), "{d:?}");
}

#[test]
fn divergence_exits_with_simulation_failure() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["simulate", "--signal", "constant", "--h-par", "1e308", "--h-perp", "1e308", "--z0", "0,0,0,0.5"];
    let o = magswim(dir.path(), &args);
    assert_eq!(o.status.code(), Some(2), "{}", stdout(&o));
    assert!(stderr(&o).contains("diverged at t ="));
}

#[test]
fn simulation_outputs_are_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["simulate", "--signal", "random", "--seed", "5", "--pieces", "7"];
    magswim(a.path(), &args);
    magswim(b.path(), &args);
    for f in ["simulate.json", "trajectory.csv", "signal.json"] {
        assert!(std::fs::read(a.path().join(f)).unwrap() == std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let other = tempfile::tempdir().unwrap();
    magswim(other.path(), &["simulate", "--signal", "random", "--seed", "6", "--pieces", "7"]);
    assert_ne!(
        std::fs::read(a.path().join("signal.json")).unwrap(),
        std::fs::read(other.path().join("signal.json")).unwrap()
    );
}

#[test]
fn exported_signal_replays_to_the_same_trajectory() {
    let a = tempfile::tempdir().unwrap();
    magswim(a.path(), &["simulate", "--signal", "sine", "--component", "par", "--periods", "2"]);
    let sig = a.path().join("signal.json");
    let b = tempfile::tempdir().unwrap();
    let o = magswim(b.path(), &["simulate", "--signal", "file", "--signal-file", sig.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["trajectory.csv", "signal.json"] {
        assert!(std::fs::read(a.path().join(f)).unwrap() == std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn analyze_reference_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let o = magswim(dir.path(), &["analyze"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let v = json(dir.path().join("analyze.json"));
    assert_eq!(v["kalman"], 2);
    assert_eq!(v["larc"], 4);
    assert_eq!(v["bad_bracket_in_span"], false);
    assert_eq!(v["x5_nonzero"], true);
    assert_eq!(v["gramian"], 4);
    assert_eq!(v["pass"], true);
    let checks = v["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 5);
    let hash = &checks[0]["inputs_hash"];
    assert!(checks.iter().all(|c| &c["inputs_hash"] == hash && c["pass"] == true));
}

#[test]
fn analyze_balanced_moments_puts_the_bad_bracket_in_span() {
    let dir = tempfile::tempdir().unwrap();
    let o = magswim(dir.path(), &["analyze", "--params", data("balanced.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let v = json(dir.path().join("analyze.json"));
    assert_eq!(v["bad_bracket_in_span"], true);
}

#[test]
fn analyze_isotropic_drag_loses_the_bracket_rank() {
    let dir = tempfile::tempdir().unwrap();
    let o = magswim(dir.path(), &["analyze", "--params", data("isotropic.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let v = json(dir.path().join("analyze.json"));
    assert!(v["larc"].as_u64().unwrap() < 4);
    assert_eq!(v["pass"], true);
}

#[test]
fn steer_trivial_problem_uses_no_field() {
    let dir = tempfile::tempdir().unwrap();
    let o = magswim(dir.path(), &["steer", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let v = json(dir.path().join("steer.json"));
    assert_eq!(v["pass"], true);
    assert_eq!(v["residual"], 0.0);
    assert_eq!(v["sup_norms"]["h_par"], 0.0);
    assert_eq!(v["sup_norms"]["h_perp"], 0.0);
    assert_eq!(v["seed"], 3);
    for key in ["z_i", "z_f", "T", "residual", "iterations", "sup_norms", "bound_rhs", "pass"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    let rows = magswim::io::read_trajectory_csv(&dir.path().join("control.csv")).unwrap();
    assert!(rows.iter().all(|r| r.h_par == 0.0 && r.h_perp == 0.0));
}

#[test]
fn steer_reaches_a_first_order_target() {
    let dir = tempfile::tempdir().unwrap();
    let o = magswim(dir.path(), &["steer", "--z-f", "0,2e-4,4e-4,0"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let v = json(dir.path().join("steer.json"));
    assert!(v["residual"].as_f64().unwrap() < 1e-6);
    assert!(v["sup_norms"]["h_par"].as_f64().unwrap() < 3.2);
    assert!(v["sup_norms"]["h_perp"].as_f64().unwrap() < 0.2);
    assert_eq!(v["bound_rhs"]["h_par"].as_f64().unwrap(), 3.2);
    let sig: magswim_core::ControlSignal =
        magswim::io::signal_from_json(&std::fs::read_to_string(dir.path().join("control.json")).unwrap()).unwrap();
    assert!((sig.duration() - 1.0).abs() < 1e-12);
}

#[test]
fn steer_refuses_far_targets() {
    let dir = tempfile::tempdir().unwrap();
    let o = magswim(dir.path(), &["steer", "--z-f", "2e-3,0,0,0"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("outside the admissible radius"));
    assert!(!dir.path().join("steer.json").exists());
}

#[test]
fn sweep_writes_one_row_per_grid_point() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["sweep", "--x-field", "eta1", "--x-range", "1:2:2", "--y-field", "m2", "--y-range=-1:2:2", "--no-gramian"];
    let o = magswim(dir.path(), &args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let mut r = csv::Reader::from_path(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(&r.headers().unwrap().iter().take(2).collect::<Vec<_>>(), &["eta1", "m2"]);
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 4);
    // eta1 = 1 keeps eta2 = 2, so the drag is still anisotropic.
    assert!(rows.iter().all(|row| &row[6] == "4"));
    let v = json(dir.path().join("sweep.json"));
    assert_eq!(v["seed"], 0);
    assert_eq!(v["rows"].as_array().unwrap().len(), 4);
}
