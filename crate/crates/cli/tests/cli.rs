use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn weaktunnel(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_weaktunnel"))
        .args(args)
        .arg("--output-dir")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

#[test]
fn variance_of_the_which_path_state() {
    let dir = tempfile::tempdir().unwrap();
    let out = weaktunnel(&["variance", "--delta", "1", "--sigma", "1"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&dir.path().join("variance.json"));
    assert!((f(&report["var_diff"]) - 3.0).abs() < 1e-8);
    let manifest = read_json(&dir.path().join("manifest.json"));
    let names: Vec<&str> = manifest["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["path"].as_str().unwrap())
        .collect();
    assert_eq!(names, ["config.toml", "variance.json"]);
}

#[test]
fn config_file_is_read_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "delta = 2.0\nsigma = 0.5\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = weaktunnel(&["erased", "--config", cfg.to_str().unwrap(), "--sigma", "1"], &out_dir);
    assert!(out.status.success());
    let report = read_json(&out_dir.join("erased.json"));
    assert_eq!(f(&report["delta"]), 2.0);
    assert_eq!(f(&report["sigma"]), 1.0);
    assert_eq!(report["closed_form_confirmed"], Value::Bool(true));
    let echoed = fs::read_to_string(out_dir.join("config.toml")).unwrap();
    assert!(echoed.contains("delta = 2.0") && echoed.contains("sigma = 1.0"));
}

#[test]
fn invalid_configuration_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        weaktunnel(&["variance", "--sigma=-1"], dir.path()).status.code(),
        Some(2)
    );
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "delat = 1.0\n").unwrap();
    assert_eq!(
        weaktunnel(&["variance", "-c", cfg.to_str().unwrap()], dir.path())
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        weaktunnel(&["corpuscle-test", "--alpha", "0.7"], dir.path())
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn numerical_guard_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    // The post-selected state already presses against the right edge.
    let out = weaktunnel(
        &[
            "fig2",
            "--x-min=-160",
            "--x-max",
            "40",
            "--n-points",
            "1024",
            "--dt",
            "0.01",
            "--t-final",
            "95",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn missing_files_exit_with_4() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.toml");
    assert_eq!(
        weaktunnel(&["variance", "-c", missing.to_str().unwrap()], dir.path())
            .status
            .code(),
        Some(4)
    );
}

#[test]
fn corpuscle_test_reads_back_simulated_samples() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    // Unequal shifts put Var(a − b) well above the floor at the observed means.
    let args = [
        "--n-pairs",
        "2000",
        "--seed",
        "7",
        "--resamples",
        "500",
        "--delta-a",
        "2",
        "--delta-b",
        "0.5",
    ];
    assert!(weaktunnel(&[&["corpuscle-sim"][..], &args].concat(), &sim)
        .status
        .success());
    let samples = sim.join("samples.csv");
    let test = dir.path().join("test");
    let out = weaktunnel(
        &[&["corpuscle-test", "--samples", samples.to_str().unwrap()][..], &args].concat(),
        &test,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&test.join("report.json"));
    assert_eq!(report["n"], 2000);
    assert_eq!(report["seed"], 7);
    assert_eq!(report["verdict"], "consistent-with-corpuscular");
}

#[test]
fn certain_shift_source_is_rejected_reproducibly() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "corpuscle-test",
        "--source",
        "certain-shift",
        "--delta",
        "1",
        "--resamples",
        "500",
        "--seed",
        "3",
    ];
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(weaktunnel(&args, &a).status.success());
    assert!(weaktunnel(&args, &b).status.success());
    assert_eq!(read_json(&a.join("report.json"))["verdict"], "rejects-corpuscular");
    assert_eq!(
        fs::read(a.join("manifest.json")).unwrap(),
        fs::read(b.join("manifest.json")).unwrap()
    );
}

#[test]
fn hartman_and_scatter_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = weaktunnel(&["hartman", "--e", "0.5", "--d", "10,20,40"], dir.path());
    assert!(out.status.success());
    let csv = fs::read_to_string(dir.path().join("hartman.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("d,delay,transmission,closed_form"));
    assert_eq!(csv.lines().count(), 4);
    let report = read_json(&dir.path().join("hartman.json"));
    for d in report["delays"].as_array().unwrap() {
        assert!((f(d) - 2.0).abs() < 0.02);
    }

    let sc = dir.path().join("scatter");
    assert!(weaktunnel(&["scatter", "--energies", "0.25,0.5,1.5"], &sc)
        .status
        .success());
    let mut rdr = csv::Reader::from_path(sc.join("scatter.csv")).unwrap();
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let t: f64 = rec[3].parse().unwrap();
        let r: f64 = rec[4].parse().unwrap();
        assert!((t + r - 1.0).abs() < 1e-12);
    }
}
