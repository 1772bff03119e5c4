use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_shockstab"))
}

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(format!("{name}.json"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn rows(path: &Path) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().skip(1).map(String::from).collect()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn simulate_pure_shock_has_one_front_and_no_events() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["simulate", "--config", p(&scenario("pure_shock")), "--out", p(dir.path())]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let fronts = rows(&dir.path().join("fronts.csv"));
    assert_eq!(fronts.len(), 1);
    assert!(fronts[0].ends_with("entropic_shock,"));
    assert!(rows(&dir.path().join("events.csv")).is_empty());
}

#[test]
fn simulate_two_shock_merges_once() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["simulate", "--config", p(&scenario("two_shock")), "--out", p(dir.path())]);
    assert_eq!(code(&out), 0);
    assert_eq!(rows(&dir.path().join("fronts.csv")).len(), 3);
    let events = rows(&dir.path().join("events.csv"));
    assert_eq!(events, vec!["1.0000000000000000e0,0.0000000000000000e0,0;1,2"]);
}

#[test]
fn constant_data_has_no_fronts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("constant.json");
    fs::write(
        &cfg,
        r#"{"id":"constant","flux":{"name":"burgers"},"initial":{"breakpoints":[],"values":[0.5]},
            "T":1,"shock":{"u_ell":1,"u_r":-1,"at_origin":false}}"#,
    )
    .unwrap();
    let out = run(&["simulate", "--config", p(&cfg), "--out", p(dir.path())]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(rows(&dir.path().join("fronts.csv")).is_empty());
}

#[test]
fn stability_on_canonical_passes_and_writes_frozen_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["stability", "--config", p(&scenario("canonical")), "--out", p(dir.path())]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("stability.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "t,R,lhs,mu_plus_cone,rhs,margin,drift_energy,drift_margin"
    );
    assert_eq!(csv.lines().count(), 1 + 4 * 3);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["config_sha256"].as_str().unwrap().len(), 64);
    assert_eq!(report["summary"]["passed"], true);
    assert!(dir.path().join("regions.csv").exists());
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = run(&["stability", "--config", p(&scenario("fan_perturbed")), "--out", p(dir.path())]);
        assert_eq!(code(&out), 0);
        let out = run(&["simulate", "--config", p(&scenario("fan_perturbed")), "--out", p(dir.path())]);
        assert_eq!(code(&out), 0);
    }
    for name in ["fronts.csv", "events.csv", "stability.csv", "regions.csv"] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
    let strip = |d: &Path| {
        let mut v: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(d.join("report.json")).unwrap()).unwrap();
        v.as_object_mut().unwrap().remove("generated_at_unix");
        v
    };
    assert_eq!(strip(a.path()), strip(b.path()));
}

#[test]
fn verify_with_zero_production_constant_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "verify", "--points", "5", "--random", "0", "--c1", "0", "--out", p(dir.path()),
    ]);
    assert_eq!(code(&out), 5);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("verify_report.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], false);
    assert!(report["violations"].as_array().unwrap().len() <= 100);
}

#[test]
fn verify_single_point_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["verify", "--point", "-0.5,0.5,1,-1", "--csv", "--out", p(dir.path())]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid: 1 quadruples"));
    let csv = rows(&dir.path().join("verify_report.csv"));
    assert_eq!(csv.len(), 1);
    assert!(csv[0].contains("2.3750000000000000e0"), "{}", csv[0]);
}

#[test]
fn verify_reports_do_not_depend_on_workers() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (dir, workers) in [(&a, "1"), (&b, "3")] {
        let out = run(&[
            "verify-identities", "--model", "cosh", "--points", "4", "--random", "2000", "--seed", "9",
            "--workers", workers, "--out", p(dir.path()),
        ]);
        assert_eq!(code(&out), 0);
    }
    let load = |d: &Path| {
        let mut v: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(d.join("identities_report.json")).unwrap()).unwrap();
        v.as_object_mut().unwrap().remove("throughput");
        v
    };
    assert_eq!(load(a.path()), load(b.path()));
}

#[test]
fn bad_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"id":"bad","flux":{"name":"burgers"},"initial":{"breakpoints":[1,0],"values":[0,1,2]},"T":1,"shock":{"u_ell":1,"u_r":-1}}"#).unwrap();
    let out = run(&["stability", "--config", p(&cfg), "--out", p(dir.path())]);
    assert_eq!(code(&out), 2);
    let out = run(&["simulate", "--config", p(&dir.path().join("missing.json"))]);
    assert_eq!(code(&out), 2);
}

#[test]
fn event_cap_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("capped.json");
    fs::write(
        &cfg,
        r#"{"id":"capped","flux":{"name":"burgers"},"initial":{"breakpoints":[0,1],"values":[-1,1,-1]},
            "delta":0.01,"T":4,"event_cap":2,"shock":{"u_ell":1,"u_r":-1,"at_origin":false}}"#,
    )
    .unwrap();
    for cmd in ["simulate", "stability"] {
        let out = run(&[cmd, "--config", p(&cfg), "--out", p(dir.path())]);
        assert_eq!(code(&out), 3, "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn var_check_writes_one_row_per_pair() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "var-check", "--config", p(&scenario("two_shock")), "--pairs", "7", "--seed", "3", "--out", p(dir.path()),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(rows(&dir.path().join("var_check.csv")).len(), 7);
}

#[test]
fn negative_margin_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(scenario("shifted_shock_0_5")).unwrap()).unwrap();
    cfg["constants"] = serde_json::json!({ "c_drift": 10.0 });
    let path = dir.path().join("strict.json");
    fs::write(&path, cfg.to_string()).unwrap();
    let out = run(&["stability", "--config", p(&path), "--out", p(dir.path())]);
    assert_eq!(code(&out), 4);
    assert!(dir.path().join("report.json").exists());
}
