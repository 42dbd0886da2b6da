use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qgeo::capacity::CapacityResult;
use qgeo::channels::{gamma5_partial, ChannelJson};
use qgeo::mesh::PointSet;
use qgeo::voronoi::BisectorField;

fn qgeo(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qgeo")).args(args).current_dir(dir).env_remove("QGEO_SEED").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).trim().to_string()
}

fn path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

#[test]
fn mesh_small_sets_and_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = qgeo(&["mesh", "--dim", "2", "--delta", "1", "--rule", "linear", "--out", "m.json"], dir.path());
    assert!(o.status.success());
    assert_eq!(stdout(&o), "4");
    let o = qgeo(&["mesh", "--dim", "2", "--delta", "1", "--out", "q.json"], dir.path());
    assert_eq!(stdout(&o), "5");
    let ps: PointSet = serde_json::from_str(&std::fs::read_to_string(path(dir.path(), "q.json")).unwrap()).unwrap();
    assert_eq!(ps.len(), 5);
    assert_eq!(serde_json::to_string(&ps).unwrap() + "\n", std::fs::read_to_string(path(dir.path(), "q.json")).unwrap());
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(path(dir.path(), "q.json.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["output_digests"]["q.json"].as_str().unwrap().len(), 64);
}

#[test]
fn mesh_rejects_bad_arguments() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(qgeo(&["mesh", "--dim", "2", "--delta", "0", "--out", "m.json"], dir.path()).status.code(), Some(2));
    assert_eq!(qgeo(&["mesh", "--dim", "1", "--delta", "0.5", "--out", "m.json"], dir.path()).status.code(), Some(2));
    assert_eq!(qgeo(&["mesh", "--dim", "2"], dir.path()).status.code(), Some(2));
}

#[test]
fn capacity_builtins() {
    let dir = tempfile::tempdir().unwrap();
    let o = qgeo(&["capacity", "--builtin", "identity", "--delta", "0.25", "--out", "c.json"], dir.path());
    assert!(o.status.success());
    let v: f64 = stdout(&o).parse().unwrap();
    assert!((v - std::f64::consts::LN_2).abs() < 0.01);
    assert_eq!(stdout(&o).split('.').nth(1).unwrap().len(), 7);
    let res: CapacityResult = serde_json::from_str(&std::fs::read_to_string(path(dir.path(), "c.json")).unwrap()).unwrap();
    assert!((res.capacity_nats - v).abs() < 1e-7);
    let o = qgeo(&["capacity", "--builtin", "identity", "--delta", "0.25", "--bits", "--out", "b.json"], dir.path());
    assert_eq!(stdout(&o), "1.0000000");
    let o = qgeo(&["capacity", "--builtin", "depolarizing", "--dim", "3", "--delta", "0.3", "--out", "d.json"], dir.path());
    assert_eq!(stdout(&o), "0.0000000");
}

#[test]
fn capacity_is_deterministic_and_seed_env_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &'static str| ["capacity", "--builtin", "gamma5", "--delta", "0.4", "--seed", "7", "--out", out];
    assert!(qgeo(&args("a.json"), dir.path()).status.success());
    assert!(qgeo(&args("b.json"), dir.path()).status.success());
    let a = std::fs::read(path(dir.path(), "a.json")).unwrap();
    assert_eq!(a, std::fs::read(path(dir.path(), "b.json")).unwrap());

    let o = Command::new(env!("CARGO_BIN_EXE_qgeo"))
        .args(args("e.json"))
        .current_dir(dir.path())
        .env("QGEO_SEED", "99")
        .output()
        .unwrap();
    assert!(o.status.success());
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(path(dir.path(), "e.json.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 99);
    let o = Command::new(env!("CARGO_BIN_EXE_qgeo"))
        .args(args("f.json"))
        .current_dir(dir.path())
        .env("QGEO_SEED", "abc")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn channel_files() {
    let dir = tempfile::tempdir().unwrap();
    let partial = ChannelJson { dim: 3, kraus: gamma5_partial().to_vec(), complete_last: true };
    std::fs::write(path(dir.path(), "g5.json"), serde_json::to_string(&partial).unwrap()).unwrap();
    let from_file = qgeo(&["capacity", "--channel", "g5.json", "--delta", "0.4", "--out", "f.json"], dir.path());
    let builtin = qgeo(&["capacity", "--builtin", "gamma5", "--delta", "0.4", "--out", "b.json"], dir.path());
    assert!(from_file.status.success());
    assert_eq!(stdout(&from_file), stdout(&builtin));
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(path(dir.path(), "f.json.manifest.json")).unwrap()).unwrap();
    assert!(m["input_digests"]["g5.json"].is_string());

    // the two partial operators alone are not trace preserving
    let broken = ChannelJson { complete_last: false, ..partial };
    std::fs::write(path(dir.path(), "bad.json"), serde_json::to_string(&broken).unwrap()).unwrap();
    let o = qgeo(&["capacity", "--channel", "bad.json", "--delta", "0.4", "--out", "x.json"], dir.path());
    assert_eq!(o.status.code(), Some(4));
    std::fs::write(path(dir.path(), "junk.json"), "{not json").unwrap();
    let o = qgeo(&["capacity", "--channel", "junk.json", "--delta", "0.4", "--out", "x.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn coincide_expectations() {
    let dir = tempfile::tempdir().unwrap();
    let run = |args: &[&str]| qgeo(args, dir.path()).status.code();
    assert_eq!(run(&["coincide", "--dim", "2", "--metrics", "euclid,bures,divergence", "--expect", "coincide", "--out", "a.csv"]), Some(0));
    assert_eq!(
        run(&["coincide", "--dim", "2", "--sites", "4", "--sample-kind", "faithful", "--metrics", "euclid,bures,divergence-sample-first,divergence-site-first", "--expect", "coincide", "--out", "b.csv"]),
        Some(0)
    );
    assert_eq!(run(&["coincide", "--dim", "3", "--section", "--metrics", "divergence,euclid", "--expect", "differ", "--out", "c.csv"]), Some(0));
    assert_eq!(run(&["coincide", "--dim", "3", "--section", "--scale", "auto", "--expect", "coincide", "--out", "d.csv"]), Some(0));
    assert_eq!(run(&["coincide", "--dim", "3", "--section", "--expect", "coincide", "--out", "e.csv"]), Some(6));
    assert_eq!(run(&["coincide", "--dim", "2", "--section", "--out", "f.csv"]), Some(2));
    assert_eq!(run(&["coincide", "--dim", "2", "--sample-kind", "faithful", "--metrics", "fs", "--out", "g.csv"]), Some(2));

    let csv = std::fs::read_to_string(path(dir.path(), "e.csv")).unwrap();
    assert!(csv.starts_with("site_a,site_b,sample,metric_a,metric_b,gap_a,gap_b\n"));
    assert!(csv.lines().count() > 1);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(path(dir.path(), "e.csv.report.json")).unwrap()).unwrap();
    assert_eq!(summary["disagreements"].as_u64().unwrap() as usize, csv.lines().count() - 1);
}

#[test]
fn bisector_fields() {
    let dir = tempfile::tempdir().unwrap();
    let same = r#"{"dim": 3, "sites": [{"xi1": 2.0, "xid": 0.0, "xid1": 0.0}, {"xi1": 2.0, "xid": 0.0, "xid1": 0.0}]}"#;
    std::fs::write(path(dir.path(), "same.json"), same).unwrap();
    let o = qgeo(&["bisector", "--metric", "divergence-section", "--sites", "same.json", "--grid", "10", "--out", "s.csv"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (_, rows) = BisectorField::rows_from_csv(3, &std::fs::read_to_string(path(dir.path(), "s.csv")).unwrap()).unwrap();
    assert!(rows.iter().all(|r| r.gaps[0] == 0.0));

    let poles = r#"{"dim": 2, "sites": [{"xi1": 1.0, "xid": 0.0, "xid1": 0.0}, {"xi1": -1.0, "xid": 0.0, "xid1": 0.0}]}"#;
    std::fs::write(path(dir.path(), "poles.json"), poles).unwrap();
    let o = qgeo(&["bisector", "--metric", "euclid", "--sites", "poles.json", "--grid", "10", "--out", "p.csv", "--svg", "p.svg"], dir.path());
    assert!(o.status.success());
    let (_, rows) = BisectorField::rows_from_csv(2, &std::fs::read_to_string(path(dir.path(), "p.csv")).unwrap()).unwrap();
    assert!(rows.iter().all(|r| r.gaps[0].signum() == -r.point.xi1.signum()));
    assert!(std::fs::read_to_string(path(dir.path(), "p.svg")).unwrap().contains("<svg"));

    let o = qgeo(&["bisector", "--metric", "divergence-section,euclid-section", "--example3", "5", "--grid", "80", "--out", "e.csv"], dir.path());
    assert!(o.status.success());
    let (names, rows) = BisectorField::rows_from_csv(5, &std::fs::read_to_string(path(dir.path(), "e.csv")).unwrap()).unwrap();
    assert_eq!(names, ["divergence-section", "euclid-section"]);
    assert!(rows.iter().any(|r| r.labels_differ(0, 1, 1e-10)));

    let o = qgeo(&["bisector", "--metric", "euclid-section", "--example3", "2", "--out", "x.csv"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}
