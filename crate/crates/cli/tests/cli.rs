use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use hyphae::{io, BinaryVolume, Noxel};
use serde_json::Value;

fn hyphae(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hyphae"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = hyphae(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn fails(dir: &Path, args: &[&str]) -> String {
    let out = hyphae(dir, args);
    assert!(!out.status.success(), "{args:?} unexpectedly succeeded");
    String::from_utf8(out.stderr).unwrap()
}

fn small_config(dir: &Path) {
    fs::write(dir.join("config.json"), r#"{"dims": [64, 64, 16], "start_margin": 8}"#).unwrap();
}

fn gapped_line(dir: &Path) {
    let pts: Vec<Noxel> = (0..4).chain(6..10).map(|x| Noxel::from([x, 1, 1])).collect();
    io::save_binary(&BinaryVolume::from_noxels(&[12, 3, 3], &pts).unwrap(), &dir.join("line")).unwrap();
}

#[test]
fn generate_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    small_config(tmp.path());
    for out in ["a", "b"] {
        ok(tmp.path(), &["generate", "--seed", "7", "--config", "config.json", "--out-dir", out]);
    }
    for f in ["stack.json", "stack.raw", "skeleton.json", "skeleton.raw", "trees.json"] {
        let a = fs::read(tmp.path().join("a").join(f)).unwrap();
        assert_eq!(a, fs::read(tmp.path().join("b").join(f)).unwrap(), "{f}");
    }
    let stack = io::load_gray::<f32>(&tmp.path().join("a/stack")).unwrap();
    assert_eq!(stack.dims(), &[64, 64, 16]);
    let tf: io::TreeFile = io::read_json(&tmp.path().join("a/trees.json")).unwrap();
    assert_eq!(tf.seed, 7);
}

#[test]
fn scoring_identical_masks() {
    let tmp = tempfile::tempdir().unwrap();
    gapped_line(tmp.path());
    let report: Value = serde_json::from_str(&ok(tmp.path(), &["score", "--pred", "line", "--gt", "line"])).unwrap();
    assert_eq!(report["metrics"]["f1"], 1.0);
    assert_eq!(report["metrics"]["precision"], 1.0);
}

#[test]
fn dims_mismatch_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    gapped_line(tmp.path());
    io::save_binary(&BinaryVolume::zeros(&[12, 3, 4]).unwrap(), &tmp.path().join("other")).unwrap();
    let err = fails(tmp.path(), &["score", "--pred", "line", "--gt", "other"]);
    assert!(err.contains("differ"), "{err}");
}

#[test]
fn bad_arguments_fail() {
    let tmp = tempfile::tempdir().unwrap();
    gapped_line(tmp.path());
    fails(tmp.path(), &["close-gaps", "--in", "line", "--out", "x", "--max-gap", "4", "--bogus"]);
    fails(tmp.path(), &["close-gaps", "--in", "line", "--out", "x", "--max-gap", "4", "--scale", "1,0,1"]);
    fails(tmp.path(), &["close-gaps", "--in", "missing", "--out", "x", "--max-gap", "4"]);
    fails(tmp.path(), &["--threads", "0", "score", "--pred", "line", "--gt", "line"]);
    for bad in ["2:20", "5:1:1", "x:2:1"] {
        fails(tmp.path(), &["sweep", "--trees", ".", "--l", bad, "--out", "s"]);
    }
    fails(tmp.path(), &["segment", "--method", "otsu", "--in", "line", "--out", "x"]);
}

#[test]
fn close_gaps_joins_the_line() {
    let tmp = tempfile::tempdir().unwrap();
    gapped_line(tmp.path());
    let report: Value =
        serde_json::from_str(&ok(tmp.path(), &["close-gaps", "--in", "line", "--out", "closed", "--max-gap", "4"]))
            .unwrap();
    assert_eq!(report["edges_added"].as_array().unwrap().len(), 1);
    let closed = io::load_binary(&tmp.path().join("closed")).unwrap();
    assert_eq!(closed.count_foreground(), 10);

    ok(tmp.path(), &["close-gaps", "--in", "line", "--out", "kept", "--max-gap", "3", "--report", "r.json"]);
    let kept = io::load_binary(&tmp.path().join("kept")).unwrap();
    assert_eq!(kept.count_foreground(), 8);
    assert!(tmp.path().join("r.json").exists());
}

#[test]
fn features_in_both_formats() {
    let tmp = tempfile::tempdir().unwrap();
    gapped_line(tmp.path());
    ok(tmp.path(), &["features", "--in", "line", "--out", "f.csv"]);
    let csv = fs::read_to_string(tmp.path().join("f.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3, "{csv}");
    ok(tmp.path(), &["features", "--in", "line", "--scale", "1,1,2", "--out", "f.json"]);
    let json: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("f.json")).unwrap()).unwrap();
    assert_eq!(json["components"].as_array().unwrap().len(), 2);
}

#[test]
fn segment_and_export() {
    let tmp = tempfile::tempdir().unwrap();
    small_config(tmp.path());
    ok(tmp.path(), &["generate", "--seed", "3", "--config", "config.json", "--out-dir", "g"]);
    let report: Value = serde_json::from_str(&ok(
        tmp.path(),
        &["segment", "--method", "frangi", "--in", "g/stack", "--out", "v", "--gt", "g/skeleton"],
    ))
    .unwrap();
    let f1 = report["metrics"]["f1"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&f1));
    assert!(report["threshold"].is_number());

    fails(
        tmp.path(),
        &["segment", "--method", "phansalkar", "--in", "g/stack", "--out", "p", "--report", "p.json"],
    );
    ok(
        tmp.path(),
        &["segment", "--method", "phansalkar", "--in", "g/stack", "--out", "p", "--report", "p_report.json"],
    );
    assert!(io::load_binary(&tmp.path().join("p")).is_ok());

    fs::write(tmp.path().join("t.json"), r#"{"threshold": 0.5}"#).unwrap();
    ok(
        tmp.path(),
        &["segment", "--method", "threshold", "--params", "t.json", "--in", "g/stack", "--out", "t"],
    );
    fails(tmp.path(), &["segment", "--method", "threshold", "--in", "g/stack", "--out", "t2"]);

    ok(tmp.path(), &["export-slices", "--in", "g/stack", "--out-dir", "pgm"]);
    assert_eq!(fs::read_dir(tmp.path().join("pgm")).unwrap().count(), 16);
}

#[test]
fn sweep_writes_surfaces() {
    let tmp = tempfile::tempdir().unwrap();
    small_config(tmp.path());
    ok(tmp.path(), &["generate", "--seed", "1", "--config", "config.json", "--out-dir", "stacks/one"]);
    ok(tmp.path(), &["sweep", "--trees", "stacks", "--l", "2:6:2", "--sz", "1,3", "--out", "sweep"]);
    let csv = fs::read_to_string(tmp.path().join("sweep/f1.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4, "{csv}");
    let json: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("sweep/sweep.json")).unwrap()).unwrap();
    assert_eq!(json["tree_files"].as_array().unwrap().len(), 1);
    fails(tmp.path(), &["sweep", "--trees", "nowhere", "--out", "s2"]);
}
