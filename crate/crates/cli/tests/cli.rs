use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use imbf_cli::TrainedModel;
use imbf_core::data::{make_synthetic, write_csv};
use imbf_core::Dataset;
use tempfile::TempDir;

fn imbf(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_imbf"))
        .args(args)
        .current_dir(dir)
        .env_remove("IMBF_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_dataset(dir: &Path, name: &str, ds: &Dataset) -> PathBuf {
    let mut buf = Vec::new();
    write_csv(ds, &mut buf, &[]).unwrap();
    let path = dir.join(name);
    fs::write(&path, buf).unwrap();
    path
}

fn write_config(dir: &Path, name: &str, json: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, json).unwrap();
    path
}

fn assert_same_outputs(a: &Path, b: &Path) {
    let mut names: Vec<_> = fs::read_dir(a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    let mut other: Vec<_> = fs::read_dir(b).unwrap().map(|e| e.unwrap().file_name()).collect();
    other.sort();
    assert_eq!(names, other);
    for n in names {
        let (x, y) = (fs::read(a.join(&n)).unwrap(), fs::read(b.join(&n)).unwrap());
        if n == "manifest.json" {
            assert_eq!(manifest_sans_out(&x), manifest_sans_out(&y));
        } else {
            assert_eq!(x, y, "{n:?} differs");
        }
    }
}

fn manifest_sans_out(bytes: &[u8]) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_slice(bytes).unwrap();
    v["config"].as_object_mut().unwrap().remove("out");
    v
}

const LIGHT_ENSEMBLE: &str = r#"{"ensemble":{
    "base_specs":[
        {"kind":"bigru","params":{"hidden":4,"epochs":2}},
        {"kind":"cnn1d","params":{"filters":2,"epochs":2}}
    ],
    "meta_spec":{"kind":"gbt","params":{"n_rounds":20}},
    "oof_folds":3
}}"#;

fn tree_config() -> String {
    r#"{"version":1,"folds":5,"estimator":{"classifier":{"kind":"decision_tree","params":{}}}}"#.into()
}

#[test]
fn inspect_reports_balance_and_missing() {
    let tmp = TempDir::new().unwrap();
    write_dataset(tmp.path(), "d.csv", &make_synthetic(990, 10, 3, 2.0, 1));
    let o = imbf(&["inspect", "--input", "d.csv", "--out", "run"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("fraud_fraction=0.010000"), "{}", stdout(&o));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(tmp.path().join("run/inspection.json")).unwrap()).unwrap();
    assert_eq!(report["n_fraud"], 10);
    assert!(tmp.path().join("run/manifest.json").exists());

    fs::write(tmp.path().join("m.csv"), "a,b,Class\n1,,0\n2,3,1\n4,5,0\n").unwrap();
    let o = imbf(&["inspect", "--input", "m.csv", "--out", "run2"], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(tmp.path().join("run2/inspection.json")).unwrap()).unwrap();
    assert_eq!(report["missing_per_column"]["b"], 1);
    assert_eq!(report["missing_per_column"]["a"], 0);
}

#[test]
fn bad_inputs_exit_two_without_outputs() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("empty.csv"), "").unwrap();
    let o = imbf(&["inspect", "--input", "empty.csv", "--out", "run"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("header"), "{}", stderr(&o));
    assert!(!tmp.path().join("run").exists());

    fs::write(tmp.path().join("bad.csv"), "a,Class\n1,0\nx,1\n").unwrap();
    let o = imbf(&["inspect", "--input", "bad.csv", "--out", "run"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("row 2") && stderr(&o).contains("column 1"), "{}", stderr(&o));

    let o = imbf(&["inspect", "--out", "run"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    let o = imbf(&["evaluate", "--input", "bad.csv", "--folds", "1"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn corrupt_config_key_is_named() {
    let tmp = TempDir::new().unwrap();
    write_dataset(tmp.path(), "d.csv", &make_synthetic(100, 20, 3, 2.0, 1));
    write_config(tmp.path(), "c.json", r#"{"version":1,"samplr":"none"}"#);
    let o = imbf(&["evaluate", "--config", "c.json", "--input", "d.csv", "--out", "run"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("samplr"), "{}", stderr(&o));
    write_config(tmp.path(), "v.json", r#"{"folds":3}"#);
    let o = imbf(&["evaluate", "--config", "v.json", "--input", "d.csv", "--out", "run"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("version"), "{}", stderr(&o));
    assert!(!tmp.path().join("run").exists());
}

#[test]
fn resample_balances_and_is_reproducible() {
    let tmp = TempDir::new().unwrap();
    write_dataset(tmp.path(), "d.csv", &make_synthetic(990, 10, 3, 2.0, 4));
    let args = ["resample", "--input", "d.csv", "--sampler", "smote_kmeans", "--seed", "7", "--out"];
    let a = imbf(&[&args[..], &["a"]].concat(), tmp.path());
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    let line = stdout(&a);
    assert!(line.contains("original=1000") && line.contains("minority=990 majority=990"), "{line}");
    let b = imbf(&[&args[..], &["b"]].concat(), tmp.path());
    assert_eq!(b.status.code(), Some(0));
    assert_same_outputs(&tmp.path().join("a"), &tmp.path().join("b"));
}

#[test]
fn resample_none_copies_input() {
    let tmp = TempDir::new().unwrap();
    write_dataset(tmp.path(), "d.csv", &make_synthetic(200, 10, 3, 2.0, 4));
    let o = imbf(&["resample", "--input", "d.csv", "--sampler", "none", "--out", "run"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let input = fs::read_to_string(tmp.path().join("d.csv")).unwrap();
    let output = fs::read_to_string(tmp.path().join("run/resampled.csv")).unwrap();
    let stripped: Vec<&str> = output.lines().map(|l| &l[..l.rfind(',').unwrap()]).collect();
    assert_eq!(stripped, input.lines().collect::<Vec<_>>());
    assert!(output.lines().skip(1).all(|l| l.ends_with(",orig")));
}

#[test]
fn resample_precondition_failure_exits_three() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("one.csv"), "a,Class\n1,0\n2,0\n3,0\n4,1\n").unwrap();
    let o = imbf(&["resample", "--input", "one.csv", "--sampler", "smote", "--out", "run"], tmp.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(!tmp.path().join("run").exists());
}

#[test]
fn evaluate_writes_reports_and_reruns_identically() {
    let tmp = TempDir::new().unwrap();
    write_dataset(tmp.path(), "d.csv", &make_synthetic(400, 30, 3, 2.0, 2));
    write_config(tmp.path(), "c.json", &tree_config());
    let run = |out: &str| imbf(&["evaluate", "--config", "c.json", "--input", "d.csv", "--out", out], tmp.path());
    let o = run("a");
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["metrics.csv", "roc.tsv", "table.md", "manifest.json"] {
        assert!(tmp.path().join("a").join(f).exists(), "{f} missing");
    }
    let roc = fs::read_to_string(tmp.path().join("a/roc.tsv")).unwrap();
    let lines: Vec<&str> = roc.lines().collect();
    assert_eq!(lines[0], "fpr\ttpr");
    assert_eq!(lines[1], "0\t0");
    assert_eq!(*lines.last().unwrap(), "1\t1");
    let metrics = fs::read_to_string(tmp.path().join("a/metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 1 + 5 + 2);
    assert!(fs::read_to_string(tmp.path().join("a/table.md")).unwrap().starts_with("| Method | Accuracy | Recall | AUC |"));

    run("b");
    assert_same_outputs(&tmp.path().join("a"), &tmp.path().join("b"));
}

#[test]
fn seed_precedence_flag_env_config() {
    let tmp = TempDir::new().unwrap();
    write_dataset(tmp.path(), "d.csv", &make_synthetic(50, 5, 2, 2.0, 2));
    write_config(tmp.path(), "c.json", r#"{"version":1,"seed":5}"#);
    let seed_of = |out: &str| -> u64 {
        let m: serde_json::Value = serde_json::from_slice(&fs::read(tmp.path().join(out).join("manifest.json")).unwrap()).unwrap();
        m["seed"].as_u64().unwrap()
    };
    let run = |out: &str, env: Option<&str>, flag: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_imbf"));
        cmd.current_dir(tmp.path())
            .args(["resample", "--config", "c.json", "--input", "d.csv", "--out", out])
            .env_remove("IMBF_SEED");
        if let Some(e) = env {
            cmd.env("IMBF_SEED", e);
        }
        if let Some(f) = flag {
            cmd.args(["--seed", f]);
        }
        assert!(cmd.output().unwrap().status.success());
    };
    run("cfg", None, None);
    run("env", Some("6"), None);
    run("flag", Some("6"), Some("7"));
    assert_eq!((seed_of("cfg"), seed_of("env"), seed_of("flag")), (5, 6, 7));
}

#[test]
fn train_round_trips_a_light_ensemble() {
    let tmp = TempDir::new().unwrap();
    let ds = make_synthetic(150, 30, 6, 2.0, 3);
    write_dataset(tmp.path(), "d.csv", &ds);
    let cfg = format!(r#"{{"version":1,"estimator":{LIGHT_ENSEMBLE}}}"#);
    write_config(tmp.path(), "c.json", &cfg);
    let run = |out: &str| imbf(&["train", "--config", "c.json", "--input", "d.csv", "--out", out], tmp.path());
    let o = run("a");
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let model = TrainedModel::load(&tmp.path().join("a/model.json")).unwrap();
    for row in ds.rows() {
        assert!((0.0..=1.0).contains(&model.score(row)));
    }
    assert!(tmp.path().join("a/ensemble.json").exists());
    run("b");
    assert_same_outputs(&tmp.path().join("a"), &tmp.path().join("b"));
}

#[test]
fn failed_training_removes_partial_outputs() {
    let tmp = TempDir::new().unwrap();
    write_dataset(tmp.path(), "d.csv", &make_synthetic(60, 20, 2, 2.0, 3));
    write_config(
        tmp.path(),
        "c.json",
        r#"{"version":1,"estimator":{"classifier":{"kind":"cnn1d","params":{"kernel":5}}}}"#,
    );
    let o = imbf(&["train", "--config", "c.json", "--input", "d.csv", "--out", "run"], tmp.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(!tmp.path().join("run").exists());
}

#[test]
fn compare_emits_grid_and_flags_failed_cells() {
    let tmp = TempDir::new().unwrap();
    write_dataset(tmp.path(), "d.csv", &make_synthetic(300, 30, 6, 2.0, 8));
    let cfg = format!(
        r#"{{"version":1,"folds":3,"compare":{{
            "samplers":[{{"kind":"none"}},{{"kind":"smote"}},{{"kind":"smote_kmeans"}}],
            "estimators":[
                {{"classifier":{{"kind":"decision_tree","params":{{}}}}}},
                {{"classifier":{{"kind":"random_forest","params":{{"n_trees":10}}}}}},
                {{"classifier":{{"kind":"linear_svm","params":{{}}}}}},
                {LIGHT_ENSEMBLE}
            ]}}}}"#
    );
    write_config(tmp.path(), "c.json", &cfg);
    let run = |out: &str| imbf(&["compare", "--config-matrix", "c.json", "--input", "d.csv", "--out", out], tmp.path());
    let o = run("a");
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let grid = fs::read_to_string(tmp.path().join("a/grid.csv")).unwrap();
    let rows: Vec<&str> = grid.lines().collect();
    assert_eq!(rows[0], "method,None,Smote,Smote-Kmeans");
    let labels: Vec<&str> = rows[1..].iter().map(|r| r.split(',').next().unwrap()).collect();
    assert_eq!(labels, ["DT", "RF", "SVM", "Ours"]);
    let cells = rows[1..].iter().map(|r| r.split(',').skip(1).count()).sum::<usize>();
    assert_eq!(cells, 12);
    let table = fs::read_to_string(tmp.path().join("a/table.md")).unwrap();
    assert!(table.contains("| Method | None | Smote | Smote-Kmeans |"));
    assert!(table.contains("| Method | Accuracy | Recall | AUC |"));

    run("b");
    assert_same_outputs(&tmp.path().join("a"), &tmp.path().join("b"));

    write_config(
        tmp.path(),
        "f.json",
        r#"{"version":1,"folds":3,"compare":{
            "samplers":[{"kind":"none"}],
            "estimators":[
                {"classifier":{"kind":"decision_tree","params":{}}},
                {"classifier":{"kind":"cnn1d","params":{"kernel":9}}}
            ]}}"#,
    );
    let o = imbf(&["compare", "--config", "f.json", "--input", "d.csv", "--out", "f"], tmp.path());
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let grid = fs::read_to_string(tmp.path().join("f/grid.csv")).unwrap();
    assert!(grid.contains("CNN,FAILED"), "{grid}");
    assert!(!grid.contains("DT,FAILED"));
}

#[test]
fn job_count_does_not_change_outputs() {
    let tmp = TempDir::new().unwrap();
    write_dataset(tmp.path(), "d.csv", &make_synthetic(200, 20, 3, 2.0, 2));
    write_config(tmp.path(), "c.json", &tree_config());
    for (out, jobs) in [("a", "1"), ("b", "3")] {
        let o = imbf(&["evaluate", "--config", "c.json", "--input", "d.csv", "--jobs", jobs, "--out", out], tmp.path());
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    assert_eq!(
        fs::read(tmp.path().join("a/metrics.csv")).unwrap(),
        fs::read(tmp.path().join("b/metrics.csv")).unwrap()
    );
}
