mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use common::*;
use metric_svm::MetricMatrix;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_metric-svm"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn write_toy(dir: &Path, name: &str, n: usize, seed: u64) -> String {
    let p = dir.join(name);
    fs::write(&p, dataset_csv(&separable_toy(n, 3, seed))).unwrap();
    p.to_string_lossy().into_owned()
}

fn s(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

#[test]
fn train_writes_a_loadable_symmetric_metric() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_toy(dir.path(), "toy.csv", 10, 1);
    let out = dir.path().join("out");
    let trace = dir.path().join("trace.txt");
    let o = run(&[
        "train",
        "--data",
        &data,
        "--out",
        &s(&out),
        "--trace",
        &s(&trace),
        "--dump-gram",
        "--dump-constraints",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for m in ["metric.txt", "metric_raw.txt"] {
        let metric = MetricMatrix::load(out.join(m)).unwrap();
        assert_eq!(metric.dim(), 3);
        assert_eq!(metric.m, metric.m.t());
        let again = MetricMatrix::from_text(&metric.to_text()).unwrap();
        assert_eq!(again.m, metric.m);
    }
    assert!(
        MetricMatrix::load(out.join("metric.txt"))
            .unwrap()
            .psd_projected
    );
    let report = fs::read_to_string(out.join("train_report.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert_eq!(v["config"]["m1"], 2);
    assert_eq!(v["config"]["m2"], 2);
    assert_eq!(v["report"]["method"], "doublet-svm");
    assert!(v["report"]["summary"]["kkt_violation"].as_f64().unwrap() <= 1e-3);
    assert!(fs::read_to_string(&trace)
        .unwrap()
        .starts_with("sweep iterations objective violation"));
    let n: usize = fs::read_to_string(out.join("gram.txt"))
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(
        fs::read_to_string(out.join("constraints.txt"))
            .unwrap()
            .lines()
            .count(),
        n
    );
}

#[test]
fn identical_invocations_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_toy(dir.path(), "toy.csv", 12, 2);
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let out = dir.path().join("out");
        let o = run(&[
            "evaluate",
            "--data",
            &data,
            "--folds",
            "4",
            "--seed",
            "3",
            "--out",
            &s(&out),
        ]);
        assert!(o.status.success());
        let json = fs::read(out.join("toy_doublet-svm.json")).unwrap();
        let txt = fs::read(out.join("toy_doublet-svm.txt")).unwrap();
        outputs.push((json, txt));
        fs::remove_dir_all(&out).unwrap();
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_toy(dir.path(), "toy.csv", 6, 3);
    assert_eq!(run(&["train"]).status.code(), Some(2));
    assert_eq!(run(&["bogus"]).status.code(), Some(2));
    assert_eq!(
        run(&["train", "--data", &data, "--c", "-1"]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["train", "--data", &data, "--m1", "0", "--m2", "0"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["evaluate", "--data", &data, "--folds", "1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["train", "--data", "nothing.txt"]).status.code(),
        Some(2)
    );
    let missing = dir.path().join("missing.csv");
    assert_eq!(
        run(&["train", "--data", &s(&missing)]).status.code(),
        Some(1)
    );
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_toy(dir.path(), "toy.csv", 10, 4);
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, format!("data = {data}\nm1 = 3\nc = 0.5\nfolds = 5\n")).unwrap();
    let out = dir.path().join("out");
    let o = run(&[
        "evaluate",
        "--config",
        &s(&cfg),
        "--m1",
        "1",
        "--out",
        &s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value =
        serde_json::from_slice(&fs::read(out.join("toy_doublet-svm.json")).unwrap()).unwrap();
    assert_eq!(v["config"]["m1"], 1);
    assert_eq!(v["config"]["c"], 0.5);
    assert_eq!(v["report"]["fold_count"], 5);
    let txt = fs::read_to_string(out.join("toy_doublet-svm.txt")).unwrap();
    assert!(txt.contains("config.m1 = 1"));
}

#[test]
fn benchmark_two_datasets_two_methods() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_toy(dir.path(), "alpha.csv", 10, 5);
    let b = write_toy(dir.path(), "beta.csv", 10, 6);
    let out = dir.path().join("out");
    let o = run(&[
        "benchmark",
        "--data",
        &format!("{a},{b}"),
        "--method",
        "doublet-svm,triplet-svm",
        "--folds",
        "3",
        "--out",
        &s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let reports = fs::read_dir(&out)
        .unwrap()
        .filter(|e| {
            e.as_ref()
                .unwrap()
                .file_name()
                .to_string_lossy()
                .ends_with(".json")
        })
        .count();
    assert_eq!(reports, 4);
    let csv = fs::read_to_string(out.join("ranks.csv")).unwrap();
    assert_eq!(
        csv.lines()
            .filter(|l| !l.starts_with("average") && !l.starts_with("dataset"))
            .count(),
        4
    );
    let text = fs::read_to_string(out.join("ranks.txt")).unwrap();
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn benchmark_keeps_going_after_a_failed_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_toy(dir.path(), "alpha.csv", 10, 5);
    let missing = s(&dir.path().join("gone.csv"));
    let out = dir.path().join("out");
    let o = run(&[
        "benchmark",
        "--data",
        &format!("{missing},{a}"),
        "--method",
        "doublet-svm",
        "--folds",
        "3",
        "--out",
        &s(&out),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(out.join("alpha_doublet-svm.json").exists());
    assert!(out.join("failures.txt").exists());
}

#[test]
fn single_point_sweep_matches_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_toy(dir.path(), "toy.csv", 12, 7);
    let out = dir.path().join("out");
    assert!(run(&[
        "sweep",
        "--data",
        &data,
        "--c-grid",
        "0.5",
        "--folds",
        "4",
        "--out",
        &s(&out)
    ])
    .status
    .success());
    assert!(run(&[
        "evaluate",
        "--data",
        &data,
        "--c",
        "0.5",
        "--folds",
        "4",
        "--out",
        &s(&out)
    ])
    .status
    .success());
    let sweep: serde_json::Value =
        serde_json::from_slice(&fs::read(out.join("sweep.json")).unwrap()).unwrap();
    let eval: serde_json::Value =
        serde_json::from_slice(&fs::read(out.join("toy_doublet-svm.json")).unwrap()).unwrap();
    assert_eq!(sweep["report"].as_array().unwrap().len(), 1);
    assert_eq!(
        sweep["report"][0]["mean_error"],
        eval["report"]["mean_error"]
    );
}

#[test]
fn c_grid_sweep_is_total() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_toy(dir.path(), "toy.csv", 10, 8);
    let out = dir.path().join("out");
    let o = run(&[
        "sweep",
        "--data",
        &data,
        "--c-grid",
        "0.01,0.1,1,10,100,1000",
        "--folds",
        "3",
        "--out",
        &s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 6);
    for r in rows {
        let e: f64 = r.rsplit(',').next().unwrap().parse().unwrap();
        assert!(e.is_finite());
    }
}

#[test]
fn export_metric_formats() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_toy(dir.path(), "toy.csv", 8, 9);
    let out = dir.path().join("out");
    assert!(run(&["train", "--data", &data, "--out", &s(&out)])
        .status
        .success());
    let raw = s(&out.join("metric_raw.txt"));
    let json = dir.path().join("m.json");
    assert!(run(&[
        "export-metric",
        "--metric",
        &raw,
        "--to",
        "json",
        "--out",
        &s(&json)
    ])
    .status
    .success());
    let v: serde_json::Value = serde_json::from_slice(&fs::read(&json).unwrap()).unwrap();
    assert_eq!(v["dim"], 3);
    let factor = dir.path().join("l.txt");
    assert!(run(&[
        "export-metric",
        "--metric",
        &raw,
        "--to",
        "factor",
        "--out",
        &s(&factor)
    ])
    .status
    .success());
    let text = fs::read_to_string(&factor).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split_whitespace().map(|x| x.parse().unwrap()).collect())
        .collect();
    // LᵀL reproduces the projected metric
    let projected = MetricMatrix::load(out.join("metric.txt")).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let v: f64 = (0..3).map(|r| rows[r][i] * rows[r][j]).sum();
            assert!((v - projected.m[[i, j]]).abs() <= 1e-8 * (1.0 + projected.m[[i, j]].abs()));
        }
    }
}
