use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qrbf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qrbf")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = qrbf(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn read(path: &Path) -> String {
    fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn gen_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("d.csv");
    ok(&["gen", "--pattern", "annulus", "--samples", "20", "--seed", "3", "--out", csv.to_str().unwrap()]);
    let text = read(&csv);
    // rounded up to a power of two
    assert_eq!(text.lines().count(), 32);
    assert!(text.lines().all(|l| l.ends_with(",1") || l.ends_with(",-1")));
}

#[test]
fn train_writes_reproducible_reports() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let common = ["train", "--pattern", "blobs", "--samples", "32", "--seeds", "0..3", "--max-iters", "50"];
    for out in [&a, &b] {
        let mut args = common.to_vec();
        args.extend(["--out", out.to_str().unwrap()]);
        ok(&args);
    }
    for name in ["report.txt", "metrics.csv", "loss_trace.csv", "theta.txt"] {
        assert_eq!(read(&a.join(name)), read(&b.join(name)), "{name}");
    }
    assert_eq!(read(&a.join("metrics.csv")).lines().count(), 4);
    assert_eq!(read(&a.join("theta.txt")).lines().count(), 3);
}

#[test]
fn eval_scores_saved_angles() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n).to_str().unwrap().to_string();
    ok(&["gen", "--samples", "32", "--seed", "4", "--out", &p("train.csv")]);
    ok(&["gen", "--samples", "32", "--seed", "5", "--out", &p("test.csv")]);
    ok(&[
        "train", "--data", &p("train.csv"), "--test", &p("test.csv"), "--seed", "4", "--max-iters", "100", "--out",
        &p("run"),
    ]);
    let out = ok(&["eval", "--data", &p("train.csv"), "--test", &p("test.csv"), "--theta", &p("run/theta.txt")]);
    let text = String::from_utf8(out.stdout).unwrap();
    let metric = |key: &str| -> f64 {
        let line = text.lines().find(|l| l.starts_with(key)).unwrap();
        line.split('=').nth(1).unwrap().trim().parse().unwrap()
    };
    let report = read(&dir.path().join("run/metrics.csv"));
    let row: Vec<&str> = report.lines().nth(1).unwrap().split(',').collect();
    assert!((metric("RCP") - row[1].parse::<f64>().unwrap()).abs() < 1e-4);
    assert!((metric("INF") - row[3].parse::<f64>().unwrap()).abs() < 1e-4);
}

#[test]
fn sweep_single_m_gives_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    ok(&["sweep", "--m-min", "4", "--m-max", "4", "--seeds", "0,1", "--max-iters", "30", "--out", out.to_str().unwrap()]);
    let csv = read(&out.join("metrics.csv"));
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.lines().nth(1).unwrap().starts_with("4,16,"));
}

#[test]
fn grid_has_resolution_squared_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g");
    ok(&[
        "grid", "--method", "svm-dual", "--samples", "16", "--seed", "1", "--resolution", "9", "--x-min", "-2", "--out",
        out.to_str().unwrap(),
    ]);
    let csv = read(&out.join("grid.csv"));
    assert_eq!(csv.lines().count(), 1 + 81);
    assert!(csv.lines().nth(1).unwrap().starts_with("-2.000000,-1.000000,"));
}

#[test]
fn compare_tabulates_methods() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c");
    ok(&[
        "compare", "--methods", "tensor-gd,full-lstsq", "--samples", "16", "--seeds", "0..2", "--max-iters", "20",
        "--out", out.to_str().unwrap(),
    ]);
    let table = read(&out.join("report.txt"));
    assert!(table.contains("tensor-gd") && table.contains("full-lstsq"));
    assert_eq!(read(&out.join("metrics.csv")).lines().count(), 1 + 4);
    assert!(out.join("full-lstsq/report.txt").exists());
}

#[test]
fn config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let out = dir.path().join("o");
    fs::write(&cfg, format!("# run\nmethod = full-lstsq\nsamples = 16\nseeds = 7\nout = {}\n", out.display())).unwrap();
    ok(&["train", "--method", "tensor-gd", "--samples", "64", "--config", cfg.to_str().unwrap()]);
    let report = read(&out.join("report.txt"));
    assert!(report.contains("method = full-lstsq"));
    assert!(report.contains("samples = 16"));
    assert!(!out.join("theta.txt").exists());
}

#[test]
fn errors_exit_nonzero_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("e");
    let o = out.to_str().unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["train", "--method", "bogus", "--out", o],
        vec!["train", "--samples", "16"],
        vec!["train", "--learning-rate", "-1", "--out", o],
        vec!["grid", "--resolution", "1", "--samples", "8", "--out", o],
        vec!["eval", "--data", "/nonexistent.csv", "--test", "/nonexistent.csv", "--theta", "/nonexistent"],
        vec!["gen", "--samples", "1", "--out", o],
    ];
    for args in cases {
        let res = qrbf(&args);
        assert!(!res.status.success(), "{args:?} should fail");
        assert!(String::from_utf8_lossy(&res.stderr).contains("error"), "{args:?}");
    }
    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "samples = 16\nnot a pair\n").unwrap();
    let res = qrbf(&["train", "--out", o, "--config", bad.to_str().unwrap()]);
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains(":2:"));
}
