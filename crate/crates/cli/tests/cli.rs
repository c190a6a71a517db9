use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ipbnn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ipbnn"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = ipbnn(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn bench_dmax_one_has_three_rows() {
    let out = ok(&["bench-entropy", "--dmax", "1", "--reps", "2"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].starts_with("p,D,"));
}

#[test]
fn bench_same_seed_same_csv() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    let svg = dir.path().join("bench.svg");
    for f in [&a, &b] {
        ok(&[
            "bench-entropy",
            "--dmax",
            "6",
            "--reps",
            "3",
            "--seed",
            "7",
            "--out",
            path(f),
            "--plot",
            path(&svg),
        ]);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert!(fs::read_to_string(&svg).unwrap().starts_with("<svg"));
}

#[test]
fn bench_full_grid_row_count() {
    let out = ok(&[
        "bench-entropy",
        "--n",
        "1000",
        "--reps",
        "2",
        "--p",
        "0.5,0.7,0.9",
        "--dmax",
        "20",
    ]);
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 61);
}

#[test]
fn invalid_flags_fail() {
    for args in [
        &["bench-entropy", "--p", "1.5"][..],
        &["bench-entropy", "--n", "0"],
        &["bench-entropy", "--dmin", "4", "--dmax", "2"],
        &["bench-entropy", "--bogus"],
        &["plot", "--runs", "/nonexistent", "--kind", "ip", "--out", "x.svg"],
        &["analyze", "--runs", "/nonexistent", "--out", "/tmp/x"],
        &["train", "--config", "/nonexistent.json", "--out", "/tmp/x"],
    ] {
        let out = ipbnn(args);
        assert!(!out.status.success(), "{args:?} succeeded");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn train_analyze_plot_round() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"dataset": {"kind": "szt-standin"}, "architecture": {"preset": "szt"},
            "lambdas": [0, 0.5, 1], "learning_rate": 1e-3, "batch_size": 64, "epochs": 50,
            "seeds": [0], "window": 5}"#,
    )
    .unwrap();
    let runs = dir.path().join("runs");
    ok(&[
        "train",
        "--config",
        path(&cfg),
        "--out",
        path(&runs),
        "--epochs",
        "4",
        "--stride",
        "2",
        "-q",
    ]);
    let logs: Vec<_> = fs::read_dir(&runs).unwrap().collect();
    assert_eq!(logs.len(), 3);
    let first = fs::read_to_string(runs.join("szt_lambda0_seed0.jsonl")).unwrap();
    assert_eq!(first.lines().count(), 3);

    let analysis = dir.path().join("analysis");
    ok(&["analyze", "--runs", path(&runs), "--out", path(&analysis)]);
    let summary = fs::read_to_string(analysis.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 3 * 4);
    let corr = fs::read_to_string(analysis.join("correlation.csv")).unwrap();
    assert_eq!(corr.lines().count(), 1 + 4);

    for (kind, layer) in [("ip", "-1,-2"), ("compression", "-1"), ("mi-accuracy", "-2")] {
        let svg = dir.path().join(format!("{kind}.svg"));
        ok(&[
            "plot",
            "--runs",
            path(&runs),
            "--kind",
            kind,
            "--layer",
            layer,
            "--out",
            path(&svg),
        ]);
        assert!(fs::read_to_string(&svg).unwrap().ends_with("</svg>\n"));
    }
    let out = ipbnn(&[
        "plot",
        "--runs",
        path(&runs),
        "--kind",
        "ip",
        "--layer",
        "-9",
        "--out",
        "/tmp/never.svg",
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("-9"));

    let again = dir.path().join("again");
    ok(&[
        "train",
        "--config",
        path(&cfg),
        "--out",
        path(&again),
        "--epochs",
        "4",
        "--stride",
        "2",
        "-q",
    ]);
    assert_eq!(
        first,
        fs::read_to_string(again.join("szt_lambda0_seed0.jsonl")).unwrap()
    );
}
