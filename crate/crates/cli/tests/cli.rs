use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

use qfolio_core::data::load_prices;
use qfolio_core::persist::{load_json, read_trajectory_csv, save_json, FitRecord, PortfolioRecord};

const FIXTURE_SHA256: &str = "c26730e8e9c16b7b84c9381b6f49de1710128a53fc888e7213cda2e6c8d03c22";

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn qfolio(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qfolio")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = qfolio(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn sha256(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Fit and optimize on the bundled fixture; returns (model, portfolio) paths.
fn fitted(dir: &Path) -> (PathBuf, PathBuf) {
    let (model, portfolio) = (dir.join("model.json"), dir.join("portfolio.json"));
    let cfg = fixture("pipeline.json");
    ok(&["fit", "--input", s(&fixture("prices.csv")), "--config", s(&cfg), "--out", s(&model)]);
    ok(&["optimize", "--model", s(&model), "--config", s(&cfg), "--out", s(&portfolio)]);
    (model, portfolio)
}

#[test]
fn bundled_fixture_is_pinned_and_reproducible() {
    let bytes = fs::read(fixture("prices.csv")).unwrap();
    assert_eq!(sha256(&bytes), FIXTURE_SHA256);
    let series = load_prices(fixture("prices.csv"), None, None, None).unwrap();
    assert_eq!((series.len(), series.dim()), (100, 4));
    assert_eq!(series.tickers(), ["AAA", "BBB", "CCC", "DDD"]);

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("prices.csv");
    ok(&[
        "synth", "--q", "1.4", "--mu", "1.0005,1.0003,1.0008,1.0001", "--sigma", "0.02,0.015,0.025,0.01",
        "--tickers", "AAA,BBB,CCC,DDD", "--days", "101", "--seed", "20240102", "--out", s(&out),
    ]);
    assert_eq!(fs::read(out).unwrap(), bytes);
}

#[test]
fn flat_prices_give_unit_wealth() {
    let dir = tempfile::tempdir().unwrap();
    let (model, portfolio) = fitted(dir.path());
    let mut csv = String::from("date,ticker,close\n");
    for day in 1..=20 {
        for t in ["AAA", "BBB", "CCC", "DDD"] {
            csv.push_str(&format!("2024-05-{day:02},{t},42.5\n"));
        }
    }
    let flat = dir.path().join("flat.csv");
    fs::write(&flat, csv).unwrap();
    let report = dir.path().join("report.csv");
    ok(&["backtest", "--model", s(&model), "--portfolio", s(&portfolio), "--input", s(&flat), "--out", s(&report)]);
    let text = fs::read_to_string(&report).unwrap();
    assert!(text.starts_with("date,daily_factor,wealth,q_wealth\n"));
    let t = read_trajectory_csv(text.as_bytes()).unwrap();
    assert_eq!(t.len(), 19);
    assert!(t.wealth.iter().chain(&t.q_wealth).all(|w| *w == 1.0));

    let metrics = String::from_utf8(ok(&["metrics", "--report", s(&report)]).stdout).unwrap();
    assert!(metrics.contains("sharpe,undefined\n") && metrics.contains("sortino,undefined\n"), "{metrics}");
}

#[test]
fn metrics_on_worked_series() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.csv");
    fs::write(
        &report,
        "date,daily_factor,wealth,q_wealth\n2024-01-02,1.01,1.01,1.01\n2024-01-03,1.02,1.0302,1.0302\n2024-01-04,0.99,1.019898,1.0199\n",
    )
    .unwrap();
    let out = dir.path().join("metrics.csv");
    ok(&["metrics", "--report", s(&report), "--out", s(&out)]);
    let text = fs::read_to_string(out).unwrap();
    let value = |name: &str| -> f64 {
        text.lines().find_map(|l| l.strip_prefix(&format!("{name},"))).unwrap().parse().unwrap()
    };
    assert!(text.starts_with("metric,value\n"));
    assert!((value("sharpe") - 0.43644).abs() < 1e-5);
    assert!((value("sortino") - 1.1547).abs() < 1e-4);
}

#[test]
fn artifacts_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (model, portfolio) = fitted(dir.path());
    let fit: FitRecord = load_json(&model).unwrap();
    let again = dir.path().join("model2.json");
    save_json(&again, &fit).unwrap();
    assert_eq!(fs::read(&model).unwrap(), fs::read(&again).unwrap());
    assert_eq!(load_json::<FitRecord>(&again).unwrap(), fit);

    let record: PortfolioRecord = load_json(&portfolio).unwrap();
    assert_eq!(record.tickers, fit.tickers);
    assert!((record.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    let g = record.growth_rate.as_ref().unwrap();
    assert!(g.value.is_finite() && g.std_error > 0.0);

    let report = dir.path().join("r.csv");
    ok(&[
        "backtest", "--model", s(&model), "--portfolio", s(&portfolio), "--input", s(&fixture("prices.csv")),
        "--from", "2024-03-01", "--out", s(&report), "--plot", s(&dir.path().join("r.svg")),
    ]);
    let t = read_trajectory_csv(fs::File::open(&report).unwrap()).unwrap();
    let mut buf = Vec::new();
    qfolio_core::persist::write_trajectory_csv(&mut buf, &t).unwrap();
    assert_eq!(buf, fs::read(&report).unwrap());
    assert!(t.days.iter().all(|d| *d >= "2024-03-01".parse().unwrap()));
    let svg = fs::read_to_string(dir.path().join("r.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
}

#[test]
fn simulate_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let (model, portfolio) = fitted(dir.path());
    for check in ["lln", "markov", "bound"] {
        let out = dir.path().join(format!("{check}.csv"));
        ok(&[
            "simulate", "--model", s(&model), "--portfolio", s(&portfolio), "--competitor", "buy-and-hold",
            "--days", "200", "--paths", "50", "--seed", "3", "--check", check, "--out", s(&out),
        ]);
        let text = fs::read_to_string(out).unwrap();
        assert!(text.starts_with("check,n,statistic,value,bound\n"));
        assert!(text.lines().skip(1).all(|l| l.starts_with(check)), "{text}");
    }
}

fn error_line(out: &Output) -> serde_json::Value {
    let line = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(line.lines().last().unwrap()).unwrap()
}

#[test]
fn exit_codes() {
    assert_eq!(qfolio(&["--help"]).status.code(), Some(0));
    assert_eq!(qfolio(&["--version"]).status.code(), Some(0));

    let usage = qfolio(&["fit", "--out"]);
    assert_eq!(usage.status.code(), Some(1));
    assert_eq!(error_line(&usage)["code"], 1);

    let dir = tempfile::tempdir().unwrap();
    let missing = qfolio(&["fit", "--input", s(&dir.path().join("none.csv")), "--out", s(&dir.path().join("m.json"))]);
    assert_eq!(missing.status.code(), Some(2));
    assert_eq!(error_line(&missing)["error"], "data");

    let unknown = qfolio(&["fit", "--input", s(&fixture("prices.csv")), "--tickers", "AAA,ZZZ", "--out", s(&dir.path().join("m.json"))]);
    assert_eq!(unknown.status.code(), Some(2));

    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"optimize":{"integrator":{"mc_samples":10}}}"#).unwrap();
    let numerical = qfolio(&["fit", "--input", s(&fixture("prices.csv")), "--config", s(&cfg), "--out", s(&dir.path().join("m.json"))]);
    assert_eq!(numerical.status.code(), Some(3));
    assert_eq!(error_line(&numerical)["error"], "numerical");
}
