use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nowkit::ingest::read_trace_csv;

fn bundled_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/synthetic/config.json")
}

fn bundled_series() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/synthetic/series.csv").canonicalize().unwrap()
}

fn nowkit(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nowkit"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("NOWKIT_THREADS", "0")
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, body).unwrap();
    path
}

#[test]
fn bundled_config_validates() {
    let dir = tempfile::tempdir().unwrap();
    let o = nowkit(&["validate", "--config", bundled_config().to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("21 series"));
}

#[test]
fn short_target_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("short.csv"),
        "series_id,frequency,period,value,lag_months\nshort,A,2016,1.0,12\nshort,A,2017,1.1,12\nshort,A,2018,1.2,12\n",
    )
    .unwrap();
    let config = write_config(
        dir.path(),
        &format!(
            r#"{{"target_series_id": "short", "candidate_variable_ids": ["inf_1"],
                "data": {{"series": ["{}", "short.csv"]}}}}"#,
            bundled_series().display()
        ),
    );
    let o = nowkit(&["validate", "--config", config.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.starts_with("error: "), "{err}");
    assert!(err.contains("has 3 observations; at least 10 are required"), "{err}");
    assert_eq!(err.lines().count(), 1);
}

#[test]
fn unknown_variable_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        &format!(
            r#"{{"target_series_id": "target", "candidate_variable_ids": ["inf_1", "nope"],
                "data": {{"series": ["{}"]}}}}"#,
            bundled_series().display()
        ),
    );
    let o = nowkit(&["validate", "--config", config.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown variable 'nope'"));
}

#[test]
fn malformed_inputs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = nowkit(&["validate"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--config is required"));

    let config = write_config(dir.path(), r#"{"target_series_id": "target", "sed": 1}"#);
    let o = nowkit(&["validate", "--config", config.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));

    fs::write(dir.path().join("bad.csv"), "series_id,frequency,period,value,lag_months\nx,A,20x6,1.0,12\n").unwrap();
    let config = write_config(dir.path(), r#"{"target_series_id": "x", "data": {"series": ["bad.csv"]}}"#);
    let o = nowkit(&["validate", "--config", config.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("20x6"));

    let o = nowkit(&["frobnicate"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn trace_has_nineteen_vintages_and_reruns_identically() {
    let config = bundled_config();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let o = nowkit(&["trace", "--config", config.to_str().unwrap(), "--target-year", "2015"], dir.path());
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let rows = read_trace_csv(&a.path().join("trace_2015.csv")).unwrap();
    assert_eq!(rows.len(), 19);
    assert_eq!(rows[0].vintage.to_string(), "2015-01");
    assert_eq!(rows[18].vintage.to_string(), "2016-07");
    assert!(rows.iter().all(|r| r.growth_nowcast.is_finite() && r.level_nowcast.is_finite()));
    assert_eq!(fs::read(a.path().join("trace_2015.csv")).unwrap(), fs::read(b.path().join("trace_2015.csv")).unwrap());

    let o = nowkit(
        &["trace", "--config", config.to_str().unwrap(), "--target-year", "2015", "--vintage", "2015-06"],
        a.path(),
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn train_and_backtest_rerun_identically() {
    let config = bundled_config();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        for cmd in ["train", "backtest"] {
            let o = nowkit(&[cmd, "--config", config.to_str().unwrap()], dir.path());
            assert_eq!(o.status.code(), Some(0), "{cmd}: {}", stderr(&o));
        }
    }
    for file in ["model.json", "metrics.csv"] {
        assert_eq!(fs::read(a.path().join(file)).unwrap(), fs::read(b.path().join(file)).unwrap(), "{file}");
    }
    let metrics = fs::read_to_string(a.path().join("metrics.csv")).unwrap();
    assert!(metrics.starts_with("split,vintage,mae,rmse,n\n"));
    assert!(metrics.lines().any(|l| l.starts_with("test,full,")));
}

#[test]
fn classify_counts_cover_every_row() {
    let dir = tempfile::tempdir().unwrap();
    let catalog = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/catalog/sample.csv");
    let o = nowkit(&["classify", "--catalog", catalog.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = fs::read_to_string(&catalog).unwrap().lines().count() - 1;
    let text = stdout(&o);
    for prefix in ["catalog labels: ", "derived labels: "] {
        let line = text.lines().find(|l| l.starts_with(prefix)).unwrap();
        let count = |key: &str| -> usize {
            line.split_whitespace().find_map(|kv| kv.strip_prefix(key)).unwrap().parse().unwrap()
        };
        assert_eq!(count("highly_likely=") + count("likely=") + count("unlikely="), rows);
        assert_eq!(count("total="), rows);
    }
    let labeled = fs::read_to_string(dir.path().join("catalog_labeled.csv")).unwrap();
    assert_eq!(labeled.lines().count(), rows + 1);
    assert!(labeled.lines().next().unwrap().ends_with("derived_explanatory,derived_feasibility,rules_fired"));
}
