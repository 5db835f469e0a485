use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn tradeoff(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tradeoff")).args(args).output().expect("binary runs")
}

fn quick_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/quick.toml")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

#[test]
fn run_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("results");
    let config = quick_config();
    let out = tradeoff(&["run", "--config", config.to_str().unwrap(), "--out", out_dir.to_str().unwrap(), "--workers", "2"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for file in ["rows.csv", "summary.json", "traces.jsonl", "config.toml", "sweeps/hill.csv", "sweeps/cliff.csv"] {
        assert!(out_dir.join(file).exists(), "{file} missing");
    }
    let rows = fs::read_to_string(out_dir.join("rows.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 2 * 3 * 3);

    let table = tradeoff(&["report", "--results", out_dir.to_str().unwrap()]);
    assert_eq!(code(&table), 0);
    let text = String::from_utf8_lossy(&table.stdout);
    assert!(text.contains("inc-con") && text.contains("scr") && text.contains("de"));

    let summary = tradeoff(&["report", "--results", out_dir.to_str().unwrap(), "--format", "summary"]);
    assert_eq!(code(&summary), 0);
    let parsed: serde_json::Value = serde_json::from_slice(&summary.stdout).unwrap();
    assert_eq!(parsed["rows"], 18);

    // A summary that no longer matches its rows is a runtime failure.
    let path = out_dir.join("summary.json");
    let mut value: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    value["metrics"][0]["strategies"][0]["mean"] = serde_json::json!(12.5);
    fs::write(&path, value.to_string()).unwrap();
    assert_eq!(code(&tradeoff(&["report", "--results", out_dir.to_str().unwrap()])), 2);
}

#[test]
fn seed_override_changes_results() {
    let dir = tempfile::tempdir().unwrap();
    let config = quick_config();
    let mut rows = Vec::new();
    for (name, seed) in [("a", "1"), ("b", "1"), ("c", "2")] {
        let out_dir = dir.path().join(name);
        let out = tradeoff(&["run", "--config", config.to_str().unwrap(), "--out", out_dir.to_str().unwrap(), "--seed", seed]);
        assert_eq!(code(&out), 0);
        rows.push(fs::read(out_dir.join("rows.csv")).unwrap());
    }
    assert_eq!(rows[0], rows[1]);
    assert_ne!(rows[0], rows[2]);
}

#[test]
fn sweep_prints_csv() {
    let out = tradeoff(&["sweep", "--landscape", "monotone", "--resolution", "5"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8_lossy(&out.stdout);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "lambda,return");
    assert_eq!(lines.len(), 6);
    assert!(lines[5].starts_with("1.0,1.0"));
}

#[test]
fn configuration_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "seed = 1\nunknown_key = 3\n").unwrap();
    let out = tradeoff(&["run", "--config", bad.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown_key"));

    let missing = dir.path().join("absent.toml");
    assert_eq!(code(&tradeoff(&["run", "--config", missing.to_str().unwrap()])), 1);
    assert_eq!(code(&tradeoff(&["run", "--workers", "0"])), 1);
    assert_eq!(code(&tradeoff(&["sweep", "--landscape", "monotone", "--resolution", "1"])), 1);
    assert_eq!(code(&tradeoff(&["sweep", "--landscape", "nowhere"])), 1);
    assert_eq!(code(&tradeoff(&["frobnicate"])), 1);
    assert_eq!(code(&tradeoff(&["report", "--results", "x", "--format", "yaml"])), 1);
    assert_eq!(code(&tradeoff(&["--help"])), 0);
}

#[test]
fn failing_landscape_exits_with_two_but_keeps_other_rows() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("mixed.toml");
    let mut text = fs::read_to_string(quick_config()).unwrap();
    text.push_str("\n[[landscapes]]\nkind = \"lion\"\nid = \"broken\"\n\n[landscapes.lion]\nepsilon = 3.0\n");
    fs::write(&config, text).unwrap();
    let out_dir = dir.path().join("out");
    let out = tradeoff(&["run", "--config", config.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("broken"));
    let rows = fs::read_to_string(out_dir.join("rows.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 18);
}

#[test]
fn unwritable_output_is_a_runtime_failure() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let config = quick_config();
    let target = blocker.join("out");
    let out = tradeoff(&["run", "--config", config.to_str().unwrap(), "--out", target.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("file"));
}
