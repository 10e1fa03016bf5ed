//! CLI surface tests: subcommands, file outputs, and exit codes
//! (0 success, 1 config/startup error, 2 runtime failure).

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_scalebench"))
}

fn repo_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

#[test]
fn simulate_writes_reports_and_prints_a_summary() {
    let out = tempfile::tempdir().unwrap();
    let output = bin()
        .args(["simulate"])
        .arg(repo_path("configs/bursty.toml"))
        .arg("--output-dir")
        .arg(out.path())
        .output()
        .unwrap();
    assert!(output.status.success(), "stderr: {}", stderr(&output));
    let text = stdout(&output);
    assert!(text.contains("model=hold"), "stdout: {text}");
    assert!(text.contains("penalty="));
    for file in ["report.json", "report.csv", "batches.jsonl", "autoscaler.jsonl", "timeline.json"] {
        assert!(out.path().join(file).exists(), "missing {file}");
    }
}

#[test]
fn score_recomputes_the_penalty_from_logs() {
    let out = tempfile::tempdir().unwrap();
    let sim = bin()
        .args(["simulate"])
        .arg(repo_path("configs/bursty.toml"))
        .arg("--output-dir")
        .arg(out.path())
        .output()
        .unwrap();
    assert!(sim.status.success());

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.path().join("report.json")).unwrap())
            .unwrap();
    let expected = report["penalty"]["total"].as_f64().unwrap();

    let score = bin()
        .arg("score")
        .arg(out.path().join("batches.jsonl"))
        .arg(out.path().join("timeline.json"))
        .output()
        .unwrap();
    assert!(score.status.success(), "stderr: {}", stderr(&score));
    let parsed: serde_json::Value = serde_json::from_str(&stdout(&score)).unwrap();
    let recomputed = parsed["breakdown"]["total"].as_f64().unwrap();
    assert!(
        (recomputed - expected).abs() < 1e-9,
        "recomputed {recomputed} vs report {expected}"
    );
    assert!(parsed["breakdown"]["normalized_total"].is_number());

    // Custom parameters shift the failure term.
    let rescore = bin()
        .arg("score")
        .arg(out.path().join("batches.jsonl"))
        .arg(out.path().join("timeline.json"))
        .args(["--failure-penalty", "0", "--scarcity", "0", "--normalized"])
        .output()
        .unwrap();
    assert!(rescore.status.success());
    let parsed: serde_json::Value = serde_json::from_str(&stdout(&rescore)).unwrap();
    assert_eq!(parsed["breakdown"]["failure_term"].as_f64().unwrap(), 0.0);
    assert_eq!(parsed["breakdown"]["resource_term"].as_f64().unwrap(), 0.0);
}

#[test]
fn compare_emits_the_table() {
    let out = tempfile::tempdir().unwrap();
    let output = bin()
        .args(["compare"])
        .arg(repo_path("configs/bursty.toml"))
        .args(["--models", "hold,oracle", "--reps", "1"])
        .arg("--output-dir")
        .arg(out.path())
        .output()
        .unwrap();
    assert!(output.status.success(), "stderr: {}", stderr(&output));
    let text = stdout(&output);
    assert!(text.contains("mean_penalty"), "stdout: {text}");
    assert!(out.path().join("comparison.csv").exists());
    assert!(out.path().join("comparison.json").exists());
    assert!(out.path().join("hold-r0/report.json").exists());
    assert!(out.path().join("oracle-r0/report.json").exists());
}

#[test]
fn trace_inspect_reports_counts() {
    let output = bin()
        .args(["trace", "inspect"])
        .arg(repo_path("traces/bursty.txt"))
        .args(["--bucket", "300"])
        .output()
        .unwrap();
    assert!(output.status.success(), "stderr: {}", stderr(&output));
    let text = stdout(&output);
    assert!(text.contains("events: 14198"), "stdout: {text}");
    assert!(text.contains("rate buckets"));
}

#[test]
fn trace_convert_decodes_binary_records() {
    let dir = tempfile::tempdir().unwrap();
    // Two 20-byte records with big-endian u32 second timestamps 100 and 160.
    let mut bytes = Vec::new();
    for ts in [100u32, 160] {
        let mut record = [0u8; 20];
        record[..4].copy_from_slice(&ts.to_be_bytes());
        bytes.extend_from_slice(&record);
    }
    let input = dir.path().join("raw.bin");
    std::fs::write(&input, &bytes).unwrap();
    let output_path = dir.path().join("out.txt");

    let output = bin()
        .args(["trace", "convert"])
        .arg(&input)
        .arg(&output_path)
        .args(["--format", "binary", "--rebase", "--layout"])
        .arg(repo_path("configs/wc98_layout.toml"))
        .output()
        .unwrap();
    assert!(output.status.success(), "stderr: {}", stderr(&output));
    assert_eq!(std::fs::read_to_string(&output_path).unwrap(), "0\n60\n");
}

#[test]
fn missing_config_exits_one() {
    let output = bin().args(["simulate", "/nonexistent/config.toml"]).output().unwrap();
    assert_eq!(output.status.code(), Some(1), "stderr: {}", stderr(&output));
}

#[test]
fn malformed_trace_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.txt"), "1.0\nnot-a-number\n").unwrap();
    std::fs::write(
        dir.path().join("exp.toml"),
        "[trace]\npath = \"bad.txt\"\n",
    )
    .unwrap();
    let output = bin().arg("simulate").arg(dir.path().join("exp.toml")).output().unwrap();
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr(&output).contains("line 2"), "stderr: {}", stderr(&output));
}

#[test]
fn loadtest_with_unreachable_target_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("t.txt"), "0.0\n").unwrap();
    let probe = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let port = probe.local_addr().unwrap().port();
    drop(probe);
    std::fs::write(
        dir.path().join("exp.toml"),
        format!(
            "mode = \"live\"\nduration = 5.0\n[trace]\npath = \"t.txt\"\n\
             [live]\nurl = \"http://127.0.0.1:{port}/execute\"\n"
        ),
    )
    .unwrap();
    let output = bin().arg("loadtest").arg(dir.path().join("exp.toml")).output().unwrap();
    assert_eq!(output.status.code(), Some(1), "stderr: {}", stderr(&output));
    assert!(stderr(&output).contains("unreachable"));
}

#[test]
fn mode_mismatch_exits_one() {
    let config = repo_path("configs/bursty.toml");
    let output = bin().arg("loadtest").arg(&config).output().unwrap();
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr(&output).contains("scalebench simulate"));
}

#[test]
fn unknown_model_exits_one() {
    let output = bin()
        .args(["compare"])
        .arg(repo_path("configs/bursty.toml"))
        .args(["--models", "prophet", "--reps", "1"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr(&output).contains("unknown model"));
}

#[test]
fn stub_target_on_busy_port_exits_one() {
    let taken = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let port = taken.local_addr().unwrap().port();
    let output = bin()
        .args(["stub-target", "--port", &port.to_string()])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1), "stderr: {}", stderr(&output));
}

#[test]
fn help_exits_zero() {
    let output = bin().arg("--help").output().unwrap();
    assert_eq!(output.status.code(), Some(0));
    assert!(stdout(&output).contains("simulate"));
}
