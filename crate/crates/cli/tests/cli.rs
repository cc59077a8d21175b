use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use synclearn::fixtures;

fn synclearn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_synclearn"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("exited normally")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn small_run(out: &Path) -> Output {
    synclearn(&[
        "run",
        "--map",
        "bundled:small11",
        "--agents",
        "2",
        "--runs",
        "4",
        "--rounds",
        "60",
        "--thresholds",
        "20,100%",
        "--out",
        out.to_str().unwrap(),
    ])
}

#[test]
fn verify_bundled_fixtures_passes() {
    let output = synclearn(&["verify"]);
    assert_eq!(code(&output), 0, "{}", stdout(&output));
    let text = stdout(&output);
    assert_eq!(text.matches("overall: PASS").count(), fixtures::bundled().len());
    assert!(text.contains("verified: 6 game(s)"));
}

#[test]
fn verify_coverage_map_passes() {
    let output = synclearn(&["verify", "--map", "bundled:small11"]);
    assert_eq!(code(&output), 0, "{}", stdout(&output));
}

#[test]
fn break_coupling_fails_verification() {
    let output = synclearn(&["verify", "coverage-path", "--break-coupling"]);
    assert_eq!(code(&output), 1);
    assert!(stdout(&output).contains("[FAIL] recurrent classes"));
}

#[test]
fn verify_reads_game_files_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let game = dir.path().join("line.toml");
    fs::write(&game, fixtures::constrained_line().to_toml_string(Some("line".into()))).unwrap();
    let out = dir.path().join("report");
    let output = synclearn(&["verify", game.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&output), 0, "{}", stdout(&output));
    let report = fs::read_to_string(out.join("verify.txt")).unwrap();
    assert!(report.ends_with("verified\n"));
}

#[test]
fn usage_and_config_errors_exit_2() {
    assert_eq!(code(&synclearn(&["verify", "no-such-fixture"])), 2);
    assert_eq!(code(&synclearn(&["verify", "--kappa", "1.5"])), 2);
    assert_eq!(code(&synclearn(&["run", "--kappa", "2"])), 2);
    assert_eq!(code(&synclearn(&["run", "--map", "bundled:nowhere"])), 2);
    assert_eq!(code(&synclearn(&["run", "--thresholds", "95%,90%"])), 2);
    assert_eq!(code(&synclearn(&["run", "--bogus"])), 2);
    assert_eq!(code(&synclearn(&["run", "--config", "/nonexistent/config.txt"])), 2);
}

#[test]
fn summarize_missing_directory_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent");
    assert_eq!(code(&synclearn(&["summarize", missing.to_str().unwrap()])), 3);
}

#[test]
fn run_then_summarize_reproduces_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("results");
    let output = small_run(&out);
    assert_eq!(code(&output), 0, "{}", String::from_utf8_lossy(&output.stderr));
    assert!(stdout(&output).contains("runs 4, rounds 60"));
    for run in 0..4 {
        for mode in ["async", "sync"] {
            assert!(out.join(format!("run_{run}_{mode}.csv")).is_file());
        }
    }
    let aggregate = fs::read(out.join("aggregate.csv")).unwrap();
    let summary = fs::read(out.join("summary.txt")).unwrap();

    let again = dir.path().join("again");
    let output = synclearn(&[
        "summarize",
        out.to_str().unwrap(),
        "--out",
        again.to_str().unwrap(),
    ]);
    assert_eq!(code(&output), 0, "{}", String::from_utf8_lossy(&output.stderr));
    assert_eq!(fs::read(again.join("aggregate.csv")).unwrap(), aggregate);
    assert_eq!(fs::read(again.join("summary.txt")).unwrap(), summary);
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(code(&small_run(&a)), 0);
    assert_eq!(code(&small_run(&b)), 0);
    for name in ["aggregate.csv", "summary.txt", "run_3_sync.csv", "run_0_async.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("experiment.txt");
    let out = dir.path().join("out");
    fs::write(
        &config,
        format!(
            "map = bundled:path3\nagents = 2\nrounds = 5\nruns = 7\nmodes = sync\nthresholds = 9\nout = {}\n",
            out.display()
        ),
    )
    .unwrap();
    let output = synclearn(&["run", "--config", config.to_str().unwrap(), "--runs", "2"]);
    assert_eq!(code(&output), 0, "{}", String::from_utf8_lossy(&output.stderr));
    let saved = fs::read_to_string(out.join("config.txt")).unwrap();
    assert!(saved.contains("runs = 2\n"));
    assert!(saved.contains("modes = sync\n"));
    assert!(out.join("run_1_sync.csv").is_file());
    assert!(!out.join("run_0_async.csv").exists());
    assert!(!out.join("run_2_sync.csv").exists());
}
