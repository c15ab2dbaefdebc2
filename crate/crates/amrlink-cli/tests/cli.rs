//! End-to-end runs of the `amrlink` binary.

use std::path::Path;
use std::process::Command;

fn amrlink(args: &[&str], dir: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_amrlink"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn assert_ok(output: &std::process::Output) {
    assert!(
        output.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

#[test]
fn toy_workflow_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path();

    let gen = amrlink(
        &[
            "gen-toy", "--direct", "10", "--subtypical", "10", "--conditional", "10",
            "--temporal", "10", "--negatives", "10", "--seed", "5", "--out", "toy.jsonl",
        ],
        path,
    );
    assert_ok(&gen);

    let stats = amrlink(&["stats", "--data", "toy.jsonl"], path);
    assert_ok(&stats);
    assert!(String::from_utf8_lossy(&stats.stdout).contains("records:             50"));

    let vocab = amrlink(&["vocab", "--data", "toy.jsonl", "--out", "vocab.txt"], path);
    assert_ok(&vocab);
    let vocab_text = std::fs::read_to_string(path.join("vocab.txt")).unwrap();
    assert!(vocab_text.starts_with("None\nself\nbos\n<unk>\n:conflict\n"));

    let run = amrlink(
        &["run", "--data", "toy.jsonl", "--out", "artifacts", "--parallelism", "4"],
        path,
    );
    assert_ok(&run);
    let produced = std::fs::read_dir(path.join("artifacts")).unwrap().count();
    // two files per record plus vocab.txt
    assert_eq!(produced, 101);

    let eval = amrlink(&["eval", "--data", "toy.jsonl", "--seeds", "1,2"], path);
    assert_ok(&eval);
    let table = String::from_utf8_lossy(&eval.stdout);
    assert!(table.contains("(2 runs)"), "{table}");
}

#[test]
fn parse_rejects_malformed_input_with_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.amr"), "(a / x :op1").unwrap();
    let out = amrlink(&["parse", "--input", "bad.amr"], dir.path());
    assert!(!out.status.success());
}

#[test]
fn train_then_eval_with_saved_model() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path();
    assert_ok(&amrlink(
        &[
            "gen-toy", "--direct", "20", "--subtypical", "20", "--conditional", "20",
            "--temporal", "20", "--negatives", "20", "--seed", "9", "--out", "toy.jsonl",
        ],
        path,
    ));
    assert_ok(&amrlink(
        &["train-baseline", "--data", "toy.jsonl", "--out", "model.json", "--seed", "3"],
        path,
    ));
    let eval = amrlink(
        &["eval", "--data", "toy.jsonl", "--model", "model.json", "--json"],
        path,
    );
    assert_ok(&eval);
    let metrics: serde_json::Value =
        serde_json::from_slice(&eval.stdout).expect("eval --json emits JSON");
    assert!(metrics.get("per_label").is_some());
}
