//! End-to-end tests of the command line binary: training flows, exit codes,
//! report formats, and determinism, driven through the real executable.

use std::path::Path;
use std::process::Command;

use rkbs_svm::{KernelSpec, TrainedModel};

fn run_in(dir: &Path, args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_rkbs-svm"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().expect("exit code"),
        String::from_utf8(out.stdout).expect("utf-8 stdout"),
        String::from_utf8(out.stderr).expect("utf-8 stderr"),
    )
}

#[test]
fn help_enumerates_every_flag() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stdout, _) = run_in(dir.path(), &["--help"]);
    assert_eq!(code, 0);
    for cmd in ["train", "predict", "evaluate", "check", "benchmark"] {
        assert!(stdout.contains(cmd), "top help misses {cmd}");
    }
    assert!(stdout.contains("Exit codes"), "top help: {stdout}");

    let (code, stdout, _) = run_in(dir.path(), &["train", "--help"]);
    assert_eq!(code, 0);
    for flag in [
        "--kernel",
        "--sigma",
        "--m <M>",
        "--loss",
        "--lambda",
        "--beta",
        "--M <TERMS>",
        "--eps1",
        "--eps2",
        "--max-outer",
        "--max-newton",
        "--restarts",
        "--seed",
        "--init-lo",
        "--init-hi",
        "--label-column",
        "--train",
        "--test",
        "--model",
        "--trace",
        "--generate",
        "--config",
        "--report",
    ] {
        assert!(stdout.contains(flag), "train --help misses {flag}");
    }
}

#[test]
fn train_on_generated_squares_reports_convergence_and_writes_model() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stdout, stderr) = run_in(
        dir.path(),
        &[
            "train",
            "--generate",
            "squares:20:10",
            "--kernel",
            "min",
            "--M",
            "12",
            "--restarts",
            "2",
            "--model",
            "model.json",
            "--trace",
            "trace.csv",
        ],
    );
    assert_eq!(code, 0, "stderr: {stderr}");
    assert!(dir.path().join("model.json").is_file());
    assert!(stdout.contains("converged true"), "stdout: {stdout}");
    assert!(stdout.contains("test_accuracy"), "stdout: {stdout}");
    let trace = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(
        trace.starts_with("k,lagrangian,primal_residual,psi_increment,newton_iters,objective"),
        "trace head: {}",
        trace.lines().next().unwrap_or("")
    );
    assert!(trace.lines().count() > 2);
}

#[test]
fn train_twice_is_byte_identical() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let args = [
        "train",
        "--generate",
        "squares:20:10",
        "--kernel",
        "min",
        "--M",
        "12",
        "--restarts",
        "2",
        "--seed",
        "7",
        "--model",
        "model.json",
        "--trace",
        "trace.csv",
    ];
    let (code_a, stdout_a, _) = run_in(dir_a.path(), &args);
    let (code_b, stdout_b, _) = run_in(dir_b.path(), &args);
    assert_eq!(code_a, 0);
    assert_eq!(code_b, 0);
    assert_eq!(stdout_a, stdout_b);
    assert_eq!(
        std::fs::read(dir_a.path().join("model.json")).unwrap(),
        std::fs::read(dir_b.path().join("model.json")).unwrap()
    );
    assert_eq!(
        std::fs::read(dir_a.path().join("trace.csv")).unwrap(),
        std::fs::read(dir_b.path().join("trace.csv")).unwrap()
    );
}

#[test]
fn missing_dataset_exits_with_data_code_and_names_path() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, stderr) = run_in(dir.path(), &["train", "--train", "absent-data.csv"]);
    assert_eq!(code, 3);
    assert!(stderr.contains("absent-data.csv"), "stderr: {stderr}");
}

#[test]
fn nonpositive_lambda_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, stderr) = run_in(
        dir.path(),
        &["train", "--generate", "squares:8:2", "--lambda=-0.5"],
    );
    assert_eq!(code, 2);
    assert!(stderr.contains("lambda"), "stderr: {stderr}");
}

#[test]
fn unknown_loss_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, stderr) = run_in(
        dir.path(),
        &["train", "--generate", "squares:8:2", "--loss", "hinge3"],
    );
    assert_eq!(code, 2);
    assert!(stderr.contains("hinge3"), "stderr: {stderr}");
}

#[test]
fn check_satisfied_and_unsatisfied_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("pair.csv"), "label,x0\n1,0.1\n-1,-0.4\n").unwrap();
    let (code, stdout, _) = run_in(
        dir.path(),
        &[
            "check", "--train", "pair.csv", "--kernel", "gaussian", "--sigma", "1", "--M", "3",
        ],
    );
    assert_eq!(code, 0, "stdout: {stdout}");
    assert!(stdout.contains("satisfied true"));
    assert!(stdout.contains("numeric_rank 3"));

    let (code, stdout, stderr) = run_in(
        dir.path(),
        &[
            "check",
            "--generate",
            "squares:6:2",
            "--kernel",
            "min",
            "--M",
            "4",
        ],
    );
    assert_eq!(code, 5);
    assert!(stdout.contains("satisfied false"));
    // 6 points need rank 6*7/2 = 21; the refusal names the bound.
    assert!(stderr.contains("21"), "stderr: {stderr}");
}

#[test]
fn check_flags_duplicated_training_point() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("dup.csv"),
        "label,x0\n1,0.1\n1,0.1\n-1,-0.4\n",
    )
    .unwrap();
    let (code, stdout, _) = run_in(
        dir.path(),
        &[
            "check", "--train", "dup.csv", "--kernel", "gaussian", "--sigma", "1", "--M", "8",
        ],
    );
    assert_eq!(code, 5);
    assert!(stdout.contains("satisfied false"), "stdout: {stdout}");
}

#[test]
fn evaluate_zero_model_scores_all_positive_data_perfectly() {
    let dir = tempfile::tempdir().unwrap();
    let model = TrainedModel::new(
        KernelSpec::gaussian(1, 1.0),
        1,
        4,
        0.04,
        0.1,
        0.0,
        vec![vec![0.0], vec![0.5]],
        vec![0.0, 0.0],
    )
    .unwrap();
    model.save(&dir.path().join("zero.json")).unwrap();
    std::fs::write(
        dir.path().join("pos.csv"),
        "label,x0\n1,0.1\n1,-0.3\n1,0.7\n",
    )
    .unwrap();

    let (code, stdout, _) = run_in(
        dir.path(),
        &["evaluate", "--model", "zero.json", "--test", "pos.csv"],
    );
    assert_eq!(code, 0);
    assert!(stdout.contains("accuracy 1.000"), "stdout: {stdout}");
    assert!(
        stdout.contains("actual+1_predicted+1 3"),
        "stdout: {stdout}"
    );

    let (code, stdout, _) = run_in(
        dir.path(),
        &[
            "evaluate",
            "--model",
            "zero.json",
            "--test",
            "pos.csv",
            "--report",
            "csv",
        ],
    );
    assert_eq!(code, 0);
    let mut lines = stdout.lines();
    assert_eq!(
        lines.next().unwrap(),
        "accuracy,actual+1_predicted+1,actual+1_predicted-1,actual-1_predicted+1,actual-1_predicted-1"
    );
    assert_eq!(lines.next().unwrap(), "1.000,3,0,0,0");
}

#[test]
fn evaluate_rejects_points_outside_the_min_kernel_domain() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, stderr) = run_in(
        dir.path(),
        &[
            "train",
            "--generate",
            "squares:8:2",
            "--kernel",
            "min",
            "--M",
            "6",
            "--restarts",
            "1",
            "--max-outer",
            "10",
            "--model",
            "min.json",
        ],
    );
    assert_eq!(code, 0, "stderr: {stderr}");
    std::fs::write(dir.path().join("outside.csv"), "label,x0,x1\n1,1.5,0.2\n").unwrap();
    let (code, _, stderr) = run_in(
        dir.path(),
        &["evaluate", "--model", "min.json", "--test", "outside.csv"],
    );
    assert_eq!(code, 3);
    assert!(stderr.contains("domain"), "stderr: {stderr}");
}

#[test]
fn predict_rows_match_the_sign_rule() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, _) = run_in(
        dir.path(),
        &[
            "train",
            "--generate",
            "squares:20:10",
            "--kernel",
            "min",
            "--M",
            "12",
            "--restarts",
            "2",
            "--model",
            "model.json",
        ],
    );
    assert_eq!(code, 0);
    std::fs::write(
        dir.path().join("probe.csv"),
        "label,x0,x1\n1,0.2,0.3\n1,0.1,0.5\n-1,0.8,0.7\n-1,0.9,0.9\n",
    )
    .unwrap();
    let (code, _, _) = run_in(
        dir.path(),
        &[
            "predict",
            "--model",
            "model.json",
            "--test",
            "probe.csv",
            "--out",
            "preds.csv",
        ],
    );
    assert_eq!(code, 0);
    let preds = std::fs::read_to_string(dir.path().join("preds.csv")).unwrap();
    let mut lines = preds.lines();
    assert_eq!(lines.next().unwrap(), "decision,prediction");
    let mut rows = 0;
    for line in lines {
        let (decision, prediction) = line.split_once(',').expect("two columns");
        let decision: f64 = decision.parse().expect("decision parses");
        let expected = if decision >= 0.0 { "1" } else { "-1" };
        assert_eq!(prediction, expected, "row {line}");
        rows += 1;
    }
    assert_eq!(rows, 4);
}

#[test]
fn benchmark_emits_the_twelve_row_table_and_is_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "benchmark",
        "--seeds",
        "1",
        "--n-train",
        "20",
        "--n-test",
        "10",
        "--M",
        "12",
        "--restarts",
        "2",
        "--max-outer",
        "30",
        "--out",
        "table.csv",
        "--trace-dir",
        "traces",
    ];
    let (code, stdout, stderr) = run_in(dir.path(), &args);
    assert_eq!(code, 0, "stderr: {stderr}");
    let table = std::fs::read_to_string(dir.path().join("table.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(
        lines.next().unwrap(),
        "loss,m,seed,accuracy,objective,iterations,converged"
    );
    // 4 losses x 3 norm indices x 1 seed.
    assert_eq!(lines.count(), 12);
    assert_eq!(
        std::fs::read_dir(dir.path().join("traces"))
            .unwrap()
            .count(),
        12
    );
    assert!(stdout.contains("cells_ok 12"), "stdout: {stdout}");

    let dir2 = tempfile::tempdir().unwrap();
    let (code2, _, _) = run_in(dir2.path(), &args);
    assert_eq!(code2, 0);
    assert_eq!(
        table,
        std::fs::read_to_string(dir2.path().join("table.csv")).unwrap()
    );
}

#[test]
fn config_file_merges_under_flags() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.toml"),
        "M = 12\nrestarts = 2\nlambda = -5.0\n",
    )
    .unwrap();
    // The file's bad lambda is overridden by the flag; M and restarts apply.
    let (code, stdout, stderr) = run_in(
        dir.path(),
        &[
            "train",
            "--generate",
            "squares:20:10",
            "--kernel",
            "min",
            "--config",
            "run.toml",
            "--lambda",
            "0.01",
            "--model",
            "model.json",
        ],
    );
    assert_eq!(code, 0, "stderr: {stderr}");
    assert!(stdout.contains("converged true"), "stdout: {stdout}");

    // Without the override the file value is rejected.
    let (code, _, stderr) = run_in(
        dir.path(),
        &[
            "train",
            "--generate",
            "squares:20:10",
            "--kernel",
            "min",
            "--config",
            "run.toml",
        ],
    );
    assert_eq!(code, 2);
    assert!(stderr.contains("lambda"), "stderr: {stderr}");

    // Unknown keys are config errors, not silent typo sinks.
    std::fs::write(dir.path().join("typo.toml"), "lamda = 0.5\n").unwrap();
    let (code, _, stderr) = run_in(
        dir.path(),
        &[
            "train",
            "--generate",
            "squares:8:2",
            "--config",
            "typo.toml",
        ],
    );
    assert_eq!(code, 2);
    assert!(stderr.contains("lamda"), "stderr: {stderr}");
}
