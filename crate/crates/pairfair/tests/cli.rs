//! End-to-end tests through the compiled binary: simulate, train, evaluate,
//! report, config validation, and exit codes.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pairfair"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn pairfair")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write(path: &Path, text: &str) {
    fs::write(path, text).unwrap();
}

#[test]
fn simulate_is_deterministic_and_sized() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let out = run(&["simulate", "two_group", "--queries", "100", "--seed", "7", "--out", a.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let out = run(&["simulate", "two_group", "--queries", "100", "--seed", "7", "--out", b.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let ca = fs::read_to_string(&a).unwrap();
    let cb = fs::read_to_string(&b).unwrap();
    assert_eq!(ca, cb, "same seed must give identical csv");
    // 11 candidates per query plus a header row.
    assert_eq!(ca.lines().count(), 100 * 11 + 1);
    let meta = fs::read_to_string(dir.path().join("a.csv.meta")).unwrap();
    assert!(meta.contains("generator=two_group"));
    assert!(meta.contains("rows=1100"));

    let out = run(&["simulate", "two_group", "--queries", "42", "--seed", "7", "--out", a.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let cc = fs::read_to_string(&a).unwrap();
    assert_ne!(ca, cc);
}

#[test]
fn unknown_generator_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["simulate", "four_group", "--out", dir.path().join("x.csv").to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("four_group"));
}

fn train_config(out_dir: &Path, extra: &str) -> String {
    format!(
        "simulate.generator = two_group\nsimulate.queries = 60\nsimulate.seed = 3\n\
         seed = 5\nsolver.iterations = 60\nsolver.snapshots = 10\nsolver.step_grid = 0.1\n\
         out = {}\n{}",
        out_dir.display(),
        extra
    )
}

#[test]
fn train_writes_artifacts_and_log() {
    let dir = tempfile::tempdir().unwrap();
    let run_dir = dir.path().join("run");
    let cfg = dir.path().join("train.cfg");
    write(
        &cfg,
        &train_config(
            &run_dir,
            "method = constrained\ncriterion = cross_group_eo\nepsilon = 0.05\n",
        ),
    );
    let out = run(&["train", "--config", cfg.to_str().unwrap()]);
    let c = code(&out);
    assert!(c == 0 || c == 4, "exit {} stderr {}", c, stderr(&out));
    assert!(run_dir.join("stochastic.txt").exists());
    assert!(run_dir.join("hyperparams.txt").exists());
    let log = fs::read_to_string(run_dir.join("run.log")).unwrap();
    assert!(log.starts_with("# step\t"));
    let snapshot_lines = log.lines().filter(|l| !l.starts_with('#') && !l.starts_with("result")).count();
    assert_eq!(snapshot_lines, 10);
    let result = log.lines().find(|l| l.starts_with("result\t")).expect("result line");
    assert!(result.contains("objective=auc"));
    assert!(result.contains("value="));
    assert!(result.contains("criterion=cross_group_eo"));
    assert!(result.contains("violation="));
    let hp = fs::read_to_string(run_dir.join("hyperparams.txt")).unwrap();
    assert!(hp.contains("method=constrained"));
    assert!(hp.contains("chosen_step=0.1"));
    assert!(hp.contains("data=simulate:two_group:60:3"));
}

#[test]
fn train_then_evaluate_reproduces_the_result_line() {
    let dir = tempfile::tempdir().unwrap();
    let run_dir = dir.path().join("run");
    let cfg = dir.path().join("train.cfg");
    write(&cfg, &train_config(&run_dir, "method = unconstrained\n"));
    let out = run(&["train", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(run_dir.join("model.txt").exists());

    let log = fs::read_to_string(run_dir.join("run.log")).unwrap();
    let result = log.lines().find(|l| l.starts_with("result\t")).unwrap();
    let logged_value = result
        .split('\t')
        .find_map(|f| f.strip_prefix("value="))
        .unwrap()
        .to_string();

    let out = run(&["evaluate", "--config", cfg.to_str().unwrap(), "--split", "validation"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let json = stdout(&out);
    let auc_field = json
        .split("\"auc\": ")
        .nth(1)
        .and_then(|rest| rest.split(',').next())
        .unwrap();
    assert_eq!(auc_field, logged_value, "evaluate must reproduce the training result line");
    assert!(json.contains("\"split\": \"validation\""));
    assert!(json.contains("\"matrix\": [["));
    assert!(json.contains("\"violations\": {"));
}

#[test]
fn evaluate_score_column_gives_perfect_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("scored.csv");
    let mut text = String::from("query_id,label,group,f0,s\n");
    // Score equals the label; every comparable pair is ordered correctly.
    // Each query holds both labels in both groups so all cells have pairs.
    for q in 0..30 {
        for c in 0..4 {
            let label = if c % 2 == 0 { 1 } else { 0 };
            let group = (c / 2) % 2;
            text.push_str(&format!("{},{},{},{},{}\n", q, label, group, 0.1 * c as f64, label));
        }
    }
    write(&csv, &text);
    let cfg = dir.path().join("eval.cfg");
    write(
        &cfg,
        &format!(
            "task = ranking\ndata.path = {}\ndata.protection = discrete\ndata.groups = 2\n",
            csv.display()
        ),
    );
    let out = run(&[
        "evaluate",
        "--config",
        cfg.to_str().unwrap(),
        "--score-column",
        "s",
        "--split",
        "test",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let json = stdout(&out);
    assert!(json.contains("\"auc\": 1.000000"), "{}", json);
    assert!(json.contains("\"matrix\": [[1.000000, 1.000000], [1.000000, 1.000000]]"), "{}", json);
    assert!(json.contains("\"mse\": null"));
}

#[test]
fn evaluate_without_artifact_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("train.cfg");
    write(&cfg, &train_config(&dir.path().join("never_trained"), ""));
    let out = run(&["evaluate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("model artifact"));
}

#[test]
fn config_errors_exit_2_and_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    write(&cfg, "simulate.generator = two_group\nsolver.cheese = 9\n");
    let out = run(&["train", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("solver.cheese"));
}

#[test]
fn missing_data_file_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("missing.cfg");
    write(
        &cfg,
        &format!(
            "task = ranking\ndata.path = {}/absent.csv\ndata.protection = discrete\ndata.groups = 2\nout = {}/o\n",
            dir.path().display(),
            dir.path().display()
        ),
    );
    let out = run(&["train", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
}

#[test]
fn report_lists_runs_sorted_by_method() {
    let dir = tempfile::tempdir().unwrap();
    let parent = dir.path().join("runs");
    fs::create_dir_all(&parent).unwrap();

    let cfg_u = dir.path().join("u.cfg");
    write(&cfg_u, &train_config(&parent.join("b_unc"), "method = unconstrained\ncriterion = cross_group_eo\n"));
    let out = run(&["train", "--config", cfg_u.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let cfg_c = dir.path().join("c.cfg");
    write(
        &cfg_c,
        &train_config(
            &parent.join("a_con"),
            "method = constrained\ncriterion = cross_group_eo\nepsilon = 0.05\n",
        ),
    );
    let out = run(&["train", "--config", cfg_c.to_str().unwrap()]);
    assert!(code(&out) == 0 || code(&out) == 4, "{}", stderr(&out));

    let out = run(&["report", parent.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 2, "{}", text);
    assert!(rows[0].starts_with("constrained\t"), "{}", text);
    assert!(rows[1].starts_with("unconstrained\t"), "{}", text);
    // Violation in parentheses after the objective.
    assert!(rows[0].contains('('), "{}", text);

    // A directory with a run.log but no result line is flagged, exit 3.
    let broken = parent.join("c_broken");
    fs::create_dir_all(&broken).unwrap();
    write(&broken.join("run.log"), "# step\t0.1\n1\t1.0\t0.5\t0.5\t-\n");
    write(&broken.join("hyperparams.txt"), "method=unconstrained\n");
    let out = run(&["report", parent.to_str().unwrap()]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("c_broken"));

    let out = run(&["report", dir.path().join("empty").to_str().unwrap()]);
    assert_eq!(code(&out), 3);
}

#[test]
fn evaluate_writes_json_to_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let run_dir = dir.path().join("run");
    let cfg = dir.path().join("t.cfg");
    write(&cfg, &train_config(&run_dir, ""));
    let out = run(&["train", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let json_path = dir.path().join("report.json");
    let out = run(&[
        "evaluate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        json_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let file = fs::read_to_string(&json_path).unwrap();
    assert_eq!(file, stdout(&out));
    assert!(file.contains("\"split\": \"test\""));
}
