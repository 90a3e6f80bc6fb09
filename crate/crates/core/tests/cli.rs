//! End-to-end checks of the command-line binary: exit codes, error wording,
//! persisted file formats and byte-for-byte determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_fklab")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .current_dir(dir)
        .args(args)
        .output()
        .expect("failed to launch binary")
}

fn write_config(dir: &Path, body: &str) {
    fs::write(dir.join("run.conf"), body).unwrap();
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&fs::read(path).unwrap())
        .unwrap_or_else(|e| panic!("{} is not valid JSON: {e}", path.display()))
}

const DEGENERATE: &str = "\
model.family = periodic
model.lambda = 0.02
model.K = 0.5
grid.window = -4, 4
grid.step = 0.0078125
run.n_max = 16
run.out_dir = out
";

#[test]
fn missing_config_field_is_named_and_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(tmp.path(), "model.family = periodic\nmodel.K = 0.5\n");
    let out = run_in(tmp.path(), &["ground-action", "--config", "run.conf"]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr(&out));
    assert!(
        stderr(&out).contains("model.lambda"),
        "error does not name the missing field: {}",
        stderr(&out)
    );
}

#[test]
fn unknown_subcommand_exits_64() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(tmp.path(), &["frobnicate"]);
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn unknown_recipe_exits_64() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(tmp.path(), &["recipe", "no-such-check"]);
    assert_eq!(out.status.code(), Some(64));
    assert!(stderr(&out).contains("no-such-check"));
}

#[test]
fn smoke_recipe_passes_and_writes_report() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(tmp.path(), &["recipe", "AC0-smoke", "--out", "rep"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("AC0-smoke: PASS"), "stdout: {}", stdout(&out));
    let rep = json(&tmp.path().join("rep/recipe_AC0-smoke.json"));
    assert_eq!(rep["pass"], serde_json::Value::Bool(true));
}

#[test]
fn ground_action_reports_degenerate_verdict() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(tmp.path(), DEGENERATE);
    let out = run_in(tmp.path(), &["ground-action", "--config", "run.conf"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let rep = json(&tmp.path().join("out/ground_action.json"));
    assert_eq!(rep["verdict"], "degenerate");
    let lo = rep["e_bar_bracket"]["lower"].as_f64().unwrap();
    let hi = rep["e_bar_bracket"]["upper"].as_f64().unwrap();
    assert!(lo <= 2e-4 && 2e-4 <= hi, "bracket [{lo}, {hi}] misses the exact level");
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let ta = tempfile::tempdir().unwrap();
    let tb = tempfile::tempdir().unwrap();
    for t in [&ta, &tb] {
        write_config(t.path(), DEGENERATE);
        let out = run_in(t.path(), &["ground-action", "--config", "run.conf"]);
        assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
        let out = run_in(t.path(), &["mane", "--config", "run.conf"]);
        assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    }
    for name in ["out/ground_action.json", "out/ground_action.csv", "out/mane_table.json", "out/mane_table.csv"]
    {
        let a = fs::read(ta.path().join(name)).unwrap();
        let b = fs::read(tb.path().join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

#[test]
fn solution_roundtrip_classify_and_verify() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(
        tmp.path(),
        "\
model.family = periodic
model.lambda = 1.0
model.K = 0.1
grid.window = -28, 28
grid.step = 0.015625
run.e_bar = 0.0
run.epsilon = 1
run.out_dir = out
",
    );
    let out = run_in(tmp.path(), &["kam", "--config", "run.conf", "--type", "III"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let sol = json(&tmp.path().join("out/kam_solution.json"));
    assert_eq!(sol["solution"]["type_label"], "III");

    let out = run_in(tmp.path(), &["classify", "--config", "run.conf"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("label III"), "stdout: {}", stdout(&out));
    let rep = json(&tmp.path().join("out/classify.json"));
    assert_eq!(rep["label"], "III");

    let out = run_in(tmp.path(), &["verify", "--config", "run.conf"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let rep = json(&tmp.path().join("out/verify.json"));
    assert_eq!(rep["passed"], serde_json::Value::Bool(true));
}

#[test]
fn sweep_rejects_unsorted_drifts() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(
        tmp.path(),
        "\
model.family = periodic
model.lambda = 0.0
model.K = 0.5
grid.window = -4, 4
grid.step = 0.0078125
run.lambdas = 1.0, 0.5
run.out_dir = out
",
    );
    let out = run_in(tmp.path(), &["sweep", "--config", "run.conf"]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr(&out));
    assert!(
        stderr(&out).to_lowercase().contains("ascending"),
        "error does not explain the ordering requirement: {}",
        stderr(&out)
    );
}
