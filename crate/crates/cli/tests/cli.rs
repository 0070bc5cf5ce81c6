use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(rel)
}

fn planguard(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_planguard")).args(args).output().unwrap()
}

fn path(rel: &str) -> String {
    fixture(rel).to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn verify_accepts_a_valid_plan() {
    let o = planguard(&[
        "verify",
        &path("cases/driver-1.pddl"),
        &path("navigation.domain.pddl"),
        &path("cases/driver-1.second.txt"),
        "--formulas",
        &path("cases/driver-1.formulas.txt"),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("Valid"));
}

#[test]
fn verify_rejects_a_constraint_violation() {
    let o = planguard(&[
        "verify",
        &path("cases/driver-1.pddl"),
        &path("navigation.domain.pddl"),
        &path("cases/driver-1.first.txt"),
        "--formulas",
        &path("cases/driver-1.formulas.txt"),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("Invalid"));
}

#[test]
fn verify_rejects_a_precondition_failure() {
    let o = planguard(&[
        "verify",
        &path("cases/bw-rand-6.pddl"),
        &path("blocksworld.domain.pddl"),
        &path("cases/bw-rand-6.first.txt"),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn untranslated_constraints_are_a_usage_error() {
    let o = planguard(&[
        "verify",
        &path("cases/driver-1.pddl"),
        &path("navigation.domain.pddl"),
        &path("cases/driver-1.second.txt"),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_files_and_bad_flags_exit_2() {
    assert_eq!(planguard(&["verify", "nope.pddl", "nope.pddl", "nope.txt"]).status.code(), Some(2));
    assert_eq!(planguard(&["plan", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(planguard(&["automaton", "a U"]).status.code(), Some(2));
}

#[test]
fn oracle_plan_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let o = planguard(&[
        "plan",
        &path("cases/driver-1.pddl"),
        &path("navigation.domain.pddl"),
        "--formulas",
        &path("cases/driver-1.formulas.txt"),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let plan = dir.path().join("plan.txt");
    std::fs::write(&plan, stdout(&o)).unwrap();
    let v = planguard(&[
        "verify",
        &path("cases/driver-1.pddl"),
        &path("navigation.domain.pddl"),
        plan.to_str().unwrap(),
        "--formulas",
        &path("cases/driver-1.formulas.txt"),
    ]);
    assert_eq!(v.status.code(), Some(0));
}

#[test]
fn scripted_plan_without_a_valid_reply_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("script.json");
    let bad = std::fs::read_to_string(fixture("cases/driver-1.first.txt")).unwrap();
    std::fs::write(&script, serde_json::to_string(&vec![bad]).unwrap()).unwrap();
    let o = planguard(&[
        "plan",
        &path("cases/driver-1.pddl"),
        &path("navigation.domain.pddl"),
        "--formulas",
        &path("cases/driver-1.formulas.txt"),
        "--mode",
        "task-planner",
        "--iteration-limit",
        "2",
        "--backend",
        &format!("scripted:{}", script.display()),
    ]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn automaton_prints_states() {
    let o = planguard(&["automaton", "a U b"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(!stdout(&o).is_empty());
}

#[test]
fn bench_writes_results() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bench.json");
    let output = dir.path().join("results.json");
    let cfg = serde_json::json!({
        "domain": "blocksworld",
        "sizes": [3, 4],
        "instances_per_size": 2,
        "seed": 7,
        "backend": "oracle",
        "mode": "hierarchical",
    });
    std::fs::write(&config, cfg.to_string()).unwrap();
    let o = planguard(&["bench", config.to_str().unwrap(), "--output", output.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("total: 4/4 successful"));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&output).unwrap()).unwrap();
    assert_eq!(report["records"].as_array().unwrap().len(), 4);
}

#[test]
fn bench_rejects_unknown_config_keys() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bench.json");
    std::fs::write(&config, r#"{"domain": "blocksworld", "sizes": [3], "colour": "red"}"#).unwrap();
    assert_eq!(planguard(&["bench", config.to_str().unwrap()]).status.code(), Some(2));
}
