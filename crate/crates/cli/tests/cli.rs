use std::process::Command;

use serde_json::Value;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

impl Run {
    fn json(&self) -> Value {
        serde_json::from_str(&self.stdout).unwrap_or_else(|e| panic!("{e}: {}", self.stdout))
    }
}

fn cproots(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_cproots"))
        .args(args)
        .output()
        .expect("binary runs");
    Run {
        code: out.status.code().expect("exit code"),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

#[test]
fn stochastic_square_root_is_accepted() {
    let run = cproots(&["root", "stochastic", "--p", "(1/2,1/3,1/6)", "--n", "2"]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let r = run.json();
    assert_eq!(r["verdict"], "accepted");
    assert_eq!(r["command"], "root stochastic");
    assert_eq!(r["inputs"]["p"]["sha256"].as_str().unwrap().len(), 64);
    assert!(r["residuals"]["stationarity"].as_f64().unwrap() <= 1e-10);
    assert!(r["tool_version"].is_string());
}

#[test]
fn stochastic_order_outside_range_is_refuted() {
    let run = cproots(&["root", "stochastic", "--p", "(1/2,1/3,1/6)", "--n", "3"]);
    assert_eq!(run.code, 2);
    assert_eq!(run.json()["verdict"], "refuted");
}

#[test]
fn trivial_root_is_rejected_for_properness() {
    let run = cproots(&["verify-root", "--tau", "fixture:halving", "--phi", "fixture:halving", "--n", "2"]);
    assert_eq!(run.code, 2);
    let r = run.json();
    assert_eq!(r["verdict"], "rejected");
    assert_eq!(r["reason"], "properness margin 0 at k=1");
}

#[test]
fn state_roots_up_to_the_order_bound() {
    let ok = cproots(&["root", "state", "--density", "(1/2,1/2)", "--n", "3"]);
    assert_eq!(ok.code, 0, "{}", ok.stderr);
    assert_eq!(ok.json()["seed"], 0);
    let too_long = cproots(&["root", "state", "--density", "(1/2,1/2)", "--n", "4"]);
    assert_eq!(too_long.code, 2);
    assert!(too_long.json()["reason"].as_str().unwrap().contains("outside the admissible range"));
}

#[test]
fn searched_root_round_trips_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let found = cproots(&["root", "search", "--map", "fixture:swap-halving", "--n", "3", "--out", out]);
    assert_eq!(found.code, 0, "{}", found.stderr);
    let tau = dir.path().join("tau.json");
    assert_eq!(found.json()["artifacts"][0], tau.to_str().unwrap());
    let check = cproots(&["verify-root", "--tau", tau.to_str().unwrap(), "--phi", "fixture:swap-halving", "--n", "3"]);
    assert_eq!(check.code, 0, "{}", check.stdout);
}

#[test]
fn missing_square_root_is_inconclusive_with_oracle() {
    let run = cproots(&["root", "search", "--map", "fixture:swap", "--n", "2", "--restarts", "4"]);
    assert_eq!(run.code, 3);
    let r = run.json();
    assert_eq!(r["verdict"], "inconclusive");
    assert_eq!(r["details"]["oracle"]["verdict"], "no root");
}

#[test]
fn malformed_json_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\"rows\": 4,\n\"cols\": 4, \"data\": [[1, 0],]}").unwrap();
    let run = cproots(&["check-cp", "--map", path.to_str().unwrap()]);
    assert_eq!(run.code, 1);
    assert!(run.stderr.contains("bad.json:2:"), "{}", run.stderr);
}

#[test]
fn unknown_fixture_is_an_input_error() {
    let run = cproots(&["check-cp", "--map", "fixture:nothing"]);
    assert_eq!(run.code, 1);
    assert!(run.stderr.contains("unknown fixture"));
}

#[test]
fn check_cp_and_support() {
    assert_eq!(cproots(&["check-cp", "--map", "fixture:swap"]).code, 0);
    let transpose = cproots(&["check-cp", "--map", "fixture:transpose:2"]);
    assert_eq!(transpose.code, 2);
    assert_eq!(transpose.json()["details"]["cp"], false);
    let support = cproots(&["support", "--map", "fixture:diagonal:3"]);
    assert_eq!(support.code, 0);
    assert_eq!(support.json()["details"]["projection"]["rows"], 3);
}

#[test]
fn asymptotic_requires_idempotence() {
    let run = cproots(&["asymptotic", "--map", "fixture:diagonal:2", "--times", "0.1,1,5"]);
    assert_eq!(run.code, 0, "{}", run.stdout);
    assert_eq!(run.json()["details"]["times"].as_array().unwrap().len(), 3);
    assert_eq!(cproots(&["asymptotic", "--map", "fixture:halving"]).code, 2);
}

#[test]
fn continuous_candidates_and_refutations() {
    let gen = cproots(&["continuous", "--map", "fixture:halving"]);
    assert_eq!(gen.code, 0);
    let corner = cproots(&["continuous", "--map", "fixture:corner"]).json();
    assert_eq!(corner["details"]["refutation"], "NotBijective");
    assert_eq!(corner["details"]["heuristic"], false);
    let swap = cproots(&["continuous", "--map", "fixture:swap-halving"]);
    assert_eq!(swap.code, 2);
    assert_eq!(swap.json()["details"]["refutation"], "NoPrincipalBranch");
    assert_eq!(swap.json()["details"]["heuristic"], true);
}

#[test]
fn shift_demo_checks_grid_times() {
    let run = cproots(&["shift-demo", "--m", "4", "--times", "0.25,0.5,1"]);
    assert_eq!(run.code, 0, "{}", run.stdout);
    assert_eq!(run.json()["residuals"]["endpoint"], 0.0);
    assert_eq!(cproots(&["shift-demo", "--m", "4", "--times", "0.3"]).code, 1);
}

#[test]
fn fixtures_pass_and_are_stable() {
    let first = cproots(&["fixtures"]);
    assert_eq!(first.code, 0, "{}", first.stdout);
    let table = first.json()["details"]["table"].as_array().unwrap().clone();
    assert!(table.iter().all(|row| row["pass"] == true));
    assert!(table[0]["observed"].as_str().unwrap().contains("inconclusive by search, oracle refutes"));
    assert!(table[2]["expectation"].as_str().unwrap().contains("n=2..6 accepted"));
    assert_eq!(cproots(&["fixtures"]).stdout, first.stdout);
}
