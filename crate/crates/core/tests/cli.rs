//! The `bvtransfer` binary: exit codes, report files and standard input.

use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

fn problem(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("problems")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bvtransfer"))
        .args(args)
        .output()
        .unwrap()
}

fn run_path(command: &str, name: &str, extra: &[&str]) -> Output {
    let path = problem(name);
    let mut args = vec![command, path.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

fn json(output: &Output) -> serde_json::Value {
    serde_json::from_slice(&output.stdout).unwrap()
}

fn failed_checks(report: &serde_json::Value) -> Vec<String> {
    report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["passed"] == false)
        .map(|c| c["name"].as_str().unwrap().to_string())
        .collect()
}

#[test]
fn passing_problems_exit_zero() {
    for name in ["f1_cubic.json", "f2_cubic.json", "f2_lambda.json"] {
        for command in ["check", "transfer", "homotopy"] {
            let out = run_path(command, name, &[]);
            assert_eq!(
                out.status.code(),
                Some(0),
                "{command} {name}: {}",
                String::from_utf8_lossy(&out.stdout)
            );
            assert_eq!(json(&out)["status"], "pass");
        }
    }
    assert_eq!(run_path("check", "q_zero.json", &[]).status.code(), Some(0));
}

#[test]
fn verification_failures_exit_one() {
    let out = run_path("check", "corrupted_omega.json", &[]);
    assert_eq!(out.status.code(), Some(1));
    let failed = failed_checks(&json(&out));
    assert!(
        failed.contains(&"omega_graded_antisymmetric".to_string()),
        "{failed:?}"
    );

    let out = run_path("check", "lambda_non_solution.json", &[]);
    assert_eq!(out.status.code(), Some(1));
    let failed = failed_checks(&json(&out));
    assert!(failed.contains(&"qme_residual".to_string()), "{failed:?}");
    assert!(failed.contains(&"main_identity".to_string()), "{failed:?}");

    let out = run_path("homotopy", "f1_tampered_w.json", &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(failed_checks(&json(&out)).contains(&"homotopy_residual".to_string()));
}

#[test]
fn unusable_input_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let broken = dir.path().join("broken.json");
    std::fs::write(
        &broken,
        "{\n  \"basis\": [\n    {\"name\": \"b\" \"degree\": 1}\n  ]\n}",
    )
    .unwrap();
    let out = run(&["check", broken.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 3"), "{stderr}");

    let unknown = dir.path().join("unknown.json");
    let text = std::fs::read_to_string(problem("f1_cubic.json")).unwrap();
    std::fs::write(&unknown, text.replace("\"to\": \"b\"", "\"to\": \"z\"")).unwrap();
    let out = run(&["check", unknown.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`z`"));

    assert_eq!(
        run(&["check", "/nonexistent/problem.json"]).status.code(),
        Some(2)
    );
    assert_eq!(
        run_path("transfer", "f1_cubic.json", &["--route", "sideways"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn reads_standard_input() {
    let text = std::fs::read(problem("f2_cubic.json")).unwrap();
    let mut child = Command::new(env!("CARGO_BIN_EXE_bvtransfer"))
        .args(["transfer", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(&text).unwrap();
    let out = child.wait_with_output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let from_file = run_path("transfer", "f2_cubic.json", &[]);
    assert_eq!(out.stdout, from_file.stdout);
}

#[test]
fn report_file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let out = run_path(
        "transfer",
        "f2_cubic.json",
        &["--route", "all", "--report", report.to_str().unwrap()],
    );
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(
        stdout
            .lines()
            .all(|l| l.starts_with("PASS ") || l == "pass"),
        "{stdout}"
    );
    assert!(stdout.contains("PASS route_agreement_feynman"));

    let value: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let routes = value["routes"].as_object().unwrap();
    assert_eq!(routes.len(), 3);

    // the reported effective action, fed back as a claimed action, passes
    // the homotopy check
    let mut spec: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(problem("f2_cubic.json")).unwrap()).unwrap();
    spec["effective_action"] = value["effective_action"].clone();
    let claimed = dir.path().join("claimed.json");
    std::fs::write(&claimed, serde_json::to_string_pretty(&spec).unwrap()).unwrap();
    let out = run(&["homotopy", claimed.to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
}

#[test]
fn window_override_and_seed() {
    let out = run_path("check", "f1_cubic.json", &["--max-weight", "4"]);
    assert_eq!(json(&out)["max_weight"], 4);
    let a = run_path("transfer", "f2_cubic.json", &["--seed", "7"]);
    let b = run_path("transfer", "f2_cubic.json", &["--seed", "7"]);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.status.code(), Some(0));
}
