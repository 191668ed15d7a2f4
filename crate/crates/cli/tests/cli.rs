use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stochmatch"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn run_in(dir: &Path, args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = bin();
    cmd.current_dir(dir).args(args);
    if let Some(t) = threads {
        cmd.env("STOCHMATCH_THREADS", t);
    }
    cmd.output().unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn top_half_passes() {
    let out = run(&["verify", "--which", "top-half"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["pass"], true);
    let g = v["values"]["gamma"].as_f64().unwrap();
    assert!(g > 0.7062 && g < 0.7063);
}

#[test]
fn missing_instance_is_a_usage_error() {
    let out = run(&["simulate", "--instance", "/nonexistent/inst.json", "--algo", "ocs"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("instance not found"));
}

#[test]
fn bad_arguments_exit_two() {
    assert_eq!(run(&["verify", "--which", "nothing"]).status.code(), Some(2));
    assert_eq!(run(&["simulate", "--algo", "ocs"]).status.code(), Some(2));
    let out = bin().args(["verify", "--which", "jl"]).env("STOCHMATCH_THREADS", "zero").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn failed_target_exits_one_and_names_the_report() {
    let out = run(&["verify", "--which", "hardness", "--n", "1000", "--x", "0.94"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("hardness"));
    assert_eq!(json(&out)["pass"], false);
}

#[test]
fn hardness_at_scale() {
    let out = run(&["verify", "--which", "hardness", "--n", "1000000", "--x", "0.94"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!(v["values"]["ratio_bound"].as_f64().unwrap() < 0.703);
    let k = v["values"]["k_star"].as_f64().unwrap();
    assert!((k - 2.07e5).abs() < 0.1 * 2.07e5);
}

#[test]
fn csv_reports() {
    let out = run(&["verify", "--which", "jl", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("section,key,value\n"));
    assert!(text.contains("report,name,jl\n"));
}

#[test]
fn pipeline_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let gen =
        run_in(d, &["gen", "random", "--n-types", "4", "--n-offline", "3", "--seed", "7", "-o", "inst.json"], None);
    assert_eq!(gen.status.code(), Some(0));
    let lp = run_in(d, &["lp", "--instance", "inst.json", "--level", "2", "-o", "sol.json"], None);
    assert_eq!(lp.status.code(), Some(0));
    let sol: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("sol.json")).unwrap()).unwrap();
    assert_eq!(sol["status"], "Optimal");

    let args = [
        "simulate",
        "--instance",
        "inst.json",
        "--solution",
        "sol.json",
        "--algo",
        "ocs",
        "--trials",
        "5000",
        "--seed",
        "11",
    ];
    let a = run_in(d, &args, Some("1"));
    let b = run_in(d, &args, Some("3"));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["trials"], 5000);
    assert_eq!(v["algo"], "ocs");
}

#[test]
fn fixed_model_and_trial_rows() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(run_in(d, &["gen", "jaillet-lu", "-o", "jl.json"], None).status.code(), Some(0));
    let out = run_in(
        d,
        &[
            "simulate",
            "--instance",
            "jl.json",
            "--algo",
            "greedy",
            "--model",
            "fixed",
            "--lambda",
            "3",
            "--trials",
            "100",
            "--trials-csv",
            "rows.csv",
        ],
        None,
    );
    assert_eq!(out.status.code(), Some(0));
    let rows = std::fs::read_to_string(d.join("rows.csv")).unwrap();
    assert_eq!(rows.lines().next(), Some("trial,alg_value,opt_value"));
    assert_eq!(rows.lines().count(), 101);
    // fixed model needs --lambda
    let out = run_in(d, &["simulate", "--instance", "jl.json", "--algo", "greedy", "--model", "fixed"], None);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn jl_lp_objective() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    run_in(d, &["gen", "jaillet-lu", "-o", "jl.json"], None);
    let out = run_in(d, &["lp", "--instance", "jl.json", "--jl"], None);
    assert_eq!(out.status.code(), Some(0));
    assert!((json(&out)["objective"].as_f64().unwrap() - 2.0).abs() < 1e-9);
}

#[test]
fn algorithm_mismatch_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    run_in(d, &["gen", "random", "--weight-class", "edge", "--seed", "1", "-o", "ew.json"], None);
    let out = run_in(d, &["simulate", "--instance", "ew.json", "--algo", "ocs", "--trials", "10"], None);
    assert_eq!(out.status.code(), Some(2));
}
