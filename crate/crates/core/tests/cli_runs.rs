use std::collections::BTreeSet;
use std::path::Path;

use eps_greedy::cli::{run_cli, EXIT_INPUT, EXIT_NUMERICAL, EXIT_OK, GREEDY_FILES, LEBESGUE_FILES};
use serde_json::Value;

fn run(args: &[&str]) -> i32 {
    run_cli(std::iter::once("eps-greedy").chain(args.iter().copied()))
}

fn files(dir: &Path) -> BTreeSet<String> {
    std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect()
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn fgreedy_writes_the_documented_files() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("f");
    let code = run(&["fgreedy", "--fn", "atan55", "--nodes", "equispaced:120", "--tau", "1e-2", "--out", out.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(files(&out), GREEDY_FILES.iter().map(|s| s.to_string()).collect());
    let s = summary(&out);
    assert_eq!(s["status"], "ok");
    assert_eq!(s["stop_reason"], "tolerance");
    assert!(s["final_criterion"].as_f64().unwrap() <= 1e-2);
    let trace = std::fs::read_to_string(out.join("trace.csv")).unwrap();
    assert!(trace.starts_with("iter,selected_x,criterion,kappa2,sparsity\n"));
    let selected = std::fs::read_to_string(out.join("selected.csv")).unwrap();
    assert_eq!(selected.lines().count() - 1, s["n_selected"].as_u64().unwrap() as usize);
    assert_eq!(trace.lines().count() - 1, s["iterations"].as_u64().unwrap() as usize);
    // 17 significant digits
    let first = selected.lines().nth(1).unwrap();
    assert_eq!(first, "-1.0000000000000000e0");
}

#[test]
fn lebesgue_and_nodes_subcommands() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("l");
    assert_eq!(run(&["lebesgue", "--nodes", "chebyshev:8", "--grid", "50", "--out", out.to_str().unwrap()]), EXIT_OK);
    assert_eq!(files(&out), LEBESGUE_FILES.iter().map(|s| s.to_string()).collect());
    assert_eq!(std::fs::read_to_string(out.join("lebesgue.csv")).unwrap().lines().count(), 51);
    assert!(summary(&out)["lebesgue_constant"].as_f64().unwrap() >= 1.0);

    let nodes = tmp.path().join("n");
    assert_eq!(run(&["nodes", "--nodes", "halton:5", "--out", nodes.to_str().unwrap()]), EXIT_OK);
    let text = std::fs::read_to_string(nodes.join("nodes.csv")).unwrap();
    assert_eq!(text.lines().count(), 6);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.cfg");
    let out = tmp.path().join("k");
    std::fs::write(&cfg, format!("# kernel run\nnodes = equispaced:60\ntau = 1e-9\nmax-iter = 50\nout = {}\n", out.display())).unwrap();
    assert_eq!(run(&["kernel", "--config", cfg.to_str().unwrap(), "--max-iter", "5"]), EXIT_OK);
    let s = summary(&out);
    assert_eq!(s["iterations"], 5);
    assert_eq!(s["stop_reason"], "maxiter");
    assert_eq!(s["nodes"], "equispaced:60");
}

#[test]
fn invalid_input_exits_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.cfg");
    std::fs::write(&cfg, "alpha = 2\nnodes: halton\n").unwrap();
    assert_eq!(run(&["fgreedy", "--config", cfg.to_str().unwrap()]), EXIT_INPUT);
    assert_eq!(run(&["fgreedy", "--alpha", "0"]), EXIT_INPUT);
    assert_eq!(run(&["lgreedy", "--nodes", "equispaced:2"]), EXIT_INPUT);
    assert_eq!(run(&["lgreedy", "--nodes", "equispaced:30", "--max-iter", "31"]), EXIT_INPUT);
    assert_eq!(run(&["fgreedy", "--fn", "table:/nonexistent/table.csv"]), EXIT_INPUT);
    assert_eq!(run(&["fgreedy", "--unknown-flag"]), EXIT_INPUT);
    assert_eq!(run(&["lgreedy", "--tau", "1", "--no-stop"]), EXIT_INPUT);
}

#[test]
fn numerical_failure_flushes_a_failed_summary() {
    // gaps of 2/9999 with alpha = 1e6 overflow the exponential range
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("x");
    let code = run(&["lgreedy", "--nodes", "equispaced:10000", "--alpha", "1e6", "--max-iter", "3", "--out", out.to_str().unwrap()]);
    assert_ne!(code, EXIT_OK);
    let s = summary(&out);
    assert_eq!(s["status"], "FAILED");
    assert!(s["error"].as_str().unwrap().len() > 5);
    assert!(out.join("trace.csv").exists());
    assert!(code == EXIT_INPUT || code == EXIT_NUMERICAL);
}

#[test]
fn runs_are_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let mut traces = Vec::new();
    for k in 0..2 {
        let out = tmp.path().join(format!("r{k}"));
        let o = out.to_str().unwrap();
        assert_eq!(run(&["fgreedy", "--fn", "inspace", "--seed", "3", "--nodes", "halton:80", "--tau", "1e-6", "--out", o]), EXIT_OK);
        let read = |f: &str| std::fs::read(out.join(f)).unwrap();
        traces.push((read("trace.csv"), read("selected.csv"), read("error.csv"), read("lebesgue.csv")));
    }
    assert_eq!(traces[0], traces[1]);
}
