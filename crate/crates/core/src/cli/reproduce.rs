//! The full experiment suite: each node family with f-greedy on `atan(55x)`
//! and λ-greedy at `τ = 3`, an unstopped 300-candidate λ-greedy run, the
//! EPS versus kernel comparison at 32 nodes and Lebesgue functions of
//! 8-point sets.

use std::path::{Path, PathBuf};

use super::{fmt_float, io_error, run_experiment, write_csv, Algorithm, ExperimentConfig, RunError, Settings, Summary};
use crate::nodes::NodeKind;

/// Insertions for the EPS/kernel comparison: 4 initial + 28 = 32 nodes.
pub const COMPARISON_INSERTIONS: usize = 28;

#[derive(Debug, Clone)]
pub struct SuiteRun {
    pub name: String,
    pub algorithm: Algorithm,
    pub settings: Settings,
}

fn run(name: String, algorithm: Algorithm, settings: Settings) -> SuiteRun {
    SuiteRun { name, algorithm, settings }
}

pub fn suite() -> Vec<SuiteRun> {
    let nodes = |k: NodeKind, n: usize| Some(format!("{k}:{n}"));
    let mut runs = Vec::new();
    for k in NodeKind::ALL {
        runs.push(run(
            format!("fgreedy-atan55-{k}"),
            Algorithm::Fgreedy,
            Settings { function: Some("atan55".into()), nodes: nodes(k, 300), tau: Some(1e-3), ..Default::default() },
        ));
        runs.push(run(
            format!("lgreedy-xsq-{k}"),
            Algorithm::Lgreedy,
            Settings { function: Some("xsq".into()), nodes: nodes(k, 300), tau: Some(3.0), ..Default::default() },
        ));
    }
    runs.push(run(
        "lgreedy-nostop-equispaced".into(),
        Algorithm::Lgreedy,
        Settings {
            function: Some("xsq".into()),
            nodes: nodes(NodeKind::Equispaced, 300),
            no_stop: Some(true),
            max_iter: Some(300),
            ..Default::default()
        },
    ));
    let compare = || Settings {
        function: Some("xsq".into()),
        nodes: nodes(NodeKind::Equispaced, 300),
        no_stop: Some(true),
        max_iter: Some(COMPARISON_INSERTIONS),
        ..Default::default()
    };
    runs.push(run("compare-eps-lgreedy".into(), Algorithm::Lgreedy, compare()));
    runs.push(run("compare-kernel-fgreedy".into(), Algorithm::Kernel, compare()));
    for k in NodeKind::ALL {
        runs.push(run(format!("lebesgue-{k}-8"), Algorithm::Lebesgue, Settings { nodes: nodes(k, 8), ..Default::default() }));
    }
    runs
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), fmt_float)
}

/// Runs the suite into `dir` (one subdirectory per run plus `index.csv`).
/// Stops at the first failure.
pub fn reproduce_all_into(dir: &Path) -> Result<Vec<(String, Summary)>, RunError> {
    std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let mut done = Vec::new();
    for r in suite() {
        let settings = Settings { out: Some(dir.join(&r.name)), ..r.settings.clone() };
        let summary = ExperimentConfig::resolve(r.algorithm, &settings)
            .and_then(|cfg| run_experiment(&cfg))
            .map_err(|e| e.context(&format!("run '{}'", r.name)))?;
        done.push((r.name, summary));
    }
    write_csv(
        &dir.join("index.csv"),
        &[
            "run",
            "algorithm",
            "nodes",
            "n_selected",
            "iterations",
            "stop_reason",
            "final_criterion",
            "lebesgue_constant",
            "kappa2",
            "max_error",
        ],
        done.iter().map(|(name, s)| {
            vec![
                name.clone(),
                s.algorithm.clone(),
                s.nodes.clone(),
                s.n_selected.to_string(),
                s.iterations.to_string(),
                s.stop_reason.map_or(String::new(), |r| {
                    serde_json::to_value(r).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
                }),
                opt(s.final_criterion),
                opt(s.lebesgue_constant),
                opt(s.kappa2),
                opt(s.max_error),
            ]
        }),
    )?;
    Ok(done)
}

/// Runs the suite into a fresh `reproduce-<UTC timestamp>` directory under
/// `parent` and returns its path.
pub fn reproduce_all(parent: &Path) -> Result<PathBuf, RunError> {
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%SZ").to_string();
    let mut dir = parent.join(format!("reproduce-{stamp}"));
    let mut k = 1;
    while dir.exists() {
        dir = parent.join(format!("reproduce-{stamp}-{k}"));
        k += 1;
    }
    reproduce_all_into(&dir)?;
    Ok(dir)
}
