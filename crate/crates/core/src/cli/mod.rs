//! Experiment runner behind the `eps-greedy` binary.
//!
//! Every run writes its artifacts into one output directory: CSV files with
//! values printed as `{:.16e}` (17 significant digits), SVG charts and a
//! `summary.json`. CSV output is a pure function of the configuration;
//! only `summary.json` carries the wall time.

pub mod config;
pub mod reproduce;
pub mod svg;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::diagnostics::cond2;
use crate::error::EpsError;
use crate::exp_space::ExpSpace;
use crate::gb_spline::GbSplineBasis;
use crate::greedy::{f_greedy, lambda_greedy, GreedyConfig, GreedyError, GreedyOutcome, GreedyTrace, StopReason};
use crate::interpolate::{uniform_grid, Collocation, Interpolant};
use crate::kernel_baseline::{kernel_f_greedy, KernelInterpolant, KernelSystem};
use crate::nodes::NodeSpec;

pub use config::Settings;
use svg::{Chart, Series};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

/// Files written by `fgreedy`, `lgreedy` and `kernel` runs.
pub const GREEDY_FILES: [&str; 9] = [
    "error.csv",
    "lebesgue.csv",
    "plot_error.svg",
    "plot_lebesgue.svg",
    "plot_selected.svg",
    "plot_trace.svg",
    "selected.csv",
    "summary.json",
    "trace.csv",
];

/// Files written by `lebesgue` runs.
pub const LEBESGUE_FILES: [&str; 4] = ["lebesgue.csv", "plot_lebesgue.svg", "selected.csv", "summary.json"];

const DEFAULT_OUT: &str = "eps-greedy-out";
const IN_SPACE_KNOTS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Input,
    Numerical,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{message}")]
pub struct RunError {
    pub kind: ErrorKind,
    pub message: String,
}

impl RunError {
    pub fn input(message: impl Into<String>) -> Self {
        Self { kind: ErrorKind::Input, message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Input => EXIT_INPUT,
            ErrorKind::Numerical => EXIT_NUMERICAL,
        }
    }

    pub fn context(self, what: &str) -> Self {
        Self { kind: self.kind, message: format!("{what}: {}", self.message) }
    }
}

impl From<EpsError> for RunError {
    fn from(e: EpsError) -> Self {
        let kind = if e.is_input_error() { ErrorKind::Input } else { ErrorKind::Numerical };
        Self { kind, message: e.to_string() }
    }
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> RunError {
    RunError::input(format!("{}: {e}", path.display()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Fgreedy,
    Lgreedy,
    Kernel,
    Lebesgue,
    Nodes,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Fgreedy => "fgreedy",
            Algorithm::Lgreedy => "lgreedy",
            Algorithm::Kernel => "kernel",
            Algorithm::Lebesgue => "lebesgue",
            Algorithm::Nodes => "nodes",
        }
    }

    fn default_function(self) -> &'static str {
        match self {
            Algorithm::Fgreedy => "atan55",
            _ => "xsq",
        }
    }

    fn default_tau(self) -> Option<f64> {
        match self {
            Algorithm::Fgreedy | Algorithm::Kernel => Some(1e-3),
            Algorithm::Lgreedy => Some(3.0),
            _ => None,
        }
    }

    fn is_greedy(self) -> bool {
        matches!(self, Algorithm::Fgreedy | Algorithm::Lgreedy | Algorithm::Kernel)
    }
}

/// Function sampled at the candidates.
#[derive(Debug, Clone)]
pub enum Target {
    /// `atan(55x)`
    Atan55,
    /// `x²`
    Xsq,
    /// Random EPS spline on equispaced knots, coefficients uniform in `[−1, 1]`.
    InSpace { seed: u64, spline: Box<Interpolant> },
    /// Piecewise-linear interpolation of an `x,y` table.
    Table { path: PathBuf, xs: Vec<f64>, ys: Vec<f64> },
}

impl Target {
    pub fn parse(spec: &str, alpha: f64, seed: u64, domain: (f64, f64)) -> Result<Self, RunError> {
        match spec {
            "atan55" => Ok(Target::Atan55),
            "xsq" => Ok(Target::Xsq),
            "inspace" => Ok(Target::InSpace { seed, spline: Box::new(random_spline(alpha, seed, domain)?) }),
            s => match s.strip_prefix("table:") {
                Some(p) => read_table(Path::new(p), domain),
                None => Err(RunError::input(format!(
                    "field 'fn': unknown function '{s}' (expected atan55, xsq, inspace or table:PATH)"
                ))),
            },
        }
    }

    pub fn name(&self) -> String {
        match self {
            Target::Atan55 => "atan55".into(),
            Target::Xsq => "xsq".into(),
            Target::InSpace { seed, .. } => format!("inspace(seed={seed})"),
            Target::Table { path, .. } => format!("table:{}", path.display()),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Target::Atan55 => (55.0 * x).atan(),
            Target::Xsq => x * x,
            Target::InSpace { spline, .. } => spline.eval(x).unwrap_or(f64::NAN),
            Target::Table { xs, ys, .. } => {
                let k = xs.partition_point(|&t| t <= x).clamp(1, xs.len() - 1);
                let w = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
                ys[k - 1] + w * (ys[k] - ys[k - 1])
            }
        }
    }
}

/// Random in-space target, reproducible from `seed`.
pub fn random_spline(alpha: f64, seed: u64, (a, b): (f64, f64)) -> Result<Interpolant, RunError> {
    let basis = GbSplineBasis::from_interior(&uniform_grid(a, b, IN_SPACE_KNOTS), ExpSpace::new(alpha)?)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c: Vec<f64> = (0..basis.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Ok(Interpolant::from_coefficients(basis, c)?)
}

fn read_table(path: &Path, (a, b): (f64, f64)) -> Result<Target, RunError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| io_error(path, e))?;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (n, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| io_error(path, e))?;
        let line = rec.position().map_or(n as u64 + 1, |p| p.line());
        let parsed: Option<(f64, f64)> = match (rec.get(0), rec.get(1)) {
            (Some(x), Some(y)) if rec.len() == 2 => x.parse().ok().zip(y.parse().ok()),
            _ => None,
        };
        match parsed {
            Some((x, y)) if x.is_finite() && y.is_finite() => {
                xs.push(x);
                ys.push(y);
            }
            // a header row is allowed before any data
            None if xs.is_empty() && n == 0 => {}
            _ => return Err(RunError::input(format!("{}:{line}: expected two finite numbers x,y", path.display()))),
        }
    }
    if xs.len() < 2 || xs.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(RunError::input(format!(
            "{}: need at least 2 rows with strictly increasing x",
            path.display()
        )));
    }
    if xs[0] > a || xs[xs.len() - 1] < b {
        return Err(RunError::input(format!(
            "{}: table covers [{}, {}] but the interval is [{a}, {b}]",
            path.display(),
            xs[0],
            xs[xs.len() - 1]
        )));
    }
    Ok(Target::Table { path: path.to_path_buf(), xs, ys })
}

/// A validated run.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub target: Target,
    pub nodes: NodeSpec,
    pub alpha: f64,
    pub tau: Option<f64>,
    pub max_iter: Option<usize>,
    pub grid: usize,
    pub out: PathBuf,
    pub freeze_augmented: bool,
    pub seed: u64,
}

impl ExperimentConfig {
    /// Fills defaults and validates every field before anything runs.
    pub fn resolve(algorithm: Algorithm, s: &Settings) -> Result<Self, RunError> {
        let nodes: NodeSpec = s
            .nodes
            .as_deref()
            .unwrap_or("equispaced:300")
            .parse()
            .map_err(|e: EpsError| RunError::input(format!("field 'nodes': {e}")))?;
        let min_nodes = if algorithm.is_greedy() { 4 } else { 2 };
        if nodes.count < min_nodes {
            return Err(RunError::input(format!(
                "field 'nodes': {} needs at least {min_nodes} nodes, got {}",
                algorithm.name(),
                nodes.count
            )));
        }
        let alpha = s.alpha.unwrap_or(2.0);
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(RunError::input(format!("field 'alpha': must be positive and finite, got {alpha}")));
        }
        let tau = if s.no_stop.unwrap_or(false) { None } else { s.tau.or(algorithm.default_tau()) };
        if let Some(t) = tau {
            if !(t.is_finite() && t >= 0.0) {
                return Err(RunError::input(format!("field 'tau': must be nonnegative and finite, got {t}")));
            }
        }
        if let Some(m) = s.max_iter {
            if m == 0 || m > nodes.count {
                return Err(RunError::input(format!(
                    "field 'max-iter': must be in 1..={} (the candidate count), got {m}",
                    nodes.count
                )));
            }
        }
        let grid = s.grid.unwrap_or(crate::interpolate::DEFAULT_GRID);
        if grid < 2 {
            return Err(RunError::input(format!("field 'grid': need at least 2 points, got {grid}")));
        }
        let seed = s.seed.unwrap_or(0);
        let target = Target::parse(
            s.function.as_deref().unwrap_or(algorithm.default_function()),
            alpha,
            seed,
            (nodes.a, nodes.b),
        )?;
        Ok(Self {
            algorithm,
            target,
            nodes,
            alpha,
            tau,
            max_iter: s.max_iter,
            grid,
            out: s.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
            freeze_augmented: s.freeze_augmented.unwrap_or(false),
            seed,
        })
    }

    fn greedy_config(&self) -> GreedyConfig {
        let mut g = GreedyConfig::new(self.alpha, self.tau);
        g.max_iter = self.max_iter;
        g.freeze_augmented = self.freeze_augmented;
        g
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    /// `"ok"` or `"FAILED"`.
    pub status: String,
    pub algorithm: String,
    pub function: Option<String>,
    pub nodes: String,
    pub alpha: f64,
    pub tau: Option<f64>,
    /// Final knot count ñ.
    pub n_selected: usize,
    pub iterations: usize,
    pub stop_reason: Option<StopReason>,
    pub final_criterion: Option<f64>,
    /// Max of `λ` on the evaluation grid.
    pub lebesgue_constant: Option<f64>,
    pub kappa2: Option<f64>,
    pub max_error: Option<f64>,
    pub wall_time_s: f64,
    pub error: Option<String>,
}

impl Summary {
    fn new(cfg: &ExperimentConfig) -> Self {
        Self {
            status: "ok".into(),
            algorithm: cfg.algorithm.name().into(),
            function: cfg.algorithm.is_greedy().then(|| cfg.target.name()),
            nodes: cfg.nodes.to_string(),
            alpha: cfg.alpha,
            tau: cfg.tau,
            n_selected: 0,
            iterations: 0,
            stop_reason: None,
            final_criterion: None,
            lebesgue_constant: None,
            kappa2: None,
            max_error: None,
            wall_time_s: 0.0,
            error: None,
        }
    }
}

pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), RunError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_error(path, e))?;
    w.write_record(header).map_err(|e| io_error(path, e))?;
    for r in rows {
        w.write_record(&r).map_err(|e| io_error(path, e))?;
    }
    w.flush().map_err(|e| io_error(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<(), RunError> {
    std::fs::write(path, text).map_err(|e| io_error(path, e))
}

fn write_points(dir: &Path, name: &str, xs: &[f64]) -> Result<(), RunError> {
    write_csv(&dir.join(name), &["x"], xs.iter().map(|&x| vec![fmt_float(x)]))
}

fn write_xy(dir: &Path, name: &str, header: [&str; 2], xs: &[f64], ys: &[f64]) -> Result<(), RunError> {
    write_csv(&dir.join(name), &header, xs.iter().zip(ys).map(|(&x, &y)| vec![fmt_float(x), fmt_float(y)]))
}

fn write_trace(dir: &Path, trace: &GreedyTrace) -> Result<(), RunError> {
    write_csv(
        &dir.join("trace.csv"),
        &["iter", "selected_x", "criterion", "kappa2", "sparsity"],
        trace.records.iter().map(|r| {
            vec![
                r.iteration.to_string(),
                fmt_float(r.selected_x),
                fmt_float(r.criterion),
                fmt_float(r.kappa2),
                fmt_float(r.sparsity),
            ]
        }),
    )?;
    let pts = |f: fn(&crate::greedy::IterationRecord) -> f64| -> Vec<(f64, f64)> {
        trace.records.iter().map(|r| (r.n_nodes as f64, f(r))).collect()
    };
    let charts = [
        Chart::new("condition number", "nodes", "kappa2").log_y().with(Series::line("kappa2", pts(|r| r.kappa2))),
        Chart::new("criterion", "nodes", "max over candidates")
            .log_y()
            .with(Series::line("criterion", pts(|r| r.criterion))),
        Chart::new("sparsity", "nodes", "zero fraction").with(Series::line("sparsity", pts(|r| r.sparsity))),
    ];
    write_text(&dir.join("plot_trace.svg"), &svg::render(&charts))
}

fn write_summary(dir: &Path, s: &Summary) -> Result<(), RunError> {
    let text = serde_json::to_string_pretty(s).map_err(|e| io_error(&dir.join("summary.json"), e))?;
    write_text(&dir.join("summary.json"), &(text + "\n"))
}

fn write_lebesgue(dir: &Path, grid: &[f64], lambda: &[f64], knots: &[f64]) -> Result<(), RunError> {
    write_xy(dir, "lebesgue.csv", ["x", "lambda"], grid, lambda)?;
    let chart = Chart::new("Lebesgue function", "x", "lambda")
        .with(Series::line("lambda", grid.iter().copied().zip(lambda.iter().copied()).collect()))
        .with(Series::markers("nodes", knots.iter().map(|&x| (x, 1.0)).collect()));
    write_text(&dir.join("plot_lebesgue.svg"), &svg::render(&[chart]))
}

enum Fitted {
    Eps(Collocation, Interpolant),
    Kernel(KernelSystem, KernelInterpolant),
}

impl Fitted {
    fn eval(&self, x: f64) -> Result<f64, RunError> {
        Ok(match self {
            Fitted::Eps(_, i) => i.eval(x)?,
            Fitted::Kernel(_, i) => i.eval(x),
        })
    }

    fn lebesgue(&self, grid: &[f64]) -> Result<Vec<f64>, RunError> {
        Ok(match self {
            Fitted::Eps(c, _) => c.lebesgue_function(grid)?,
            Fitted::Kernel(s, _) => s.lebesgue_function(grid)?,
        })
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Runs one experiment and writes its artifacts into `cfg.out`. On failure
/// the partial trace is flushed and `summary.json` is marked `FAILED`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Summary, RunError> {
    let start = Instant::now();
    let dir = cfg.out.as_path();
    std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let mut summary = Summary::new(cfg);
    let result = match cfg.algorithm {
        Algorithm::Nodes => {
            let xs = cfg.nodes.generate()?;
            summary.n_selected = xs.len();
            return write_points(dir, "nodes.csv", &xs).map(|_| summary);
        }
        Algorithm::Lebesgue => run_lebesgue(cfg, dir, &mut summary),
        _ => run_greedy(cfg, dir, &mut summary),
    };
    summary.wall_time_s = start.elapsed().as_secs_f64();
    if let Err(e) = &result {
        summary.status = "FAILED".into();
        summary.error = Some(e.message.clone());
    }
    write_summary(dir, &summary)?;
    log::info!("{} run in {} finished: {}", cfg.algorithm.name(), dir.display(), summary.status);
    result.map(|_| summary)
}

fn run_lebesgue(cfg: &ExperimentConfig, dir: &Path, summary: &mut Summary) -> Result<(), RunError> {
    let xs = cfg.nodes.generate()?;
    write_points(dir, "selected.csv", &xs)?;
    summary.n_selected = xs.len();
    let colloc = Collocation::new(GbSplineBasis::from_interior(&xs, ExpSpace::new(cfg.alpha)?)?)?;
    summary.kappa2 = Some(cond2(&colloc.matrix().to_dense())?);
    let grid = uniform_grid(cfg.nodes.a, cfg.nodes.b, cfg.grid);
    let lambda = colloc.lebesgue_function(&grid)?;
    summary.lebesgue_constant = Some(max_abs(&lambda));
    write_lebesgue(dir, &grid, &lambda, &xs)
}

fn partial_knots(candidates: &[f64], trace: &GreedyTrace) -> Vec<f64> {
    let mut idx: Vec<usize> = trace.initial_indices.iter().copied().chain(trace.selection_sequence()).collect();
    idx.sort_unstable();
    idx.into_iter().map(|i| candidates[i]).collect()
}

fn run_greedy(cfg: &ExperimentConfig, dir: &Path, summary: &mut Summary) -> Result<(), RunError> {
    let candidates = cfg.nodes.generate()?;
    let values: Vec<f64> = candidates.iter().map(|&x| cfg.target.eval(x)).collect();
    let outcome = match cfg.algorithm {
        Algorithm::Fgreedy => f_greedy(&candidates, &values, &cfg.greedy_config()).map(|o| eps_fitted(o, None)),
        Algorithm::Lgreedy => lambda_greedy(&candidates, &cfg.greedy_config()).map(|o| eps_fitted(o, Some(&values))),
        Algorithm::Kernel => kernel_f_greedy(&candidates, &values, cfg.tau, cfg.max_iter)
            .map(|o| Ok((o.trace, o.knots, Fitted::Kernel(o.system, o.interpolant)))),
        _ => unreachable!("not a greedy algorithm"),
    };
    let (trace, knots, fitted) = match outcome {
        Ok(Ok(v)) => v,
        Ok(Err(e)) => return Err(e),
        Err(GreedyError { source, trace }) => {
            summary.iterations = trace.records.len();
            write_trace(dir, &trace)?;
            let knots = if trace.initial_indices.is_empty() { Vec::new() } else { partial_knots(&candidates, &trace) };
            summary.n_selected = knots.len();
            write_points(dir, "selected.csv", &knots)?;
            return Err(source.into());
        }
    };
    summary.iterations = trace.records.len();
    summary.stop_reason = trace.stop;
    summary.n_selected = knots.len();
    if let Some(f) = &trace.final_state {
        summary.final_criterion = f.criterion;
        summary.kappa2 = Some(f.kappa2);
    }
    write_trace(dir, &trace)?;
    write_points(dir, "selected.csv", &knots)?;

    let grid = uniform_grid(cfg.nodes.a, cfg.nodes.b, cfg.grid);
    let truth: Vec<f64> = grid.iter().map(|&x| cfg.target.eval(x)).collect();
    let err: Vec<f64> =
        grid.iter().zip(&truth).map(|(&x, &t)| fitted.eval(x).map(|v| (t - v).abs())).collect::<Result<_, _>>()?;
    summary.max_error = Some(max_abs(&err));
    write_xy(dir, "error.csv", ["x", "abs_error"], &grid, &err)?;
    let lambda = fitted.lebesgue(&grid)?;
    summary.lebesgue_constant = Some(max_abs(&lambda));
    write_lebesgue(dir, &grid, &lambda, &knots)?;

    let error_chart = Chart::new("absolute error", "x", "|f - I f|")
        .log_y()
        .with(Series::line("error", grid.iter().copied().zip(err.iter().copied()).collect()));
    write_text(&dir.join("plot_error.svg"), &svg::render(&[error_chart]))?;
    let selected_chart = Chart::new("selected nodes", "x", "f(x)")
        .with(Series::line("f", grid.iter().copied().zip(truth.iter().copied()).collect()))
        .with(Series::markers("selected", knots.iter().map(|&x| (x, cfg.target.eval(x))).collect()));
    write_text(&dir.join("plot_selected.svg"), &svg::render(&[selected_chart]))
}

type Fit = Result<(GreedyTrace, Vec<f64>, Fitted), RunError>;

/// λ-greedy carries no interpolant, so the target is fitted on the final knots.
fn eps_fitted(o: GreedyOutcome, values: Option<&[f64]>) -> Fit {
    let interp = match (o.interpolant, values) {
        (Some(i), _) => i,
        (None, Some(v)) => {
            let y: Vec<f64> = o.indices.iter().map(|&i| v[i]).collect();
            o.collocation.fit(&y)?
        }
        (None, None) => unreachable!("f-greedy always returns an interpolant"),
    };
    Ok((o.trace, o.knots, Fitted::Eps(o.collocation, interp)))
}

#[derive(Debug, Parser)]
#[command(name = "eps-greedy", version, about = "Greedy node selection for exponential-polynomial spline interpolation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Residual-based greedy selection (default fn atan55, tau 1e-3)
    Fgreedy(RunArgs),
    /// Lebesgue-function greedy selection (default fn xsq, tau 3)
    Lgreedy(RunArgs),
    /// Residual-based greedy selection with the thin plate spline model
    Kernel(RunArgs),
    /// Lebesgue function of the full node set
    Lebesgue(RunArgs),
    /// Print or write a node set
    Nodes(RunArgs),
    /// Run the full experiment suite into a timestamped directory
    ReproduceAll(ReproduceArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// key=value settings file; flags override it
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// atan55, xsq, inspace or table:PATH
    #[arg(long = "fn", value_name = "NAME")]
    pub function: Option<String>,
    /// Candidate set as kind:count (equispaced, chebyshev, halton)
    #[arg(long, value_name = "KIND:COUNT")]
    pub nodes: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub tau: Option<f64>,
    /// Ignore tau and run until max-iter or exhaustion
    #[arg(long, conflicts_with = "tau")]
    pub no_stop: bool,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Evaluation grid size
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Keep the outer knots of the initial set
    #[arg(long)]
    pub freeze_augmented: bool,
    /// Seed for the inspace target
    #[arg(long)]
    pub seed: Option<u64>,
}

impl RunArgs {
    /// File settings overlaid with the flags given on the command line.
    pub fn settings(&self) -> Result<Settings, RunError> {
        let file = match &self.config {
            Some(p) => Settings::from_file(p)?,
            None => Settings::default(),
        };
        let flags = Settings {
            function: self.function.clone(),
            nodes: self.nodes.clone(),
            alpha: self.alpha,
            tau: self.tau,
            no_stop: self.no_stop.then_some(true),
            max_iter: self.max_iter,
            grid: self.grid,
            out: self.out.clone(),
            freeze_augmented: self.freeze_augmented.then_some(true),
            seed: self.seed,
        };
        Ok(file.overlay(flags))
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct ReproduceArgs {
    /// Parent directory for the timestamped run directory
    #[arg(long, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
}

fn dispatch(cli: Cli) -> Result<(), RunError> {
    let (algorithm, args) = match cli.command {
        Command::Fgreedy(a) => (Algorithm::Fgreedy, a),
        Command::Lgreedy(a) => (Algorithm::Lgreedy, a),
        Command::Kernel(a) => (Algorithm::Kernel, a),
        Command::Lebesgue(a) => (Algorithm::Lebesgue, a),
        Command::Nodes(a) => (Algorithm::Nodes, a),
        Command::ReproduceAll(r) => {
            let dir = reproduce::reproduce_all(&r.out)?;
            println!("{}", dir.display());
            return Ok(());
        }
    };
    let settings = args.settings()?;
    let cfg = ExperimentConfig::resolve(algorithm, &settings)?;
    if algorithm == Algorithm::Nodes && settings.out.is_none() {
        for x in cfg.nodes.generate()? {
            println!("{}", fmt_float(x));
        }
        return Ok(());
    }
    let s = run_experiment(&cfg)?;
    println!(
        "{}: {} nodes, {} iterations, Lebesgue constant {}, output in {}",
        s.algorithm,
        s.n_selected,
        s.iterations,
        s.lebesgue_constant.map_or("-".into(), |v| format!("{v:.4}")),
        cfg.out.display()
    );
    Ok(())
}

/// Parses `args` and runs; returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
