//! Greedy node selection: residual-based (f-greedy) and Lebesgue-function
//! based (λ-greedy).
//!
//! Both loops start from an initial subset of the candidates, rebuild the
//! basis on the current knots every iteration, score every remaining
//! candidate and insert the best one. Scores are computed in parallel and
//! reduced in candidate order, so ties go to the smallest index and runs
//! are reproducible.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::diagnostics::{cond2, sparsity_banded};
use crate::error::{EpsError, Result};
use crate::exp_space::ExpSpace;
use crate::gb_spline::{AugmentedKnots, GbSplineBasis};
use crate::interpolate::{Collocation, Interpolant};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum InitRule {
    /// The two smallest and two largest candidates.
    #[default]
    Extremes,
    /// Explicit candidate indices; must include the first and the last.
    Indices(Vec<usize>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StagnationMetric {
    Lebesgue,
    Kappa2,
}

/// Stop once the metric's relative change between consecutive iterations
/// stays below `threshold` for `window` iterations in a row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stagnation {
    pub window: usize,
    pub threshold: f64,
    pub metric: StagnationMetric,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreedyConfig {
    pub alpha: f64,
    /// `None` runs until `max_iter` or until no candidates are left.
    pub tau: Option<f64>,
    /// Maximum number of insertions; `None` means the candidate count.
    pub max_iter: Option<usize>,
    pub init: InitRule,
    pub stagnation: Option<Stagnation>,
    /// Keep the outer knots computed from the initial set instead of
    /// re-mirroring them from the current knots.
    pub freeze_augmented: bool,
}

impl GreedyConfig {
    pub fn new(alpha: f64, tau: Option<f64>) -> Self {
        Self { alpha, tau, max_iter: None, init: InitRule::Extremes, stagnation: None, freeze_augmented: false }
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = Some(max_iter);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StopReason {
    Tolerance,
    MaxIter,
    Exhausted,
    Stagnation,
}

/// State of one greedy iteration, recorded before the insertion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Knots in the model that was scored.
    pub n_nodes: usize,
    /// Max residual (f-greedy) or max `λ` over the remaining candidates.
    pub criterion: f64,
    pub kappa2: f64,
    pub sparsity: f64,
    pub selected_index: usize,
    pub selected_x: f64,
}

/// The scored state the loop stopped on.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FinalState {
    pub n_nodes: usize,
    /// `None` when no candidates were left to score.
    pub criterion: Option<f64>,
    pub kappa2: f64,
    pub sparsity: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct GreedyTrace {
    pub initial_indices: Vec<usize>,
    pub records: Vec<IterationRecord>,
    pub final_state: Option<FinalState>,
    pub stop: Option<StopReason>,
}

impl GreedyTrace {
    /// Candidate indices in insertion order.
    pub fn selection_sequence(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.selected_index).collect()
    }

    pub fn criteria(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.criterion).collect()
    }
}

#[derive(Debug, Clone, Error)]
#[error("greedy selection failed after {} iterations: {source}", .trace.records.len())]
pub struct GreedyError {
    #[source]
    pub source: EpsError,
    pub trace: GreedyTrace,
}

#[derive(Debug, Clone)]
pub struct GreedyOutcome {
    /// Selected candidate indices, ascending.
    pub indices: Vec<usize>,
    /// Selected points, ascending.
    pub knots: Vec<f64>,
    pub trace: GreedyTrace,
    /// Collocation system on the final knots.
    pub collocation: Collocation,
    /// Final interpolant (f-greedy only).
    pub interpolant: Option<Interpolant>,
}

pub type GreedyResult = std::result::Result<GreedyOutcome, GreedyError>;

/// Residual-based selection: insert `argmax |f(x) − I(x)|` over the
/// remaining candidates until the maximum is at most `tau`.
pub fn f_greedy(candidates: &[f64], values: &[f64], config: &GreedyConfig) -> GreedyResult {
    let fail = |source| GreedyError { source, trace: GreedyTrace::default() };
    if values.len() != candidates.len() {
        return Err(fail(EpsError::InvalidInput(format!(
            "{} values for {} candidates",
            values.len(),
            candidates.len()
        ))));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(fail(EpsError::InvalidInput(format!("value at candidate {i} is not finite"))));
    }
    let mut outcome = run(candidates, config, |colloc, selected, remaining| {
        let y: Vec<f64> = selected.iter().map(|&i| values[i]).collect();
        let interp = colloc.fit(&y)?;
        remaining
            .par_iter()
            .map(|&i| interp.eval(candidates[i]).map(|v| (values[i] - v).abs()))
            .collect()
    })?;
    let y: Vec<f64> = outcome.indices.iter().map(|&i| values[i]).collect();
    let interp = outcome
        .collocation
        .fit(&y)
        .map_err(|source| GreedyError { source, trace: outcome.trace.clone() })?;
    outcome.interpolant = Some(interp);
    Ok(outcome)
}

/// Lebesgue-function selection: insert `argmax λ(x)` over the remaining
/// candidates until the maximum is at most `tau`. Uses no function values.
pub fn lambda_greedy(candidates: &[f64], config: &GreedyConfig) -> GreedyResult {
    run(candidates, config, |colloc, _, remaining| {
        remaining.par_iter().map(|&i| colloc.lebesgue_at(candidates[i])).collect()
    })
}

pub(crate) fn validate_candidates(candidates: &[f64]) -> Result<()> {
    if candidates.iter().any(|x| !x.is_finite()) || candidates.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(EpsError::InvalidInput("candidates must be finite and strictly increasing".into()));
    }
    Ok(())
}

pub(crate) fn initial_indices(n: usize, rule: &InitRule) -> Result<Vec<usize>> {
    let mut idx = match rule {
        InitRule::Extremes => {
            if n < 4 {
                return Err(EpsError::InvalidInput(format!(
                    "the default initial rule needs at least 4 candidates, got {n}"
                )));
            }
            vec![0, 1, n - 2, n - 1]
        }
        InitRule::Indices(v) => {
            let set: BTreeSet<usize> = v.iter().copied().collect();
            if set.len() < 2 || set.len() != v.len() {
                return Err(EpsError::InvalidInput("initial indices must be at least 2 distinct values".into()));
            }
            if !set.contains(&0) || !set.contains(&(n - 1)) || set.iter().any(|&i| i >= n) {
                return Err(EpsError::InvalidInput(
                    "initial indices must lie in range and include the first and last candidate".into(),
                ));
            }
            set.into_iter().collect()
        }
    };
    idx.sort_unstable();
    Ok(idx)
}

/// Argmax with ties resolved to the earliest position.
pub(crate) fn argmax(scores: &[f64]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (k, &s) in scores.iter().enumerate() {
        match best {
            Some((_, b)) if s <= b => {}
            _ => best = Some((k, s)),
        }
    }
    best
}

pub(crate) fn stagnated(history: &[f64], stagnation: &Stagnation) -> bool {
    let w = stagnation.window;
    if w == 0 || history.len() < w + 1 {
        return false;
    }
    history[history.len() - w - 1..]
        .windows(2)
        .all(|p| (p[1] - p[0]).abs() < stagnation.threshold * p[0].abs())
}

fn run<S>(candidates: &[f64], config: &GreedyConfig, score: S) -> GreedyResult
where
    S: Fn(&Collocation, &[usize], &[usize]) -> Result<Vec<f64>>,
{
    let mut trace = GreedyTrace::default();
    macro_rules! bail {
        ($e:expr) => {
            match $e {
                Ok(v) => v,
                Err(source) => return Err(GreedyError { source, trace }),
            }
        };
    }
    bail!(validate_candidates(candidates));
    let space = bail!(ExpSpace::new(config.alpha));
    if let Some(tau) = config.tau {
        if !(tau >= 0.0) {
            bail!(Err(EpsError::InvalidInput(format!("tau must be nonnegative, got {tau}"))));
        }
    }
    let max_iter = config.max_iter.unwrap_or(candidates.len());
    if max_iter == 0 || max_iter > candidates.len() {
        bail!(Err(EpsError::InvalidInput(format!(
            "max_iter must be in 1..={}, got {max_iter}",
            candidates.len()
        ))));
    }
    let init = bail!(initial_indices(candidates.len(), &config.init));
    trace.initial_indices = init.clone();
    let frozen = if config.freeze_augmented {
        let xs: Vec<f64> = init.iter().map(|&i| candidates[i]).collect();
        let k = bail!(AugmentedKnots::new(&xs));
        Some((k.outer_left(), k.outer_right()))
    } else {
        None
    };

    let mut selected: BTreeSet<usize> = init.into_iter().collect();
    let mut metric_history: Vec<f64> = Vec::new();
    loop {
        let sel: Vec<usize> = selected.iter().copied().collect();
        let knots: Vec<f64> = sel.iter().map(|&i| candidates[i]).collect();
        let augmented = match frozen {
            Some((l, r)) => bail!(AugmentedKnots::with_outer(&knots, l, r)),
            None => bail!(AugmentedKnots::new(&knots)),
        };
        let basis = bail!(GbSplineBasis::build(augmented, space));
        let colloc = bail!(Collocation::new(basis));
        let kappa2 = bail!(cond2(&colloc.matrix().to_dense()));
        let sparsity = sparsity_banded(colloc.matrix());
        let remaining: Vec<usize> = (0..candidates.len()).filter(|i| !selected.contains(i)).collect();
        let scores = bail!(score(&colloc, &sel, &remaining));
        if let Some(k) = scores.iter().position(|s| !s.is_finite()) {
            bail!(Err(EpsError::SingularSystem(format!(
                "non-finite score at candidate {}",
                remaining[k]
            ))));
        }
        let best = argmax(&scores);
        let criterion = best.map(|(_, s)| s);
        let metric = match config.stagnation.map(|s| s.metric) {
            Some(StagnationMetric::Kappa2) => kappa2,
            _ => criterion.unwrap_or(f64::NAN),
        };
        metric_history.push(metric);

        let stop = match best {
            None => Some(StopReason::Exhausted),
            Some((_, s)) if config.tau.is_some_and(|t| s <= t) => Some(StopReason::Tolerance),
            _ if trace.records.len() >= max_iter => Some(StopReason::MaxIter),
            _ if config.stagnation.is_some_and(|s| stagnated(&metric_history, &s)) => Some(StopReason::Stagnation),
            _ => None,
        };
        if let Some(reason) = stop {
            trace.final_state = Some(FinalState { n_nodes: sel.len(), criterion, kappa2, sparsity });
            trace.stop = Some(reason);
            return Ok(GreedyOutcome { indices: sel, knots, trace, collocation: colloc, interpolant: None });
        }
        let (k, s) = best.expect("checked above");
        let idx = remaining[k];
        trace.records.push(IterationRecord {
            iteration: trace.records.len() + 1,
            n_nodes: sel.len(),
            criterion: s,
            kappa2,
            sparsity,
            selected_index: idx,
            selected_x: candidates[idx],
        });
        selected.insert(idx);
    }
}
