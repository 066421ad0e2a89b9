//! Thin plate spline baseline: `φ(r) = r² log r` with a linear tail,
//! fitted through the dense saddle-point system
//!
//! ```text
//! [ A  P ] [c]   [y]
//! [ Pᵀ 0 ] [d] = [0]
//! ```
//!
//! with `A_ij = φ(|x_i − x_j|)` and `P = [1 x]`.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector, LU};
use rayon::prelude::*;

use crate::diagnostics::{cond2, sparsity};
use crate::error::{invalid, EpsError, Result};
use crate::greedy::{
    argmax, initial_indices, validate_candidates, FinalState, GreedyError, GreedyTrace, InitRule, IterationRecord,
    StopReason,
};

/// `r² log r`, continuously extended by 0 at `r = 0`.
pub fn tps(r: f64) -> f64 {
    if r == 0.0 {
        0.0
    } else {
        r * r * r.ln()
    }
}

#[derive(Debug, Clone)]
pub struct KernelSystem {
    centers: Vec<f64>,
    matrix: DMatrix<f64>,
    lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl KernelSystem {
    /// Needs at least two distinct centers so the linear tail is determined.
    pub fn new(centers: &[f64]) -> Result<Self> {
        let n = centers.len();
        if n < 2 {
            return invalid(format!("thin plate spline needs at least 2 centers, got {n}"));
        }
        validate_candidates(centers)?;
        let m = DMatrix::from_fn(n + 2, n + 2, |i, j| match (i < n, j < n) {
            (true, true) => tps((centers[i] - centers[j]).abs()),
            (true, false) => tail(centers[i], j - n),
            (false, true) => tail(centers[j], i - n),
            (false, false) => 0.0,
        });
        let lu = m.clone().lu();
        let probe = lu.solve(&DVector::from_element(n + 2, 1.0));
        if probe.as_ref().map_or(true, |v| v.iter().any(|x| !x.is_finite())) {
            return Err(EpsError::SingularSystem("thin plate spline system is singular".into()));
        }
        Ok(Self { centers: centers.to_vec(), matrix: m, lu })
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    /// The `(n + 2) × (n + 2)` saddle matrix.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    fn solve(&self, rhs: DVector<f64>) -> Result<DVector<f64>> {
        self.lu
            .solve(&rhs)
            .filter(|v| v.iter().all(|x| x.is_finite()))
            .ok_or_else(|| EpsError::SingularSystem("thin plate spline solve failed".into()))
    }

    pub fn fit(&self, y: &[f64]) -> Result<KernelInterpolant> {
        let n = self.centers.len();
        if y.len() != n {
            return invalid(format!("{} values for {n} centers", y.len()));
        }
        let mut rhs = DVector::zeros(n + 2);
        rhs.rows_mut(0, n).copy_from_slice(y);
        let sol = self.solve(rhs)?;
        Ok(KernelInterpolant {
            centers: self.centers.clone(),
            weights: sol.rows(0, n).iter().copied().collect(),
            tail: [sol[n], sol[n + 1]],
        })
    }

    /// Cardinal function values `u_j(x)`, from the system with right-hand
    /// side `[φ(|x − x_i|); 1; x]`.
    pub fn cardinal_values(&self, x: f64) -> Result<Vec<f64>> {
        let n = self.centers.len();
        let rhs = DVector::from_fn(n + 2, |i, _| if i < n { tps((x - self.centers[i]).abs()) } else { tail(x, i - n) });
        let sol = self.solve(rhs)?;
        Ok(sol.rows(0, n).iter().copied().collect())
    }

    pub fn lebesgue_at(&self, x: f64) -> Result<f64> {
        Ok(self.cardinal_values(x)?.iter().map(|u| u.abs()).sum())
    }

    pub fn lebesgue_function(&self, grid: &[f64]) -> Result<Vec<f64>> {
        grid.par_iter().map(|&x| self.lebesgue_at(x)).collect()
    }
}

fn tail(x: f64, k: usize) -> f64 {
    if k == 0 {
        1.0
    } else {
        x
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelInterpolant {
    centers: Vec<f64>,
    weights: Vec<f64>,
    tail: [f64; 2],
}

impl KernelInterpolant {
    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Constant and linear coefficients of the tail.
    pub fn tail(&self) -> [f64; 2] {
        self.tail
    }

    pub fn eval(&self, x: f64) -> f64 {
        let s: f64 = self.centers.iter().zip(&self.weights).map(|(&c, &w)| w * tps((x - c).abs())).sum();
        s + self.tail[0] + self.tail[1] * x
    }
}

pub fn tps_fit(centers: &[f64], y: &[f64]) -> Result<KernelInterpolant> {
    KernelSystem::new(centers)?.fit(y)
}

#[derive(Debug, Clone)]
pub struct KernelOutcome {
    pub indices: Vec<usize>,
    pub knots: Vec<f64>,
    pub trace: GreedyTrace,
    pub system: KernelSystem,
    pub interpolant: KernelInterpolant,
}

/// Residual-based selection with the kernel model. Same initial rule,
/// stopping rules and tie-break as [`crate::greedy::f_greedy`]; the trace
/// records `κ₂` and sparsity of the saddle matrix.
pub fn kernel_f_greedy(
    candidates: &[f64],
    values: &[f64],
    tau: Option<f64>,
    max_iter: Option<usize>,
) -> std::result::Result<KernelOutcome, GreedyError> {
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
    if values.len() != candidates.len() || values.iter().any(|v| !v.is_finite()) {
        bail!(invalid::<()>(format!(
            "need {} finite values, got {}",
            candidates.len(),
            values.len()
        )));
    }
    if tau.is_some_and(|t| !(t >= 0.0)) {
        bail!(invalid::<()>("tau must be nonnegative"));
    }
    let max_iter = max_iter.unwrap_or(candidates.len());
    if max_iter == 0 || max_iter > candidates.len() {
        bail!(invalid::<()>(format!("max_iter must be in 1..={}, got {max_iter}", candidates.len())));
    }
    let init = bail!(initial_indices(candidates.len(), &InitRule::Extremes));
    trace.initial_indices = init.clone();
    let mut selected: BTreeSet<usize> = init.into_iter().collect();
    loop {
        let sel: Vec<usize> = selected.iter().copied().collect();
        let knots: Vec<f64> = sel.iter().map(|&i| candidates[i]).collect();
        let system = bail!(KernelSystem::new(&knots));
        let y: Vec<f64> = sel.iter().map(|&i| values[i]).collect();
        let interp = bail!(system.fit(&y));
        let kappa2 = bail!(cond2(system.matrix()));
        let sp = sparsity(system.matrix());
        let remaining: Vec<usize> = (0..candidates.len()).filter(|i| !selected.contains(i)).collect();
        let scores: Vec<f64> = remaining.par_iter().map(|&i| (values[i] - interp.eval(candidates[i])).abs()).collect();
        let best = argmax(&scores);
        let stop = match best {
            None => Some(StopReason::Exhausted),
            Some((_, s)) if tau.is_some_and(|t| s <= t) => Some(StopReason::Tolerance),
            _ if trace.records.len() >= max_iter => Some(StopReason::MaxIter),
            _ => None,
        };
        if let Some(reason) = stop {
            trace.final_state =
                Some(FinalState { n_nodes: sel.len(), criterion: best.map(|(_, s)| s), kappa2, sparsity: sp });
            trace.stop = Some(reason);
            return Ok(KernelOutcome { indices: sel, knots, trace, system, interpolant: interp });
        }
        let (k, s) = best.expect("checked above");
        let idx = remaining[k];
        trace.records.push(IterationRecord {
            iteration: trace.records.len() + 1,
            n_nodes: sel.len(),
            criterion: s,
            kappa2,
            sparsity: sp,
            selected_index: idx,
            selected_x: candidates[idx],
        });
        selected.insert(idx);
    }
}
