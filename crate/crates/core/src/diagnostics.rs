//! Conditioning and error diagnostics for collocation systems.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::banded::BandedMatrix;
use crate::error::{invalid, Result};
use crate::interpolate::{uniform_grid, Collocation, Interpolant};

/// Entries with magnitude at or below this count as zero for [`sparsity`].
pub const ZERO_TOL: f64 = 1e-14;

fn require_square(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() || m.is_empty() {
        return invalid(format!("expected a non-empty square matrix, got {}x{}", m.nrows(), m.ncols()));
    }
    Ok(())
}

/// Spectral condition number `σ_max / σ_min`; `+∞` when singular to
/// working precision.
pub fn cond2(m: &DMatrix<f64>) -> Result<f64> {
    require_square(m)?;
    let sv = m.clone().svd(false, false).singular_values;
    let (max, min) = (sv.max(), sv.min());
    if !(min > max * f64::EPSILON) {
        return Ok(f64::INFINITY);
    }
    Ok(max / min)
}

fn norm_inf(m: &DMatrix<f64>) -> f64 {
    m.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// `‖A‖_∞ ‖A⁻¹‖_∞`.
pub fn cond_inf(m: &DMatrix<f64>) -> Result<f64> {
    require_square(m)?;
    Ok(match m.clone().try_inverse() {
        Some(inv) => norm_inf(m) * norm_inf(&inv),
        None => f64::INFINITY,
    })
}

/// Skeel condition number `‖ |A⁻¹|·|A| ‖_∞`; `+∞` when singular.
pub fn skeel_condition(m: &DMatrix<f64>) -> Result<f64> {
    require_square(m)?;
    let Some(inv) = m.clone().try_inverse() else {
        return Ok(f64::INFINITY);
    };
    if !inv.iter().all(|v| v.is_finite()) {
        return Ok(f64::INFINITY);
    }
    let prod = inv.abs() * m.abs();
    Ok(norm_inf(&prod))
}

/// Fraction of entries with `|a_ij| ≤ 1e-14`.
pub fn sparsity(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.iter().filter(|v| v.abs() <= ZERO_TOL).count() as f64 / m.len() as f64
}

/// [`sparsity`] of the full matrix represented by a band matrix.
pub fn sparsity_banded(m: &BandedMatrix) -> f64 {
    let n = m.order();
    if n == 0 {
        return 0.0;
    }
    let (kl, ku) = (m.lower_bandwidth(), m.upper_bandwidth());
    let nonzero = (0..n)
        .flat_map(|i| (i.saturating_sub(kl)..(i + ku + 1).min(n)).map(move |j| (i, j)))
        .filter(|&(i, j)| m.get(i, j).abs() > ZERO_TOL)
        .count();
    (n * n - nonzero) as f64 / (n * n) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub kappa2: f64,
    pub skeel: f64,
    pub sparsity: f64,
    pub lebesgue_constant: f64,
}

impl DiagnosticsReport {
    pub fn for_collocation(c: &Collocation, grid: &[f64]) -> Result<Self> {
        let dense = c.matrix().to_dense();
        Ok(Self {
            kappa2: cond2(&dense)?,
            skeel: skeel_condition(&dense)?,
            sparsity: sparsity_banded(c.matrix()),
            lebesgue_constant: c.lebesgue_constant(grid)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundStatus {
    Holds,
    Violated,
    /// The best-approximation proxy did not converge and the check failed.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorBoundReport {
    pub status: BoundStatus,
    /// `max_x |f(x) − I(x)| / ((1 + λ(x))·proxy)` over the check grid.
    pub worst_ratio: f64,
    /// Lower bound on the discrete best-approximation error.
    pub proxy: f64,
    /// Upper bound from the best iterate of the proxy solver.
    pub proxy_upper: f64,
    pub max_error: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl ErrorBoundReport {
    pub fn holds(&self) -> bool {
        self.status == BoundStatus::Holds
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheckOptions {
    /// Uniform points used for the minimax proxy fit (at least 2000); the
    /// knots and interval midpoints are always added.
    pub proxy_grid: usize,
    pub max_iter: usize,
    /// Stop once `(upper − lower) ≤ gap_tol · upper`.
    pub gap_tol: f64,
    /// Absolute roundoff allowance, relative to `max(1, ‖f‖_∞)`.
    pub abs_tol: f64,
}

impl Default for BoundCheckOptions {
    fn default() -> Self {
        Self { proxy_grid: 2000, max_iter: 5000, gap_tol: 1e-3, abs_tol: 1e-9 }
    }
}

/// Checks `|f(x) − I(x)| ≤ (1 + λ(x))·‖f − f*‖_∞ · (1 + slack)` on `grid`,
/// with `‖f − f*‖_∞` replaced by a discrete minimax proxy.
pub fn check_error_bound(
    f: &dyn Fn(f64) -> f64,
    interp: &Interpolant,
    grid: &[f64],
    slack: f64,
) -> Result<ErrorBoundReport> {
    check_error_bound_with(f, interp, grid, slack, &BoundCheckOptions::default())
}

pub fn check_error_bound_with(
    f: &dyn Fn(f64) -> f64,
    interp: &Interpolant,
    grid: &[f64],
    slack: f64,
    opts: &BoundCheckOptions,
) -> Result<ErrorBoundReport> {
    if !(slack >= 0.0) {
        return invalid(format!("slack must be nonnegative, got {slack}"));
    }
    if grid.is_empty() {
        return invalid("error bound check needs a non-empty grid");
    }
    let (a, b) = interp.domain();
    // knots and interval midpoints keep every basis function visible when
    // knots cluster more tightly than the uniform points
    let knots = interp.knots();
    let mut proxy_points = uniform_grid(a, b, opts.proxy_grid.max(2000));
    proxy_points.extend(knots);
    proxy_points.extend(knots.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    proxy_points.sort_by(f64::total_cmp);
    proxy_points.dedup();
    let values: Vec<f64> = proxy_points.iter().map(|&x| f(x)).collect();
    let fmax = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let floor = opts.abs_tol * fmax;
    let minimax = lawson_minimax(interp, &proxy_points, &values, floor, opts)?;

    let collocation = Collocation::new(interp.basis().clone())?;
    let lambda = collocation.lebesgue_function(grid)?;
    let mut holds = true;
    let mut worst = 0.0f64;
    let mut max_error = 0.0f64;
    for (&x, lam) in grid.iter().zip(&lambda) {
        let err = (f(x) - interp.eval(x)?).abs();
        max_error = max_error.max(err);
        let rhs = (1.0 + lam) * minimax.lower;
        if err > rhs * (1.0 + slack) + floor {
            holds = false;
        }
        let ratio = if err <= floor {
            0.0
        } else if rhs > 0.0 {
            err / rhs
        } else {
            f64::INFINITY
        };
        worst = worst.max(ratio);
    }
    let status = if holds {
        BoundStatus::Holds
    } else if minimax.converged {
        BoundStatus::Violated
    } else {
        BoundStatus::Inconclusive
    };
    Ok(ErrorBoundReport {
        status,
        worst_ratio: worst,
        proxy: minimax.lower,
        proxy_upper: minimax.upper,
        max_error,
        iterations: minimax.iterations,
        converged: minimax.converged,
    })
}

struct Minimax {
    lower: f64,
    upper: f64,
    iterations: usize,
    converged: bool,
}

/// Lawson's reweighted least squares toward the discrete ∞-norm fit from
/// the interpolant's spline space.
///
/// For any probability weights `w`, `min_c (Σ w r²)^{1/2}` is a lower bound
/// on the discrete minimax error and `max |r|` of any iterate an upper
/// bound, so both bounds hold at every iteration.
fn lawson_minimax(
    interp: &Interpolant,
    points: &[f64],
    values: &[f64],
    floor: f64,
    opts: &BoundCheckOptions,
) -> Result<Minimax> {
    const BAND: usize = 3;
    let basis = interp.basis();
    let n = basis.len();
    let m = points.len();
    let rows: Vec<_> = points.iter().map(|&x| basis.nonzero_at(x, 0)).collect();
    let mut w = vec![1.0 / m as f64; m];
    let mut lower = 0.0f64;
    let mut upper = f64::INFINITY;
    let mut residual = vec![0.0; m];

    for iter in 1..=opts.max_iter {
        let mut normal = BandedMatrix::zeros(n, BAND, BAND);
        let mut rhs = vec![0.0; n];
        for (k, row) in rows.iter().enumerate() {
            for (j, vj) in row.iter() {
                rhs[j] += w[k] * vj * values[k];
                for (l, vl) in row.iter() {
                    let cur = normal.get(j, l);
                    normal.set(j, l, cur + w[k] * vj * vl)?;
                }
            }
        }
        let c = normal.factorize()?.solve(&rhs);
        let mut weighted = 0.0;
        let mut max_abs = 0.0f64;
        for (k, row) in rows.iter().enumerate() {
            let approx: f64 = row.iter().map(|(j, v)| c[j] * v).sum();
            residual[k] = values[k] - approx;
            weighted += w[k] * residual[k] * residual[k];
            max_abs = max_abs.max(residual[k].abs());
        }
        lower = lower.max(weighted.sqrt());
        upper = upper.min(max_abs);
        if upper <= floor || upper - lower <= opts.gap_tol * upper {
            return Ok(Minimax { lower, upper, iterations: iter, converged: true });
        }
        let mut total = 0.0;
        for k in 0..m {
            w[k] *= residual[k].abs();
            total += w[k];
        }
        let wmax = w.iter().fold(0.0f64, |a, &b| a.max(b / total));
        for wk in &mut w {
            *wk = (*wk / total).max(1e-10 * wmax);
        }
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|wk| *wk /= total);
    }
    Ok(Minimax { lower, upper, iterations: opts.max_iter, converged: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exp_space::ExpSpace;
    use crate::gb_spline::GbSplineBasis;
    use crate::nodes::{NodeKind, NodeSpec};
    use nalgebra::{DVector, Rotation2};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_and_diagonal_units() {
        let i5 = DMatrix::<f64>::identity(5, 5);
        assert_eq!(cond2(&i5).unwrap(), 1.0);
        assert_eq!(skeel_condition(&i5).unwrap(), 1.0);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 10.0]));
        assert!((cond2(&d).unwrap() - 10.0).abs() < 1e-12);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, -0.25, 1e4]));
        assert!((skeel_condition(&d).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sparsity_counts() {
        assert!((sparsity(&DMatrix::<f64>::identity(3, 3)) - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(sparsity(&DMatrix::from_element(2, 2, 1.0)), 0.0);
        let mut b = BandedMatrix::zeros(3, 2, 2);
        for i in 0..3 {
            b.set(i, i, 1.0).unwrap();
        }
        assert_eq!(sparsity_banded(&b), sparsity(&b.to_dense()));
    }

    #[test]
    fn singular_matrices_report_infinity() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert_eq!(cond2(&m).unwrap(), f64::INFINITY);
        assert_eq!(skeel_condition(&m).unwrap(), f64::INFINITY);
        assert!(cond2(&DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn collocation_sparsity_bound() {
        let xs = NodeSpec::unit(NodeKind::Equispaced, 100).generate().unwrap();
        let basis = GbSplineBasis::from_interior(&xs, ExpSpace::new(2.0).unwrap()).unwrap();
        let c = Collocation::new(basis).unwrap();
        let n = 100.0;
        assert!(sparsity_banded(c.matrix()) >= (n * n - 5.0 * n) / (n * n));
    }

    proptest! {
        #[test]
        fn orthogonal_matrices_have_unit_condition(theta in 0.0f64..6.3) {
            let r = Rotation2::new(theta);
            let m = DMatrix::from_column_slice(2, 2, r.matrix().as_slice());
            prop_assert!((cond2(&m).unwrap() - 1.0).abs() < 1e-10);
        }

        #[test]
        fn skeel_is_row_scaling_invariant_and_below_cond_inf(
            seed in any::<u64>(),
            n in 2usize..8,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = DMatrix::from_fn(n, n, |i, j| rng.gen_range(-1.0..1.0) + if i == j { 2.0 } else { 0.0 });
            let d: Vec<f64> = (0..n).map(|_| 10f64.powf(rng.gen_range(-3.0..3.0))).collect();
            let scaled = DMatrix::from_fn(n, n, |i, j| d[i] * m[(i, j)]);
            let s = skeel_condition(&m).unwrap();
            prop_assert!((skeel_condition(&scaled).unwrap() - s).abs() <= 1e-8 * s);
            prop_assert!(s <= cond_inf(&m).unwrap() * (1.0 + 1e-12));
            prop_assert!(s >= 1.0 - 1e-12);
        }
    }

    fn basis(n: usize) -> GbSplineBasis {
        let xs = NodeSpec::unit(NodeKind::Equispaced, n).generate().unwrap();
        GbSplineBasis::from_interior(&xs, ExpSpace::new(2.0).unwrap()).unwrap()
    }

    #[test]
    fn bound_holds_trivially_in_space() {
        let b = basis(9);
        let truth = Interpolant::from_coefficients(b.clone(), vec![0.3, -1.0, 0.5, 0.2, 0.9, -0.4, 0.1, 0.7, -0.6]).unwrap();
        let c = Collocation::new(b).unwrap();
        let interp = c.fit(truth.data()).unwrap();
        let f = |x: f64| truth.eval(x).unwrap();
        let grid = uniform_grid(-1.0, 1.0, 400);
        let r = check_error_bound(&f, &interp, &grid, 0.05).unwrap();
        assert!(r.holds(), "{r:?}");
        assert!(r.max_error <= 1e-7);
        assert!(r.proxy <= 1e-9);
    }

    #[test]
    fn bound_holds_for_smooth_target() {
        let b = basis(12);
        let f = |x: f64| (3.0 * x).sin() + x * x;
        let y: Vec<f64> = b.knots().interior().iter().map(|&x| f(x)).collect();
        let interp = Collocation::new(b).unwrap().fit(&y).unwrap();
        let r = check_error_bound(&f, &interp, &uniform_grid(-1.0, 1.0, 400), 0.05).unwrap();
        assert!(r.converged);
        assert!(r.holds(), "{r:?}");
        assert!(r.proxy > 0.0 && r.proxy <= r.proxy_upper);
        // interpolation error can not beat the best approximation
        assert!(r.max_error >= r.proxy * 0.999);
    }

    #[test]
    fn clustered_knots_keep_the_proxy_system_nonsingular() {
        // gaps of ~5e-5 at the ends leave some basis functions without any
        // uniform proxy point in their support
        let cheb = NodeSpec::unit(NodeKind::Chebyshev, 300).generate().unwrap();
        let idx = [0, 1, 2, 3, 4, 40, 150, 260, 295, 296, 297, 298, 299];
        let xs: Vec<f64> = idx.iter().map(|&i| cheb[i]).collect();
        let b = GbSplineBasis::from_interior(&xs, ExpSpace::new(2.0).unwrap()).unwrap();
        let f = |x: f64| x * x;
        let interp = Collocation::new(b).unwrap().fit(&xs.iter().map(|&x| f(x)).collect::<Vec<_>>()).unwrap();
        let r = check_error_bound(&f, &interp, &uniform_grid(-1.0, 1.0, 400), 0.05).unwrap();
        assert!(r.holds(), "{r:?}");
    }

    #[test]
    fn checker_detects_an_inflated_error() {
        // perturbing the interpolant far beyond the bound must be reported
        let b = basis(10);
        let f = |x: f64| x * x;
        let y: Vec<f64> = b.knots().interior().iter().map(|&x| f(x) + 0.5).collect();
        let interp = Collocation::new(b).unwrap().fit(&y).unwrap();
        let r = check_error_bound(&f, &interp, &uniform_grid(-1.0, 1.0, 400), 0.05).unwrap();
        assert!(!r.holds());
        assert!(r.worst_ratio > 1.0);
    }
}
