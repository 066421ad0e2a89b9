//! Collocation system `Φ c = y`, the interpolant, its cardinal (Lagrange)
//! basis and the Lebesgue function.
//!
//! `Φ` is factorized once per knot set; fits, cardinal values and Lebesgue
//! evaluations all reuse the factorization. The cardinal values at `x` are
//! `ψ(x) = Φ⁻ᵀ φ(x)`, where `φ(x)` has at most four nonzeros, so every grid
//! point costs one banded transposed solve.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::banded::{BandedLu, BandedMatrix};
use crate::error::{invalid, EpsError, Result};
use crate::gb_spline::GbSplineBasis;

/// Default number of equispaced points used to sample `λ` on `[a, b]`.
pub const DEFAULT_GRID: usize = 400;

/// Largest order accepted by the dense oracle path.
pub const MAX_DENSE_ORDER: usize = 2000;

/// Bandwidth stored for `Φ`. Only the first off-diagonals are nonzero for
/// this basis; the second pair is kept and checked.
pub const COLLOCATION_BANDWIDTH: usize = 2;

/// `m` equispaced points on `[a, b]` with exact endpoints.
pub fn uniform_grid(a: f64, b: f64, m: usize) -> Vec<f64> {
    match m {
        0 => Vec::new(),
        1 => vec![a],
        _ => {
            let mut g: Vec<f64> = (0..m).map(|k| a + (b - a) * (k as f64 / (m - 1) as f64)).collect();
            g[m - 1] = b;
            g
        }
    }
}

/// `Φ_ij = φ_j(x_i)` over the interior knots, in band storage.
pub fn collocation_matrix(basis: &GbSplineBasis) -> BandedMatrix {
    let n = basis.len();
    let xs = basis.knots().interior();
    let mut m = BandedMatrix::zeros(n, COLLOCATION_BANDWIDTH, COLLOCATION_BANDWIDTH);
    for (i, &x) in xs.iter().enumerate() {
        let lo = i.saturating_sub(COLLOCATION_BANDWIDTH);
        let hi = (i + COLLOCATION_BANDWIDTH).min(n - 1);
        for j in lo..=hi {
            m.set(i, j, basis.phi(j, x, 0)).expect("in band");
        }
    }
    m
}

/// Largest `|Φ_ij|` with `|i − j| ≥ 2`.
pub fn outer_band_magnitude(m: &BandedMatrix) -> f64 {
    let n = m.order();
    (0..n)
        .flat_map(|i| (0..n).filter(move |&j| i.abs_diff(j) >= 2).map(move |j| (i, j)))
        .map(|(i, j)| m.get(i, j).abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverPath {
    #[default]
    Banded,
    /// Dense LU on the full matrix, kept as an independent oracle.
    Dense,
}

#[derive(Debug, Clone)]
enum Factorization {
    Banded(BandedLu),
    Dense { lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>, lu_t: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn> },
}

/// A basis together with its factorized collocation matrix.
#[derive(Debug, Clone)]
pub struct Collocation {
    basis: GbSplineBasis,
    matrix: BandedMatrix,
    factorization: Factorization,
}

impl Collocation {
    pub fn new(basis: GbSplineBasis) -> Result<Self> {
        Self::with_path(basis, SolverPath::Banded)
    }

    pub fn with_path(basis: GbSplineBasis, path: SolverPath) -> Result<Self> {
        let matrix = collocation_matrix(&basis);
        let factorization = match path {
            SolverPath::Banded => Factorization::Banded(matrix.factorize()?),
            SolverPath::Dense => {
                if matrix.order() > MAX_DENSE_ORDER {
                    return invalid(format!("dense path limited to n <= {MAX_DENSE_ORDER}"));
                }
                let dense = matrix.to_dense();
                let tol = crate::banded::PIVOT_TOL * matrix.norm_inf();
                let lu = dense.clone().lu();
                if lu.u().diagonal().iter().any(|p| !(p.abs() > tol)) {
                    return Err(EpsError::SingularSystem("dense collocation matrix is singular".into()));
                }
                Factorization::Dense { lu, lu_t: dense.transpose().lu() }
            }
        };
        Ok(Self { basis, matrix, factorization })
    }

    pub fn basis(&self) -> &GbSplineBasis {
        &self.basis
    }

    pub fn matrix(&self) -> &BandedMatrix {
        &self.matrix
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    fn solve(&self, b: &mut [f64]) {
        match &self.factorization {
            Factorization::Banded(lu) => lu.solve_in_place(b),
            Factorization::Dense { lu, .. } => {
                let mut v = DVector::from_column_slice(b);
                lu.solve_mut(&mut v);
                b.copy_from_slice(v.as_slice());
            }
        }
    }

    fn solve_transpose(&self, b: &mut [f64]) {
        match &self.factorization {
            Factorization::Banded(lu) => lu.solve_transpose_in_place(b),
            Factorization::Dense { lu_t, .. } => {
                let mut v = DVector::from_column_slice(b);
                lu_t.solve_mut(&mut v);
                b.copy_from_slice(v.as_slice());
            }
        }
    }

    fn check_domain(&self, x: f64) -> Result<()> {
        let (a, b) = self.basis.domain();
        if !(x >= a && x <= b) {
            return Err(EpsError::Domain(format!("x = {x} lies outside [{a}, {b}]")));
        }
        Ok(())
    }

    /// Solves `Φ c = y`.
    pub fn fit(&self, y: &[f64]) -> Result<Interpolant> {
        if y.len() != self.len() {
            return invalid(format!("expected {} data values, got {}", self.len(), y.len()));
        }
        let mut c = y.to_vec();
        self.solve(&mut c);
        Ok(Interpolant { basis: self.basis.clone(), coefficients: c, data: y.to_vec() })
    }

    /// `(ψ_1(x), .., ψ_n(x))`.
    pub fn cardinal_values(&self, x: f64) -> Result<Vec<f64>> {
        self.check_domain(x)?;
        let mut rhs = vec![0.0; self.len()];
        for (j, v) in self.basis.nonzero_at(x, 0).iter() {
            rhs[j] = v;
        }
        self.solve_transpose(&mut rhs);
        Ok(rhs)
    }

    /// `λ(x) = Σ_j |ψ_j(x)|`.
    pub fn lebesgue_at(&self, x: f64) -> Result<f64> {
        Ok(self.cardinal_values(x)?.iter().map(|v| v.abs()).sum())
    }

    pub fn lebesgue_function(&self, grid: &[f64]) -> Result<Vec<f64>> {
        grid.par_iter().map(|&x| self.lebesgue_at(x)).collect()
    }

    /// `Λ = max_grid λ`. Grid resolution is the caller's choice.
    pub fn lebesgue_constant(&self, grid: &[f64]) -> Result<f64> {
        if grid.is_empty() {
            return invalid("Lebesgue constant needs a non-empty grid");
        }
        Ok(self.lebesgue_function(grid)?.into_iter().fold(f64::MIN, f64::max))
    }

    /// `Λ` on [`DEFAULT_GRID`] equispaced points of `[a, b]`.
    pub fn lebesgue_constant_default(&self) -> Result<f64> {
        let (a, b) = self.basis.domain();
        self.lebesgue_constant(&uniform_grid(a, b, DEFAULT_GRID))
    }
}

/// Builds the collocation system for `basis` and solves it for `y`.
pub fn fit(basis: &GbSplineBasis, y: &[f64]) -> Result<Interpolant> {
    Collocation::new(basis.clone())?.fit(y)
}

/// `I(x) = Σ_j c_j φ_j(x)` on `[x_1, x_n]`.
#[derive(Debug, Clone)]
pub struct Interpolant {
    basis: GbSplineBasis,
    coefficients: Vec<f64>,
    data: Vec<f64>,
}

impl Interpolant {
    /// An interpolant with given coefficients (its data are the values at the knots).
    pub fn from_coefficients(basis: GbSplineBasis, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() != basis.len() {
            return invalid(format!("expected {} coefficients, got {}", basis.len(), coefficients.len()));
        }
        let mut s = Self { basis, coefficients, data: Vec::new() };
        s.data = s.basis.knots().interior().iter().map(|&x| s.eval_in_domain(x)).collect();
        Ok(s)
    }

    pub fn basis(&self) -> &GbSplineBasis {
        &self.basis
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn knots(&self) -> &[f64] {
        self.basis.knots().interior()
    }

    pub fn domain(&self) -> (f64, f64) {
        self.basis.domain()
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let (a, b) = self.basis.domain();
        if !(x >= a && x <= b) {
            return Err(EpsError::Domain(format!("x = {x} lies outside [{a}, {b}]")));
        }
        Ok(self.eval_in_domain(x))
    }

    pub(crate) fn eval_in_domain(&self, x: f64) -> f64 {
        self.basis.nonzero_at(x, 0).iter().map(|(j, v)| self.coefficients[j] * v).sum()
    }

    /// `Σ_j c_j φ_j(x)` over all `j`, without the local lookup.
    pub fn eval_dense(&self, x: f64) -> f64 {
        self.coefficients.iter().enumerate().map(|(j, c)| c * self.basis.phi(j, x, 0)).sum()
    }

    /// `max_i |I(x_i) − y_i|`.
    pub fn max_node_residual(&self) -> f64 {
        self.knots()
            .iter()
            .zip(&self.data)
            .map(|(&x, y)| (self.eval_in_domain(x) - y).abs())
            .fold(0.0, f64::max)
    }
}

/// Dense `n × n` matrix of `φ_j(x_i)` by direct evaluation of every pair.
pub fn dense_collocation(basis: &GbSplineBasis) -> DMatrix<f64> {
    let xs = basis.knots().interior();
    DMatrix::from_fn(basis.len(), basis.len(), |i, j| basis.phi(j, xs[i], 0))
}
