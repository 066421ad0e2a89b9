//! Compactly supported C² GB-spline basis with segments in the exponential
//! space.
//!
//! Each basis function `φ_j` lives on the four intervals
//! `[x_{j−2}, x_{j+2}]` of an augmented knot vector. Its 16 segment
//! coefficients (4 Taylor coefficients per interval, see
//! [`crate::exp_space`]) solve a local system made of the 6 vanishing end
//! conditions, 9 C² continuity conditions at the inner support knots and
//! the normalization `φ_j(x_j) = 1`.

use nalgebra::{SMatrix, SVector};
use rayon::prelude::*;

use crate::error::{invalid, EpsError, Result};
use crate::exp_space::{ExpSpace, MAX_DERIV};

/// Local systems whose equilibrated 1-norm condition estimate exceeds this
/// are rejected as numerically rank deficient.
pub const MAX_LOCAL_CONDITION: f64 = 1e12;

type Local16 = SMatrix<f64, 16, 16>;

/// Interior knots `x_1 < .. < x_n` plus two extra knots on each side.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedKnots {
    extended: Vec<f64>,
}

impl AugmentedKnots {
    /// Augments by mirroring the first and last interior gap twice.
    pub fn new(interior: &[f64]) -> Result<Self> {
        validate_interior(interior)?;
        let n = interior.len();
        let hl = interior[1] - interior[0];
        let hr = interior[n - 1] - interior[n - 2];
        let left = [interior[0] - 2.0 * hl, interior[0] - hl];
        let right = [interior[n - 1] + hr, interior[n - 1] + 2.0 * hr];
        Self::with_outer(interior, left, right)
    }

    /// Uses explicit outer knots `[x_{-1}, x_0]` and `[x_{n+1}, x_{n+2}]`.
    pub fn with_outer(interior: &[f64], left: [f64; 2], right: [f64; 2]) -> Result<Self> {
        validate_interior(interior)?;
        let mut extended = Vec::with_capacity(interior.len() + 4);
        extended.extend_from_slice(&left);
        extended.extend_from_slice(interior);
        extended.extend_from_slice(&right);
        if !extended.iter().all(|x| x.is_finite()) || extended.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("augmented knot vector must be finite and strictly increasing");
        }
        Ok(Self { extended })
    }

    /// Number of interior knots `n`.
    pub fn len(&self) -> usize {
        self.extended.len() - 4
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn interior(&self) -> &[f64] {
        &self.extended[2..self.extended.len() - 2]
    }

    /// All `n + 4` knots `x_{-1} < x_0 < x_1 < .. < x_{n+2}`.
    pub fn extended(&self) -> &[f64] {
        &self.extended
    }

    pub fn outer_left(&self) -> [f64; 2] {
        [self.extended[0], self.extended[1]]
    }

    pub fn outer_right(&self) -> [f64; 2] {
        let m = self.extended.len();
        [self.extended[m - 2], self.extended[m - 1]]
    }

    /// Interpolation interval `[x_1, x_n]`.
    pub fn domain(&self) -> (f64, f64) {
        let i = self.interior();
        (i[0], i[i.len() - 1])
    }
}

fn validate_interior(interior: &[f64]) -> Result<()> {
    if interior.len() < 2 {
        return invalid(format!("need at least 2 interior knots, got {}", interior.len()));
    }
    if let Some(w) = interior.windows(2).find(|w| !(w[0] < w[1])) {
        return invalid(format!(
            "interior knots must be finite, distinct and strictly increasing (found {} then {})",
            w[0], w[1]
        ));
    }
    if !interior.iter().all(|x| x.is_finite()) {
        return invalid("interior knots must be finite");
    }
    Ok(())
}

/// Nonzero basis values at one point: `values[k]` belongs to basis
/// `first + k`, for `k < len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalValues {
    pub first: usize,
    pub len: usize,
    pub values: [f64; 4],
}

impl LocalValues {
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values[..self.len]
            .iter()
            .enumerate()
            .map(move |(k, v)| (self.first + k, *v))
    }
}

#[derive(Debug, Clone)]
pub struct GbSplineBasis {
    knots: AugmentedKnots,
    space: ExpSpace,
    /// `segments[i][s]`: Taylor coefficients of basis `i` on support interval `s`.
    segments: Vec<[[f64; 4]; 4]>,
}

impl GbSplineBasis {
    pub fn build(knots: AugmentedKnots, space: ExpSpace) -> Result<Self> {
        for w in knots.extended().windows(2) {
            space.check_interval(w[1] - w[0])?;
        }
        let n = knots.len();
        let segments = (0..n)
            .into_par_iter()
            .map(|i| {
                let e = knots.extended();
                let h = [e[i + 1] - e[i], e[i + 2] - e[i + 1], e[i + 3] - e[i + 2], e[i + 4] - e[i + 3]];
                solve_local(&space, h).map_err(|reason| EpsError::Construction { index: i, reason })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { knots, space, segments })
    }

    /// Convenience: augment `interior` by the mirror rule and build.
    pub fn from_interior(interior: &[f64], space: ExpSpace) -> Result<Self> {
        Self::build(AugmentedKnots::new(interior)?, space)
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn knots(&self) -> &AugmentedKnots {
        &self.knots
    }

    pub fn space(&self) -> &ExpSpace {
        &self.space
    }

    pub fn domain(&self) -> (f64, f64) {
        self.knots.domain()
    }

    /// Support `[x_{j−2}, x_{j+2}]` of basis `j` (0-based).
    pub fn support(&self, j: usize) -> (f64, f64) {
        let e = self.knots.extended();
        (e[j], e[j + 4])
    }

    pub fn segment_coefficients(&self, j: usize) -> &[[f64; 4]; 4] {
        &self.segments[j]
    }

    /// Evaluates segment `s` of basis `j` at local coordinate `t` (measured
    /// from the segment's left knot), with no support clipping.
    pub fn segment_eval(&self, j: usize, s: usize, t: f64, deriv: usize) -> f64 {
        self.space.eval_local_in_range(&self.segments[j][s], t, deriv)
    }

    /// `φ_j^{(deriv)}(x)` for 0-based `j`.
    pub fn eval_phi(&self, j: usize, x: f64, deriv: usize) -> Result<f64> {
        if j >= self.len() {
            return invalid(format!("basis index {j} out of range 0..{}", self.len()));
        }
        if deriv > MAX_DERIV {
            return invalid(format!("derivative order {deriv} > {MAX_DERIV}"));
        }
        Ok(self.phi(j, x, deriv))
    }

    pub(crate) fn phi(&self, j: usize, x: f64, deriv: usize) -> f64 {
        let e = &self.knots.extended()[j..j + 5];
        if !(x >= e[0] && x <= e[4]) {
            return 0.0;
        }
        let s = e[1..4].partition_point(|&k| k <= x);
        self.segment_eval(j, s, x - e[s], deriv)
    }

    /// Index `k` of the extended interval `[e_k, e_{k+1}]` holding
    /// `x ∈ [a, b]`; the right end belongs to the last interval.
    pub(crate) fn interval_of(&self, x: f64) -> usize {
        let e = self.knots.extended();
        let n = self.len();
        // interior knots are e[2..=n+1]; intervals inside [a,b] are k = 2..=n
        let pos = e[3..=n].partition_point(|&k| k <= x);
        2 + pos
    }

    /// The at most four basis functions that do not vanish on the interval
    /// containing `x`, with their `deriv`-th derivatives at `x`.
    /// `x` must lie in [`Self::domain`].
    pub fn nonzero_at(&self, x: f64, deriv: usize) -> LocalValues {
        let n = self.len();
        let k = self.interval_of(x);
        let first = k.saturating_sub(3);
        let last = k.min(n - 1);
        let left = self.knots.extended()[k];
        let mut values = [0.0; 4];
        for (slot, j) in (first..=last).enumerate() {
            values[slot] = self.segment_eval(j, k - j, x - left, deriv);
        }
        LocalValues { first, len: last + 1 - first, values }
    }

    /// One-sided jumps of `φ_j, φ_j', φ_j''` at the five support knots.
    /// Entries 0 and 4 are the end values against the zero extension.
    pub fn continuity_jumps(&self, j: usize) -> [[f64; 3]; 5] {
        let e = &self.knots.extended()[j..j + 5];
        let mut out = [[0.0; 3]; 5];
        for (m, jumps) in out.iter_mut().enumerate() {
            for (d, jump) in jumps.iter_mut().enumerate() {
                let left = if m == 0 { 0.0 } else { self.segment_eval(j, m - 1, e[m] - e[m - 1], d) };
                let right = if m == 4 { 0.0 } else { self.segment_eval(j, m, 0.0, d) };
                *jump = left - right;
            }
        }
        out
    }
}

/// Builds and solves the 16×16 system for one basis function with interval
/// lengths `h`. Unknown layout: `4·s + m` is the `m`-th Taylor coefficient of
/// support interval `s`.
fn solve_local(space: &ExpSpace, h: [f64; 4]) -> std::result::Result<[[f64; 4]; 4], String> {
    let (a, b) = local_system(space, h)?;
    let (system, rows, cols) = equilibrate(a);
    let rhs = b.component_mul(&rows);

    let lu = system.lu();
    let inv = lu.try_inverse().ok_or("local system is singular")?;
    let cond = one_norm(&system) * one_norm(&inv);
    if !(cond <= MAX_LOCAL_CONDITION) {
        return Err(format!("local system condition estimate {cond:.3e} exceeds {MAX_LOCAL_CONDITION:.0e}"));
    }
    let y = lu.solve(&rhs).ok_or("local system is singular")?;
    let x = y.component_mul(&cols);

    let mut out = [[0.0; 4]; 4];
    for s in 0..4 {
        for m in 0..4 {
            out[s][m] = x[4 * s + m];
        }
    }
    Ok(out)
}

/// The homogeneous constraints occupy rows 0..15; row 15 is the
/// normalization.
pub(crate) fn local_system(
    space: &ExpSpace,
    h: [f64; 4],
) -> std::result::Result<(Local16, SVector<f64, 16>), String> {
    let mut a = Local16::zeros();
    let mut row = 0;
    // value, 1st, 2nd derivative vanish at the left support end
    for d in 0..3 {
        a[(row, d)] = 1.0;
        row += 1;
    }
    // C² continuity at the three inner support knots
    for s in 0..3 {
        for d in 0..3 {
            let r = space.taylor_row(h[s], d).map_err(|e| e.to_string())?;
            for m in 0..4 {
                a[(row, 4 * s + m)] = r[m];
            }
            a[(row, 4 * (s + 1) + d)] = -1.0;
            row += 1;
        }
    }
    // vanishing at the right support end
    for d in 0..3 {
        let r = space.taylor_row(h[3], d).map_err(|e| e.to_string())?;
        for m in 0..4 {
            a[(row, 12 + m)] = r[m];
        }
        row += 1;
    }
    // φ(x_j) = 1: value at the left end of interval 2
    a[(row, 8)] = 1.0;
    let mut b = SVector::<f64, 16>::zeros();
    b[15] = 1.0;
    Ok((a, b))
}

fn equilibrate(mut a: Local16) -> (Local16, SVector<f64, 16>, SVector<f64, 16>) {
    let mut rows = SVector::<f64, 16>::repeat(1.0);
    let mut cols = SVector::<f64, 16>::repeat(1.0);
    for i in 0..16 {
        let m = a.row(i).amax();
        if m > 0.0 {
            rows[i] = 1.0 / m;
            a.row_mut(i).scale_mut(1.0 / m);
        }
    }
    for j in 0..16 {
        let m = a.column(j).amax();
        if m > 0.0 {
            cols[j] = 1.0 / m;
            a.column_mut(j).scale_mut(1.0 / m);
        }
    }
    (a, rows, cols)
}

fn one_norm(a: &Local16) -> f64 {
    a.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}
