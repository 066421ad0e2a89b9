//! Square band matrices and LU factorization with partial pivoting.
//!
//! The factorization follows the LAPACK `gbtrf` layout: row interchanges
//! are applied step by step, the Gauss multipliers of step `k` are kept
//! unpermuted, and `U` has upper bandwidth `kl + ku`.

use nalgebra::DMatrix;

use crate::error::{invalid, EpsError, Result};

/// Pivots below `PIVOT_TOL · ‖A‖_∞` are treated as zero.
pub const PIVOT_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    /// Row-major, width `kl + ku + 1`; entry `(i, j)` at `i·w + (j + kl − i)`.
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        Self { n, kl, ku, data: vec![0.0; n * (kl + ku + 1)] }
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn lower_bandwidth(&self) -> usize {
        self.kl
    }

    pub fn upper_bandwidth(&self) -> usize {
        self.ku
    }

    fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && j + self.kl >= i && j <= i + self.ku
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.kl + self.ku + 1) + (j + self.kl - i)
    }

    /// Entry `(i, j)`; structurally zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.data[self.idx(i, j)]
        } else {
            0.0
        }
    }

    /// Sets an in-band entry. Out-of-band writes are an input error.
    pub fn set(&mut self, i: usize, j: usize, v: f64) -> Result<()> {
        if !self.in_band(i, j) {
            return invalid(format!("entry ({i}, {j}) lies outside the band"));
        }
        let k = self.idx(i, j);
        self.data[k] = v;
        Ok(())
    }

    /// `‖A‖_∞`, the largest absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row_range(i).map(|j| self.get(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    fn row_range(&self, i: usize) -> std::ops::Range<usize> {
        i.saturating_sub(self.kl)..(i + self.ku + 1).min(self.n)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row_range(i).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    pub fn factorize(&self) -> Result<BandedLu> {
        BandedLu::new(self)
    }
}

#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    /// Upper bandwidth of `U`, `kl + ku`.
    uw: usize,
    /// Row-major `U`, width `uw + 1`; entry `(i, j)` at `i·(uw+1) + (j − i)`.
    u: Vec<f64>,
    /// Multipliers of step `k` at `k·kl + (r − 1)` for row `k + r`.
    l: Vec<f64>,
    piv: Vec<usize>,
}

impl BandedLu {
    fn new(a: &BandedMatrix) -> Result<Self> {
        let (n, kl) = (a.n, a.kl);
        let uw = a.kl + a.ku;
        if n == 0 {
            return invalid("cannot factorize an empty matrix");
        }
        let tol = PIVOT_TOL * a.norm_inf();
        // Working rows hold columns [i − kl, i + uw]; width kl + uw + 1.
        let w = kl + uw + 1;
        let at = |i: usize, j: usize| i * w + (j + kl - i);
        let mut work = vec![0.0; n * w];
        for i in 0..n {
            for j in a.row_range(i) {
                work[at(i, j)] = a.get(i, j);
            }
        }
        let mut l = vec![0.0; n * kl];
        let mut piv = vec![0; n];
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = work[at(k, k)].abs();
            for r in k + 1..=last {
                let v = work[at(r, k)].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if !(best > tol) {
                return Err(EpsError::SingularSystem(format!(
                    "pivot {best:.3e} at step {k} is below {PIVOT_TOL:.0e} * ||A||_inf"
                )));
            }
            piv[k] = p;
            let jmax = (k + uw).min(n - 1);
            if p != k {
                for j in k..=jmax {
                    work.swap(at(k, j), at(p, j));
                }
            }
            let pivot = work[at(k, k)];
            for r in k + 1..=last {
                let m = work[at(r, k)] / pivot;
                l[k * kl + (r - k - 1)] = m;
                work[at(r, k)] = 0.0;
                if m != 0.0 {
                    for j in k + 1..=jmax {
                        work[at(r, j)] -= m * work[at(k, j)];
                    }
                }
            }
        }
        let mut u = vec![0.0; n * (uw + 1)];
        for i in 0..n {
            for j in i..=(i + uw).min(n - 1) {
                u[i * (uw + 1) + (j - i)] = work[at(i, j)];
            }
        }
        Ok(Self { n, kl, uw, u, l, piv })
    }

    pub fn order(&self) -> usize {
        self.n
    }

    fn u(&self, i: usize, j: usize) -> f64 {
        self.u[i * (self.uw + 1) + (j - i)]
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        assert_eq!(b.len(), n, "right-hand side length mismatch");
        for k in 0..n {
            b.swap(k, self.piv[k]);
            let bk = b[k];
            for r in 1..=self.kl.min(n - 1 - k) {
                b[k + r] -= self.l[k * self.kl + r - 1] * bk;
            }
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in i + 1..=(i + self.uw).min(n - 1) {
                s -= self.u(i, j) * b[j];
            }
            b[i] = s / self.u(i, i);
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// Solves `Aᵀ x = b` in place.
    pub fn solve_transpose_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        assert_eq!(b.len(), n, "right-hand side length mismatch");
        // Uᵀ w = b
        for i in 0..n {
            let mut s = b[i];
            for j in i.saturating_sub(self.uw)..i {
                s -= self.u(j, i) * b[j];
            }
            b[i] = s / self.u(i, i);
        }
        // x = P_1ᵀ M_1ᵀ … P_nᵀ M_nᵀ w
        for k in (0..n).rev() {
            let mut s = b[k];
            for r in 1..=self.kl.min(n - 1 - k) {
                s -= self.l[k * self.kl + r - 1] * b[k + r];
            }
            b[k] = s;
            b.swap(k, self.piv[k]);
        }
    }

    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_transpose_in_place(&mut x);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;
    use proptest::prelude::*;

    fn from_entries(n: usize, kl: usize, ku: usize, f: impl Fn(usize, usize) -> f64) -> BandedMatrix {
        let mut m = BandedMatrix::zeros(n, kl, ku);
        for i in 0..n {
            for j in m.row_range(i) {
                m.set(i, j, f(i, j)).unwrap();
            }
        }
        m
    }

    #[test]
    fn structural_zeros_and_bounds() {
        let mut m = BandedMatrix::zeros(5, 2, 2);
        assert_eq!(m.get(0, 4), 0.0);
        assert!(m.set(0, 3, 1.0).is_err());
        m.set(4, 2, 3.0).unwrap();
        assert_eq!(m.get(4, 2), 3.0);
        assert_eq!(m.to_dense()[(4, 2)], 3.0);
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let m = from_entries(4, 1, 1, |i, j| if i == 2 || j == 2 { 0.0 } else { 1.0 + (i + j) as f64 });
        assert!(matches!(m.factorize(), Err(EpsError::SingularSystem(_))));
    }

    #[test]
    fn pivoting_handles_zero_diagonal() {
        // [[0,1],[1,0]] needs a row swap
        let m = from_entries(2, 1, 1, |i, j| if i == j { 0.0 } else { 1.0 });
        let lu = m.factorize().unwrap();
        assert_eq!(lu.solve(&[2.0, 3.0]), vec![3.0, 2.0]);
        assert_eq!(lu.solve_transpose(&[2.0, 3.0]), vec![3.0, 2.0]);
    }

    proptest! {
        #[test]
        fn matches_dense_solve(
            n in 1usize..30,
            kl in 0usize..3,
            ku in 0usize..3,
            seed in proptest::collection::vec(-1.0f64..1.0, 30 * 7 + 30),
        ) {
            // no diagonal dominance, so pivoting is exercised
            let m = from_entries(n, kl, ku, |i, j| seed[(i * 7 + (j + 3 - i)) % (30 * 7)] + if i == j { 0.05 } else { 0.0 });
            let dense = m.to_dense();
            prop_assume!(dense.clone().svd(false, false).singular_values.min() > 1e-6);
            let b: Vec<f64> = seed[30 * 7..30 * 7 + n].to_vec();
            let lu = m.factorize().unwrap();
            let x = lu.solve(&b);
            let xt = lu.solve_transpose(&b);
            let want = dense.clone().lu().solve(&DVector::from_vec(b.clone())).unwrap();
            let want_t = dense.transpose().lu().solve(&DVector::from_vec(b)).unwrap();
            let scale = want.amax().max(want_t.amax()).max(1.0);
            for i in 0..n {
                prop_assert!((x[i] - want[i]).abs() <= 1e-8 * scale);
                prop_assert!((xt[i] - want_t[i]).abs() <= 1e-8 * scale);
            }
        }
    }
}
