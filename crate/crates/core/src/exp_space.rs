//! The four-dimensional segment space spanned by
//! `e^{αt}, t·e^{αt}, e^{-αt}, t·e^{-αt}`.
//!
//! Two bases of the same space are exposed:
//!
//! - the *raw* generators in the fixed order above, and
//! - the *Taylor* basis `g_0..g_3`, characterised by `g_k^{(m)}(0) = δ_{km}`
//!   for `m = 0..3`. In closed form, with `z = αt`,
//!
//!   ```text
//!   g_0 = cosh z − (z/2)·sinh z
//!   g_1 = (t/2)·(3·sinh(z)/z − cosh z)
//!   g_2 = (t²/2)·sinh(z)/z
//!   g_3 = (t³/2)·(cosh z − sinh(z)/z)/z²
//!   ```
//!
//! The Taylor basis behaves like `1, t, t²/2, t³/6` for small `αt`, so
//! segment coefficients stay O(1)-scaled on short intervals where the raw
//! generators become nearly collinear. Spline segments store their
//! coefficients in this basis; the coefficients are the value and first
//! three derivatives at the segment's left knot.
//!
//! The space is closed under differentiation. Since every element solves
//! `u'''' = 2α²u'' − α⁴u`, differentiating a Taylor coefficient vector
//! `(c_0, c_1, c_2, c_3)` gives `(c_1, c_2, c_3, 2α²c_2 − α⁴c_0)`.

use crate::error::{invalid, EpsError, Result};

/// Largest admissible `|α·t|` before `e^{α t}` is considered an overflow.
pub const OVERFLOW_LIMIT: f64 = 700.0;

/// `α·h` above which a warning is logged: segment values span more than
/// ~13 orders of magnitude past this point.
pub const WARN_LIMIT: f64 = 30.0;

/// Highest derivative order supported by the evaluators.
pub const MAX_DERIV: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpSpace {
    alpha: f64,
}

impl ExpSpace {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return invalid(format!("alpha must be a positive finite number, got {alpha}"));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Checks that a segment of length `h` can be evaluated in local
    /// coordinates. Errors past [`OVERFLOW_LIMIT`], warns past [`WARN_LIMIT`].
    pub fn check_interval(&self, h: f64) -> Result<()> {
        let z = self.alpha * h;
        if z > OVERFLOW_LIMIT {
            return Err(EpsError::Domain(format!(
                "alpha * interval length = {z:.3} exceeds the overflow limit {OVERFLOW_LIMIT}"
            )));
        }
        if z > WARN_LIMIT {
            log::warn!("alpha * interval length = {z:.3} is large; segments may be badly scaled");
        }
        Ok(())
    }

    fn guard(&self, t: f64) -> Result<f64> {
        let z = self.alpha * t;
        if !z.is_finite() || z.abs() > OVERFLOW_LIMIT {
            return Err(EpsError::Domain(format!(
                "|alpha * t| = {:.3} exceeds the overflow limit {OVERFLOW_LIMIT}",
                z.abs()
            )));
        }
        Ok(z)
    }

    /// Values (or `deriv`-th derivatives) of the raw generators
    /// `(e^{αt}, t·e^{αt}, e^{-αt}, t·e^{-αt})` at the local coordinate `t`.
    pub fn raw_basis_eval(&self, t: f64, deriv: usize) -> Result<[f64; 4]> {
        if deriv > MAX_DERIV {
            return invalid(format!("derivative order {deriv} > {MAX_DERIV}"));
        }
        self.guard(t)?;
        let a = self.alpha;
        let d = deriv as i32;
        let ep = (a * t).exp();
        let em = (-a * t).exp();
        let pow = |x: f64, k: i32| if k < 0 { 0.0 } else { x.powi(k) };
        Ok([
            pow(a, d) * ep,
            (pow(a, d) * t + f64::from(d) * pow(a, d - 1)) * ep,
            pow(-a, d) * em,
            (pow(-a, d) * t + f64::from(d) * pow(-a, d - 1)) * em,
        ])
    }

    /// Values of the Taylor basis `g_0..g_3` at `t`.
    pub fn taylor_basis_eval(&self, t: f64) -> Result<[f64; 4]> {
        self.guard(t)?;
        let mut g = [0.0; 4];
        for (k, gk) in g.iter_mut().enumerate() {
            let mut e = [0.0; 4];
            e[k] = 1.0;
            *gk = self.eval_local_in_range(&e, t, 0);
        }
        Ok(g)
    }

    /// [`Self::eval_local`] without the overflow guard, for segments whose
    /// length was validated by [`Self::check_interval`].
    pub(crate) fn eval_local_in_range(&self, coeffs: &[f64; 4], t: f64, deriv: usize) -> f64 {
        let z = self.alpha * t;
        let (ch, sh) = (z.cosh(), z.sinh());
        let sinhc = if z == 0.0 { 1.0 } else { sh / z };
        let g = [
            ch - 0.5 * z * sh,
            0.5 * t * (3.0 * sinhc - ch),
            0.5 * t * t * sinhc,
            0.5 * t * t * t * cosh_minus_sinhc_over_z2(z, ch, sinhc),
        ];
        let mut c = *coeffs;
        for _ in 0..deriv {
            c = self.differentiate(c);
        }
        c.iter().zip(&g).map(|(ci, gi)| ci * gi).sum()
    }

    /// Taylor coefficients of the derivative of `Σ c_k g_k`.
    pub fn differentiate(&self, c: [f64; 4]) -> [f64; 4] {
        let a2 = self.alpha * self.alpha;
        [c[1], c[2], c[3], 2.0 * a2 * c[2] - a2 * a2 * c[0]]
    }

    /// Evaluates the `deriv`-th derivative of `Σ c_k g_k` at `t`.
    pub fn eval_local(&self, coeffs: &[f64; 4], t: f64, deriv: usize) -> Result<f64> {
        if deriv > MAX_DERIV {
            return invalid(format!("derivative order {deriv} > {MAX_DERIV}"));
        }
        self.guard(t)?;
        Ok(self.eval_local_in_range(coeffs, t, deriv))
    }

    /// Row `[g_0^{(d)}(t), .., g_3^{(d)}(t)]`, i.e. the linear map from Taylor
    /// coefficients to the `d`-th derivative at `t`.
    pub fn taylor_row(&self, t: f64, deriv: usize) -> Result<[f64; 4]> {
        let mut row = [0.0; 4];
        for (k, r) in row.iter_mut().enumerate() {
            let mut e = [0.0; 4];
            e[k] = 1.0;
            *r = self.eval_local(&e, t, deriv)?;
        }
        Ok(row)
    }
}

/// `(cosh z − sinh(z)/z) / z²`, by series near zero where the difference
/// cancels.
fn cosh_minus_sinhc_over_z2(z: f64, ch: f64, sinhc: f64) -> f64 {
    if z.abs() >= 1.0 {
        return (ch - sinhc) / (z * z);
    }
    // Σ_{k≥1} 2k/(2k+1)! · z^{2k−2}
    let z2 = z * z;
    let mut fact = 6.0; // (2k+1)! at k = 1
    let mut zpow = 1.0;
    let mut sum = 0.0;
    for k in 1..=12u32 {
        sum += f64::from(2 * k) / fact * zpow;
        zpow *= z2;
        fact *= f64::from((2 * k + 2) * (2 * k + 3));
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Matrix4;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn raw_values_at_origin() {
        let s = ExpSpace::new(2.0).unwrap();
        assert_eq!(s.raw_basis_eval(0.0, 0).unwrap(), [1.0, 0.0, 1.0, 0.0]);
        assert_eq!(s.raw_basis_eval(0.0, 1).unwrap(), [2.0, 1.0, -2.0, 1.0]);
    }

    #[test]
    fn raw_values_at_one() {
        let s = ExpSpace::new(1.0).unwrap();
        let e = std::f64::consts::E;
        let v = s.raw_basis_eval(1.0, 0).unwrap();
        for (got, want) in v.iter().zip([e, e, 1.0 / e, 1.0 / e]) {
            assert!(close(*got, want, 1e-15));
        }
    }

    #[test]
    fn overflow_guard() {
        let s = ExpSpace::new(2.0).unwrap();
        assert!(matches!(s.raw_basis_eval(351.0, 0), Err(EpsError::Domain(_))));
        assert!(matches!(s.taylor_basis_eval(-351.0), Err(EpsError::Domain(_))));
        assert!(s.check_interval(350.0).is_ok());
        assert!(s.check_interval(350.5).is_err());
    }

    #[test]
    fn rejects_nonpositive_alpha() {
        assert!(ExpSpace::new(0.0).is_err());
        assert!(ExpSpace::new(-1.0).is_err());
        assert!(ExpSpace::new(f64::NAN).is_err());
    }

    #[test]
    fn taylor_basis_has_unit_taylor_data() {
        let s = ExpSpace::new(2.0).unwrap();
        for k in 0..4 {
            for m in 0..4 {
                let mut e = [0.0; 4];
                e[k] = 1.0;
                let v = s.eval_local(&e, 0.0, m).unwrap();
                let want = if k == m { 1.0 } else { 0.0 };
                assert!((v - want).abs() < 1e-15, "g_{k}^({m})(0) = {v}");
            }
        }
    }

    /// Raw generator Wronskian at 0, columns = generators, rows = derivative order.
    fn raw_wronskian(s: &ExpSpace, t: f64) -> Matrix4<f64> {
        let mut w = Matrix4::zeros();
        for d in 0..4 {
            let r = s.raw_basis_eval(t, d).unwrap();
            for k in 0..4 {
                w[(d, k)] = r[k];
            }
        }
        w
    }

    #[test]
    fn taylor_basis_matches_raw_change_of_basis() {
        // g(t) = raw(t) · W(0)^{-1}, evaluated where raw generators are well scaled.
        for &alpha in &[0.5, 2.0, 5.0] {
            let s = ExpSpace::new(alpha).unwrap();
            let winv = raw_wronskian(&s, 0.0).try_inverse().unwrap();
            for &t in &[0.3, 0.9, 1.7, -0.8] {
                let raw = s.raw_basis_eval(t, 0).unwrap();
                let g = s.taylor_basis_eval(t).unwrap();
                for k in 0..4 {
                    let via_raw: f64 = (0..4).map(|i| raw[i] * winv[(i, k)]).sum();
                    assert!(close(g[k], via_raw, 1e-11), "alpha={alpha} t={t} k={k}");
                }
            }
        }
    }

    #[test]
    fn taylor_basis_small_argument_limits() {
        let s = ExpSpace::new(2.0).unwrap();
        let t = 1e-5;
        let g = s.taylor_basis_eval(t).unwrap();
        let want = [1.0, t, t * t / 2.0, t * t * t / 6.0];
        for k in 0..4 {
            assert!((g[k] - want[k]).abs() <= 1e-8 * want[k].abs(), "k={k}");
        }
    }

    #[test]
    fn series_branch_agrees_with_closed_form() {
        for &z in &[0.5f64, 0.9, 0.999] {
            let series = cosh_minus_sinhc_over_z2(z, z.cosh(), z.sinh() / z);
            let direct = (z.cosh() - z.sinh() / z) / (z * z);
            assert!((series - direct).abs() < 1e-13 * direct, "z={z}");
        }
    }

    #[test]
    fn wronskian_is_nonsingular() {
        for &alpha in &[0.1, 1.0, 2.0, 10.0] {
            let s = ExpSpace::new(alpha).unwrap();
            for &t in &[-1.0, 0.0, 0.25, 3.0] {
                let det = raw_wronskian(&s, t).determinant();
                assert!(det.abs() > 0.0 && det.is_finite(), "alpha={alpha} t={t} det={det}");
            }
        }
    }

    proptest! {
        #[test]
        fn raw_derivatives_match_finite_differences(alpha in 0.1f64..5.0, t in -2.0f64..2.0) {
            let s = ExpSpace::new(alpha).unwrap();
            let h = 1e-6;
            for d in 1..=2 {
                let hi = s.raw_basis_eval(t + h, d - 1).unwrap();
                let lo = s.raw_basis_eval(t - h, d - 1).unwrap();
                let an = s.raw_basis_eval(t, d).unwrap();
                for k in 0..4 {
                    let fd = (hi[k] - lo[k]) / (2.0 * h);
                    let scale = an[k].abs().max(hi[k].abs()).max(1e-3);
                    prop_assert!((fd - an[k]).abs() <= 1e-5 * scale,
                        "d={} k={} fd={} an={}", d, k, fd, an[k]);
                }
            }
        }

        #[test]
        fn taylor_derivatives_match_finite_differences(
            alpha in 0.1f64..5.0,
            t in 0.0f64..1.5,
            c in proptest::array::uniform4(-1.0f64..1.0),
        ) {
            let s = ExpSpace::new(alpha).unwrap();
            let h = 1e-6;
            for d in 1..=2 {
                let fd = (s.eval_local(&c, t + h, d - 1).unwrap()
                    - s.eval_local(&c, t - h, d - 1).unwrap()) / (2.0 * h);
                let an = s.eval_local(&c, t, d).unwrap();
                prop_assert!((fd - an).abs() <= 1e-5 * an.abs().max(1.0));
            }
        }
    }
}
