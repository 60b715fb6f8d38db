//! Periodic Jacobi operators, their symbols and oscillation statistics.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;

/// Doubly infinite tridiagonal operator with `p`-periodic diagonal `a`,
/// super-diagonal `b` and sub-diagonal `c`.
///
/// `a[i]` sits on the diagonal, `b[i]` directly right of it and `c[i]`
/// directly below it.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicJacobiOperator {
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
}

fn check_finite(name: &str, v: &[f64]) -> Result<()> {
    if let Some(i) = v.iter().position(|x| !x.is_finite()) {
        return Err(Error::usage(format!("{name}[{i}] is not a finite number")));
    }
    Ok(())
}

impl PeriodicJacobiOperator {
    /// Builds an operator; the period is the common length of the sequences.
    pub fn new(a: Vec<f64>, b: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        let p = a.len();
        if p < 2 {
            return Err(Error::usage(format!("period must be at least 2, got {p}")));
        }
        for (name, v) in [("b", &b), ("c", &c)] {
            if v.len() != p {
                return Err(Error::usage(format!(
                    "field `{name}` has length {} but the period is {p}",
                    v.len()
                )));
            }
        }
        check_finite("a", &a)?;
        check_finite("b", &b)?;
        check_finite("c", &c)?;
        Ok(PeriodicJacobiOperator { a, b, c })
    }

    /// Like [`new`](Self::new) but checks the lengths against a declared period.
    pub fn with_period(period: usize, a: Vec<f64>, b: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        if period < 2 {
            return Err(Error::usage(format!("period must be at least 2, got {period}")));
        }
        for (name, v) in [("a", &a), ("b", &b), ("c", &c)] {
            if v.len() != period {
                return Err(Error::usage(format!(
                    "field `{name}` has length {} but period = {period}",
                    v.len()
                )));
            }
        }
        Self::new(a, b, c)
    }

    /// Operator with all three sequences constant.
    pub fn constant(period: usize, a: f64, b: f64, c: f64) -> Result<Self> {
        Self::with_period(period, alloc::vec![a; period], alloc::vec![b; period], alloc::vec![c; period])
    }

    pub fn period(&self) -> usize {
        self.a.len()
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    /// True when `b` and `c` agree to the constancy tolerance.
    pub fn is_self_adjoint(&self) -> bool {
        let scale = 1.0 + self.b.iter().chain(&self.c).fold(0.0f64, |m, x| m.max(x.abs()));
        self.b.iter().zip(&self.c).all(|(b, c)| (b - c).abs() <= CONSTANT_TOL * scale)
    }

    /// Adds `s` to every diagonal entry.
    pub fn shifted(&self, s: f64) -> Self {
        PeriodicJacobiOperator {
            a: self.a.iter().map(|x| x + s).collect(),
            b: self.b.clone(),
            c: self.c.clone(),
        }
    }

    /// Multiplies every coefficient by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let f = |v: &[f64]| v.iter().map(|x| x * s).collect();
        PeriodicJacobiOperator {
            a: f(&self.a),
            b: f(&self.b),
            c: f(&self.c),
        }
    }

    /// Adds `d` to the diagonal entrywise.
    pub fn with_diagonal_added(&self, d: &[f64]) -> Result<Self> {
        if d.len() != self.period() {
            return Err(Error::usage("diagonal perturbation length differs from the period"));
        }
        Self::new(
            self.a.iter().zip(d).map(|(x, y)| x + y).collect(),
            self.b.clone(),
            self.c.clone(),
        )
    }

    pub fn symbol(&self, theta: f64) -> SymbolMatrix {
        build_symbol(self, theta)
    }

    /// Largest |coefficient|, used for relative tolerances.
    pub fn max_abs_coefficient(&self) -> f64 {
        self.a.iter().chain(&self.b).chain(&self.c).fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Constant bounding how fast symbol entries move with theta: the
    /// corner moduli, since only the corners depend on theta.
    pub fn theta_lipschitz(&self) -> f64 {
        let p = self.period();
        self.b[p - 1].abs().max(self.c[p - 1].abs())
    }
}

/// The symbol at one angle.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolMatrix {
    /// Normalized angle in (-pi, pi].
    pub theta: f64,
    pub entries: CMatrix,
}

/// Reduces an angle to (-pi, pi].
pub fn normalize_theta(theta: f64) -> f64 {
    if theta > -PI && theta <= PI {
        return theta;
    }
    let two_pi = 2.0 * PI;
    let mut r = theta - two_pi * (theta / two_pi).floor();
    if r > PI {
        r -= 2.0 * PI;
    }
    if r <= -PI {
        r = PI;
    }
    r
}

/// `e^{i theta}` with exact values at multiples of pi/2.
pub fn cis(theta: f64) -> Complex64 {
    let quarter = theta / (PI / 2.0);
    if quarter == quarter.round() && quarter.abs() < 8.0 {
        return match (quarter as i64).rem_euclid(4) {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
    }
    Complex64::new(theta.cos(), theta.sin())
}

/// Jacobi-pattern symbol for arbitrary sequences of equal length `p >= 2`.
pub(crate) fn jacobi_symbol(a: &[f64], b: &[f64], c: &[f64], theta: f64) -> CMatrix {
    let p = a.len();
    let e = cis(theta);
    let r = |x: f64| Complex64::new(x, 0.0);
    let mut m = CMatrix::zeros(p, p);
    for i in 0..p {
        m[(i, i)] = r(a[i]);
    }
    for i in 0..p - 1 {
        m[(i, i + 1)] += r(b[i]);
        m[(i + 1, i)] += r(c[i]);
    }
    m[(0, p - 1)] += e.conj() * c[p - 1];
    m[(p - 1, 0)] += e * b[p - 1];
    m
}

/// The symbol matrix at `theta` (normalized to (-pi, pi] first).
pub fn build_symbol(op: &PeriodicJacobiOperator, theta: f64) -> SymbolMatrix {
    let theta = normalize_theta(theta);
    SymbolMatrix {
        theta,
        entries: jacobi_symbol(&op.a, &op.b, &op.c, theta),
    }
}

/// Relative tolerance for "constant" sequences.
pub const CONSTANT_TOL: f64 = 1e-12;

/// Max pairwise difference, i.e. `max(v) - min(v)`.
pub fn oscillation(v: &[f64]) -> Result<f64> {
    if v.is_empty() {
        return Err(Error::usage("oscillation of an empty sequence"));
    }
    let (lo, hi) = v
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    Ok(hi - lo)
}

/// Max deviation within `CONSTANT_TOL * (1 + max|entry|)`.
pub fn is_constant(v: &[f64]) -> bool {
    let Some(&first) = v.first() else {
        return true;
    };
    let scale = 1.0 + v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    v.iter().all(|x| (x - first).abs() <= CONSTANT_TOL * scale)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OscillationStats {
    pub omega_a: f64,
    pub omega_b: f64,
    pub omega_c: f64,
    /// `max_i |c_i - b_0|`
    pub omega_bc: f64,
    /// `max_i |c_i - b_i|`
    pub max_cb_gap: f64,
}

pub fn oscillation_stats(op: &PeriodicJacobiOperator) -> OscillationStats {
    let (a, b, c) = (op.a(), op.b(), op.c());
    OscillationStats {
        omega_a: oscillation(a).expect("nonempty"),
        omega_b: oscillation(b).expect("nonempty"),
        omega_c: oscillation(c).expect("nonempty"),
        omega_bc: c.iter().map(|ci| (ci - b[0]).abs()).fold(0.0, f64::max),
        max_cb_gap: b.iter().zip(c).map(|(bi, ci)| (ci - bi).abs()).fold(0.0, f64::max),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn illustration() -> PeriodicJacobiOperator {
        PeriodicJacobiOperator::new(
            vec![-1.0, -0.5, 0.0, 0.5, 1.0],
            vec![1.0, 1.25, 1.5, 1.75, 2.0],
            vec![-1.25, -1.5, -1.75, -2.0, -1.0],
        )
        .unwrap()
    }

    #[test]
    fn rejects_bad_input() {
        assert!(PeriodicJacobiOperator::new(vec![1.0], vec![1.0], vec![1.0]).unwrap_err().is_usage());
        let err = PeriodicJacobiOperator::new(vec![1.0, 2.0], vec![1.0], vec![1.0, 2.0]).unwrap_err();
        assert!(format!("{err}").contains("`b`"));
        let err = PeriodicJacobiOperator::with_period(3, vec![1.0; 3], vec![1.0; 3], vec![1.0; 2]).unwrap_err();
        assert!(format!("{err}").contains("`c`"));
        assert!(PeriodicJacobiOperator::new(vec![f64::NAN, 0.0], vec![1.0; 2], vec![1.0; 2]).is_err());
    }

    #[test]
    fn two_periodic_symbol_at_pi_cancels() {
        let op = PeriodicJacobiOperator::constant(2, 0.0, 1.0, 1.0).unwrap();
        let s = build_symbol(&op, PI);
        assert_eq!(s.theta, PI);
        assert_eq!(s.entries, CMatrix::zeros(2, 2));
    }

    #[test]
    fn two_periodic_symbol_sums_contributions() {
        let op = PeriodicJacobiOperator::new(vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]).unwrap();
        let t = 0.3f64;
        let m = build_symbol(&op, t).entries;
        let e = c(t.cos(), t.sin());
        assert_eq!(m[(0, 0)], c(1.0, 0.0));
        assert!((m[(0, 1)] - (c(3.0, 0.0) + e.conj() * 6.0)).norm() < 1e-15);
        assert!((m[(1, 0)] - (c(5.0, 0.0) + e * 4.0)).norm() < 1e-15);
    }

    #[test]
    fn illustration_symbol_at_zero() {
        let m = build_symbol(&illustration(), 0.0).entries;
        let want: [[f64; 5]; 5] = [
            [-1.0, 1.0, 0.0, 0.0, -1.0],
            [-1.25, -0.5, 1.25, 0.0, 0.0],
            [0.0, -1.5, 0.0, 1.5, 0.0],
            [0.0, 0.0, -1.75, 0.5, 1.75],
            [2.0, 0.0, 0.0, -2.0, 1.0],
        ];
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(m[(i, j)], c(want[i][j], 0.0), "({i},{j})");
            }
        }
    }

    #[test]
    fn normalization_range() {
        assert_eq!(normalize_theta(PI), PI);
        assert_eq!(normalize_theta(-PI), PI);
        assert!((normalize_theta(3.0 * PI) - PI).abs() < 1e-12);
        assert!((normalize_theta(0.5 + 4.0 * PI) - 0.5).abs() < 1e-12);
        assert_eq!(normalize_theta(-1.0), -1.0);
    }

    #[test]
    fn oscillation_examples() {
        assert_eq!(oscillation(&[-1.0, -0.5, 0.0, 0.5, 1.0]).unwrap(), 2.0);
        assert_eq!(oscillation(&[7.0, 7.0, 7.0]).unwrap(), 0.0);
        assert_eq!(oscillation(&[1.0, 1.25, 1.5, 1.75, 2.0]).unwrap(), 1.0);
        assert!(oscillation(&[]).unwrap_err().is_usage());
    }

    #[test]
    fn illustration_stats() {
        let s = oscillation_stats(&illustration());
        assert_eq!(s.omega_a, 2.0);
        assert_eq!(s.omega_b, 1.0);
        // c_i - b_0 ranges over -2.25 .. -3.0
        assert_eq!(s.omega_bc, 3.0);
        // |c_i - b_i|: 2.25, 2.75, 3.25, 3.75, 3.0
        assert_eq!(s.max_cb_gap, 3.75);
    }

    fn op_strategy() -> impl Strategy<Value = PeriodicJacobiOperator> {
        (2usize..=8).prop_flat_map(|p| {
            let v = || proptest::collection::vec(-5.0f64..5.0, p);
            (v(), v(), v()).prop_map(|(a, b, c)| PeriodicJacobiOperator::new(a, b, c).unwrap())
        })
    }

    proptest! {
        #[test]
        fn oscillation_is_max_pairwise_gap(v in proptest::collection::vec(-1e3f64..1e3, 1..30)) {
            let mut pairwise = 0.0f64;
            for x in &v {
                for y in &v {
                    pairwise = pairwise.max((x - y).abs());
                }
            }
            prop_assert_eq!(oscillation(&v).unwrap(), pairwise);
        }

        #[test]
        fn symbol_is_two_pi_periodic(op in op_strategy(), t in -PI..PI) {
            let m1 = build_symbol(&op, t).entries;
            let m2 = build_symbol(&op, t + 2.0 * PI).entries;
            prop_assert!((&m1 - &m2).max_abs() <= 1e-13 * (1.0 + op.max_abs_coefficient()));
        }

        #[test]
        fn self_adjoint_operator_gives_hermitian_symbol(
            a in proptest::collection::vec(-5.0f64..5.0, 3),
            b in proptest::collection::vec(-5.0f64..5.0, 3),
            t in -PI..PI,
        ) {
            let op = PeriodicJacobiOperator::new(a, b.clone(), b).unwrap();
            prop_assert!(op.is_self_adjoint());
            prop_assert!(crate::linalg::is_hermitian(&build_symbol(&op, t).entries, 1e-15));
        }
    }
}
