//! Case classification and the normal-plus-perturbation splits of the symbol.
//!
//! Every summand is itself a Jacobi-pattern matrix (diagonal, super, sub and
//! the two phase corners), so each is stored as three sequences and built by
//! the same routine as the symbol.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{spectral_norm, CMatrix};
use crate::operator::{
    is_constant, jacobi_symbol, oscillation_stats, PeriodicJacobiOperator, CONSTANT_TOL,
};

/// Which split of the symbol applies.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CaseTag {
    /// `b` and `c` both constant.
    ConstantOffDiag,
    /// `c_i - b_i = k` for every `i`.
    ConstantDifference { k: f64 },
    General,
    /// First-order finite-difference shape `c_j = -b_{j+1}`.
    FirstOrderFd,
}

impl CaseTag {
    pub fn name(&self) -> &'static str {
        match self {
            CaseTag::ConstantOffDiag => "constant-off-diagonal",
            CaseTag::ConstantDifference { .. } => "constant-difference",
            CaseTag::General => "general",
            CaseTag::FirstOrderFd => "first-order-fd",
        }
    }
}

/// Classifies by off-diagonal structure; constant off-diagonals win over a
/// constant difference. Never returns `FirstOrderFd`, see
/// [`is_first_order_fd`].
pub fn classify_case(op: &PeriodicJacobiOperator) -> CaseTag {
    if is_constant(op.b()) && is_constant(op.c()) {
        return CaseTag::ConstantOffDiag;
    }
    let diff: Vec<f64> = op.c().iter().zip(op.b()).map(|(c, b)| c - b).collect();
    let scale = 1.0 + op.b().iter().chain(op.c()).fold(0.0f64, |m, x| m.max(x.abs()));
    if diff.iter().all(|d| (d - diff[0]).abs() <= CONSTANT_TOL * scale) {
        return CaseTag::ConstantDifference { k: diff[0] };
    }
    CaseTag::General
}

/// True when `c_j = -b_{(j+1) mod p}` for all `j`.
pub fn is_first_order_fd(op: &PeriodicJacobiOperator) -> bool {
    let p = op.period();
    let scale = 1.0 + op.max_abs_coefficient();
    (0..p).all(|j| (op.c()[j] + op.b()[(j + 1) % p]).abs() <= CONSTANT_TOL * scale)
}

/// One Jacobi-pattern summand of the symbol.
#[derive(Clone, Debug, PartialEq)]
pub struct JacobiPart {
    pub name: &'static str,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl JacobiPart {
    /// The summand at `theta`.
    pub fn at(&self, theta: f64) -> CMatrix {
        jacobi_symbol(&self.a, &self.b, &self.c, theta)
    }

    pub fn norm_at(&self, theta: f64) -> f64 {
        spectral_norm(&self.at(theta))
    }

    pub fn is_zero(&self) -> bool {
        self.a.iter().chain(&self.b).chain(&self.c).all(|&x| x == 0.0)
    }
}

/// Symbol split into a normal summand plus perturbations.
#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition {
    pub case: CaseTag,
    /// `a_0`; already folded into `normal_part`.
    pub shift: f64,
    /// Normal at every angle, includes `a_0 I`.
    pub normal_part: JacobiPart,
    pub perturbation_parts: Vec<JacobiPart>,
    /// Self-adjoint part of the converse split.
    pub converse_self_adjoint: JacobiPart,
    /// Weighted cyclic shift with entries `c_i - b_i`; norm `max_i |c_i - b_i|`.
    pub converse_perturbation: JacobiPart,
}

impl Decomposition {
    /// Sum of the normal part and every perturbation at `theta`.
    pub fn reconstruct(&self, theta: f64) -> CMatrix {
        self.perturbation_parts
            .iter()
            .fold(self.normal_part.at(theta), |acc, part| &acc + &part.at(theta))
    }

    /// The perturbation whose norm sets the forward threshold.
    pub fn bounded_part(&self) -> &JacobiPart {
        self.perturbation_parts.last().expect("at least one perturbation")
    }

    /// Converse split reconstructed at `theta`.
    pub fn reconstruct_converse(&self, theta: f64) -> CMatrix {
        &self.converse_self_adjoint.at(theta) + &self.converse_perturbation.at(theta)
    }
}

fn check_case(op: &PeriodicJacobiOperator, case: CaseTag) -> Result<()> {
    let ok = match case {
        CaseTag::ConstantOffDiag => is_constant(op.b()) && is_constant(op.c()),
        CaseTag::ConstantDifference { k } => {
            let scale = 1.0 + op.max_abs_coefficient().max(k.abs());
            op.c()
                .iter()
                .zip(op.b())
                .all(|(c, b)| (c - b - k).abs() <= CONSTANT_TOL * scale)
        }
        CaseTag::General => true,
        CaseTag::FirstOrderFd => is_first_order_fd(op),
    };
    if ok {
        Ok(())
    } else {
        Err(Error::usage(format!(
            "operator does not satisfy the {} hypothesis",
            case.name()
        )))
    }
}

/// Splits the symbol according to `case`.
pub fn decompose(op: &PeriodicJacobiOperator, case: CaseTag) -> Result<Decomposition> {
    check_case(op, case)?;
    let p = op.period();
    let (a, b, c) = (op.a(), op.b(), op.c());
    let a0 = a[0];
    let b0 = b[0];
    let minus = |v: &[f64], s: f64| -> Vec<f64> { v.iter().map(|x| x - s).collect() };
    let zeros = vec![0.0; p];

    let (normal_part, perturbation_parts) = match case {
        CaseTag::ConstantOffDiag => (
            JacobiPart {
                name: "f",
                a: vec![a0; p],
                b: vec![b0; p],
                c: vec![c[0]; p],
            },
            vec![JacobiPart {
                name: "E",
                a: minus(a, a0),
                b: zeros.clone(),
                c: zeros.clone(),
            }],
        ),
        CaseTag::ConstantDifference { k } => (
            // a_0 I + f_1 + f_2
            JacobiPart {
                name: "a0+f1+f2",
                a: vec![a0; p],
                b: vec![b0; p],
                c: vec![b0 + k; p],
            },
            vec![JacobiPart {
                name: "f3",
                a: minus(a, a0),
                b: minus(b, b0),
                c: minus(b, b0),
            }],
        ),
        CaseTag::General | CaseTag::FirstOrderFd => (
            JacobiPart {
                name: "a0+f1",
                a: vec![a0; p],
                b: vec![b0; p],
                c: vec![b0; p],
            },
            vec![JacobiPart {
                name: "f2",
                a: minus(a, a0),
                b: minus(b, b0),
                c: minus(c, b0),
            }],
        ),
    };

    Ok(Decomposition {
        case,
        shift: a0,
        normal_part,
        perturbation_parts,
        converse_self_adjoint: JacobiPart {
            name: "f1",
            a: a.to_vec(),
            b: b.to_vec(),
            c: b.to_vec(),
        },
        converse_perturbation: JacobiPart {
            name: "f2",
            a: zeros.clone(),
            b: zeros,
            c: c.iter().zip(b).map(|(c, b)| c - b).collect(),
        },
    })
}

/// Closed-form bound on the norm of the bounded perturbation.
///
/// * constant off-diagonals: `omega_a` (bounds `||E||`)
/// * constant difference: `sqrt((p-1)(omega_a^2 + 2 omega_b^2))`
/// * general: `sqrt((p-1)(omega_a^2 + omega_b^2 + omega_bc^2))`
/// * first-order FD: `sqrt((p-1)(omega_a^2 + omega_b^2 + max|b_i + b_{i+1}| + 4 b_0^2))`
pub fn frobenius_bound(op: &PeriodicJacobiOperator, case: CaseTag) -> f64 {
    let s = oscillation_stats(op);
    let pm1 = (op.period() - 1) as f64;
    match case {
        CaseTag::ConstantOffDiag => s.omega_a,
        CaseTag::ConstantDifference { .. } => (pm1 * (s.omega_a.powi(2) + 2.0 * s.omega_b.powi(2))).sqrt(),
        CaseTag::General => (pm1 * (s.omega_a.powi(2) + s.omega_b.powi(2) + s.omega_bc.powi(2))).sqrt(),
        CaseTag::FirstOrderFd => {
            let b = op.b();
            let p = b.len();
            let adj = (0..p).map(|i| (b[i] + b[(i + 1) % p]).abs()).fold(0.0, f64::max);
            (pm1 * (s.omega_a.powi(2) + s.omega_b.powi(2) + adj + 4.0 * b[0] * b[0])).sqrt()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::commutator_norm;
    use crate::operator::build_symbol;
    use core::f64::consts::PI;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn op(a: &[f64], b: &[f64], c: &[f64]) -> PeriodicJacobiOperator {
        PeriodicJacobiOperator::new(a.to_vec(), b.to_vec(), c.to_vec()).unwrap()
    }

    fn illustration() -> PeriodicJacobiOperator {
        op(
            &[-1.0, -0.5, 0.0, 0.5, 1.0],
            &[1.0, 1.25, 1.5, 1.75, 2.0],
            &[-1.25, -1.5, -1.75, -2.0, -1.0],
        )
    }

    fn thetas(n: usize) -> impl Iterator<Item = f64> {
        (1..=n).map(move |j| -PI + 2.0 * PI * j as f64 / n as f64)
    }

    #[test]
    fn classification_examples() {
        assert_eq!(classify_case(&op(&[0.0, 1.0], &[1.0, 1.0], &[3.0, 3.0])), CaseTag::ConstantOffDiag);
        assert_eq!(
            classify_case(&op(&[0.0, 0.0], &[1.0, 2.0], &[4.0, 5.0])),
            CaseTag::ConstantDifference { k: 3.0 }
        );
        assert_eq!(classify_case(&illustration()), CaseTag::General);
        assert!(is_first_order_fd(&illustration()));
        // both constant and constant difference: off-diagonal wins
        assert_eq!(classify_case(&op(&[0.0; 3], &[1.0; 3], &[2.0; 3])), CaseTag::ConstantOffDiag);
    }

    #[test]
    fn inconsistent_case_is_rejected() {
        let e = decompose(&illustration(), CaseTag::ConstantOffDiag).unwrap_err();
        assert!(e.is_usage());
        assert!(decompose(&illustration(), CaseTag::ConstantDifference { k: 1.0 }).is_err());
        assert!(decompose(&op(&[0.0; 3], &[1.0, 2.0, 3.0], &[1.0; 3]), CaseTag::FirstOrderFd).is_err());
    }

    #[test]
    fn constant_operator_has_zero_perturbations() {
        let o = PeriodicJacobiOperator::constant(4, 0.5, 1.0, -2.0).unwrap();
        let d = decompose(&o, classify_case(&o)).unwrap();
        for part in &d.perturbation_parts {
            assert!(part.is_zero());
            assert_eq!(part.at(0.7), CMatrix::zeros(4, 4));
        }
        assert_eq!(frobenius_bound(&o, CaseTag::ConstantDifference { k: -3.0 }), 0.0);
    }

    #[test]
    fn constant_difference_shapes() {
        let o = op(&[0.0, 1.0, -1.0], &[1.0, 1.5, 2.0], &[3.0, 3.5, 4.0]);
        let case = classify_case(&o);
        assert_eq!(case, CaseTag::ConstantDifference { k: 2.0 });
        let d = decompose(&o, case).unwrap();
        let t = 0.4f64;
        let e = Complex64::new(t.cos(), t.sin());
        // a0 + f1 + f2: b0 above, b0 + k below, (b0 + k) e^{-i t} top-right
        let n = d.normal_part.at(t);
        assert_eq!(n[(0, 1)], Complex64::new(1.0, 0.0));
        assert_eq!(n[(1, 0)], Complex64::new(3.0, 0.0));
        assert!((n[(0, 2)] - e.conj() * 3.0).norm() < 1e-15);
        assert!((n[(2, 0)] - e * 1.0).norm() < 1e-15);
        // f3 collects a and b differences, symmetric pattern
        let f3 = d.bounded_part().at(t);
        assert_eq!(f3[(1, 1)], Complex64::new(1.0, 0.0));
        assert_eq!(f3[(1, 2)], Complex64::new(0.5, 0.0));
        assert_eq!(f3[(2, 1)], Complex64::new(0.5, 0.0));
        assert!((f3[(2, 0)] - e * 1.0).norm() < 1e-15);
        assert!((f3[(0, 2)] - e.conj() * 1.0).norm() < 1e-15);
    }

    #[test]
    fn illustration_f2_at_zero() {
        let d = decompose(&illustration(), CaseTag::FirstOrderFd).unwrap();
        let f2 = d.bounded_part().at(0.0);
        // first row: only the corner -2 b_0
        let want: [[f64; 5]; 5] = [
            [0.0, 0.0, 0.0, 0.0, -2.0],
            [-2.25, 0.5, 0.25, 0.0, 0.0],
            [0.0, -2.5, 1.0, 0.5, 0.0],
            [0.0, 0.0, -2.75, 1.5, 0.75],
            [1.0, 0.0, 0.0, -3.0, 2.0],
        ];
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(f2[(i, j)], Complex64::new(want[i][j], 0.0), "({i},{j})");
            }
        }
    }

    #[test]
    fn converse_norms() {
        let o = op(&[0.0, 2.0, -1.0], &[1.0; 3], &[3.0; 3]);
        let d = decompose(&o, CaseTag::ConstantOffDiag).unwrap();
        for t in thetas(16) {
            assert!((d.converse_perturbation.norm_at(t) - 2.0).abs() < 1e-12);
            assert!(crate::linalg::is_hermitian(&d.converse_self_adjoint.at(t), 0.0));
        }
        let g = illustration();
        let d = decompose(&g, CaseTag::General).unwrap();
        for t in thetas(16) {
            assert!((d.converse_perturbation.norm_at(t) - 3.75).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_difference_bound_example() {
        // p = 3, omega_a = 1, omega_b = 0.5, constant difference
        let o = op(&[0.0, 1.0, 0.5], &[1.0, 1.5, 1.25], &[2.0, 2.5, 2.25]);
        let case = classify_case(&o);
        assert!(matches!(case, CaseTag::ConstantDifference { .. }));
        let bound = frobenius_bound(&o, case);
        assert!((bound - 3f64.sqrt()).abs() < 1e-15);
        let d = decompose(&o, case).unwrap();
        let sampled = thetas(256).map(|t| d.bounded_part().norm_at(t)).fold(0.0, f64::max);
        assert!(sampled <= bound);
    }

    #[test]
    fn first_order_bound_dominates_on_illustration() {
        let o = illustration();
        let bound = frobenius_bound(&o, CaseTag::FirstOrderFd);
        let d = decompose(&o, CaseTag::FirstOrderFd).unwrap();
        let sampled = thetas(256).map(|t| d.bounded_part().norm_at(t)).fold(0.0, f64::max);
        assert!(sampled <= bound, "{sampled} > {bound}");
    }

    #[test]
    fn general_bound_fails_for_two_periodic_overlap() {
        // With p = 2 the corner and the sub-diagonal share an entry, so the
        // c-differences can add up: a = 0, b = [0, 1], c = [1, 0] gives
        // f2(0) = [[0, 0], [2, 0]] with norm 2 while the bound is sqrt(2).
        let o = op(&[0.0, 0.0], &[0.0, 1.0], &[1.0, 0.0]);
        let d = decompose(&o, CaseTag::General).unwrap();
        assert!((d.bounded_part().norm_at(0.0) - 2.0).abs() < 1e-14);
        assert!((frobenius_bound(&o, CaseTag::General) - 2f64.sqrt()).abs() < 1e-15);
    }

    fn op_strategy(pmin: usize) -> impl Strategy<Value = PeriodicJacobiOperator> {
        (pmin..=8usize).prop_flat_map(|p| {
            let v = || proptest::collection::vec(-5.0f64..5.0, p);
            (v(), v(), v()).prop_map(|(a, b, c)| PeriodicJacobiOperator::new(a, b, c).unwrap())
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn parts_reconstruct_symbol(o in op_strategy(2)) {
            let mut cases = vec![classify_case(&o), CaseTag::General];
            if is_first_order_fd(&o) {
                cases.push(CaseTag::FirstOrderFd);
            }
            for case in cases {
                let d = decompose(&o, case).unwrap();
                for t in thetas(16) {
                    let phi = build_symbol(&o, t).entries;
                    let tol = 1e-12 * (1.0 + phi.frobenius_norm());
                    prop_assert!((&d.reconstruct(t) - &phi).frobenius_norm() <= tol);
                    prop_assert!((&d.reconstruct_converse(t) - &phi).frobenius_norm() <= tol);
                    prop_assert!(commutator_norm(&d.normal_part.at(t)) <= 1e-10);
                }
            }
        }

        #[test]
        fn general_bound_dominates_without_overlap(o in op_strategy(3)) {
            let d = decompose(&o, CaseTag::General).unwrap();
            let bound = frobenius_bound(&o, CaseTag::General);
            for t in thetas(16) {
                prop_assert!(d.bounded_part().norm_at(t) <= bound * (1.0 + 1e-12));
            }
        }

        #[test]
        fn constant_difference_bound_dominates(
            a in proptest::collection::vec(-5.0f64..5.0, 2..=8),
            k in -5.0f64..5.0,
            seed in proptest::collection::vec(-5.0f64..5.0, 8),
        ) {
            let p = a.len();
            let b: Vec<f64> = seed[..p].to_vec();
            let c: Vec<f64> = b.iter().map(|x| x + k).collect();
            let o = PeriodicJacobiOperator::new(a, b, c).unwrap();
            let case = classify_case(&o);
            let d = decompose(&o, case).unwrap();
            let bound = frobenius_bound(&o, case);
            for t in thetas(16) {
                prop_assert!(d.bounded_part().norm_at(t) <= bound * (1.0 + 1e-12) + 1e-12);
            }
        }

        #[test]
        fn constant_offdiag_forward_part_is_normal(
            a in proptest::collection::vec(-5.0f64..5.0, 2..=8),
            b in -5.0f64..5.0,
            c in -5.0f64..5.0,
        ) {
            let p = a.len();
            let o = PeriodicJacobiOperator::new(a, vec![b; p], vec![c; p]).unwrap();
            let d = decompose(&o, CaseTag::ConstantOffDiag).unwrap();
            let bound = frobenius_bound(&o, CaseTag::ConstantOffDiag);
            for t in thetas(16) {
                prop_assert!(commutator_norm(&d.normal_part.at(t)) <= 1e-10);
                prop_assert!(d.bounded_part().norm_at(t) <= bound + 1e-12);
            }
        }
    }
}
