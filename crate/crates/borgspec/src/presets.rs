//! Bundled example operators.

use borgspec_core::operator::PeriodicJacobiOperator;

pub const PAPER_ILLUSTRATION: &str = "paper-illustration";

pub const NAMES: [&str; 1] = [PAPER_ILLUSTRATION];

/// Period-5 first-order stencil `-b_{j+1}, a_j, b_j` with
/// `a = [-1, -0.5, 0, 0.5, 1]` and `b = [1, 1.25, 1.5, 1.75, 2]`.
/// Its spectrum splits into several pieces while the pseudospectrum at
/// the forward threshold is connected.
pub fn paper_illustration() -> PeriodicJacobiOperator {
    let a = vec![-1.0, -0.5, 0.0, 0.5, 1.0];
    let b = vec![1.0, 1.25, 1.5, 1.75, 2.0];
    let c = (0..5).map(|j| -b[(j + 1) % 5]).collect();
    PeriodicJacobiOperator::new(a, b, c).expect("valid preset")
}

pub fn lookup(name: &str) -> Option<PeriodicJacobiOperator> {
    match name {
        PAPER_ILLUSTRATION => Some(paper_illustration()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use borgspec_core::decompose::is_first_order_fd;
    use borgspec_core::fdm::{discretize_first_order, Coefficient, OdeOrder, OdeProblem};

    #[test]
    fn preset_is_first_order_stencil() {
        let op = paper_illustration();
        assert!(is_first_order_fd(&op));
        let b = op.b().to_vec();
        let g2 = op.a().iter().map(|a| a * 2.5).collect();
        let prob = OdeProblem::new(OdeOrder::First, 5, Coefficient::Samples(b), Coefficient::Samples(g2)).unwrap();
        let fd = discretize_first_order(&prob).unwrap();
        assert_eq!(fd.b(), op.b());
        assert_eq!(fd.c(), op.c());
        for (x, y) in fd.a().iter().zip(op.a()) {
            assert!((x - y).abs() < 1e-15);
        }
        assert!(lookup("nope").is_none());
    }
}
