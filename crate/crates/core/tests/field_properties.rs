use borgspec_core::connectivity::{decide_connectedness, label_components, GridChoice, Verdict};
use borgspec_core::field::{compute_field, GridSpec, SymbolSchurSet};
use borgspec_core::linalg::LanczosWorkspace;
use borgspec_core::operator::PeriodicJacobiOperator;
use borgspec_core::spectral::{hausdorff_distance, sample_spectrum};
use borgspec_core::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn operator(max_p: usize) -> impl Strategy<Value = PeriodicJacobiOperator> {
    (2..=max_p).prop_flat_map(|p| {
        let v = move || proptest::collection::vec(-3.0f64..3.0, p);
        (v(), v(), v()).prop_map(|(a, b, c)| PeriodicJacobiOperator::new(a, b, c).unwrap())
    })
}

fn random_operator(rng: &mut ChaCha8Rng, p: usize) -> PeriodicJacobiOperator {
    let mut v = || (0..p).map(|_| rng.random_range(-2.0..2.0)).collect::<Vec<f64>>();
    PeriodicJacobiOperator::new(v(), v(), v()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn psi_is_one_lipschitz(op in operator(6), pts in proptest::collection::vec((-6.0f64..6.0, -6.0f64..6.0), 20)) {
        let set = SymbolSchurSet::new(&op, 64).unwrap();
        let mut ws = LanczosWorkspace::default();
        let zs: Vec<Complex64> = pts.iter().map(|&(x, y)| Complex64::new(x, y)).collect();
        let psi: Vec<f64> = zs.iter().map(|&z| set.psi(z, &mut ws)).collect();
        for i in 0..zs.len() {
            for j in 0..i {
                prop_assert!((psi[i] - psi[j]).abs() <= (zs[i] - zs[j]).norm() + 1e-10);
            }
        }
    }

    #[test]
    fn diagonal_perturbation_sandwich(op in operator(5), d in proptest::collection::vec(-0.5f64..0.5, 5)) {
        let p = op.period();
        let pert = op.with_diagonal_added(&d[..p]).unwrap();
        let norm = d[..p].iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let grid = GridSpec::new(-5.0, 5.0, -5.0, 5.0, 21, 21).unwrap();
        let f0 = compute_field(&op, &grid, 48).unwrap();
        let f1 = compute_field(&pert, &grid, 48).unwrap();
        for (x, y) in f0.psi.iter().zip(&f1.psi) {
            prop_assert!((x - y).abs() <= norm + 1e-10);
        }
    }

    #[test]
    fn real_shift_translates_spectrum_and_field(op in operator(5), s in -3.0f64..3.0) {
        let moved = op.shifted(s);
        let a = sample_spectrum(&op, 32).unwrap();
        let b = sample_spectrum(&moved, 32).unwrap();
        let scale = 1.0 + op.max_abs_coefficient() + s.abs();
        // per angle, as sets: a shift can reorder eigenvalues with near-equal real parts,
        // and nearly defective ones move by about the square root of rounding
        let p = op.period();
        for (x, y) in a.points.chunks(p).zip(b.points.chunks(p)) {
            prop_assert_eq!(x[0].0, y[0].0);
            let moved: Vec<Complex64> = x.iter().map(|&(_, z)| z + s).collect();
            let other: Vec<Complex64> = y.iter().map(|&(_, z)| z).collect();
            prop_assert!(hausdorff_distance(&moved, &other) <= 1e-6 * scale);
        }
        let g0 = GridSpec::new(-4.0, 4.0, -3.0, 3.0, 17, 13).unwrap();
        let g1 = GridSpec::new(-4.0 + s, 4.0 + s, -3.0, 3.0, 17, 13).unwrap();
        let f0 = compute_field(&op, &g0, 32).unwrap();
        let f1 = compute_field(&moved, &g1, 32).unwrap();
        for (x, y) in f0.psi.iter().zip(&f1.psi) {
            prop_assert!((x - y).abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn sublevel_labels_are_nested(op in operator(5), e1 in 0.05f64..1.0, factor in 1.0f64..3.0) {
        let grid = GridSpec::new(-7.0, 7.0, -7.0, 7.0, 41, 41).unwrap();
        let field = compute_field(&op, &grid, 48).unwrap();
        let e2 = e1 * factor;
        let r1 = label_components(&field, e1).unwrap();
        let r2 = label_components(&field, e2).unwrap();
        let mut image = vec![0u32; r1.component_count + 1];
        for (&l1, &l2) in r1.labels.iter().zip(&r2.labels) {
            if l1 > 0 {
                prop_assert!(l2 > 0);
                if image[l1 as usize] == 0 {
                    image[l1 as usize] = l2;
                }
                prop_assert_eq!(image[l1 as usize], l2);
            }
        }
        if r1.component_count > 0 {
            prop_assert!(r2.component_count <= r1.component_count);
        }
        prop_assert_eq!(label_components(&field, e1).unwrap(), r1);
    }
}

#[test]
fn refining_the_grid_never_flips_a_wide_margin_verdict() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut checked = 0;
    for _ in 0..12 {
        let p = rng.random_range(2..=4);
        let op = random_operator(&mut rng, p);
        let eps = rng.random_range(0.1..1.0);
        let coarse = decide_connectedness(&op, eps, GridChoice::Auto { nx: 60, ny: 60 }, 64, 3).unwrap();
        if coarse.verdict == Verdict::Indeterminate || coarse.boundary_margin <= 2.0 * coarse.grid_spacing() {
            continue;
        }
        let fine = decide_connectedness(&op, eps, GridChoice::Auto { nx: 120, ny: 120 }, 64, 3).unwrap();
        checked += 1;
        let flipped = matches!(
            (coarse.verdict, fine.verdict),
            (Verdict::Connected, Verdict::Disconnected) | (Verdict::Disconnected, Verdict::Connected)
        );
        assert!(!flipped, "p={p} eps={eps}: {:?} -> {:?}", coarse.verdict, fine.verdict);
    }
    assert!(checked >= 4, "only {checked} instances had a wide margin");
}

#[test]
fn decisions_are_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..4 {
        let op = random_operator(&mut rng, 3);
        let a = decide_connectedness(&op, 0.3, GridChoice::Auto { nx: 50, ny: 50 }, 64, 3).unwrap();
        let b = decide_connectedness(&op, 0.3, GridChoice::Auto { nx: 50, ny: 50 }, 64, 3).unwrap();
        assert_eq!(a, b);
    }
}
