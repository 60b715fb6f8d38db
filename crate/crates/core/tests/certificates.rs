use borgspec_core::borg::{
    forward_threshold, verify_all, verify_forward, verify_norm_bound, verify_selfadjoint_gaps, CertStatus, VerifyOptions,
};
use borgspec_core::connectivity::GridChoice;
use borgspec_core::decompose::{classify_case, is_first_order_fd, CaseTag};
use borgspec_core::field::Sequential;
use borgspec_core::operator::{oscillation_stats, PeriodicJacobiOperator};
use borgspec_core::spectral::bands_and_gaps;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug)]
enum Draw {
    ConstantOffDiag,
    ConstantDifference,
    General,
    FirstOrder,
}

fn draw(rng: &mut ChaCha8Rng, kind: Draw) -> PeriodicJacobiOperator {
    let p = rng.random_range(2..=6);
    let mut v = || (0..p).map(|_| rng.random_range(-3.0..3.0)).collect::<Vec<f64>>();
    let a = v();
    let b = v();
    let c = v();
    let (b, c) = match kind {
        Draw::ConstantOffDiag => (vec![b[0]; p], vec![c[0]; p]),
        Draw::ConstantDifference => {
            let k = c[0] - b[0];
            let c = b.iter().map(|x| x + k).collect();
            (b, c)
        }
        Draw::General => (b, c),
        Draw::FirstOrder => {
            let c = (0..p).map(|j| -b[(j + 1) % p]).collect();
            (b, c)
        }
    };
    PeriodicJacobiOperator::new(a, b, c).unwrap()
}

#[test]
fn forward_sweep_has_no_confirmed_disconnection() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let grid = GridChoice::Auto { nx: 48, ny: 48 };
    let mut counts = [0usize; 5];
    for kind in [Draw::ConstantOffDiag, Draw::ConstantDifference, Draw::General, Draw::FirstOrder] {
        for i in 0..50 {
            let op = draw(&mut rng, kind);
            match kind {
                Draw::ConstantOffDiag => assert_eq!(classify_case(&op), CaseTag::ConstantOffDiag),
                Draw::FirstOrder => assert!(is_first_order_fd(&op)),
                _ => {}
            }
            let cert = verify_forward(&op, 64, grid).unwrap();
            assert_ne!(cert.status, CertStatus::Alarm, "{kind:?} #{i}: {op:?} {:?}", cert.connectivity);
            counts[cert.status as usize] += 1;
        }
    }
    // most draws decide outright
    assert!(counts[CertStatus::Pass as usize] >= 150, "{counts:?}");
}

#[test]
fn gap_inequalities_hold_on_self_adjoint_draws() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let p = rng.random_range(2..=6);
        let a: Vec<f64> = (0..p).map(|_| rng.random_range(-3.0..3.0)).collect();
        let b: Vec<f64> = (0..p).map(|_| rng.random_range(0.1..3.0)).collect();
        let op = PeriodicJacobiOperator::new(a, b.clone(), b).unwrap();
        for cert in verify_selfadjoint_gaps(&op, 512).unwrap() {
            assert!(cert.inequality_holds, "{}: {} > {}", cert.statement.id(), cert.lhs, cert.rhs);
        }
    }
}

#[test]
fn scaling_scales_measurements_and_keeps_verdicts() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for i in 0..30 {
        let kind = [Draw::ConstantDifference, Draw::General, Draw::FirstOrder][i % 3];
        let op = draw(&mut rng, kind);
        let s = rng.random_range(0.25..4.0);
        let big = op.scaled(s);
        let (o, g) = (oscillation_stats(&op), oscillation_stats(&big));
        for (x, y) in [(o.omega_a, g.omega_a), (o.omega_b, g.omega_b), (o.omega_c, g.omega_c), (o.max_cb_gap, g.max_cb_gap)] {
            assert!((x * s - y).abs() <= 1e-12 * (1.0 + y));
        }
        let case = classify_case(&op);
        let case_big = classify_case(&big);
        assert_eq!(std::mem::discriminant(&case), std::mem::discriminant(&case_big));
        let (t0, t1) = (forward_threshold(&op, case, 64).unwrap(), forward_threshold(&big, case_big, 64).unwrap());
        assert!((t0 * s - t1).abs() <= 1e-10 * (1.0 + t1));
        if matches!(case, CaseTag::ConstantDifference { .. } | CaseTag::General) {
            let (c0, c1) = (verify_norm_bound(&op, 64).unwrap(), verify_norm_bound(&big, 64).unwrap());
            assert_eq!(c0.inequality_holds, c1.inequality_holds);
        }
        let sa = PeriodicJacobiOperator::new(op.a().to_vec(), op.b().to_vec(), op.b().to_vec()).unwrap();
        let (r0, r1) = (bands_and_gaps(&sa, 256).unwrap(), bands_and_gaps(&sa.scaled(s), 256).unwrap());
        assert!((r0.gamma_total * s - r1.gamma_total).abs() <= 1e-9 * (1.0 + r1.gamma_total));
        let (v0, v1) = (verify_selfadjoint_gaps(&sa, 256).unwrap(), verify_selfadjoint_gaps(&sa.scaled(s), 256).unwrap());
        for (x, y) in v0.iter().zip(&v1) {
            assert_eq!(x.inequality_holds, y.inequality_holds);
        }
    }
}

#[test]
fn certificates_are_reproducible() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let opts = VerifyOptions {
        theta_count: 64,
        band_theta_count: 256,
        grid: GridChoice::Auto { nx: 60, ny: 60 },
        epsilon: None,
    };
    for kind in [Draw::General, Draw::FirstOrder] {
        let op = draw(&mut rng, kind);
        let a = verify_all(&op, &opts, &Sequential).unwrap();
        let b = verify_all(&op, &opts, &Sequential).unwrap();
        assert_eq!(a, b);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.lhs.to_bits(), y.lhs.to_bits());
            assert_eq!(x.rhs.to_bits(), y.rhs.to_bits());
        }
    }
}
