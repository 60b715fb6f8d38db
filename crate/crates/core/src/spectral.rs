//! Spectrum sampling, closed-form eigensystems of the circulant-like
//! building blocks, and band/gap extraction for self-adjoint operators.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{eig_dense, eigenvalues, sort_complex, CMatrix};
use crate::operator::{build_symbol, cis, jacobi_symbol, PeriodicJacobiOperator};

/// Default angle count for fields.
pub const DEFAULT_FIELD_THETAS: usize = 256;
/// Default angle count for band extraction.
pub const DEFAULT_BAND_THETAS: usize = 1024;

/// `theta_j = -pi + 2 pi j / n` for `j = 1..=n`; covers (-pi, pi].
pub fn theta_grid(n: usize) -> Vec<f64> {
    (1..=n)
        .map(|j| if j == n { PI } else { -PI + 2.0 * PI * j as f64 / n as f64 })
        .collect()
}

/// Circulant-type model blocks with closed-form eigensystems.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelBlock {
    /// `alpha` on both off-diagonals, `alpha e^{-i theta}` / `alpha e^{i theta}` corners.
    F,
    /// `k` on the sub-diagonal and `k e^{-i theta}` in the top-right corner.
    G,
    FPlusG,
}

fn check_p(p: usize) -> Result<()> {
    if p < 2 {
        return Err(Error::usage(format!("block size must be at least 2, got {p}")));
    }
    Ok(())
}

/// The explicit `p x p` matrix of a model block.
pub fn model_block_matrix(alpha: f64, k: f64, p: usize, theta: f64, which: ModelBlock) -> Result<CMatrix> {
    check_p(p)?;
    let (b, c) = match which {
        ModelBlock::F => (alpha, alpha),
        ModelBlock::G => (0.0, k),
        ModelBlock::FPlusG => (alpha, alpha + k),
    };
    Ok(jacobi_symbol(&vec![0.0; p], &vec![b; p], &vec![c; p], theta))
}

/// `lambda_r = e^{i(2 r pi - theta)/p}` with eigenvectors `[lambda^{p-1}, ..., lambda, 1]`.
#[derive(Clone, Debug)]
pub struct ClosedFormEigensystem {
    pub alpha: f64,
    pub k: f64,
    pub p: usize,
    pub theta: f64,
    pub lambdas: Vec<Complex64>,
    pub eigenvectors: Vec<Vec<Complex64>>,
}

impl ClosedFormEigensystem {
    pub fn new(alpha: f64, k: f64, p: usize, theta: f64) -> Result<Self> {
        check_p(p)?;
        let lambdas: Vec<Complex64> = (0..p)
            .map(|r| cis((2.0 * PI * r as f64 - theta) / p as f64))
            .collect();
        let eigenvectors = lambdas
            .iter()
            .map(|l| (0..p).map(|i| l.powi((p - 1 - i) as i32)).collect())
            .collect();
        Ok(ClosedFormEigensystem {
            alpha,
            k,
            p,
            theta,
            lambdas,
            eigenvectors,
        })
    }

    /// Eigenvalue of `which` paired with `lambdas[r]`.
    pub fn eigenvalue(&self, which: ModelBlock, r: usize) -> Complex64 {
        let l = self.lambdas[r];
        match which {
            ModelBlock::F => l * self.alpha + l.inv() * self.alpha,
            ModelBlock::G => l * self.k,
            ModelBlock::FPlusG => l * (self.alpha + self.k) + l.inv() * self.alpha,
        }
    }

    /// Largest `||M z_r - mu_r z_r||` against the explicitly built matrix.
    pub fn max_residual(&self, which: ModelBlock) -> f64 {
        let m = model_block_matrix(self.alpha, self.k, self.p, self.theta, which).expect("p checked");
        (0..self.p)
            .map(|r| {
                let z = &self.eigenvectors[r];
                let mu = self.eigenvalue(which, r);
                m.mul_vec(z)
                    .iter()
                    .zip(z)
                    .map(|(a, b)| (a - mu * b).norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }
}

/// Closed-form spectrum of a model block, sorted by (re, im).
pub fn closed_form_spectrum(alpha: f64, k: f64, p: usize, theta: f64, which: ModelBlock) -> Result<Vec<Complex64>> {
    let sys = ClosedFormEigensystem::new(alpha, k, p, theta)?;
    let mut out: Vec<Complex64> = (0..p).map(|r| sys.eigenvalue(which, r)).collect();
    sort_complex(&mut out);
    Ok(out)
}

/// Symmetric Hausdorff distance between two finite point sets.
pub fn hausdorff_distance(x: &[Complex64], y: &[Complex64]) -> f64 {
    let directed = |u: &[Complex64], v: &[Complex64]| {
        u.iter()
            .map(|a| v.iter().map(|b| (a - b).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    directed(x, y).max(directed(y, x))
}

/// Eigenvalues of the symbol on a uniform angle grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumSample {
    pub theta_count: usize,
    /// `p` consecutive entries per angle, angles in grid order.
    pub points: Vec<(f64, Complex64)>,
}

impl SpectrumSample {
    pub fn eigenvalues(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.points.iter().map(|&(_, z)| z)
    }

    /// `(re_min, re_max, im_min, im_max)` of the point cloud.
    pub fn bounding_box(&self) -> (f64, f64, f64, f64) {
        self.eigenvalues().fold(
            (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
            |(a, b, c, d), z| (a.min(z.re), b.max(z.re), c.min(z.im), d.max(z.im)),
        )
    }
}

/// Spectrum of `op` sampled at `theta_count` angles (at least 8).
pub fn sample_spectrum(op: &PeriodicJacobiOperator, theta_count: usize) -> Result<SpectrumSample> {
    if theta_count < 8 {
        return Err(Error::usage(format!("theta_count must be at least 8, got {theta_count}")));
    }
    let mut points = Vec::with_capacity(theta_count * op.period());
    for theta in theta_grid(theta_count) {
        let sym = build_symbol(op, theta);
        let ev = eigenvalues(&sym.entries).map_err(|e| e.at_angle(sym.theta))?;
        points.extend(ev.into_iter().map(|z| (sym.theta, z)));
    }
    Ok(SpectrumSample { theta_count, points })
}

/// Bands, gaps and total gap length of a self-adjoint operator.
#[derive(Clone, Debug, PartialEq)]
pub struct BandGapReport {
    /// Merged, sorted, pairwise disjoint closed intervals.
    pub bands: Vec<(f64, f64)>,
    /// Open intervals between consecutive bands.
    pub gaps: Vec<(f64, f64)>,
    pub gamma_total: f64,
    pub gamma_max: f64,
}

fn sorted_real_eigenvalues(op: &PeriodicJacobiOperator, theta: f64) -> Result<Vec<f64>> {
    let sym = build_symbol(op, theta);
    let ev = eig_dense(&sym.entries, false).map_err(|e| e.at_angle(sym.theta))?;
    let mut re: Vec<f64> = ev.eigenvalues.iter().map(|z| z.re).collect();
    re.sort_by(f64::total_cmp);
    Ok(re)
}

const GOLDEN_TOL: f64 = 1e-10;

/// Golden-section minimization of `f` on `[lo, hi]`.
fn golden_min(mut lo: f64, mut hi: f64, f: &mut impl FnMut(f64) -> Result<f64>) -> Result<(f64, f64)> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while hi - lo > GOLDEN_TOL {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 <= f2 { (x1, f1) } else { (x2, f2) })
}

/// Bands from sorted eigenvalue branches, with golden-section refinement of
/// every band endpoint and merging of touching bands.
pub fn bands_and_gaps(op: &PeriodicJacobiOperator, theta_count: usize) -> Result<BandGapReport> {
    if !op.is_self_adjoint() {
        return Err(Error::usage(
            "bands and gaps need a self-adjoint operator (b = c); use the pseudospectrum field instead",
        ));
    }
    if theta_count < 64 {
        return Err(Error::usage(format!("theta_count must be at least 64, got {theta_count}")));
    }
    let p = op.period();
    let thetas = theta_grid(theta_count);
    let mut branches = vec![Vec::with_capacity(theta_count); p];
    for &t in &thetas {
        for (r, x) in sorted_real_eigenvalues(op, t)?.into_iter().enumerate() {
            branches[r].push(x);
        }
    }
    let h = 2.0 * PI / theta_count as f64;
    let mut bands = Vec::with_capacity(p);
    for (r, branch) in branches.iter().enumerate() {
        let (imin, &vmin) = branch
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty");
        let (imax, &vmax) = branch
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty");
        let eval = |sign: f64| {
            move |t: f64| -> Result<f64> { Ok(sign * sorted_real_eigenvalues(op, t)?[r]) }
        };
        let (_, lo_ref) = golden_min(thetas[imin] - h, thetas[imin] + h, &mut eval(1.0))?;
        let (_, hi_ref) = golden_min(thetas[imax] - h, thetas[imax] + h, &mut eval(-1.0))?;
        bands.push((vmin.min(lo_ref), vmax.max(-hi_ref)));
    }
    bands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let scale = bands.iter().fold(0.0f64, |m, &(lo, hi)| m.max(lo.abs()).max(hi.abs()));
    let touch = 1e-9 * (1.0 + scale);
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(p);
    for (lo, hi) in bands {
        match merged.last_mut() {
            Some(last) if lo <= last.1 + touch => last.1 = last.1.max(hi),
            _ => merged.push((lo, hi)),
        }
    }
    let gaps: Vec<(f64, f64)> = merged.windows(2).map(|w| (w[0].1, w[1].0)).collect();
    let gamma_total = gaps.iter().map(|(a, b)| b - a).sum();
    let gamma_max = gaps.iter().map(|(a, b)| b - a).fold(0.0, f64::max);
    Ok(BandGapReport {
        bands: merged,
        gaps,
        gamma_total,
        gamma_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::commutator_norm;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close_sets(x: &[Complex64], y: &[Complex64], tol: f64) -> bool {
        x.len() == y.len() && hausdorff_distance(x, y) <= tol
    }

    #[test]
    fn grid_covers_half_open_interval() {
        let g = theta_grid(8);
        assert_eq!(g.len(), 8);
        assert_eq!(*g.last().unwrap(), PI);
        assert!(g[0] > -PI);
        assert_eq!(g[3], 0.0);
    }

    #[test]
    fn g_block_roots_of_unity() {
        let ev = closed_form_spectrum(0.0, 1.0, 4, 0.0, ModelBlock::G).unwrap();
        assert!(close_sets(&ev, &[c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)], 1e-15));
        let m = model_block_matrix(0.0, 1.0, 2, 0.0, ModelBlock::G).unwrap();
        let ev = eigenvalues(&m).unwrap();
        assert!(close_sets(&ev, &[c(-1.0, 0.0), c(1.0, 0.0)], 1e-14));
    }

    #[test]
    fn f_block_cosines() {
        let ev = closed_form_spectrum(1.0, 0.0, 2, 0.0, ModelBlock::F).unwrap();
        assert!(close_sets(&ev, &[c(-2.0, 0.0), c(2.0, 0.0)], 1e-15));
        let m = model_block_matrix(1.0, 0.0, 3, 0.0, ModelBlock::F).unwrap();
        let ev = eigenvalues(&m).unwrap();
        assert!(close_sets(&ev, &[c(2.0, 0.0), c(-1.0, 0.0), c(-1.0, 0.0)], 1e-13));
    }

    #[test]
    fn f_plus_g_direct_formula() {
        let t = PI / 2.0;
        let direct: Vec<Complex64> = (0..3)
            .map(|r| {
                let phase = (2.0 * PI * r as f64 - t) / 3.0;
                c(phase.cos(), phase.sin()) * 3.0 + c(phase.cos(), -phase.sin())
            })
            .collect();
        let closed = closed_form_spectrum(1.0, 2.0, 3, t, ModelBlock::FPlusG).unwrap();
        assert!(close_sets(&closed, &direct, 1e-14));
        let numeric = eigenvalues(&model_block_matrix(1.0, 2.0, 3, t, ModelBlock::FPlusG).unwrap()).unwrap();
        assert!(close_sets(&numeric, &direct, 1e-12));
    }

    #[test]
    fn model_blocks_commute_and_are_normal() {
        let f = model_block_matrix(1.0, 2.0, 4, 1.0, ModelBlock::F).unwrap();
        let g = model_block_matrix(1.0, 2.0, 4, 1.0, ModelBlock::G).unwrap();
        assert!((&f.matmul(&g) - &g.matmul(&f)).max_abs() < 1e-14);
        let fg = model_block_matrix(1.0, 2.0, 4, 1.0, ModelBlock::FPlusG).unwrap();
        assert!(commutator_norm(&fg) <= 1e-12);
        let gg = g.matmul(&g.adjoint());
        assert!((&gg - &CMatrix::identity(4).scale(c(4.0, 0.0))).max_abs() < 1e-14);
    }

    #[test]
    fn eigensystem_residuals_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let p = rng.random_range(2..=10);
            let sys = ClosedFormEigensystem::new(
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
                p,
                rng.random_range(-PI..PI),
            )
            .unwrap();
            for l in &sys.lambdas {
                assert!((l.norm() - 1.0).abs() < 1e-14);
            }
            for which in [ModelBlock::F, ModelBlock::G, ModelBlock::FPlusG] {
                assert!(sys.max_residual(which) <= 1e-10 * (1.0 + sys.alpha.abs() + sys.k.abs()));
            }
        }
    }

    #[test]
    fn small_block_size_rejected() {
        assert!(closed_form_spectrum(1.0, 1.0, 1, 0.0, ModelBlock::F).unwrap_err().is_usage());
    }

    #[test]
    fn sample_of_constant_operator_is_real_in_range() {
        let op = PeriodicJacobiOperator::constant(2, 0.0, 1.0, 1.0).unwrap();
        let s = sample_spectrum(&op, 8).unwrap();
        assert_eq!(s.points.len(), 16);
        for (t, z) in &s.points {
            assert!(z.im.abs() < 1e-14 && z.re.abs() <= 2.0 + 1e-14);
            // eigenvalues are 2 cos((2 r pi - t)/2)
            let want = [(-t / 2.0).cos() * 2.0, ((2.0 * PI - t) / 2.0).cos() * 2.0];
            assert!(want.iter().any(|w| (w - z.re).abs() < 1e-13));
        }
        assert!(sample_spectrum(&op, 4).unwrap_err().is_usage());
    }

    #[test]
    fn shift_moves_every_point() {
        let op = PeriodicJacobiOperator::new(vec![0.0, 1.0, 2.0], vec![1.0, -1.0, 0.5], vec![2.0, 0.3, 1.0]).unwrap();
        let s0 = sample_spectrum(&op, 16).unwrap();
        let s1 = sample_spectrum(&op.shifted(1.5), 16).unwrap();
        for ((t0, z0), (t1, z1)) in s0.points.iter().zip(&s1.points) {
            assert_eq!(t0, t1);
            assert!((z1 - z0 - c(1.5, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn constant_self_adjoint_single_band() {
        let op = PeriodicJacobiOperator::constant(2, 0.0, 1.0, 1.0).unwrap();
        let r = bands_and_gaps(&op, 256).unwrap();
        assert_eq!(r.bands.len(), 1);
        assert!((r.bands[0].0 + 2.0).abs() < 1e-12 && (r.bands[0].1 - 2.0).abs() < 1e-12);
        assert_eq!(r.gamma_total, 0.0);
        assert!(r.gaps.is_empty());
    }

    /// Closed-form 2x2 band edges of a = [0, 4], b = c = [1, 1]:
    /// eigenvalues 2 +- sqrt(4 + |1 + e^{i t}|^2), extremized at t = 0 and t = pi.
    #[test]
    fn two_periodic_gap_matches_closed_form() {
        let op = PeriodicJacobiOperator::new(vec![0.0, 4.0], vec![1.0, 1.0], vec![1.0, 1.0]).unwrap();
        let r = bands_and_gaps(&op, 1024).unwrap();
        let edge = |t: f64, s: f64| 2.0 + s * (4.0 + (c(1.0, 0.0) + c(t.cos(), t.sin())).norm_sqr()).sqrt();
        assert_eq!(r.bands.len(), 2);
        assert_eq!(r.gaps.len(), 1);
        let (lo, hi) = r.gaps[0];
        assert!((lo - edge(PI, -1.0)).abs() < 1e-12, "{lo}");
        assert!((hi - edge(PI, 1.0)).abs() < 1e-12, "{hi}");
        assert!((r.bands[0].0 - edge(0.0, -1.0)).abs() < 1e-12);
        assert!((r.bands[1].1 - edge(0.0, 1.0)).abs() < 1e-12);
        assert!((r.gamma_total - 4.0).abs() < 1e-12);
        assert_eq!(r.gamma_total, r.gamma_max);
    }

    #[test]
    fn non_self_adjoint_rejected() {
        let op = PeriodicJacobiOperator::constant(3, 0.0, 1.0, 2.0).unwrap();
        let e = bands_and_gaps(&op, 128).unwrap_err();
        assert!(e.is_usage());
        assert!(format!("{e}").contains("pseudospectrum"));
    }

    #[test]
    fn refinement_finds_off_grid_extremum() {
        // theta_count odd-ish grids miss theta = 0; the refinement recovers it
        let op = PeriodicJacobiOperator::new(vec![0.0, 1.0, 3.0], vec![1.0, 2.0, 0.5], vec![1.0, 2.0, 0.5]).unwrap();
        let fine = bands_and_gaps(&op, 1024).unwrap();
        let coarse = bands_and_gaps(&op, 66).unwrap();
        for (a, b) in fine.bands.iter().zip(&coarse.bands) {
            assert!((a.0 - b.0).abs() < 1e-9 && (a.1 - b.1).abs() < 1e-9);
        }
    }
}
