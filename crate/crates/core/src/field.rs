//! The pseudospectrum field `Psi(z) = min_theta sigma_min(zI - phi(theta))`.
//!
//! The symbol is Schur-factored once per angle; each `sigma_min` then runs on
//! the triangular factor. Angles are visited coarse-to-fine and skipped when
//! a Lipschitz lower bound in theta already exceeds the running minimum, so
//! the result equals a full scan over all sampled angles.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{schur, sigma_min, CMatrix, LanczosWorkspace};
use crate::operator::{build_symbol, PeriodicJacobiOperator};
use crate::spectral::theta_grid;

/// Grids above this many nodes are rejected.
pub const MAX_GRID_NODES: usize = 100_000_000;

/// Rectangle `[re_min, re_max] x [im_min, im_max]` sampled by `nx x ny` nodes.
///
/// Node `(ix, iy)` has flat index `iy * nx + ix`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64, nx: usize, ny: usize) -> Result<Self> {
        let g = GridSpec {
            re_min,
            re_max,
            im_min,
            im_max,
            nx,
            ny,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let bounds = [self.re_min, self.re_max, self.im_min, self.im_max];
        if bounds.iter().any(|x| !x.is_finite()) {
            return Err(Error::usage("grid bounds must be finite"));
        }
        if !(self.re_min < self.re_max && self.im_min < self.im_max) {
            return Err(Error::usage("grid bounds must satisfy min < max"));
        }
        if self.nx < 2 || self.ny < 2 {
            return Err(Error::usage(format!("grid needs nx, ny >= 2, got {}x{}", self.nx, self.ny)));
        }
        match self.nx.checked_mul(self.ny) {
            Some(n) if n <= MAX_GRID_NODES => Ok(()),
            _ => Err(Error::usage(format!(
                "grid of {}x{} nodes exceeds the limit of {MAX_GRID_NODES}",
                self.nx, self.ny
            ))),
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dx(&self) -> f64 {
        (self.re_max - self.re_min) / (self.nx - 1) as f64
    }

    pub fn dy(&self) -> f64 {
        (self.im_max - self.im_min) / (self.ny - 1) as f64
    }

    /// Larger of the two spacings.
    pub fn spacing(&self) -> f64 {
        self.dx().max(self.dy())
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx, idx / self.nx)
    }

    #[inline]
    pub fn re(&self, ix: usize) -> f64 {
        if ix + 1 == self.nx {
            self.re_max
        } else {
            self.re_min + ix as f64 * self.dx()
        }
    }

    #[inline]
    pub fn im(&self, iy: usize) -> f64 {
        if iy + 1 == self.ny {
            self.im_max
        } else {
            self.im_min + iy as f64 * self.dy()
        }
    }

    #[inline]
    pub fn node(&self, ix: usize, iy: usize) -> Complex64 {
        Complex64::new(self.re(ix), self.im(iy))
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.re_min && z.re <= self.re_max && z.im >= self.im_min && z.im <= self.im_max
    }

    /// Nearest node to `z`, if `z` lies in the rectangle.
    pub fn nearest_node(&self, z: Complex64) -> Option<(usize, usize)> {
        if !self.contains(z) {
            return None;
        }
        let ix = ((z.re - self.re_min) / self.dx()).round() as usize;
        let iy = ((z.im - self.im_min) / self.dy()).round() as usize;
        Some((ix.min(self.nx - 1), iy.min(self.ny - 1)))
    }

    pub fn on_frame(&self, ix: usize, iy: usize) -> bool {
        ix == 0 || iy == 0 || ix + 1 == self.nx || iy + 1 == self.ny
    }

    /// Flat indices in boustrophedon order: even rows left to right, odd rows
    /// right to left, so consecutive nodes are always neighbours.
    pub fn serpentine_order(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.len());
        for iy in 0..self.ny {
            if iy % 2 == 0 {
                out.extend((0..self.nx).map(|ix| self.index(ix, iy)));
            } else {
                out.extend((0..self.nx).rev().map(|ix| self.index(ix, iy)));
            }
        }
        out
    }

    /// All node coordinates in index order.
    pub fn nodes(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.len());
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                out.push(self.node(ix, iy));
            }
        }
        out
    }
}

/// Per-angle Schur factors of the symbol, ready for repeated `Psi` queries.
#[derive(Clone, Debug)]
pub struct SymbolSchurSet {
    thetas: Vec<f64>,
    factors: Vec<CMatrix>,
    lipschitz: f64,
    max_symbol_norm: f64,
    stride: usize,
}

/// Relative slack on pruning decisions; keeps skips strictly conservative.
const PRUNE_SLACK: f64 = 1e-12;

impl SymbolSchurSet {
    pub fn new(op: &PeriodicJacobiOperator, theta_count: usize) -> Result<Self> {
        if theta_count < 8 {
            return Err(Error::usage(format!("theta_count must be at least 8, got {theta_count}")));
        }
        let thetas = theta_grid(theta_count);
        let mut factors = Vec::with_capacity(theta_count);
        let mut max_symbol_norm = 0.0f64;
        for &t in &thetas {
            let sym = build_symbol(op, t);
            max_symbol_norm = max_symbol_norm.max(sym.entries.frobenius_norm());
            let s = schur(&sym.entries, false).map_err(|e| e.at_angle(sym.theta))?;
            factors.push(s.t);
        }
        let stride = (theta_count / 16).max(1);
        Ok(SymbolSchurSet {
            thetas,
            factors,
            lipschitz: op.theta_lipschitz(),
            max_symbol_norm,
            stride,
        })
    }

    pub fn theta_count(&self) -> usize {
        self.thetas.len()
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    /// Upper bound on `||d phi / d theta||`.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// Largest Frobenius norm of the sampled symbols.
    pub fn max_symbol_norm(&self) -> f64 {
        self.max_symbol_norm
    }

    /// Eigenvalues of the symbol at every sampled angle, angle-major.
    pub fn eigenvalues(&self) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        self.factors
            .iter()
            .enumerate()
            .flat_map(|(k, t)| (0..t.rows()).map(move |i| (k, t[(i, i)])))
    }

    /// `sigma_min(zI - phi(theta_k))`.
    pub fn sigma_at(&self, k: usize, z: Complex64, ws: &mut LanczosWorkspace) -> f64 {
        crate::linalg::sigma_min_shifted_triangular(&self.factors[k], z, ws)
    }

    /// `Psi(z)` over the sampled angles.
    pub fn psi(&self, z: Complex64, ws: &mut LanczosWorkspace) -> f64 {
        let mut lb = vec![0.0; self.thetas.len()];
        self.psi_fresh(z, ws, &mut lb)
    }

    /// `Psi` along a path of points. Per-angle values from the previous
    /// point, minus the step length, are lower bounds at the next point
    /// (each `sigma_min(zI - phi)` is 1-Lipschitz in `z`), so most angles are
    /// skipped after the first point. Results equal independent evaluation.
    pub fn psi_path(&self, points: &[Complex64], ws: &mut LanczosWorkspace) -> Vec<f64> {
        let n = self.thetas.len();
        let mut lb = vec![0.0; n];
        let mut out = Vec::with_capacity(points.len());
        let mut prev: Option<Complex64> = None;
        for &z in points {
            let value = match prev {
                None => self.psi_fresh(z, ws, &mut lb),
                Some(p) => {
                    let step = (z - p).norm();
                    lb.iter_mut().for_each(|v| *v -= step);
                    self.psi_warm(z, ws, &mut lb)
                }
            };
            out.push(value);
            prev = Some(z);
        }
        out
    }

    fn slack(best: f64) -> f64 {
        best + PRUNE_SLACK * (1.0 + best)
    }

    fn psi_warm(&self, z: Complex64, ws: &mut LanczosWorkspace, lb: &mut [f64]) -> f64 {
        let k0 = (0..lb.len()).min_by(|&i, &j| lb[i].total_cmp(&lb[j])).expect("angles");
        let mut best = self.sigma_at(k0, z, ws);
        lb[k0] = best;
        for k in 0..lb.len() {
            if k != k0 && lb[k] <= Self::slack(best) {
                let s = self.sigma_at(k, z, ws);
                lb[k] = s;
                best = best.min(s);
            }
        }
        best
    }

    /// Coarse-to-fine scan over angles; fills `lb` with evaluated values or
    /// theta-Lipschitz lower bounds.
    fn psi_fresh(&self, z: Complex64, ws: &mut LanczosWorkspace, lb: &mut [f64]) -> f64 {
        let n = self.thetas.len();
        let h = 2.0 * PI / n as f64;
        let l = self.lipschitz;
        let anchors: Vec<usize> = (0..n).step_by(self.stride).collect();
        let sig: Vec<f64> = anchors.iter().map(|&k| self.sigma_at(k, z, ws)).collect();
        let mut best = sig.iter().copied().fold(f64::INFINITY, f64::min);
        for (&k, &s) in anchors.iter().zip(&sig) {
            lb[k] = s;
        }
        // intervals between consecutive anchors (cyclic)
        let m = anchors.len();
        let mut intervals: Vec<(f64, usize, usize, f64, f64)> = (0..m)
            .map(|i| {
                let left = anchors[i];
                let width = if i + 1 < m { anchors[i + 1] - left } else { n - left };
                let (sl, sr) = (sig[i], sig[(i + 1) % m]);
                ((sl + sr - l * h * width as f64) * 0.5, left, width, sl, sr)
            })
            .collect();
        intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut stack: Vec<(usize, usize, f64, f64)> = Vec::new();
        for &(_, left, width, sl, sr) in &intervals {
            stack.push((left, width, sl, sr));
            while let Some((left, width, sl, sr)) = stack.pop() {
                if width < 2 {
                    continue;
                }
                let lower = (sl + sr - l * h * width as f64) * 0.5;
                if lower > Self::slack(best) {
                    for i in 1..width {
                        lb[(left + i) % n] = lower;
                    }
                    continue;
                }
                let half = width / 2;
                let mid = (left + half) % n;
                let sm = self.sigma_at(mid, z, ws);
                lb[mid] = sm;
                best = best.min(sm);
                stack.push((mid, width - half, sm, sr));
                stack.push((left, half, sl, sm));
            }
        }
        best
    }

    /// Reference `Psi(z)`: dense singular values at every sampled angle, no pruning.
    pub fn psi_exhaustive(op: &PeriodicJacobiOperator, z: Complex64, theta_count: usize) -> f64 {
        theta_grid(theta_count)
            .into_iter()
            .map(|t| sigma_min(&build_symbol(op, t).entries.shifted_negation(z)))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Evaluates `Psi` at a batch of points; results come back in input order.
pub trait FieldEvaluator {
    fn evaluate(&self, set: &SymbolSchurSet, points: &[Complex64]) -> Vec<f64>;
}

/// Single-threaded evaluator.
#[derive(Clone, Copy, Debug, Default)]
pub struct Sequential;

impl FieldEvaluator for Sequential {
    fn evaluate(&self, set: &SymbolSchurSet, points: &[Complex64]) -> Vec<f64> {
        set.psi_path(points, &mut LanczosWorkspace::default())
    }
}

/// `Psi` sampled on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct PseudoField {
    pub grid: GridSpec,
    /// Node values, index `iy * nx + ix`.
    pub psi: Vec<f64>,
    pub theta_count: usize,
}

/// Bilinear interpolation result; never an exact field value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub is_estimate: bool,
}

impl PseudoField {
    #[inline]
    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.psi[self.grid.index(ix, iy)]
    }

    pub fn min(&self) -> f64 {
        self.psi.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.psi.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Bilinear interpolation between nodes; `None` outside the grid.
    pub fn interpolate(&self, z: Complex64) -> Option<Estimate> {
        let g = &self.grid;
        if !g.contains(z) {
            return None;
        }
        let fx = ((z.re - g.re_min) / g.dx()).clamp(0.0, (g.nx - 1) as f64);
        let fy = ((z.im - g.im_min) / g.dy()).clamp(0.0, (g.ny - 1) as f64);
        let ix = (fx.floor() as usize).min(g.nx - 2);
        let iy = (fy.floor() as usize).min(g.ny - 2);
        let (tx, ty) = (fx - ix as f64, fy - iy as f64);
        let value = self.at(ix, iy) * (1.0 - tx) * (1.0 - ty)
            + self.at(ix + 1, iy) * tx * (1.0 - ty)
            + self.at(ix, iy + 1) * (1.0 - tx) * ty
            + self.at(ix + 1, iy + 1) * tx * ty;
        Some(Estimate {
            value,
            is_estimate: true,
        })
    }
}

/// Field on `grid` with the single-threaded evaluator.
pub fn compute_field(op: &PeriodicJacobiOperator, grid: &GridSpec, theta_count: usize) -> Result<PseudoField> {
    compute_field_with(op, grid, theta_count, &Sequential)
}

pub fn compute_field_with(
    op: &PeriodicJacobiOperator,
    grid: &GridSpec,
    theta_count: usize,
    evaluator: &dyn FieldEvaluator,
) -> Result<PseudoField> {
    grid.validate()?;
    let set = SymbolSchurSet::new(op, theta_count)?;
    Ok(field_from_set(&set, grid, evaluator))
}

/// Field on `grid` from precomputed symbol factors; nodes are visited in
/// serpentine order.
pub fn field_from_set(set: &SymbolSchurSet, grid: &GridSpec, evaluator: &dyn FieldEvaluator) -> PseudoField {
    let order = grid.serpentine_order();
    let points: Vec<Complex64> = order.iter().map(|&i| grid.node(i % grid.nx, i / grid.nx)).collect();
    let values = evaluator.evaluate(set, &points);
    let mut psi = vec![0.0; grid.len()];
    for (&i, v) in order.iter().zip(values) {
        psi[i] = v;
    }
    PseudoField {
        grid: *grid,
        psi,
        theta_count: set.theta_count(),
    }
}

/// `min_theta sigma_min(zI - phi(theta))` by dense singular values at every sampled angle.
pub fn resolvent_bound_at(op: &PeriodicJacobiOperator, z: Complex64, theta_count: usize) -> Result<f64> {
    if theta_count == 0 {
        return Err(Error::usage("theta_count must be positive"));
    }
    Ok(SymbolSchurSet::psi_exhaustive(op, z, theta_count))
}

/// Distance from `z` to a point set.
pub fn distance_to_set(z: Complex64, set: &[Complex64]) -> f64 {
    set.iter().map(|w| (z - w).norm()).fold(f64::INFINITY, f64::min)
}
