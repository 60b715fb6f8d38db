//! Dense complex linear algebra sized for small symbol matrices.
//!
//! Eigenvalues come from Householder reduction to Hessenberg form followed by
//! single-shift complex QR (full Schur form). Singular values come from
//! one-sided Jacobi, which keeps absolute accuracy near `eps * ||M||` even for
//! nearly singular inputs. [`sigma_min_shifted_triangular`] is the fast path
//! used by pseudospectrum sweeps: once `A = Q T Q*` is known,
//! `sigma_min(zI - A) = sigma_min(zI - T)` is computed by inverse Lanczos on
//! the triangular factor.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::error::{Error, Result};

/// Largest dimension accepted by [`eig_dense`].
pub const MAX_EIG_DIM: usize = 512;

const EPS: f64 = f64::EPSILON;
const MAX_QR_ITERS_PER_EIGENVALUE: usize = 100;
const MAX_JACOBI_SWEEPS: usize = 80;

/// Dense row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMatrix { rows, cols, data }
    }

    /// Diagonal matrix with the given entries.
    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from real row slices. Panics on ragged input.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let ncols = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == ncols), "ragged rows");
        Self::from_fn(rows.len(), ncols, |i, j| Complex64::new(rows[i][j], 0.0))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    /// `z I - self`.
    pub fn shifted_negation(&self, z: Complex64) -> Self {
        let mut m = self.scale(Complex64::new(-1.0, 0.0));
        for i in 0..self.rows.min(self.cols) {
            m[(i, i)] += z;
        }
        m
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn matmul(&self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, rhs.rows, "dimension mismatch in matmul");
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    /// FNV-1a over the raw bits; used to identify matrices in error reports.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut feed = |x: u64| {
            for b in x.to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        };
        feed(self.rows as u64);
        feed(self.cols as u64);
        for z in &self.data {
            feed(z.re.to_bits());
            feed(z.im.to_bits());
        }
        h
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;

    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;

    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;

    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs)
    }
}

/// Eigenvalues (and optionally unit-norm eigenvectors) of a square matrix.
#[derive(Clone, Debug)]
pub struct EigenResult {
    /// Sorted by real part, then imaginary part.
    pub eigenvalues: Vec<Complex64>,
    /// `eigenvectors[k]` pairs with `eigenvalues[k]`.
    pub eigenvectors: Option<Vec<Vec<Complex64>>>,
}

/// Complex Schur form `A = Q T Q*` with `T` upper triangular.
#[derive(Clone, Debug)]
pub struct Schur {
    pub t: CMatrix,
    pub q: Option<CMatrix>,
}

/// Lexicographic (real, imaginary) order used for every returned spectrum.
pub fn cmp_complex(a: &Complex64, b: &Complex64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

pub fn sort_complex(v: &mut [Complex64]) {
    v.sort_by(cmp_complex);
}

fn check_square(m: &CMatrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::usage(alloc::format!(
            "expected a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    if !m.is_finite() {
        return Err(Error::usage("matrix has non-finite entries"));
    }
    Ok(())
}

/// Complex Givens rotation `[c s; -conj(s) c]` mapping `(a, b)` to `(r, 0)`.
#[inline]
fn givens(a: Complex64, b: Complex64) -> (f64, Complex64, Complex64) {
    let zero = Complex64::new(0.0, 0.0);
    if b == zero {
        return (1.0, zero, a);
    }
    if a == zero {
        let nb = b.norm();
        return (0.0, b.conj() / nb, Complex64::new(nb, 0.0));
    }
    let na = a.norm();
    let nrm = na.hypot(b.norm());
    let phase = a / na;
    (na / nrm, phase * b.conj() / nrm, phase * nrm)
}

fn reduce_to_hessenberg(h: &mut CMatrix, mut q: Option<&mut CMatrix>) {
    let n = h.rows();
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..n.saturating_sub(2) {
        let m = n - k - 1;
        let x0 = h[(k + 1, k)];
        let tail: f64 = (k + 2..n).map(|i| h[(i, k)].norm_sqr()).sum();
        if tail == 0.0 {
            continue;
        }
        let norm = (x0.norm_sqr() + tail).sqrt();
        let phase = if x0.norm() == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            x0 / x0.norm()
        };
        let alpha = -phase * norm;
        v[0] = x0 - alpha;
        for i in 1..m {
            v[i] = h[(k + 1 + i, k)];
        }
        let vnorm2: f64 = v[..m].iter().map(|z| z.norm_sqr()).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let tau = 2.0 / vnorm2;
        // Left: rows k+1.., columns k..
        for j in k..n {
            let s: Complex64 = (0..m).map(|i| v[i].conj() * h[(k + 1 + i, j)]).sum::<Complex64>() * tau;
            for i in 0..m {
                h[(k + 1 + i, j)] -= v[i] * s;
            }
        }
        // Right: all rows, columns k+1..
        for i in 0..n {
            let s: Complex64 = (0..m).map(|j| h[(i, k + 1 + j)] * v[j]).sum::<Complex64>() * tau;
            for j in 0..m {
                h[(i, k + 1 + j)] -= s * v[j].conj();
            }
        }
        if let Some(q) = q.as_deref_mut() {
            for i in 0..n {
                let s: Complex64 = (0..m).map(|j| q[(i, k + 1 + j)] * v[j]).sum::<Complex64>() * tau;
                for j in 0..m {
                    q[(i, k + 1 + j)] -= s * v[j].conj();
                }
            }
        }
        h[(k + 1, k)] = alpha;
        for i in k + 2..n {
            h[(i, k)] = Complex64::new(0.0, 0.0);
        }
    }
}

fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let half = (a - d) * 0.5;
    let bc = b * c;
    let disc = (half * half + bc).sqrt();
    let disc = if (half.conj() * disc).re >= 0.0 { disc } else { -disc };
    let denom = half + disc;
    if denom.norm() == 0.0 {
        d
    } else {
        d - bc / denom
    }
}

/// Drives an upper Hessenberg matrix to upper triangular form in place.
fn hessenberg_qr(h: &mut CMatrix, mut z: Option<&mut CMatrix>) -> core::result::Result<(), ()> {
    let n = h.rows();
    if n <= 1 {
        return Ok(());
    }
    let hnorm = h.frobenius_norm();
    let small = f64::MIN_POSITIVE * (n as f64) / EPS;
    let mut rots: Vec<(f64, Complex64)> = Vec::with_capacity(n);
    let mut hi = n - 1;
    let mut iter = 0usize;
    while hi > 0 {
        let mut l = hi;
        while l > 0 {
            let sub = h[(l, l - 1)].norm();
            let mut tst = h[(l - 1, l - 1)].norm() + h[(l, l)].norm();
            if tst == 0.0 {
                tst = hnorm;
            }
            if sub <= EPS * tst || sub <= small {
                h[(l, l - 1)] = Complex64::new(0.0, 0.0);
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        if iter > MAX_QR_ITERS_PER_EIGENVALUE {
            return Err(());
        }
        let mu = if iter % 10 == 0 {
            // exceptional shift to break cycles
            let sub = h[(hi, hi - 1)].norm();
            h[(hi, hi)] + Complex64::new(0.75 * sub, 0.4375 * sub)
        } else {
            wilkinson_shift(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };
        for k in l..=hi {
            h[(k, k)] -= mu;
        }
        rots.clear();
        for k in l..hi {
            let (c, s, r) = givens(h[(k, k)], h[(k + 1, k)]);
            h[(k, k)] = r;
            h[(k + 1, k)] = Complex64::new(0.0, 0.0);
            for j in k + 1..n {
                let x = h[(k, j)];
                let y = h[(k + 1, j)];
                h[(k, j)] = x * c + s * y;
                h[(k + 1, j)] = -s.conj() * x + y * c;
            }
            rots.push((c, s));
        }
        for (idx, k) in (l..hi).enumerate() {
            let (c, s) = rots[idx];
            for i in 0..=k + 1 {
                let x = h[(i, k)];
                let y = h[(i, k + 1)];
                h[(i, k)] = x * c + s.conj() * y;
                h[(i, k + 1)] = -s * x + y * c;
            }
            if let Some(z) = z.as_deref_mut() {
                for i in 0..n {
                    let x = z[(i, k)];
                    let y = z[(i, k + 1)];
                    z[(i, k)] = x * c + s.conj() * y;
                    z[(i, k + 1)] = -s * x + y * c;
                }
            }
        }
        for k in l..=hi {
            h[(k, k)] += mu;
        }
    }
    // clean below the diagonal
    for i in 1..n {
        for j in 0..i {
            h[(i, j)] = Complex64::new(0.0, 0.0);
        }
    }
    Ok(())
}

/// Complex Schur decomposition.
pub fn schur(m: &CMatrix, want_q: bool) -> Result<Schur> {
    check_square(m)?;
    let n = m.rows();
    if n > MAX_EIG_DIM {
        return Err(Error::usage(alloc::format!(
            "dimension {n} exceeds the dense eigensolver limit {MAX_EIG_DIM}"
        )));
    }
    let mut t = m.clone();
    let mut q = want_q.then(|| CMatrix::identity(n));
    reduce_to_hessenberg(&mut t, q.as_mut());
    hessenberg_qr(&mut t, q.as_mut()).map_err(|()| Error::NoConvergence {
        matrix_hash: m.fingerprint(),
        dim: n,
    })?;
    Ok(Schur { t, q })
}

/// Eigenvectors of an upper triangular `t`, as columns of `t`'s basis.
fn triangular_eigenvectors(t: &CMatrix) -> Vec<Vec<Complex64>> {
    let n = t.rows();
    let smin = (EPS * t.max_abs()).max(f64::MIN_POSITIVE);
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let lambda = t[(k, k)];
        let mut y = vec![Complex64::new(0.0, 0.0); n];
        y[k] = Complex64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let s: Complex64 = (i + 1..=k).map(|j| t[(i, j)] * y[j]).sum();
            let mut denom = t[(i, i)] - lambda;
            if denom.norm() < smin {
                denom = Complex64::new(smin, 0.0);
            }
            y[i] = -s / denom;
        }
        out.push(y);
    }
    out
}

/// All eigenvalues of a dense square matrix, with eigenvectors on request.
///
/// Eigenvalues are returned in lexicographic (real, imaginary) order.
pub fn eig_dense(m: &CMatrix, want_vectors: bool) -> Result<EigenResult> {
    let s = schur(m, want_vectors)?;
    let n = m.rows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| cmp_complex(&s.t[(i, i)], &s.t[(j, j)]));
    let eigenvalues = order.iter().map(|&i| s.t[(i, i)]).collect();
    let eigenvectors = if want_vectors {
        let q = s.q.as_ref().expect("requested");
        let ys = triangular_eigenvectors(&s.t);
        Some(
            order
                .iter()
                .map(|&k| {
                    let mut v = q.mul_vec(&ys[k]);
                    let nrm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                    if nrm > 0.0 {
                        v.iter_mut().for_each(|z| *z /= nrm);
                    }
                    v
                })
                .collect(),
        )
    } else {
        None
    };
    Ok(EigenResult {
        eigenvalues,
        eigenvectors,
    })
}

/// Eigenvalues only; see [`eig_dense`].
pub fn eigenvalues(m: &CMatrix) -> Result<Vec<Complex64>> {
    Ok(eig_dense(m, false)?.eigenvalues)
}

/// Singular values in descending order (one-sided Jacobi).
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    let a = if m.rows() >= m.cols() { m.clone() } else { m.adjoint() };
    let (r, c) = (a.rows(), a.cols());
    if c == 0 {
        return Vec::new();
    }
    // column-major working copy
    let mut cols: Vec<Complex64> = Vec::with_capacity(r * c);
    for j in 0..c {
        for i in 0..r {
            cols.push(a[(i, j)]);
        }
    }
    for _ in 0..MAX_JACOBI_SWEEPS {
        let mut rotated = false;
        for i in 0..c - 1 {
            for j in i + 1..c {
                let (ci, cj) = (i * r, j * r);
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = Complex64::new(0.0, 0.0);
                for k in 0..r {
                    let x = cols[ci + k];
                    let y = cols[cj + k];
                    alpha += x.norm_sqr();
                    beta += y.norm_sqr();
                    gamma += x.conj() * y;
                }
                let g = gamma.norm();
                if g == 0.0 || g <= EPS * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let w = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + 1.0.hypot(zeta));
                let cs = 1.0 / 1.0.hypot(t);
                let sn = cs * t;
                let wc = w.conj();
                for k in 0..r {
                    let x = cols[ci + k];
                    let y = cols[cj + k];
                    cols[ci + k] = x * cs - wc * y * sn;
                    cols[cj + k] = w * x * sn + y * cs;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = (0..c)
        .map(|j| cols[j * r..(j + 1) * r].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Smallest singular value of a square matrix.
pub fn sigma_min(m: &CMatrix) -> f64 {
    singular_values(m).last().copied().unwrap_or(0.0)
}

/// Largest singular value (operator 2-norm).
pub fn spectral_norm(m: &CMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Frobenius norm of `M M* - M* M`; zero exactly for normal matrices.
pub fn commutator_norm(m: &CMatrix) -> f64 {
    let adj = m.adjoint();
    (&m.matmul(&adj) - &adj.matmul(m)).frobenius_norm()
}

/// Entrywise test `|m_ij - conj(m_ji)| <= tol`.
pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    m.is_square()
        && (0..m.rows()).all(|i| (0..=i).all(|j| (m[(i, j)] - m[(j, i)].conj()).norm() <= tol))
}

/// Scratch space for [`sigma_min_shifted_triangular`].
#[derive(Clone, Debug, Default)]
pub struct LanczosWorkspace {
    basis: Vec<Complex64>,
    w: Vec<Complex64>,
    y: Vec<Complex64>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    rinv: Vec<Complex64>,
}

impl LanczosWorkspace {
    pub fn new(n: usize) -> Self {
        let mut ws = Self::default();
        ws.resize(n);
        ws
    }

    fn resize(&mut self, n: usize) {
        let zero = Complex64::new(0.0, 0.0);
        self.basis.resize(n * n, zero);
        self.w.resize(n, zero);
        self.y.resize(n, zero);
        self.alpha.resize(n, 0.0);
        self.beta.resize(n, 0.0);
        self.rinv.resize(n, zero);
    }
}

#[inline]
fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Largest eigenvalue of the symmetric tridiagonal matrix (alpha, beta).
///
/// Newton on the characteristic polynomial from the Gershgorin upper bound
/// decreases monotonically onto the largest root (all roots are real);
/// bisection takes over if rounding pushes an iterate below the bracket.
fn tridiagonal_max_eigenvalue(alpha: &[f64], beta: &[f64]) -> f64 {
    let n = alpha.len();
    let off = |i: usize| if i < beta.len() { beta[i].abs() } else { 0.0 };
    let mut hi = f64::NEG_INFINITY;
    let mut lo = f64::NEG_INFINITY;
    for i in 0..n {
        let left = if i > 0 { off(i - 1) } else { 0.0 };
        hi = hi.max(alpha[i] + left + off(i));
        lo = lo.max(alpha[i]);
    }
    if n == 1 || hi <= lo {
        return lo.max(hi);
    }
    // (f, f') of det(xI - T) via the three-term recurrence, rescaled to avoid overflow
    let char_poly = |x: f64| -> (f64, f64) {
        let (mut p0, mut d0) = (1.0, 0.0);
        let (mut p1, mut d1) = (x - alpha[0], 1.0);
        for i in 1..n {
            let b2 = beta[i - 1] * beta[i - 1];
            let p2 = (x - alpha[i]) * p1 - b2 * p0;
            let d2 = p1 + (x - alpha[i]) * d1 - b2 * d0;
            p0 = p1;
            d0 = d1;
            p1 = p2;
            d1 = d2;
            let m = p1.abs().max(d1.abs());
            if m > 1e150 {
                p0 /= m;
                d0 /= m;
                p1 /= m;
                d1 /= m;
            }
        }
        (p1, d1)
    };
    let count_below = |x: f64| -> usize {
        let mut count = 0;
        let mut d = 1.0;
        for i in 0..n {
            let b2 = if i > 0 { beta[i - 1] * beta[i - 1] } else { 0.0 };
            d = alpha[i] - x - if i > 0 { b2 / d } else { 0.0 };
            if d == 0.0 {
                d = -f64::MIN_POSITIVE.sqrt() * (1.0 + x.abs());
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    };
    let mut x = hi;
    for _ in 0..100 {
        let (f, df) = char_poly(x);
        if f == 0.0 {
            return x;
        }
        if df <= 0.0 || !df.is_finite() {
            break;
        }
        let next = x - f / df;
        if !(next < x) {
            return x;
        }
        if next < lo {
            break;
        }
        if x - next <= 2.0 * EPS * x.abs() {
            return next;
        }
        x = next;
    }
    // bisection fallback on [lo, x]
    let mut hi = x;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 2.0 * EPS * hi.abs() {
            break;
        }
        if count_below(mid) == n {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `sigma_min(zI - T)` for upper triangular `T`, by inverse Lanczos on
/// `(R* R)^{-1}` with `R = zI - T`, run to the full dimension with complete
/// reorthogonalization so the Ritz value is the exact top eigenvalue.
pub fn sigma_min_shifted_triangular(t: &CMatrix, z: Complex64, ws: &mut LanczosWorkspace) -> f64 {
    let n = t.rows();
    if n == 0 {
        return 0.0;
    }
    for i in 0..n {
        if z == t[(i, i)] {
            return 0.0;
        }
    }
    ws.resize(n);
    let zero = Complex64::new(0.0, 0.0);
    let LanczosWorkspace {
        basis,
        w,
        y,
        alpha,
        beta,
        rinv,
    } = ws;
    let tz = t.as_slice();
    for i in 0..n {
        rinv[i] = (z - tz[i * n + i]).inv();
    }
    let inv_sqrt_n = 1.0 / (n as f64).sqrt();
    for (i, q) in basis[..n].iter_mut().enumerate() {
        // deterministic, non-symmetric start vector
        *q = Complex64::new(inv_sqrt_n, inv_sqrt_n * 0.25 * (i as f64 + 1.0) / n as f64);
    }
    let nrm = basis[..n].iter().map(|q| q.norm_sqr()).sum::<f64>().sqrt();
    basis[..n].iter_mut().for_each(|q| *q /= nrm);

    let mut scale = 0.0f64;
    for j in 0..n {
        let qj = j * n;
        // y = R^{-*} q_j  (R* is lower triangular, off-diagonal entries conj(t_ki))
        for i in 0..n {
            let mut s = basis[qj + i];
            for k in 0..i {
                s += tz[k * n + i].conj() * y[k];
            }
            y[i] = s * rinv[i].conj();
        }
        // w = R^{-1} y
        for i in (0..n).rev() {
            let mut s = y[i];
            let row = &tz[i * n..i * n + n];
            for k in i + 1..n {
                s += row[k] * w[k];
            }
            w[i] = s * rinv[i];
        }
        let a = dot(&basis[qj..qj + n], w).re;
        if !a.is_finite() {
            return 0.0;
        }
        alpha[j] = a;
        scale = scale.max(a.abs());
        for i in 0..n {
            w[i] -= basis[qj + i] * a;
        }
        if j > 0 {
            let b = beta[j - 1];
            for i in 0..n {
                w[i] -= basis[qj - n + i] * b;
            }
        }
        for _ in 0..2 {
            for m in 0..=j {
                let c = dot(&basis[m * n..m * n + n], w);
                for i in 0..n {
                    w[i] -= basis[m * n + i] * c;
                }
            }
        }
        if j + 1 == n {
            break;
        }
        let b = w.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        scale = scale.max(b);
        let next = (j + 1) * n;
        if b > 1e-13 * scale {
            beta[j] = b;
            for i in 0..n {
                basis[next + i] = w[i] / b;
            }
        } else {
            // invariant subspace: restart with the unit vector least
            // represented in the current basis
            beta[j] = 0.0;
            let mut best = (0usize, -1.0f64);
            for e in 0..n {
                let resid = 1.0 - (0..=j).map(|m| basis[m * n + e].norm_sqr()).sum::<f64>();
                if resid > best.1 {
                    best = (e, resid);
                }
            }
            for i in 0..n {
                basis[next + i] = zero;
            }
            basis[next + best.0] = Complex64::new(1.0, 0.0);
            for _ in 0..2 {
                for m in 0..=j {
                    let c = dot(&basis[m * n..m * n + n], &basis[next..next + n]);
                    for i in 0..n {
                        let q = basis[m * n + i];
                        basis[next + i] -= q * c;
                    }
                }
            }
            let nb = basis[next..next + n].iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            for i in 0..n {
                basis[next + i] /= nb;
            }
        }
    }
    let mu = tridiagonal_max_eigenvalue(&alpha[..n], &beta[..n - 1]);
    if !mu.is_finite() || mu <= 0.0 {
        return 0.0;
    }
    1.0 / mu.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
        CMatrix::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    /// Determinant by Gaussian elimination with partial pivoting (test oracle).
    fn det(m: &CMatrix) -> Complex64 {
        let n = m.rows();
        let mut a = m.clone();
        let mut d = c(1.0, 0.0);
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| a[(i, k)].norm().total_cmp(&a[(j, k)].norm())).unwrap();
            if p != k {
                for j in 0..n {
                    let tmp = a[(k, j)];
                    a[(k, j)] = a[(p, j)];
                    a[(p, j)] = tmp;
                }
                d = -d;
            }
            let piv = a[(k, k)];
            d *= piv;
            for i in k + 1..n {
                let f = a[(i, k)] / piv;
                for j in k..n {
                    let v = a[(k, j)];
                    a[(i, j)] -= f * v;
                }
            }
        }
        d
    }

    #[test]
    fn diagonal_eigenvalues() {
        let m = CMatrix::from_diagonal(&[c(3.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)]);
        let ev = eigenvalues(&m).unwrap();
        assert_eq!(ev, vec![c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)]);
    }

    #[test]
    fn non_square_is_usage_error() {
        let m = CMatrix::zeros(2, 3);
        let err = eig_dense(&m, false).unwrap_err();
        assert!(err.is_usage());
    }

    #[test]
    fn trace_and_determinant_match_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..=12 {
            for _ in 0..5 {
                let m = random_matrix(&mut rng, n);
                let ev = eigenvalues(&m).unwrap();
                let sum: Complex64 = ev.iter().sum();
                let prod: Complex64 = ev.iter().product();
                let tr = m.trace();
                assert!((sum - tr).norm() <= 1e-8 * (1.0 + tr.norm()), "trace n={n}");
                let dt = det(&m);
                assert!((prod - dt).norm() <= 1e-8 * (1.0 + dt.norm()), "det n={n}");
            }
        }
    }

    #[test]
    fn eigenvector_residuals() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [1, 2, 3, 5, 8, 16, 40] {
            let m = random_matrix(&mut rng, n);
            let res = eig_dense(&m, true).unwrap();
            let norm = spectral_norm(&m);
            for (lambda, v) in res.eigenvalues.iter().zip(res.eigenvectors.as_ref().unwrap()) {
                let mv = m.mul_vec(v);
                let r: f64 = mv.iter().zip(v).map(|(a, b)| (a - lambda * b).norm_sqr()).sum::<f64>().sqrt();
                assert!(r <= 1e-8 * norm, "residual {r} n={n}");
            }
        }
    }

    #[test]
    fn jordan_block_is_handled() {
        // defective: eigenvalue 2 with multiplicity 3
        let m = CMatrix::from_real_rows(&[&[2.0, 1.0, 0.0], &[0.0, 2.0, 1.0], &[0.0, 0.0, 2.0]]);
        let res = eig_dense(&m, true).unwrap();
        for l in &res.eigenvalues {
            assert!((l - c(2.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn companion_matrix_roots() {
        // x^3 - 6x^2 + 11x - 6 = (x-1)(x-2)(x-3)
        let m = CMatrix::from_real_rows(&[&[6.0, -11.0, 6.0], &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
        let ev = eigenvalues(&m).unwrap();
        for (l, want) in ev.iter().zip([1.0, 2.0, 3.0]) {
            assert!((l - c(want, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn scalar_shift_sigma_min() {
        // zI - aI with z = 3+4i, a = 1 -> |2+4i|
        let a = CMatrix::identity(4);
        let m = a.shifted_negation(c(3.0, 4.0));
        assert!((sigma_min(&m) - 20f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn unitary_sigma_min_is_one() {
        let theta = 0.7f64;
        let (s, co) = (theta.sin(), theta.cos());
        let m = CMatrix::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => c(co, 0.0),
            (0, 1) => c(0.0, -s),
            (1, 0) => c(0.0, -s),
            _ => c(co, 0.0),
        });
        assert!((sigma_min(&m) - 1.0).abs() < 1e-14);
        assert!((spectral_norm(&m) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn zero_matrix_norm() {
        assert_eq!(spectral_norm(&CMatrix::zeros(3, 3)), 0.0);
    }

    #[test]
    fn jordan_commutator_by_hand() {
        // J = [[0,1],[0,0]]: J J* = diag(1,0), J* J = diag(0,1); difference diag(1,-1)
        let j = CMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!((commutator_norm(&j) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn hermitian_has_zero_commutator() {
        let m = CMatrix::from_fn(3, 3, |i, j| {
            if i == j {
                c(i as f64, 0.0)
            } else if i < j {
                c(1.0 + j as f64, 0.5)
            } else {
                c(1.0 + i as f64, -0.5)
            }
        });
        assert!(is_hermitian(&m, 0.0));
        assert!(commutator_norm(&m) < 1e-13);
    }

    #[test]
    fn triangular_fast_path_matches_jacobi() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut ws = LanczosWorkspace::default();
        for n in [1, 2, 3, 5, 8, 13] {
            for _ in 0..20 {
                let m = random_matrix(&mut rng, n);
                let s = schur(&m, false).unwrap();
                let z = c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
                let fast = sigma_min_shifted_triangular(&s.t, z, &mut ws);
                let reference = sigma_min(&m.shifted_negation(z));
                let scale = 1.0 + spectral_norm(&m.shifted_negation(z));
                assert!((fast - reference).abs() <= 1e-10 * scale, "n={n}: {fast} vs {reference}");
            }
        }
    }

    #[test]
    fn triangular_fast_path_at_eigenvalue() {
        let m = CMatrix::from_real_rows(&[&[1.0, 5.0], &[0.0, 2.0]]);
        let mut ws = LanczosWorkspace::default();
        assert_eq!(sigma_min_shifted_triangular(&m, c(2.0, 0.0), &mut ws), 0.0);
        let near = sigma_min_shifted_triangular(&m, c(2.0 + 1e-9, 0.0), &mut ws);
        assert!(near < 1e-9);
    }

    #[test]
    fn tridiagonal_bisection_small_cases() {
        assert!((tridiagonal_max_eigenvalue(&[3.0], &[]) - 3.0).abs() < 1e-15);
        // [[2,1],[1,2]] -> 3
        assert!((tridiagonal_max_eigenvalue(&[2.0, 2.0], &[1.0]) - 3.0).abs() < 1e-13);
        // decoupled blocks
        assert!((tridiagonal_max_eigenvalue(&[1.0, 5.0, 2.0], &[0.0, 0.0]) - 5.0).abs() < 1e-13);
        // double top eigenvalue
        assert!((tridiagonal_max_eigenvalue(&[4.0, 4.0, 1.0], &[0.0, 0.0]) - 4.0).abs() < 1e-7);
        // 1D Laplacian: 2 - 2 cos(k pi / (n + 1)), max at k = n
        let n = 9;
        let got = tridiagonal_max_eigenvalue(&vec![2.0; n], &vec![-1.0; n - 1]);
        let want = 2.0 - 2.0 * (n as f64 * core::f64::consts::PI / (n as f64 + 1.0)).cos();
        assert!((got - want).abs() < 1e-13);
    }
}
