//! Linear operators, a Lanczos norm estimator and small dense helpers.

use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Scalars the iterative solver runs over.
pub trait Scalar: ComplexField<RealField = f64> + Copy {
    fn from_parts(re: f64, im: f64) -> Self;
}

impl Scalar for f64 {
    fn from_parts(re: f64, _im: f64) -> Self {
        re
    }
}

impl Scalar for C64 {
    fn from_parts(re: f64, im: f64) -> Self {
        C64::new(re, im)
    }
}

/// A square operator available only through its action.
pub trait LinearOperator<T: Scalar>: Sync {
    fn dim(&self) -> usize;
    /// y ← A x
    fn apply(&self, x: &[T], y: &mut [T]);
    /// y ← A* x
    fn apply_adjoint(&self, x: &[T], y: &mut [T]);
    fn is_self_adjoint(&self) -> bool;
}

/// A dense matrix with a recorded self-adjointness flag.
#[derive(Clone, Debug)]
pub struct DenseOperator<T: Scalar> {
    pub matrix: DMatrix<T>,
    self_adjoint: bool,
}

impl<T: Scalar> DenseOperator<T> {
    pub fn new(matrix: DMatrix<T>) -> Self {
        assert_eq!(matrix.nrows(), matrix.ncols(), "operator must be square");
        let self_adjoint = hermitian_defect(&matrix) <= 1e-12 * (1.0 + max_abs(&matrix));
        DenseOperator { matrix, self_adjoint }
    }
}

impl<T: Scalar> LinearOperator<T> for DenseOperator<T> {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn apply(&self, x: &[T], y: &mut [T]) {
        let n = self.dim();
        let xv = nalgebra::DVectorView::from_slice(x, n);
        let mut yv = nalgebra::DVectorViewMut::from_slice(y, n);
        yv.gemv(T::one(), &self.matrix, &xv, T::zero());
    }

    fn apply_adjoint(&self, x: &[T], y: &mut [T]) {
        let n = self.dim();
        let xv = nalgebra::DVectorView::from_slice(x, n);
        let mut yv = nalgebra::DVectorViewMut::from_slice(y, n);
        yv.gemv_ad(T::one(), &self.matrix, &xv, T::zero());
    }

    fn is_self_adjoint(&self) -> bool {
        self.self_adjoint
    }
}

/// A*A for an arbitrary operator A.
struct Gram<'a, T: Scalar, A: LinearOperator<T> + ?Sized> {
    inner: &'a A,
    buf: std::sync::Mutex<Vec<T>>,
}

impl<T: Scalar, A: LinearOperator<T> + ?Sized> LinearOperator<T> for Gram<'_, T, A> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn apply(&self, x: &[T], y: &mut [T]) {
        let mut buf = self.buf.lock().unwrap();
        self.inner.apply(x, &mut buf);
        self.inner.apply_adjoint(&buf, y);
    }

    fn apply_adjoint(&self, x: &[T], y: &mut [T]) {
        self.apply(x, y)
    }

    fn is_self_adjoint(&self) -> bool {
        true
    }
}

pub fn max_abs<T: Scalar>(m: &DMatrix<T>) -> f64 {
    m.iter().map(|z| z.modulus()).fold(0.0, f64::max)
}

/// max |A − A*| entrywise.
pub fn hermitian_defect<T: Scalar>(m: &DMatrix<T>) -> f64 {
    let n = m.nrows();
    let mut d: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            d = d.max((m[(i, j)] - m[(j, i)].conjugate()).modulus());
        }
    }
    d
}

/// Spectral norm of a small dense matrix via SVD.
pub fn dense_norm<T: Scalar>(m: &DMatrix<T>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.iter().copied().fold(0.0, f64::max)
}

/// PSD square root of a hermitian matrix. Eigenvalues in [−tol, 0) are
/// clamped; anything more negative is an error.
pub fn psd_sqrt(m: &CMatrix, tol: f64) -> Result<CMatrix> {
    let eig = m.clone().symmetric_eigen();
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -tol {
        return Err(Error::Numeric(format!("matrix is not PSD: eigenvalue {min:e}")));
    }
    let sq = eig.eigenvalues.map(|l| C64::new(l.max(0.0).sqrt(), 0.0));
    let u = &eig.eigenvectors;
    Ok(u * CMatrix::from_diagonal(&sq) * u.adjoint())
}

/// Options for the Lanczos norm estimator.
#[derive(Clone, Copy, Debug)]
pub struct LanczosOptions {
    /// Relative tolerance on the norm.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// Full reorthogonalization is used while dim × iterations stays below
    /// this many scalars.
    pub reorth_budget: usize,
    /// Start vector to use instead of a random one.
    pub start: StartVector,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StartVector {
    Random,
    /// All-ones vector, useful for invariant-subspace tricks.
    Constant,
    /// One random block of length `period` repeated along the vector.
    Tiled { period: usize },
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions {
            tol: 1e-9,
            max_iter: 10_000,
            seed: 0x5eed,
            reorth_budget: 20_000_000,
            start: StartVector::Random,
        }
    }
}

impl LanczosOptions {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Extremal Ritz values of a self-adjoint operator.
#[derive(Clone, Copy, Debug)]
pub struct Extremes {
    pub max: f64,
    pub min: f64,
    /// Residual bounds for the two Ritz pairs.
    pub max_residual: f64,
    pub min_residual: f64,
    pub iterations: usize,
}

/// Estimated spectral norm with its bracket.
#[derive(Clone, Copy, Debug)]
pub struct NormEstimate {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub iterations: usize,
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + x.conjugate() * *y)
}

fn norm<T: Scalar>(a: &[T]) -> f64 {
    a.iter().map(|x| x.modulus_squared()).sum::<f64>().sqrt()
}

fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * *xi;
    }
}

fn random_block<T: Scalar>(n: usize, seed: u64) -> Vec<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            T::from_parts(re, im)
        })
        .collect()
}

fn start_vector<T: Scalar>(n: usize, opts: &LanczosOptions) -> Vec<T> {
    let mut v: Vec<T> = match opts.start {
        StartVector::Constant => vec![T::one(); n],
        StartVector::Random => random_block(n, opts.seed),
        StartVector::Tiled { period } => {
            let block: Vec<T> = random_block(period.max(1), opts.seed);
            (0..n).map(|i| block[i % block.len()]).collect()
        }
    };
    let nv = norm(&v);
    for x in &mut v {
        *x = x.unscale(nv);
    }
    v
}

/// Lanczos iteration for the two ends of the spectrum of a self-adjoint
/// operator.
pub fn hermitian_extremes<T: Scalar, A: LinearOperator<T> + ?Sized>(
    op: &A,
    opts: &LanczosOptions,
) -> Result<Extremes> {
    let n = op.dim();
    if n == 0 {
        return Ok(Extremes { max: 0.0, min: 0.0, max_residual: 0.0, min_residual: 0.0, iterations: 0 });
    }
    let cap = opts.max_iter.min(n).max(1);
    let reorth = n.saturating_mul(cap) <= opts.reorth_budget;
    let mut basis: Vec<Vec<T>> = Vec::new();

    let mut v = start_vector::<T>(n, opts);
    let mut v_prev = vec![T::zero(); n];
    let mut w = vec![T::zero(); n];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut beta_prev = 0.0;
    let mut last = Extremes {
        max: 0.0,
        min: 0.0,
        max_residual: f64::INFINITY,
        min_residual: f64::INFINITY,
        iterations: 0,
    };

    for k in 0..cap {
        op.apply(&v, &mut w);
        if k > 0 {
            axpy(T::from_real(-beta_prev), &v_prev, &mut w);
        }
        let alpha = dot(&v, &w).real();
        axpy(T::from_real(-alpha), &v, &mut w);
        if reorth {
            basis.push(v.clone());
            for _ in 0..2 {
                for q in &basis {
                    let c = dot(q, &w);
                    axpy(-c, q, &mut w);
                }
            }
        }
        let beta = norm(&w);
        alphas.push(alpha);

        let check = k < 20 || k % 5 == 4 || k + 1 == cap || beta <= 1e-14 * alpha.abs().max(1e-300);
        if check {
            let (vals, last_row) = tridiag_eigen(&alphas, &betas)?;
            let (imax, imin) = extreme_indices(&vals);
            let scale = vals[imax].abs().max(vals[imin].abs());
            last = Extremes {
                max: vals[imax],
                min: vals[imin],
                max_residual: beta * last_row[imax].abs(),
                min_residual: beta * last_row[imin].abs(),
                iterations: k + 1,
            };
            let invariant = beta <= 1e-13 * scale.max(f64::MIN_POSITIVE);
            if invariant || converged(&last, opts.tol) {
                return Ok(last);
            }
        }
        if k + 1 == cap {
            break;
        }
        betas.push(beta);
        beta_prev = beta;
        std::mem::swap(&mut v_prev, &mut v);
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi.unscale(beta);
        }
    }
    if last.iterations == n || converged(&last, opts.tol) {
        return Ok(last);
    }
    let lower = last.max.abs().max(last.min.abs());
    Err(Error::Convergence {
        iterations: last.iterations,
        lower,
        upper: lower + last.max_residual.max(last.min_residual),
    })
}

fn extreme_indices(vals: &[f64]) -> (usize, usize) {
    let mut imax = 0;
    let mut imin = 0;
    for (i, &x) in vals.iter().enumerate() {
        if x > vals[imax] {
            imax = i;
        }
        if x < vals[imin] {
            imin = i;
        }
    }
    (imax, imin)
}

fn converged(e: &Extremes, tol: f64) -> bool {
    let norm = e.max.abs().max(e.min.abs());
    let budget = tol * norm.max(f64::MIN_POSITIVE);
    // The end attaining the norm must be resolved; the other end only needs
    // to be safely inside.
    if e.max.abs() >= e.min.abs() {
        e.max_residual <= budget && e.min.abs() + e.min_residual <= norm * (1.0 + tol)
    } else {
        e.min_residual <= budget && e.max.abs() + e.max_residual <= norm * (1.0 + tol)
    }
}

/// ‖A‖ through the extremes of A (self-adjoint) or of A*A.
pub fn spectral_norm<T: Scalar, A: LinearOperator<T> + ?Sized>(
    op: &A,
    opts: &LanczosOptions,
) -> Result<NormEstimate> {
    if opts.tol <= 0.0 {
        return Err(Error::Domain("tolerance must be positive".into()));
    }
    if op.is_self_adjoint() {
        let e = hermitian_extremes(op, opts)?;
        let lower = e.max.abs().max(e.min.abs());
        let res = if e.max.abs() >= e.min.abs() { e.max_residual } else { e.min_residual };
        Ok(NormEstimate { value: lower, lower, upper: lower + res, iterations: e.iterations })
    } else {
        let gram = Gram { inner: op, buf: std::sync::Mutex::new(vec![T::zero(); op.dim()]) };
        // relative error on ‖A‖² is twice that on ‖A‖
        let sq_opts = LanczosOptions { tol: opts.tol, ..*opts };
        let e = match hermitian_extremes(&gram, &sq_opts) {
            Ok(e) => e,
            Err(Error::Convergence { iterations, lower, upper }) => {
                return Err(Error::Convergence {
                    iterations,
                    lower: lower.max(0.0).sqrt(),
                    upper: upper.max(0.0).sqrt(),
                })
            }
            Err(e) => return Err(e),
        };
        let sq = e.max.max(0.0);
        let value = sq.sqrt();
        Ok(NormEstimate {
            value,
            lower: value,
            upper: (sq + e.max_residual).sqrt(),
            iterations: e.iterations,
        })
    }
}

/// Eigenvalues of the symmetric tridiagonal matrix with diagonal `diag` and
/// off-diagonal `off`, together with the last component of each normalized
/// eigenvector. Implicit QL with Wilkinson shifts.
pub fn tridiag_eigen(diag: &[f64], off: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = diag.len();
    assert!(off.len() + 1 >= n, "off-diagonal too short");
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n.saturating_sub(1)].copy_from_slice(&off[..n.saturating_sub(1)]);
    let mut z = vec![0.0; n];
    if n == 0 {
        return Ok((d, z));
    }
    z[n - 1] = 1.0;

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::Numeric("tridiagonal QL did not converge".into()));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let fz = z[i + 1];
                z[i + 1] = s * z[i] + c * fz;
                z[i] = c * z[i] - s * fz;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok((d, z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    #[test]
    fn tridiag_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [1usize, 2, 5, 17, 40] {
            let d: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let e: Vec<f64> = (0..n.saturating_sub(1)).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut t = DMatrix::<f64>::zeros(n, n);
            for i in 0..n {
                t[(i, i)] = d[i];
                if i + 1 < n {
                    t[(i, i + 1)] = e[i];
                    t[(i + 1, i)] = e[i];
                }
            }
            let eig = t.clone().symmetric_eigen();
            let (vals, last) = tridiag_eigen(&d, &e).unwrap();
            let mut a: Vec<f64> = vals.clone();
            let mut b: Vec<f64> = eig.eigenvalues.iter().copied().collect();
            a.sort_by(f64::total_cmp);
            b.sort_by(f64::total_cmp);
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-12, "{x} vs {y}");
            }
            for (k, &lam) in vals.iter().enumerate() {
                let j = eig
                    .eigenvalues
                    .iter()
                    .enumerate()
                    .min_by(|p, q| (p.1 - lam).abs().total_cmp(&(q.1 - lam).abs()))
                    .unwrap()
                    .0;
                let want = eig.eigenvectors[(n - 1, j)].abs();
                assert!((last[k].abs() - want).abs() < 1e-8, "n={n}");
            }
        }
    }

    #[test]
    fn diag_norm() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -3.0, 2.0]));
        let r = spectral_norm(&DenseOperator::new(m), &LanczosOptions::default()).unwrap();
        assert!((r.value - 3.0).abs() < 1e-12);
    }

    #[test]
    fn identity_norm() {
        let m = DMatrix::<f64>::identity(1000, 1000);
        let r = spectral_norm(&DenseOperator::new(m), &LanczosOptions::default()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nonhermitian_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = CMatrix::from_fn(30, 30, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let want = dense_norm(&m);
        let r = spectral_norm(&DenseOperator::new(m), &LanczosOptions::default()).unwrap();
        assert!((r.value - want).abs() < 1e-8 * want);
    }

    #[test]
    fn sqrt_clamps_small_negative() {
        let m = CMatrix::from_diagonal(&DVector::from_vec(vec![C64::new(4.0, 0.0), C64::new(-1e-12, 0.0)]));
        let s = psd_sqrt(&m, 1e-10).unwrap();
        assert!((s[(0, 0)].re - 2.0).abs() < 1e-14);
        let bad = CMatrix::from_diagonal(&DVector::from_vec(vec![C64::new(-1e-3, 0.0)]));
        assert!(psd_sqrt(&bad, 1e-10).is_err());
    }
}
