//! Thin helpers over `faer` dense linear algebra.

use crate::error::{Error, Result};
use faer::linalg::solvers::{DenseSolveCore, PartialPivLu, Solve};
use faer::{Mat, MatRef, c64};

pub type CMat = Mat<c64>;

pub fn zeros(m: usize, n: usize) -> CMat {
    Mat::zeros(m, n)
}

pub fn frob(a: MatRef<'_, c64>) -> f64 {
    let mut s = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            s += a[(i, j)].norm_sqr();
        }
    }
    s.sqrt()
}

pub fn max_abs(a: MatRef<'_, c64>) -> f64 {
    let mut s = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            s = s.max(a[(i, j)].norm());
        }
    }
    s
}

pub fn matmul(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> CMat {
    a * b
}

pub fn rows(a: MatRef<'_, c64>, idx: &[usize]) -> CMat {
    Mat::from_fn(idx.len(), a.ncols(), |i, j| a[(idx[i], j)])
}

pub fn cols(a: MatRef<'_, c64>, idx: &[usize]) -> CMat {
    Mat::from_fn(a.nrows(), idx.len(), |i, j| a[(i, idx[j])])
}

pub fn submatrix(a: MatRef<'_, c64>, r: &[usize], c: &[usize]) -> CMat {
    Mat::from_fn(r.len(), c.len(), |i, j| a[(r[i], c[j])])
}

/// Stack blocks vertically; all must share the column count.
pub fn vstack(blocks: &[MatRef<'_, c64>]) -> CMat {
    let n = blocks.first().map_or(0, |b| b.ncols());
    let m: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = zeros(m, n);
    let mut r0 = 0;
    for b in blocks {
        out.as_mut().submatrix_mut(r0, 0, b.nrows(), n).copy_from(b);
        r0 += b.nrows();
    }
    out
}

/// LU factorization with partial pivoting and a cheap conditioning guard.
pub struct Lu {
    pub lu: PartialPivLu<c64>,
    pub n: usize,
}

impl Lu {
    pub fn new(a: MatRef<'_, c64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::Numerical(format!("LU of non-square {}x{} matrix", a.nrows(), a.ncols())));
        }
        let lu = a.partial_piv_lu();
        let u = lu.U();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 0..a.nrows() {
            let v = u[(i, i)].norm();
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !(lo > 0.0) || !hi.is_finite() || lo < 1e-15 * hi {
            return Err(Error::Numerical(format!(
                "matrix of size {} is numerically singular (pivot ratio {:.3e})",
                a.nrows(),
                lo / hi
            )));
        }
        Ok(Self { lu, n: a.nrows() })
    }

    pub fn solve(&self, b: MatRef<'_, c64>) -> CMat {
        self.lu.solve(b)
    }

    pub fn inverse(&self) -> CMat {
        self.lu.inverse()
    }

    /// Ratio of smallest to largest pivot, a rough reciprocal condition number.
    pub fn pivot_ratio(&self) -> f64 {
        let u = self.lu.U();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 0..self.n {
            let v = u[(i, i)].norm();
            lo = lo.min(v);
            hi = hi.max(v);
        }
        lo / hi
    }
}

/// Result of a truncated-SVD least-squares solve.
#[derive(Clone, Debug)]
pub struct PinvSolve {
    pub x: CMat,
    pub rank: usize,
    pub singular_values: Vec<f64>,
}

/// Minimum-norm least-squares solution of `a x = b`, discarding singular
/// values below `rel_tol * s_max`.
pub fn pinv_solve(a: MatRef<'_, c64>, b: MatRef<'_, c64>, rel_tol: f64) -> Result<PinvSolve> {
    let svd = a.thin_svd().map_err(|e| Error::Numerical(format!("SVD did not converge: {e:?}")))?;
    let s: Vec<f64> = (0..svd.S().dim()).map(|i| svd.S()[i].re).collect();
    let smax = s.iter().fold(0.0f64, |m, &v| m.max(v));
    if !(smax > 0.0) || !smax.is_finite() {
        return Err(Error::Numerical(format!("pseudo-inverse of a zero or non-finite matrix (s_max = {smax})")));
    }
    let rank = s.iter().filter(|&&v| v > rel_tol * smax).count();
    let u = svd.U().subcols(0, rank);
    let v = svd.V().subcols(0, rank);
    let mut coef = u.adjoint() * b;
    for i in 0..rank {
        let inv = 1.0 / s[i];
        for j in 0..coef.ncols() {
            coef[(i, j)] *= inv;
        }
    }
    Ok(PinvSolve { x: v * &coef, rank, singular_values: s })
}
