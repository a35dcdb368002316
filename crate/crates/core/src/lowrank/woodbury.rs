use super::{CornerCompression, NeighborFactors};
use crate::error::{Error, Result};
use crate::linalg::{CMat, Lu, vstack};
use faer::MatRef;
use num_complex::Complex64 as C64;

/// Applies `A0^{-1}`.
pub enum A0Solver {
    Dense(Lu),
    Corner(Box<CornerCompression>),
}

impl A0Solver {
    pub fn solve(&self, f: MatRef<'_, C64>) -> CMat {
        match self {
            A0Solver::Dense(lu) => lu.solve(f),
            A0Solver::Corner(cc) => cc.solve(f),
        }
    }

    pub fn n(&self) -> usize {
        match self {
            A0Solver::Dense(lu) => lu.n,
            A0Solver::Corner(cc) => cc.n(),
        }
    }
}

/// `(A0 + alpha L1 R1 + alpha^-1 L-1 R-1)^{-1}` through the Woodbury identity.
pub struct Woodbury {
    /// `A0^{-1} [L-1 L1]`, independent of the Bloch phase.
    pub a0inv_l: CMat,
    r_minus: CMat,
    r_plus: CMat,
    /// `[R-1; R1] A0^{-1} L`, unscaled.
    ra: CMat,
}

impl Woodbury {
    pub fn new(a0: &A0Solver, f: &NeighborFactors) -> Self {
        let (km, kp) = (f.minus.rank(), f.plus.rank());
        let n = a0.n();
        let l = CMat::from_fn(n, km + kp, |i, j| if j < km { f.minus.l[(i, j)] } else { f.plus.l[(i, j - km)] });
        let a0inv_l = a0.solve(l.as_ref());
        let r = vstack(&[f.minus.r.as_ref(), f.plus.r.as_ref()]);
        let ra = &r * &a0inv_l;
        Self { a0inv_l, r_minus: f.minus.r.clone(), r_plus: f.plus.r.clone(), ra }
    }

    pub fn rank(&self) -> usize {
        self.a0inv_l.ncols()
    }

    fn row_scale(&self, alpha: C64, i: usize) -> C64 {
        if i < self.r_minus.nrows() { alpha.inv() } else { alpha }
    }

    /// Capacitance matrix `I + R(alpha) A0^{-1} L`.
    pub fn capacitance(&self, alpha: C64) -> CMat {
        let k = self.rank();
        CMat::from_fn(k, k, |i, j| {
            let id = if i == j { 1.0 } else { 0.0 };
            id + self.row_scale(alpha, i) * self.ra[(i, j)]
        })
    }

    pub fn solve(&self, a0: &A0Solver, alpha: C64, f: MatRef<'_, C64>) -> Result<CMat> {
        let y = a0.solve(f);
        if self.rank() == 0 {
            return Ok(y);
        }
        let cap = self.capacitance(alpha);
        let lu = Lu::new(cap.as_ref()).map_err(|_| {
            Error::Numerical(format!(
                "singular Woodbury capacitance matrix at alpha = {alpha} (condition number {:.3e})",
                cond2(&cap)
            ))
        })?;
        let mut t = vstack(&[(&self.r_minus * &y).as_ref(), (&self.r_plus * &y).as_ref()]);
        for i in 0..t.nrows() {
            let s = self.row_scale(alpha, i);
            for j in 0..t.ncols() {
                t[(i, j)] *= s;
            }
        }
        let z = lu.solve(t.as_ref());
        Ok(y - &self.a0inv_l * z)
    }
}

/// Ratio of extreme singular values.
fn cond2(a: &CMat) -> f64 {
    match a.thin_svd() {
        Ok(svd) => {
            let s = svd.S().column_vector();
            let sv: Vec<f64> = (0..s.nrows()).map(|i| s[i].re).collect();
            sv.iter().cloned().fold(0.0, f64::max) / sv.iter().cloned().fold(f64::INFINITY, f64::min)
        }
        Err(_) => f64::INFINITY,
    }
}
