//! Blocks of the periodized boundary integral system and the periodized
//! point-source incident field.
//!
//! Unknowns are the density `sigma` on `Gamma_0`, proxy strengths `c` and
//! Rayleigh-Bloch coefficients `a`. For Bloch phase `alpha`:
//!
//! ```text
//! [ A(alpha)  B         0 ] [sigma]   [g]
//! [ C(alpha)  Q(alpha)  0 ] [c    ] = [0]
//! [ Z(alpha)  V        -W ] [a    ]   [0]
//! ```
//!
//! Wall and top rows stack value rows before flux rows. The wall block uses
//! the telescoped form `C = alpha C_plus - alpha^-2 C_minus2`, where
//! `C_plus`, `C_minus2` hold left-wall traces of the copies `+d` and `-2d`.

use crate::error::{Error, Result};
use crate::exec;
use crate::geometry::{Panelization, UnitCell};
use crate::layer::{BoundaryOps, kernel};
use crate::linalg::{CMat, pinv_solve, zeros};
use crate::point::Point;
use crate::specfun::Wavenumbers;
use num_complex::Complex64 as C64;

/// Bloch-phase independent pieces of the system matrix.
pub struct SystemBlocks {
    pub omega: f64,
    /// `-1/2 I + D*` from `Gamma_0` onto itself.
    pub a0: CMat,
    /// `D*` from `Gamma_0 - d` onto `Gamma_0`.
    pub a_minus: CMat,
    /// `D*` from `Gamma_0 + d` onto `Gamma_0`.
    pub a_plus: CMat,
    /// Normal derivatives of the proxy basis at the boundary nodes.
    pub b: CMat,
    pub c_plus: CMat,
    pub c_minus2: CMat,
    pub q_left: CMat,
    pub q_right: CMat,
    /// Top traces of the copies `l = -1, 0, 1`.
    pub z: [CMat; 3],
    pub v: CMat,
}

fn fill_rows<F>(m: usize, n: usize, f: F) -> CMat
where
    F: Fn(usize, &mut [C64]) + Sync + Send,
{
    let rows = exec::map_range(m, |i| {
        let mut r = vec![C64::new(0.0, 0.0); n];
        f(i, &mut r);
        r
    });
    CMat::from_fn(m, n, |i, j| rows[i][j])
}

impl SystemBlocks {
    pub fn assemble(pan: &Panelization, cell: &UnitCell, omega: f64) -> Result<Self> {
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(Error::Config(format!("frequency must be positive, got {omega}")));
        }
        let ops = BoundaryOps::new(pan, omega);
        let n = pan.len();
        let d = pan.curve.period;

        let dstar_block = |l: i32| {
            fill_rows(n, n, |i, row| {
                ops.dstar_node_row(i, l, row);
                if l == 0 {
                    row[i] -= 0.5;
                }
            })
        };
        let a0 = dstar_block(0);
        let a_minus = dstar_block(-1);
        let a_plus = dstar_block(1);

        let np = cell.proxy_points.len();
        let b = fill_rows(n, np, |i, row| {
            let (x, nu) = (pan.nodes[i], pan.normals[i]);
            for (j, r) in row.iter_mut().enumerate() {
                let (_, g) = kernel::proxy_with_grad(omega, x - cell.proxy_points[j], cell.proxy_normals[j]);
                *r = g[0] * nu.x + g[1] * nu.y;
            }
        });

        let mw = cell.wall_count();
        let wall_trace = |shift: f64| {
            fill_rows(2 * mw, n, |k, row| {
                let x = Point::new(cell.x_left, cell.wall_y[k % mw]);
                for (j, r) in row.iter_mut().enumerate() {
                    let dx = x - pan.nodes[j].shifted(shift);
                    *r = if k < mw { kernel::single(omega, dx) } else { kernel::grad(omega, dx)[0] } * pan.weights[j];
                }
            })
        };
        let c_plus = wall_trace(d);
        let c_minus2 = wall_trace(-2.0 * d);

        let proxy_trace = |xw: f64| {
            fill_rows(2 * mw, np, |k, row| {
                let x = Point::new(xw, cell.wall_y[k % mw]);
                for (j, r) in row.iter_mut().enumerate() {
                    let (v, g) = kernel::proxy_with_grad(omega, x - cell.proxy_points[j], cell.proxy_normals[j]);
                    *r = if k < mw { v } else { g[0] };
                }
            })
        };
        let q_left = proxy_trace(cell.x_left);
        let q_right = proxy_trace(cell.x_right);

        let mt = cell.top_x.len();
        let top_trace = |shift: f64| {
            fill_rows(2 * mt, n, |k, row| {
                let x = Point::new(cell.top_x[k % mt], cell.y_top);
                for (j, r) in row.iter_mut().enumerate() {
                    let dx = x - pan.nodes[j].shifted(shift);
                    *r = if k < mt { kernel::single(omega, dx) } else { kernel::grad(omega, dx)[1] } * pan.weights[j];
                }
            })
        };
        let z = [top_trace(-d), top_trace(0.0), top_trace(d)];
        let v = fill_rows(2 * mt, np, |k, row| {
            let x = Point::new(cell.top_x[k % mt], cell.y_top);
            for (j, r) in row.iter_mut().enumerate() {
                let (v, g) = kernel::proxy_with_grad(omega, x - cell.proxy_points[j], cell.proxy_normals[j]);
                *r = if k < mt { v } else { g[1] };
            }
        });
        Ok(Self { omega, a0, a_minus, a_plus, b, c_plus, c_minus2, q_left, q_right, z, v })
    }

    pub fn n(&self) -> usize {
        self.a0.nrows()
    }

    pub fn n_proxy(&self) -> usize {
        self.b.ncols()
    }

    /// `A(alpha) = A0 + alpha A1 + alpha^-1 A-1`.
    pub fn a_of(&self, alpha: C64) -> CMat {
        let ai = alpha.inv();
        let n = self.n();
        CMat::from_fn(n, n, |i, j| self.a0[(i, j)] + alpha * self.a_plus[(i, j)] + ai * self.a_minus[(i, j)])
    }

    pub fn c_of(&self, alpha: C64) -> CMat {
        let a2 = alpha.powi(-2);
        CMat::from_fn(self.c_plus.nrows(), self.n(), |i, j| alpha * self.c_plus[(i, j)] - a2 * self.c_minus2[(i, j)])
    }

    pub fn q_of(&self, alpha: C64) -> CMat {
        let ai = alpha.inv();
        CMat::from_fn(self.q_left.nrows(), self.n_proxy(), |i, j| self.q_left[(i, j)] - ai * self.q_right[(i, j)])
    }

    pub fn z_of(&self, alpha: C64) -> CMat {
        let ai = alpha.inv();
        CMat::from_fn(self.z[0].nrows(), self.n(), |i, j| ai * self.z[0][(i, j)] + self.z[1][(i, j)] + alpha * self.z[2][(i, j)])
    }
}

/// Rayleigh-Bloch block: value rows `e^{i beta_n x}`, flux rows `i k_n e^{i beta_n x}`.
pub fn rb_block(cell: &UnitCell, wn: &Wavenumbers) -> CMat {
    let k = cell.params.rb_order as i32;
    let mt = cell.top_x.len();
    CMat::from_fn(2 * mt, (2 * k + 1) as usize, |r, c| {
        let n = c as i32 - k;
        let e = (C64::new(0.0, 1.0) * wn.beta(n) * cell.top_x[r % mt]).exp();
        if r < mt { e } else { C64::new(0.0, 1.0) * wn.k(n) * e }
    })
}

/// Full monolithic system matrix for one Bloch phase (reference path).
pub fn full_system(blocks: &SystemBlocks, cell: &UnitCell, wn: &Wavenumbers) -> CMat {
    let alpha = wn.alpha();
    let (n, np) = (blocks.n(), blocks.n_proxy());
    let w = rb_block(cell, wn);
    let nrb = w.ncols();
    let (mw2, mt2) = (blocks.c_plus.nrows(), w.nrows());
    let mut m = zeros(n + mw2 + mt2, n + np + nrb);
    m.as_mut().submatrix_mut(0, 0, n, n).copy_from(blocks.a_of(alpha));
    m.as_mut().submatrix_mut(0, n, n, np).copy_from(&blocks.b);
    m.as_mut().submatrix_mut(n, 0, mw2, n).copy_from(blocks.c_of(alpha));
    m.as_mut().submatrix_mut(n, n, mw2, np).copy_from(blocks.q_of(alpha));
    m.as_mut().submatrix_mut(n + mw2, 0, mt2, n).copy_from(blocks.z_of(alpha));
    m.as_mut().submatrix_mut(n + mw2, n, mt2, np).copy_from(&blocks.v);
    m.as_mut().submatrix_mut(n + mw2, n + np, mt2, nrb).copy_from(-&w);
    m
}

/// Quasi-periodic field `psi` of a point source at `x0`: the three nearest
/// images plus a proxy correction enforcing the wall and radiation conditions.
#[derive(Clone, Debug)]
pub struct PointSource {
    pub omega: f64,
    pub source: Point,
    pub alpha: C64,
    pub period: f64,
    pub proxy_points: Vec<Point>,
    pub proxy_normals: Vec<Point>,
    pub c: Vec<C64>,
    pub a: Vec<C64>,
    pub rb_order: usize,
    pub wn: Wavenumbers,
    pub y_top: f64,
    pub rank: usize,
}

impl PointSource {
    pub fn new(blocks: &SystemBlocks, cell: &UnitCell, wn: &Wavenumbers, source: Point, pinv_tol: f64) -> Result<Self> {
        let omega = blocks.omega;
        if source.x < cell.x_left || source.x > cell.x_right || source.y >= cell.y_top {
            return Err(Error::Config(format!("point source {source:?} must lie inside the unit cell")));
        }
        let alpha = wn.alpha();
        let d = cell.period;
        let mw = cell.wall_count();
        let mt = cell.top_x.len();
        let np = cell.proxy_points.len();
        let w = rb_block(cell, wn);
        let nrb = w.ncols();
        let q = blocks.q_of(alpha);
        let mut lhs = zeros(2 * mw + 2 * mt, np + nrb);
        lhs.as_mut().submatrix_mut(0, 0, 2 * mw, np).copy_from(&q);
        lhs.as_mut().submatrix_mut(2 * mw, 0, 2 * mt, np).copy_from(&blocks.v);
        lhs.as_mut().submatrix_mut(2 * mw, np, 2 * mt, nrb).copy_from(-&w);

        let a2 = alpha.powi(-2);
        let mut rhs = zeros(2 * mw + 2 * mt, 1);
        for k in 0..mw {
            let x = Point::new(cell.x_left, cell.wall_y[k]);
            let (dp, dm) = (x - source.shifted(d), x - source.shifted(-2.0 * d));
            rhs[(k, 0)] = -(alpha * kernel::single(omega, dp) - a2 * kernel::single(omega, dm));
            rhs[(mw + k, 0)] = -(alpha * kernel::grad(omega, dp)[0] - a2 * kernel::grad(omega, dm)[0]);
        }
        for k in 0..mt {
            let x = Point::new(cell.top_x[k], cell.y_top);
            let (mut v, mut f) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
            for l in -1..=1 {
                let ph = alpha.powi(l);
                let dx = x - source.shifted(l as f64 * d);
                v += ph * kernel::single(omega, dx);
                f += ph * kernel::grad(omega, dx)[1];
            }
            rhs[(2 * mw + k, 0)] = -v;
            rhs[(2 * mw + mt + k, 0)] = -f;
        }
        let sol = pinv_solve(lhs.as_ref(), rhs.as_ref(), pinv_tol)?;
        let c = (0..np).map(|j| sol.x[(j, 0)]).collect();
        let a = (0..nrb).map(|j| sol.x[(np + j, 0)]).collect();
        Ok(Self {
            omega,
            source,
            alpha,
            period: d,
            proxy_points: cell.proxy_points.clone(),
            proxy_normals: cell.proxy_normals.clone(),
            c,
            a,
            rb_order: cell.params.rb_order,
            wn: *wn,
            y_top: cell.y_top,
            rank: sol.rank,
        })
    }

    /// `psi` and its gradient at a point of the unit cell below the top.
    pub fn value_grad(&self, x: Point) -> (C64, [C64; 2]) {
        let mut v = C64::new(0.0, 0.0);
        let mut g = [C64::new(0.0, 0.0); 2];
        for l in -1..=1 {
            let ph = self.alpha.powi(l);
            let dx = x - self.source.shifted(l as f64 * self.period);
            v += ph * kernel::single(self.omega, dx);
            let gr = kernel::grad(self.omega, dx);
            g[0] += ph * gr[0];
            g[1] += ph * gr[1];
        }
        for ((z, n), c) in self.proxy_points.iter().zip(&self.proxy_normals).zip(&self.c) {
            let (pv, pg) = kernel::proxy_with_grad(self.omega, x - *z, *n);
            v += c * pv;
            g[0] += c * pg[0];
            g[1] += c * pg[1];
        }
        (v, g)
    }

    pub fn value(&self, x: Point) -> C64 {
        self.value_grad(x).0
    }

    /// Rayleigh-Bloch representation above the top of the cell.
    pub fn value_above(&self, x: Point) -> C64 {
        rb_eval(&self.wn, self.rb_order, &self.a, self.y_top, x)
    }

    /// Boundary data `g = -d psi / d nu` at the nodes.
    pub fn boundary_data(&self, pan: &Panelization) -> CMat {
        let n = pan.len();
        let vals = exec::map_range(n, |i| {
            let (_, g) = self.value_grad(pan.nodes[i]);
            -(g[0] * pan.normals[i].x + g[1] * pan.normals[i].y)
        });
        CMat::from_fn(n, 1, |i, _| vals[i])
    }
}

pub fn rb_eval(wn: &Wavenumbers, order: usize, a: &[C64], y_top: f64, x: Point) -> C64 {
    let k = order as i32;
    let i = C64::new(0.0, 1.0);
    (0..a.len())
        .map(|c| {
            let n = c as i32 - k;
            a[c] * (i * wn.beta(n) * x.x).exp() * (i * wn.k(n) * (x.y - y_top)).exp()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BoundaryCurve, CellParams};
    use crate::linalg::frob;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn setup(curve: BoundaryCurve, npan: usize) -> (Panelization, UnitCell) {
        let pan = Panelization::new(Arc::new(curve), npan, 0, 16).unwrap();
        let cell = UnitCell::new(&pan, CellParams::for_period(1.0)).unwrap();
        (pan, cell)
    }

    #[test]
    fn block_shapes() {
        let (pan, cell) = setup(BoundaryCurve::cosine(0.25, 1.0), 4);
        let b = SystemBlocks::assemble(&pan, &cell, 1.2).unwrap();
        assert_eq!(b.a0.nrows(), 64);
        assert_eq!(b.b.ncols(), 160);
        assert_eq!(b.c_plus.nrows(), 240);
        assert_eq!(b.z[1].nrows(), 120);
        let wn = Wavenumbers::new(1.2, C64::new(0.3, -0.1), 1.0);
        let m = full_system(&b, &cell, &wn);
        assert_eq!((m.nrows(), m.ncols()), (64 + 240 + 120, 64 + 160 + 41));
    }

    #[test]
    fn telescoped_wall_block_matches_three_copy_discrepancy() {
        let (pan, cell) = setup(BoundaryCurve::cosine(0.25, 1.0), 6);
        let om = 1.2;
        let b = SystemBlocks::assemble(&pan, &cell, om).unwrap();
        let alpha = C64::from_polar(1.0, 0.7) * 1.3;
        let c = b.c_of(alpha);
        let mw = cell.wall_count();
        let mut direct = zeros(2 * mw, pan.len());
        for k in 0..2 * mw {
            let y = cell.wall_y[k % mw];
            for j in 0..pan.len() {
                let mut s = C64::new(0.0, 0.0);
                for l in -1..=1 {
                    let src = pan.nodes[j].shifted(l as f64);
                    let (dl, dr) = (Point::new(cell.x_left, y) - src, Point::new(cell.x_right, y) - src);
                    let (vl, vr) = if k < mw {
                        (kernel::single(om, dl), kernel::single(om, dr))
                    } else {
                        (kernel::grad(om, dl)[0], kernel::grad(om, dr)[0])
                    };
                    s += alpha.powi(l) * (vl - vr / alpha);
                }
                direct[(k, j)] = s * pan.weights[j];
            }
        }
        let diff = &c - &direct;
        assert!(frob(diff.as_ref()) < 1e-11 * frob(direct.as_ref()));
    }

    #[test]
    fn flat_boundary_blocks_are_trivial() {
        let (pan, cell) = setup(BoundaryCurve::flat(1.0), 4);
        let b = SystemBlocks::assemble(&pan, &cell, 1.2).unwrap();
        for i in 0..pan.len() {
            for j in 0..pan.len() {
                let e = if i == j { -0.5 } else { 0.0 };
                assert_eq!(b.a0[(i, j)], C64::new(e, 0.0));
                assert_eq!(b.a_plus[(i, j)], C64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn point_source_field_is_quasi_periodic() {
        let (pan, cell) = setup(BoundaryCurve::cosine(0.25, 1.0), 4);
        let om = 1.2;
        let b = SystemBlocks::assemble(&pan, &cell, om).unwrap();
        let wn = Wavenumbers::new(om, C64::new(om * (PI / 5.0).cos(), 0.0), 1.0);
        let ps = PointSource::new(&b, &cell, &wn, Point::new(-0.2, 0.35), 1e-13).unwrap();
        let alpha = wn.alpha();
        let mut scale = 0.0f64;
        let mut err = 0.0f64;
        for &y in &[0.0, 0.3, 0.6] {
            let (vl, gl) = ps.value_grad(Point::new(-0.5, y));
            let (vr, gr) = ps.value_grad(Point::new(0.5, y));
            err = err.max((vr - alpha * vl).norm()).max((gr[0] - alpha * gl[0]).norm());
            scale = scale.max(vl.norm());
        }
        assert!(err < 1e-10 * scale, "{err} vs {scale}");
        for &x in &[-0.43, 0.01, 0.37] {
            let p = Point::new(x, cell.y_top);
            assert!((ps.value(p) - ps.value_above(p)).norm() < 1e-10 * scale);
        }
    }
}
