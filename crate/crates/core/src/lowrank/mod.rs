//! Low-rank machinery: interpolative decomposition, proxy-accelerated
//! compression of the neighbor interactions, Woodbury updates and corner
//! compression.

mod corner;
mod id;
mod neighbor;
mod woodbury;

pub use corner::{CornerCompression, corner_split};
pub use id::{RankRule, RowId, col_id, row_id};
pub use neighbor::{NeighborFactor, NeighborFactors, ProxyShape, compress_neighbor, compress_neighbors};
pub use woodbury::{A0Solver, Woodbury};

use crate::layer::kernel;
use crate::linalg::{CMat, frob};
use crate::point::Point;
use std::f64::consts::PI;

/// Tolerance and proxy surface settings shared by all compressions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompressionParams {
    pub eps: f64,
    /// Points on each proxy circle (or half circle).
    pub n_proxy: usize,
    /// Proxy radius as a multiple of the enclosed patch radius.
    pub proxy_scale: f64,
    /// Drop couplings between distinct corners when inverting the corner block.
    pub block_diagonal: bool,
}

impl Default for CompressionParams {
    fn default() -> Self {
        Self { eps: 1e-13, n_proxy: 100, proxy_scale: 1.75, block_diagonal: false }
    }
}

impl CompressionParams {
    pub fn validate(&self) -> crate::Result<()> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(crate::Error::Config(format!("solver.eps must lie in (0, 1), got {}", self.eps)));
        }
        if self.n_proxy < 4 {
            return Err(crate::Error::Config(format!("solver.n_proxy must be at least 4, got {}", self.n_proxy)));
        }
        if !(self.proxy_scale > 1.0) {
            return Err(crate::Error::Config(format!(
                "solver.proxy_scale must exceed 1 so the proxy circle separates near from far, got {}",
                self.proxy_scale
            )));
        }
        Ok(())
    }
}

/// Points and outward normals on a circle, or on the arc `[theta0, theta0 + span)`.
pub(crate) struct ProxyCircle {
    pub center: Point,
    pub radius: f64,
    pub points: Vec<Point>,
    pub normals: Vec<Point>,
    pub weight: f64,
}

impl ProxyCircle {
    pub fn new(center: Point, radius: f64, n: usize, theta0: f64, span: f64) -> Self {
        let h = span / n as f64;
        let normals: Vec<Point> = (0..n)
            .map(|k| {
                let t = theta0 + h * (k as f64 + 0.5);
                Point::new(t.cos(), t.sin())
            })
            .collect();
        let points = normals.iter().map(|&e| center + e * radius).collect();
        Self { center, radius, points, normals, weight: h * radius }
    }

    pub fn full(center: Point, radius: f64, n: usize) -> Self {
        Self::new(center, radius, n, 0.0, 2.0 * PI)
    }

    pub fn contains(&self, p: Point) -> bool {
        (p - self.center).norm() <= self.radius
    }

    /// `D*` at targets `(x_i, nu_i)` due to charges and dipoles on the circle.
    pub fn target_block(&self, omega: f64, x: &[Point], nu: &[Point]) -> CMat {
        let np = self.points.len();
        CMat::from_fn(x.len(), 2 * np, |i, j| {
            let p = j % np;
            let dx = x[i] - self.points[p];
            let v = if j < np {
                kernel::dstar(omega, dx, nu[i])
            } else {
                kernel::dipole_dstar(omega, dx, self.normals[p], nu[i])
            };
            v * self.weight
        })
    }

    /// Dirichlet and Neumann traces on the circle of single-layer sources at `y_j` with weights `w_j`.
    pub fn source_block(&self, omega: f64, y: &[Point], w: &[f64]) -> CMat {
        let np = self.points.len();
        CMat::from_fn(2 * np, y.len(), |i, j| {
            let p = i % np;
            let dx = self.points[p] - y[j];
            let v = if i < np {
                kernel::single(omega, dx)
            } else {
                let g = kernel::grad(omega, dx);
                g[0] * self.normals[p].x + g[1] * self.normals[p].y
            };
            v * w[j] * self.weight
        })
    }
}

/// Rescales `proxy` so its Frobenius norm matches `target_norm`.
pub(crate) fn balance(mut proxy: CMat, target_norm: f64) -> CMat {
    let pn = frob(proxy.as_ref());
    if pn > 0.0 && target_norm > 0.0 {
        let s = target_norm / pn;
        for j in 0..proxy.ncols() {
            for i in 0..proxy.nrows() {
                proxy[(i, j)] *= s;
            }
        }
    }
    proxy
}

/// `[a | b]` for blocks sharing the row count.
pub(crate) fn hstack(a: &CMat, b: &CMat) -> CMat {
    let (m, na) = (a.nrows(), a.ncols());
    CMat::from_fn(m, na + b.ncols(), |i, j| if j < na { a[(i, j)] } else { b[(i, j - na)] })
}
