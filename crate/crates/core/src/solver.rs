//! Bloch-phase recycling direct solver for the periodized system.

use crate::assembly::{PointSource, SystemBlocks, rb_block};
use crate::error::{Error, Result};
use crate::exec;
use crate::geometry::{Panelization, UnitCell};
use crate::layer::{BoundaryOps, kernel};
use crate::linalg::{CMat, Lu, pinv_solve, vstack, zeros};
use crate::lowrank::{A0Solver, CompressionParams, CornerCompression, NeighborFactors, ProxyShape, Woodbury, compress_neighbors};
use crate::point::Point;
use crate::specfun::Wavenumbers;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use std::time::Instant;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverMode {
    Dense,
    IdFull,
    IdHalf,
    Corner,
}

impl SolverMode {
    pub const ALL: [SolverMode; 4] = [SolverMode::Dense, SolverMode::IdFull, SolverMode::IdHalf, SolverMode::Corner];

    pub fn name(self) -> &'static str {
        match self {
            SolverMode::Dense => "dense",
            SolverMode::IdFull => "id-full",
            SolverMode::IdHalf => "id-half",
            SolverMode::Corner => "corner",
        }
    }
}

impl std::str::FromStr for SolverMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        SolverMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown solver mode '{s}' (expected dense, id-full, id-half or corner)")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverParams {
    pub mode: SolverMode,
    /// ID tolerance.
    pub eps: f64,
    /// Relative singular value cutoff of the pseudo-inverses.
    pub pinv_tol: f64,
    pub n_proxy: usize,
    pub proxy_scale: f64,
    pub block_diagonal: bool,
}

impl Default for SolverParams {
    fn default() -> Self {
        let c = CompressionParams::default();
        Self {
            mode: SolverMode::IdHalf,
            eps: c.eps,
            pinv_tol: 1e-13,
            n_proxy: c.n_proxy,
            proxy_scale: c.proxy_scale,
            block_diagonal: c.block_diagonal,
        }
    }
}

impl SolverParams {
    pub fn compression(&self) -> CompressionParams {
        CompressionParams { eps: self.eps, n_proxy: self.n_proxy, proxy_scale: self.proxy_scale, block_diagonal: self.block_diagonal }
    }

    pub fn validate(&self) -> Result<()> {
        self.compression().validate()?;
        if !(self.pinv_tol > 0.0 && self.pinv_tol < 1.0) {
            return Err(Error::Config(format!("solver.pinv_tol must lie in (0, 1), got {}", self.pinv_tol)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct PrecomputeTiming {
    pub assemble: f64,
    pub factor: f64,
}

/// Everything that does not depend on the Bloch phase.
pub struct Precompute {
    pub pan: Arc<Panelization>,
    pub cell: Arc<UnitCell>,
    pub blocks: Arc<SystemBlocks>,
    pub params: SolverParams,
    pub omega: f64,
    a0: Option<A0Solver>,
    pub neighbors: Option<NeighborFactors>,
    woodbury: Option<Woodbury>,
    pub timing: PrecomputeTiming,
}

impl Precompute {
    pub fn new(pan: Arc<Panelization>, cell: Arc<UnitCell>, omega: f64, params: SolverParams) -> Result<Self> {
        params.validate()?;
        let t0 = Instant::now();
        let blocks = Arc::new(SystemBlocks::assemble(&pan, &cell, omega)?);
        let assemble = t0.elapsed().as_secs_f64();
        Self::from_blocks(pan, cell, omega, blocks, assemble, params)
    }

    /// Builds the mode-specific factorization on already assembled blocks,
    /// so several modes can share one assembly. `assemble` is the time
    /// recorded for that assembly.
    pub fn from_blocks(
        pan: Arc<Panelization>,
        cell: Arc<UnitCell>,
        omega: f64,
        blocks: Arc<SystemBlocks>,
        assemble: f64,
        params: SolverParams,
    ) -> Result<Self> {
        params.validate()?;
        let t1 = Instant::now();
        let comp = params.compression();
        let (a0, neighbors, woodbury) = match params.mode {
            SolverMode::Dense => (None, None, None),
            mode => {
                let a0 = if mode == SolverMode::Corner {
                    A0Solver::Corner(Box::new(CornerCompression::build(&blocks.a0, &pan, omega, &comp)?))
                } else {
                    A0Solver::Dense(Lu::new(blocks.a0.as_ref())?)
                };
                let shape = if mode == SolverMode::IdFull { ProxyShape::Full } else { ProxyShape::Half };
                let nf = compress_neighbors(&pan, omega, &blocks.a_minus, &blocks.a_plus, shape, &comp)?;
                let wb = Woodbury::new(&a0, &nf);
                (Some(a0), Some(nf), Some(wb))
            }
        };
        let factor = t1.elapsed().as_secs_f64();
        Ok(Self { pan, cell, blocks, params, omega, a0, neighbors, woodbury, timing: PrecomputeTiming { assemble, factor } })
    }

    pub fn mode(&self) -> SolverMode {
        self.params.mode
    }

    pub fn n(&self) -> usize {
        self.pan.len()
    }

    /// Size of the corner-compressed system, in corner mode.
    pub fn n_compress(&self) -> Option<usize> {
        match &self.a0 {
            Some(A0Solver::Corner(cc)) => Some(cc.n_compress()),
            _ => None,
        }
    }

    /// Neighbor ranks `(l_-1, l_1)` in the ID modes.
    pub fn neighbor_ranks(&self) -> Option<(usize, usize)> {
        self.neighbors.as_ref().map(|f| (f.minus.rank(), f.plus.rank()))
    }

    /// `A(alpha)^{-1} f`.
    pub fn apply_inverse(&self, alpha: C64, f: &CMat) -> Result<CMat> {
        match (&self.a0, &self.woodbury) {
            (Some(a0), Some(wb)) => wb.solve(a0, alpha, f.as_ref()),
            _ => {
                let a = self.blocks.a_of(alpha);
                let lu = Lu::new(a.as_ref()).map_err(|e| Error::Numerical(format!("A(alpha) at alpha = {alpha}: {e}")))?;
                Ok(lu.solve(f.as_ref()))
            }
        }
    }

    /// Solves the periodized system with boundary data `g` (one column).
    pub fn solve_raw(&self, kappa: C64, g: &CMat) -> Result<QPSolution> {
        let wn = Wavenumbers::new(self.omega, kappa, self.cell.period);
        self.solve_inner(wn, g, None)
    }

    /// Solves for the field scattered from a quasi-periodized point source at `x0`.
    pub fn solve_point_source(&self, kappa: C64, x0: Point) -> Result<QPSolution> {
        let wn = Wavenumbers::new(self.omega, kappa, self.cell.period);
        let ps = PointSource::new(&self.blocks, &self.cell, &wn, x0, self.params.pinv_tol)?;
        let g = ps.boundary_data(&self.pan);
        self.solve_inner(wn, &g, Some(ps))
    }

    fn solve_inner(&self, wn: Wavenumbers, g: &CMat, incident: Option<PointSource>) -> Result<QPSolution> {
        let alpha = wn.alpha();
        let n = self.n();
        let np = self.blocks.n_proxy();
        if g.nrows() != n || g.ncols() != 1 {
            return Err(Error::Config(format!("boundary data must be {n} x 1, got {} x {}", g.nrows(), g.ncols())));
        }
        let rhs = CMat::from_fn(n, 1 + np, |i, j| if j == 0 { g[(i, 0)] } else { self.blocks.b[(i, j - 1)] });
        let x = self.apply_inverse(alpha, &rhs)?;

        let c_hat = vstack(&[self.blocks.c_of(alpha).as_ref(), self.blocks.z_of(alpha).as_ref()]);
        let cx = &c_hat * &x;
        let w = rb_block(&self.cell, &wn);
        let nrb = w.ncols();
        let (mw2, mt2) = (self.blocks.q_left.nrows(), w.nrows());
        let mut s = zeros(mw2 + mt2, np + nrb);
        s.as_mut().submatrix_mut(0, 0, mw2, np).copy_from(self.blocks.q_of(alpha));
        s.as_mut().submatrix_mut(mw2, 0, mt2, np).copy_from(&self.blocks.v);
        s.as_mut().submatrix_mut(mw2, np, mt2, nrb).copy_from(-&w);
        for i in 0..mw2 + mt2 {
            for j in 0..np {
                s[(i, j)] -= cx[(i, j + 1)];
            }
        }
        let b_rhs = CMat::from_fn(mw2 + mt2, 1, |i, _| -cx[(i, 0)]);
        let sol = pinv_solve(s.as_ref(), b_rhs.as_ref(), self.params.pinv_tol)?;
        if sol.singular_values.iter().any(|v| !v.is_finite()) || sol.rank == 0 {
            let tail: Vec<String> = sol.singular_values.iter().rev().take(5).map(|v| format!("{v:.3e}")).collect();
            return Err(Error::Numerical(format!(
                "Schur complement rank collapse at kappa = {}: smallest singular values [{}]",
                wn.kappa,
                tail.join(", ")
            )));
        }
        let c: Vec<C64> = (0..np).map(|j| sol.x[(j, 0)]).collect();
        let a: Vec<C64> = (0..nrb).map(|j| sol.x[(np + j, 0)]).collect();
        let sigma: Vec<C64> = (0..n).map(|i| x[(i, 0)] - (0..np).map(|j| x[(i, j + 1)] * c[j]).sum::<C64>()).collect();
        Ok(QPSolution {
            wn,
            alpha,
            sigma,
            c,
            a,
            schur_rank: sol.rank,
            incident,
            pan: self.pan.clone(),
            cell: self.cell.clone(),
        })
    }
}

/// Quasi-periodic solution: density, proxy strengths and Rayleigh-Bloch coefficients.
#[derive(Clone)]
pub struct QPSolution {
    pub wn: Wavenumbers,
    pub alpha: C64,
    pub sigma: Vec<C64>,
    pub c: Vec<C64>,
    pub a: Vec<C64>,
    pub schur_rank: usize,
    /// Periodized point source, when the solve was driven by one.
    pub incident: Option<PointSource>,
    pan: Arc<Panelization>,
    cell: Arc<UnitCell>,
}

fn dot(row: &[C64], v: &[C64]) -> C64 {
    row.iter().zip(v).map(|(a, b)| a * b).sum()
}

impl QPSolution {
    pub fn kappa(&self) -> C64 {
        self.wn.kappa
    }

    pub fn panelization(&self) -> &Panelization {
        &self.pan
    }

    pub fn cell(&self) -> &UnitCell {
        &self.cell
    }

    fn omega(&self) -> f64 {
        self.wn.omega
    }

    /// Unfolded representation (three copies plus proxies) and optionally its gradient.
    fn raw(&self, ops: &BoundaryOps<'_>, x: Point, grad: bool) -> (C64, [C64; 2]) {
        let n = self.pan.len();
        let mut v = C64::new(0.0, 0.0);
        let mut g = [C64::new(0.0, 0.0); 2];
        let mut row = vec![C64::new(0.0, 0.0); n];
        for l in -1..=1 {
            let ph = self.alpha.powi(l);
            row.iter_mut().for_each(|r| *r = C64::new(0.0, 0.0));
            ops.single_row(x, l, &mut row);
            v += ph * dot(&row, &self.sigma);
            if grad {
                for (k, e) in [Point::new(1.0, 0.0), Point::new(0.0, 1.0)].into_iter().enumerate() {
                    row.iter_mut().for_each(|r| *r = C64::new(0.0, 0.0));
                    ops.dstar_row(x, e, None, l, &mut row);
                    g[k] += ph * dot(&row, &self.sigma);
                }
            }
        }
        for ((z, nz), c) in self.cell.proxy_points.iter().zip(&self.cell.proxy_normals).zip(&self.c) {
            let (pv, pg) = kernel::proxy_with_grad(self.omega(), x - *z, *nz);
            v += c * pv;
            g[0] += c * pg[0];
            g[1] += c * pg[1];
        }
        if let Some(ps) = &self.incident {
            let (iv, ig) = ps.value_grad(x);
            v += iv;
            g[0] += ig[0];
            g[1] += ig[1];
        }
        (v, g)
    }

    fn rb_coeffs(&self) -> Vec<C64> {
        match &self.incident {
            Some(ps) => self.a.iter().zip(&ps.a).map(|(u, p)| u + p).collect(),
            None => self.a.clone(),
        }
    }

    /// Rayleigh-Bloch value and gradient above the top of the cell.
    fn rb(&self, a: &[C64], x: Point) -> (C64, [C64; 2]) {
        let k = self.cell.params.rb_order as i32;
        let i = C64::new(0.0, 1.0);
        let mut v = C64::new(0.0, 0.0);
        let mut g = [C64::new(0.0, 0.0); 2];
        for (c, an) in a.iter().enumerate() {
            let m = c as i32 - k;
            let (b, kk) = (self.wn.beta(m), self.wn.k(m));
            let e = an * (i * b * x.x).exp() * (i * kk * (x.y - self.cell.y_top)).exp();
            v += e;
            g[0] += i * b * e;
            g[1] += i * kk * e;
        }
        (v, g)
    }

    /// Total field (incident plus scattered when a point source drove the
    /// solve) at arbitrary points of the domain.
    pub fn eval_field(&self, points: &[Point]) -> Vec<C64> {
        let ops = BoundaryOps::new(&self.pan, self.omega());
        let a = self.rb_coeffs();
        exec::map_range(points.len(), |k| {
            let x = points[k];
            if x.y > self.cell.y_top {
                return self.rb(&a, x).0;
            }
            let (m, xf) = self.cell.fold(x);
            self.alpha.powi(m as i32) * self.raw(&ops, xf, false).0
        })
    }

    /// Relative Neumann residual at `per_panel` off-node probes on every panel.
    pub fn boundary_residual(&self, per_panel: usize) -> Result<f64> {
        self.boundary_residual_on(per_panel, |_| true)
    }

    /// As [`Self::boundary_residual`], skipping the dyadically refined corner panels.
    pub fn boundary_residual_smooth(&self, per_panel: usize) -> Result<f64> {
        self.boundary_residual_on(per_panel, |p| self.pan.panels[p].corner_set.is_none())
    }

    fn boundary_residual_on<F: Fn(usize) -> bool>(&self, per_panel: usize, keep: F) -> Result<f64> {
        let ps = self
            .incident
            .as_ref()
            .ok_or_else(|| Error::Config("boundary residual needs a point-source driven solve".into()))?;
        let pan = &*self.pan;
        let ops = BoundaryOps::new(pan, self.omega());
        let p = pan.order();
        let probes: Vec<(usize, f64)> = (0..pan.panels.len())
            .filter(|&q| keep(q))
            .flat_map(|q| (0..per_panel).map(move |k| (q, -1.0 + (2.0 * k as f64 + 1.0) / per_panel as f64)))
            .collect();
        let res = exec::map_range(probes.len(), |t| {
            let (q, tau) = probes[t];
            let (x, dx) = pan.local(q, tau);
            let nu = dx.perp().unit();
            let mut lag = vec![0.0; p];
            pan.rule.lagrange(tau, &mut lag);
            let start = pan.panels[q].start;
            let sig: C64 = (0..p).map(|j| self.sigma[start + j] * lag[j]).sum();
            let mut total = -0.5 * sig;
            let mut row = vec![C64::new(0.0, 0.0); pan.len()];
            for l in -1..=1 {
                row.iter_mut().for_each(|r| *r = C64::new(0.0, 0.0));
                ops.dstar_row(x, nu, if l == 0 { Some((q, tau)) } else { None }, l, &mut row);
                total += self.alpha.powi(l) * dot(&row, &self.sigma);
            }
            for ((z, nz), c) in self.cell.proxy_points.iter().zip(&self.cell.proxy_normals).zip(&self.c) {
                let (_, pg) = kernel::proxy_with_grad(self.omega(), x - *z, *nz);
                total += c * (pg[0] * nu.x + pg[1] * nu.y);
            }
            let (_, ig) = ps.value_grad(x);
            let inc = ig[0] * nu.x + ig[1] * nu.y;
            (total + inc, inc)
        });
        let scale = res.iter().map(|r| r.1.norm()).fold(0.0, f64::max);
        let worst = res.iter().map(|r| r.0.norm()).fold(0.0, f64::max);
        Ok(worst / scale)
    }

    fn wall_probes(&self, count: usize) -> Vec<f64> {
        let (lo, hi) = (self.cell.y_wall_bottom, self.cell.y_top);
        (0..count).map(|k| lo + (hi - lo) * (k as f64 + 0.5) / count as f64).collect()
    }

    /// `max |u(x_R) - alpha u(x_L)|` over wall probes, for values and x-fluxes,
    /// each relative to the largest probe magnitude.
    pub fn quasi_residual(&self, count: usize) -> f64 {
        let ops = BoundaryOps::new(&self.pan, self.omega());
        let ys = self.wall_probes(count);
        let vals = exec::map_range(ys.len(), |k| {
            let l = self.raw(&ops, Point::new(self.cell.x_left, ys[k]), true);
            let r = self.raw(&ops, Point::new(self.cell.x_right, ys[k]), true);
            (r.0 - self.alpha * l.0, r.1[0] - self.alpha * l.1[0], l.0, l.1[0])
        });
        rel_max(&vals)
    }

    /// Mismatch between the unfolded representation and the Rayleigh-Bloch
    /// expansion on the top of the cell, for values and y-fluxes.
    pub fn top_residual(&self, count: usize) -> f64 {
        let ops = BoundaryOps::new(&self.pan, self.omega());
        let a = self.rb_coeffs();
        let (x0, d) = (self.cell.x_left, self.cell.period);
        let vals = exec::map_range(count, |k| {
            let x = Point::new(x0 + d * (k as f64 + 0.5) / count as f64, self.cell.y_top);
            let below = self.raw(&ops, x, true);
            let above = self.rb(&a, x);
            (below.0 - above.0, below.1[1] - above.1[1], above.0, above.1[1])
        });
        rel_max(&vals)
    }
}

fn rel_max(vals: &[(C64, C64, C64, C64)]) -> f64 {
    let m = |f: &dyn Fn(&(C64, C64, C64, C64)) -> C64| vals.iter().map(|v| f(v).norm()).fold(0.0, f64::max);
    let rv = m(&|v| v.0) / m(&|v| v.2);
    let rf = m(&|v| v.1) / m(&|v| v.3);
    rv.max(rf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BoundaryCurve, CellParams};
    use std::f64::consts::PI;

    fn precompute(curve: BoundaryCurve, n_pan: usize, n_ref: usize, mode: SolverMode) -> Precompute {
        let pan = Arc::new(Panelization::new(Arc::new(curve), n_pan, n_ref, 16).unwrap());
        let cell = Arc::new(UnitCell::new(&pan, CellParams::for_period(1.0)).unwrap());
        Precompute::new(pan, cell, 1.2, SolverParams { mode, ..Default::default() }).unwrap()
    }

    fn kappa() -> C64 {
        C64::new(1.2 * (PI / 5.0).cos(), 0.0)
    }

    const X0: Point = Point { x: -0.2, y: 0.35 };

    #[test]
    fn modes_agree_on_cosine_field() {
        let dense = precompute(BoundaryCurve::cosine(0.1, 1.0), 10, 0, SolverMode::Dense);
        let pts = [Point::new(0.3, 0.25), Point::new(0.0, 0.8), Point::new(-0.4, 0.2)];
        let u0 = dense.solve_point_source(kappa(), X0).unwrap().eval_field(&pts);
        for mode in [SolverMode::IdFull, SolverMode::IdHalf, SolverMode::Corner] {
            let pre = precompute(BoundaryCurve::cosine(0.1, 1.0), 10, 0, mode);
            let u = pre.solve_point_source(kappa(), X0).unwrap().eval_field(&pts);
            for (a, b) in u.iter().zip(&u0) {
                assert!((a - b).norm() <= 1e-12 * b.norm(), "{mode:?}");
            }
        }
    }

    #[test]
    fn residuals_small_on_cosine() {
        let pre = precompute(BoundaryCurve::cosine(0.1, 1.0), 20, 0, SolverMode::IdHalf);
        let s = pre.solve_point_source(kappa(), X0).unwrap();
        let (b, q, t) = (s.boundary_residual(3).unwrap(), s.quasi_residual(40), s.top_residual(40));
        assert!(b <= 1e-10 && q <= 1e-10 && t <= 1e-10, "{b:e} {q:e} {t:e}");
        let coarse = precompute(BoundaryCurve::cosine(0.1, 1.0), 4, 0, SolverMode::IdHalf);
        let sc = coarse.solve_point_source(kappa(), X0).unwrap();
        assert!(sc.boundary_residual(3).unwrap() > b);
        // evanescent Rayleigh-Bloch tail
        let amax = s.a.iter().map(|a| a.norm()).fold(0.0, f64::max);
        let k = s.a.len();
        let tail = [0, 1, 2, k - 3, k - 2, k - 1].iter().map(|&i| s.a[i].norm()).fold(0.0, f64::max);
        assert!(tail <= 1e-8 * amax.max(1e-300) || amax == 0.0);
    }

    #[test]
    fn field_is_quasi_periodic_and_continuous_across_top() {
        let pre = precompute(BoundaryCurve::cosine(0.1, 1.0), 12, 0, SolverMode::Dense);
        let s = pre.solve_point_source(kappa(), X0).unwrap();
        let pts = [Point::new(0.3, 0.25), Point::new(1.3, 0.25), Point::new(-0.7, 0.25)];
        let u = s.eval_field(&pts);
        assert!((u[1] - s.alpha * u[0]).norm() <= 1e-10 * u[0].norm());
        assert!((u[2] - s.alpha.inv() * u[0]).norm() <= 1e-10 * u[0].norm());
        let y = pre.cell.y_top;
        let v = s.eval_field(&[Point::new(0.1, y - 1e-12), Point::new(0.1, y + 1e-12)]);
        assert!((v[0] - v[1]).norm() <= 1e-10 * v[0].norm());
    }

    #[test]
    fn flat_boundary_and_zero_data() {
        let pre = precompute(BoundaryCurve::flat(1.0), 8, 0, SolverMode::Dense);
        let s = pre.solve_point_source(kappa(), X0).unwrap();
        assert!(s.boundary_residual(3).unwrap() <= 1e-10);
        let zero = CMat::zeros(pre.n(), 1);
        let z = pre.solve_raw(kappa(), &zero).unwrap();
        assert!(z.sigma.iter().all(|v| v.norm() == 0.0));
        assert!(z.eval_field(&[Point::new(0.1, 0.3)])[0].norm() == 0.0);
    }

    #[test]
    fn precompute_is_immutable_and_deterministic() {
        let a = precompute(BoundaryCurve::cosine(0.1, 1.0), 8, 0, SolverMode::IdHalf);
        let b = precompute(BoundaryCurve::cosine(0.1, 1.0), 8, 0, SolverMode::IdHalf);
        assert_eq!(a.neighbors.as_ref().unwrap().minus.skel, b.neighbors.as_ref().unwrap().minus.skel);
        let before = a.woodbury.as_ref().unwrap().a0inv_l.clone();
        let s1 = a.solve_point_source(kappa(), X0).unwrap();
        let _ = a.solve_point_source(C64::new(0.3, -0.2), X0).unwrap();
        let s2 = a.solve_point_source(kappa(), X0).unwrap();
        assert!(a.woodbury.as_ref().unwrap().a0inv_l == before);
        assert_eq!(s1.sigma, s2.sigma);
    }

    #[test]
    fn mode_parsing() {
        for m in SolverMode::ALL {
            assert_eq!(m.name().parse::<SolverMode>().unwrap(), m);
        }
        assert!(matches!("fast".parse::<SolverMode>(), Err(Error::Config(_))));
    }
}
