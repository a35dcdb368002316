//! Helmholtz kernels in displacement form and boundary-layer operators on a
//! panelized period, with singular and near-singular panel corrections.
//!
//! Self-panel entries of the adjoint double layer use a log kernel split
//! with product-integration weights; other nearby panels use Gauss-Legendre
//! on subintervals graded toward the target, against the panel's Lagrange basis.

use crate::geometry::Panelization;
use crate::point::Point;
use crate::quadrature::{GaussRule, log_weights};
use crate::specfun::bessel_jy01;
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Kernels of `G(x, y) = (i/4) H0(omega |x - y|)` as functions of `dx = x - y`.
pub mod kernel {
    use super::*;

    #[inline]
    pub fn single(omega: f64, dx: Point) -> C64 {
        let b = bessel_jy01(omega * dx.norm());
        0.25 * I * b.h0()
    }

    #[inline]
    pub fn grad(omega: f64, dx: Point) -> [C64; 2] {
        let r = dx.norm();
        let b = bessel_jy01(omega * r);
        let s = -0.25 * I * omega * b.h1() / r;
        [s * dx.x, s * dx.y]
    }

    /// `nu . grad_x G`, the adjoint double-layer kernel.
    #[inline]
    pub fn dstar(omega: f64, dx: Point, nu: Point) -> C64 {
        let r = dx.norm();
        let b = bessel_jy01(omega * r);
        -0.25 * I * omega * b.h1() * (dx.dot(nu) / r)
    }

    /// Adjoint double layer together with the coefficient of `ln r` in it.
    #[inline]
    pub fn dstar_split(omega: f64, dx: Point, nu: Point) -> (C64, f64) {
        let r = dx.norm();
        let b = bessel_jy01(omega * r);
        let c = dx.dot(nu) / r;
        (-0.25 * I * omega * b.h1() * c, omega / (2.0 * PI) * b.j1 * c)
    }

    /// `nu_x . grad_x (n . grad_z G(x, z))` for a dipole at `z`, `dx = x - z`.
    #[inline]
    pub fn dipole_dstar(omega: f64, dx: Point, n: Point, nu: Point) -> C64 {
        let r = dx.norm();
        let e = dx * (1.0 / r);
        let b = bessel_jy01(omega * r);
        let (en, ev) = (e.dot(n), e.dot(nu));
        0.25 * I * omega * (omega * b.h0() * en * ev + b.h1() * (nu.dot(n) - 2.0 * en * ev) / r)
    }

    /// Proxy basis `phi = d G / d n_z + i omega G` for a source at `z` with
    /// normal `n`; `dx = x - z`.
    #[inline]
    pub fn proxy(omega: f64, dx: Point, n: Point) -> C64 {
        let r = dx.norm();
        let b = bessel_jy01(omega * r);
        0.25 * I * omega * (b.h1() * (dx.dot(n) / r) + I * b.h0())
    }

    /// Value and gradient of the proxy basis function.
    #[inline]
    pub fn proxy_with_grad(omega: f64, dx: Point, n: Point) -> (C64, [C64; 2]) {
        let r = dx.norm();
        let e = dx * (1.0 / r);
        let b = bessel_jy01(omega * r);
        let (h0, h1) = (b.h0(), b.h1());
        let en = e.dot(n);
        let pre = 0.25 * I * omega;
        let val = pre * (h1 * en + I * h0);
        let a = pre * omega * h0 * en - pre * 2.0 * h1 * en / r + 0.25 * omega * omega * h1;
        let c = pre * h1 / r;
        (val, [a * e.x + c * n.x, a * e.y + c * n.y])
    }
}

/// Boundary operators on `Gamma_0` and its translates `Gamma_0 + l d`.
pub struct BoundaryOps<'a> {
    pub pan: &'a Panelization,
    pub omega: f64,
    /// A panel is near a target closer than this multiple of its length.
    pub near_factor: f64,
    near_rule: GaussRule,
    /// `self_log[i][j]`: log product weights at source node `j` for target node `i`.
    self_log: Vec<Vec<f64>>,
    straight: Vec<bool>,
}

impl<'a> BoundaryOps<'a> {
    pub fn new(pan: &'a Panelization, omega: f64) -> Self {
        let self_log = pan.rule.nodes.iter().map(|&t| log_weights(&pan.rule, t)).collect();
        let straight = pan.curve.segments.iter().map(|s| s.is_straight()).collect();
        Self { pan, omega, near_factor: 1.5, near_rule: GaussRule::new(16), self_log, straight }
    }

    fn shift(&self, l: i32) -> f64 {
        l as f64 * self.pan.curve.period
    }

    /// `x` lies on the (extended) line of a straight panel with matching normal,
    /// in which case the double-layer kernel vanishes identically.
    fn on_line(&self, q: usize, l: i32, x: Point, nu: Point) -> bool {
        let p = &self.pan.panels[q];
        if !self.straight[p.segment] {
            return false;
        }
        let seg = &self.pan.curve.segments[p.segment];
        let a = seg.point(0.0).shifted(self.shift(l));
        let t = seg.deriv(0.0);
        let tol = 1e-13 * t.norm();
        (x - a).cross(t).abs() <= tol * (1.0 + (x - a).norm()) && nu.cross(t.perp()).abs() <= 1e-13 * t.norm()
    }

    fn is_near(&self, q: usize, l: i32, x: Point) -> bool {
        let p = &self.pan.panels[q];
        (x - p.center.shifted(self.shift(l))).norm() < self.near_factor * p.length
    }

    /// Parameter of the point of panel `q` (copy `l`) closest to `x`, and that distance.
    fn closest(&self, q: usize, l: i32, x: Point) -> (f64, f64) {
        let dxs = self.shift(l);
        let d2 = |v: f64| {
            let r = x - self.pan.local(q, v).0.shifted(dxs);
            r.dot(r)
        };
        let m = 64;
        let (mut best, mut bd) = (-1.0, f64::INFINITY);
        for k in 0..=m {
            let v = -1.0 + 2.0 * k as f64 / m as f64;
            let dv = d2(v);
            if dv < bd {
                best = v;
                bd = dv;
            }
        }
        let (mut lo, mut hi) = ((best - 2.0 / m as f64).max(-1.0), (best + 2.0 / m as f64).min(1.0));
        for _ in 0..80 {
            let a = lo + (hi - lo) / 3.0;
            let b = hi - (hi - lo) / 3.0;
            if d2(a) < d2(b) {
                hi = b;
            } else {
                lo = a;
            }
        }
        let v = 0.5 * (lo + hi);
        (v, d2(v).sqrt())
    }

    /// Subintervals of `[-1, 1]` graded geometrically toward the point of
    /// panel `q` nearest to `x`; each piece lies at least its own length from `x`.
    fn near_intervals(&self, q: usize, l: i32, x: Point) -> Vec<(f64, f64)> {
        let (v, dist) = self.closest(q, l, x);
        let speed = self.pan.local(q, v).1.norm();
        let h = (0.5 * dist / speed).max(1e-17);
        let mut iv = vec![((v - h).max(-1.0), (v + h).min(1.0))];
        let mut s = h;
        while v + s < 1.0 {
            iv.push((v + s, (v + 2.0 * s).min(1.0)));
            s *= 2.0;
        }
        s = h;
        while v - s > -1.0 {
            iv.push(((v - 2.0 * s).max(-1.0), v - s));
            s *= 2.0;
        }
        iv.retain(|(a, b)| b > a);
        iv
    }

    /// Adds `int K(x - y) l_j(y) ds_y` over panel `q` of copy `l` to `out[j]`.
    fn near_panel<K: Fn(Point) -> C64>(&self, q: usize, l: i32, x: Point, k: &K, out: &mut [C64]) {
        let p = self.pan.order();
        let rule = &self.pan.rule;
        let dxs = self.shift(l);
        let mut lag = vec![0.0; p];
        let s = self.pan.panels[q].start;
        for (a, b) in self.near_intervals(q, l, x) {
            let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
            for (&t, &w) in self.near_rule.nodes.iter().zip(&self.near_rule.weights) {
                let v = mid + half * t;
                let (y, dy) = self.pan.local(q, v);
                rule.lagrange(v, &mut lag);
                let kv = k(x - y.shifted(dxs)) * (dy.norm() * w * half);
                for (o, &lj) in out[s..s + p].iter_mut().zip(&lag) {
                    *o += kv * lj;
                }
            }
        }
    }

    /// Self-panel adjoint double layer at local parameter `tau` of panel `q`.
    fn self_panel_dstar(&self, q: usize, x: Point, nu: Point, tau: f64, out: &mut [C64]) {
        let pan = self.pan;
        let rule = &pan.rule;
        let start = pan.panels[q].start;
        let hit = rule.nodes.iter().position(|&v| v == tau);
        let computed;
        let lw: &[f64] = match hit {
            Some(k) => &self.self_log[k],
            None => {
                computed = log_weights(rule, tau);
                &computed
            }
        };
        for j in 0..rule.len() {
            let idx = start + j;
            let w = pan.weights[idx];
            if hit == Some(j) {
                out[idx] += pan.curvature[idx] / (4.0 * PI) * w;
                continue;
            }
            let speed = w / rule.weights[j];
            let (kfull, klog) = kernel::dstar_split(self.omega, x - pan.nodes[idx], nu);
            out[idx] += (kfull - klog * (rule.nodes[j] - tau).abs().ln()) * w + klog * lw[j] * speed;
        }
    }

    /// Adjoint double layer `nu . grad S_l sigma (x)` as a row over the nodes
    /// of copy `l`. `on` gives `(panel, local parameter)` when `x` lies on
    /// a panel of `Gamma_0`. Adds into `out`.
    pub fn dstar_row(&self, x: Point, nu: Point, on: Option<(usize, f64)>, l: i32, out: &mut [C64]) {
        let pan = self.pan;
        let dxs = self.shift(l);
        for q in 0..pan.panels.len() {
            if self.on_line(q, l, x, nu) {
                continue;
            }
            let panel = &pan.panels[q];
            if l == 0 {
                if let Some((pq, tau)) = on {
                    if pq == q {
                        self.self_panel_dstar(q, x, nu, tau, out);
                        continue;
                    }
                }
            }
            if self.is_near(q, l, x) {
                let k = |dx: Point| kernel::dstar(self.omega, dx, nu);
                self.near_panel(q, l, x, &k, out);
            } else {
                for idx in panel.start..panel.start + pan.order() {
                    out[idx] += kernel::dstar(self.omega, x - pan.nodes[idx].shifted(dxs), nu) * pan.weights[idx];
                }
            }
        }
    }

    /// Row `i` of the adjoint double layer from copy `l` onto node `i` of `Gamma_0`.
    pub fn dstar_node_row(&self, i: usize, l: i32, out: &mut [C64]) {
        let q = self.pan.panel_of[i];
        let tau = self.pan.rule.nodes[i - self.pan.panels[q].start];
        self.dstar_row(self.pan.nodes[i], self.pan.normals[i], Some((q, tau)), l, out);
    }

    /// Single-layer row `S_l(x)` over the nodes of copy `l`, for `x` off the curve.
    pub fn single_row(&self, x: Point, l: i32, out: &mut [C64]) {
        let pan = self.pan;
        let dxs = self.shift(l);
        for q in 0..pan.panels.len() {
            let panel = &pan.panels[q];
            if self.is_near(q, l, x) {
                let k = |dx: Point| kernel::single(self.omega, dx);
                self.near_panel(q, l, x, &k, out);
            } else {
                for idx in panel.start..panel.start + pan.order() {
                    out[idx] += kernel::single(self.omega, x - pan.nodes[idx].shifted(dxs)) * pan.weights[idx];
                }
            }
        }
    }

    /// Whether `x` is close enough to copy `l` that the plain rule is inaccurate.
    pub fn needs_correction(&self, x: Point, l: i32) -> bool {
        (0..self.pan.panels.len()).any(|q| self.is_near(q, l, x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoundaryCurve;
    use crate::specfun::{greens, greens_gradient};
    use std::sync::Arc;

    #[test]
    fn kernels_match_green_function() {
        let om = 1.3;
        let (x, y) = (Point::new(0.2, 0.7), Point::new(-0.3, 0.1));
        let nu = Point::new(0.6, -0.8);
        assert!((kernel::single(om, x - y) - greens(om, x, y).unwrap()).norm() < 1e-15);
        let g = greens_gradient(om, x, y).unwrap();
        assert!((kernel::dstar(om, x - y, nu) - (g[0] * nu.x + g[1] * nu.y)).norm() < 1e-15);
    }

    #[test]
    fn proxy_gradient_matches_finite_differences() {
        let om = 1.2;
        let z = Point::new(0.0, 0.25);
        let n = Point::new(0.8, 0.6);
        let x = Point::new(0.4, -0.3);
        let h = 1e-5;
        let (_, g) = kernel::proxy_with_grad(om, x - z, n);
        for (k, e) in [Point::new(1.0, 0.0), Point::new(0.0, 1.0)].into_iter().enumerate() {
            let fd = (kernel::proxy(om, x + e * h - z, n) - kernel::proxy(om, x - e * h - z, n)) / (2.0 * h);
            assert!((fd - g[k]).norm() < 1e-9, "{fd} vs {}", g[k]);
        }
        let nu = Point::new(0.0, 1.0);
        let dd = kernel::dipole_dstar(om, x - z, n, nu);
        let fd = {
            let f = |zz: Point| kernel::dstar(om, x - zz, nu);
            (f(z + n * h) - f(z - n * h)) / (2.0 * h)
        };
        assert!((dd - fd).norm() < 1e-8);
    }

    #[test]
    fn proxy_basis_solves_helmholtz() {
        let om = 2.0;
        let z = Point::new(0.1, 0.0);
        let n = Point::new(0.0, 1.0);
        let x = Point::new(0.5, 0.7);
        let h = 1e-3;
        let f = |p: Point| kernel::proxy(om, p - z, n);
        let lap = (f(x + Point::new(h, 0.0)) + f(x - Point::new(h, 0.0)) + f(x + Point::new(0.0, h)) + f(x - Point::new(0.0, h))
            - 4.0 * f(x))
            / (h * h);
        assert!((lap + om * om * f(x)).norm() < 1e-4 * f(x).norm());
    }

    /// Brute-force graded integral of the adjoint double layer over part of
    /// the cosine curve, with `x - y` formed from exact offsets.
    fn reference_dstar_cosine(amp: f64, omega: f64, xx: f64, lo: f64, hi: f64) -> C64 {
        let k = 2.0 * PI;
        let nu = Point::new(amp * k * (k * xx).sin(), 1.0).unit();
        let (gx, gw) = crate::quadrature::gauss_legendre(30);
        let mut cuts = vec![lo, hi];
        let mut h = 1.0;
        while h > 1e-300 {
            for c in [xx - h, xx + h] {
                if c > lo && c < hi {
                    cuts.push(c - xx);
                }
            }
            h *= 0.25;
        }
        cuts.iter_mut().for_each(|c| if *c == lo || *c == hi { *c -= xx });
        if xx > lo && xx < hi {
            cuts.push(0.0);
        }
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup();
        let mut s = C64::new(0.0, 0.0);
        for w in cuts.windows(2) {
            for (xi, wi) in gx.iter().zip(&gw) {
                let t = 0.5 * (w[0] + w[1]) + 0.5 * (w[1] - w[0]) * xi;
                let yx = xx + t;
                let dx = Point::new(-t, -2.0 * amp * (PI * (2.0 * xx + t)).sin() * (-PI * t).sin());
                let speed = (1.0 + (amp * k * (k * yx).sin()).powi(2)).sqrt();
                s += kernel::dstar(omega, dx, nu) * speed * (wi * 0.5 * (w[1] - w[0]));
            }
        }
        s
    }

    #[test]
    fn self_panel_matches_graded_reference() {
        let curve = Arc::new(BoundaryCurve::cosine(0.25, 1.0));
        let pan = Panelization::new(curve, 12, 0, 16).unwrap();
        let ops = BoundaryOps::new(&pan, 1.2);
        for &i in &[0usize, 7, 40, 95, 191] {
            let mut row = vec![C64::new(0.0, 0.0); pan.len()];
            ops.dstar_node_row(i, 0, &mut row);
            let q = pan.panel_of[i];
            for qq in q.saturating_sub(1)..(q + 2).min(pan.panels.len()) {
                let p = &pan.panels[qq];
                let v: C64 = row[p.start..p.start + 16].iter().sum();
                let r = reference_dstar_cosine(0.25, 1.2, pan.nodes[i].x, p.u0 - 0.5, p.u1 - 0.5);
                assert!((v - r).norm() < 1e-13, "node {i} panel {qq}: {v} vs {r}");
            }
        }
    }

    #[test]
    fn straight_segment_has_zero_self_interaction() {
        let curve = Arc::new(BoundaryCurve::flat(1.0));
        let pan = Panelization::new(curve, 4, 0, 16).unwrap();
        let ops = BoundaryOps::new(&pan, 1.0);
        for l in -1..=1 {
            let mut row = vec![C64::new(0.0, 0.0); pan.len()];
            ops.dstar_node_row(5, l, &mut row);
            assert!(row.iter().all(|v| v.norm() == 0.0));
        }
    }

    #[test]
    fn single_layer_near_target_matches_reference() {
        let curve = Arc::new(BoundaryCurve::cosine(0.25, 1.0));
        let pan = Panelization::new(curve, 10, 0, 16).unwrap();
        let ops = BoundaryOps::new(&pan, 1.2);
        let seg = &pan.curve.segments[0];
        let base = seg.point(0.37);
        let x = base + seg.deriv(0.37).perp().unit() * 1e-3;
        let mut row = vec![C64::new(0.0, 0.0); pan.len()];
        ops.single_row(x, 0, &mut row);
        // density sigma(y) = y_x
        let v: C64 = row.iter().zip(&pan.nodes).map(|(r, p)| r * p.x).sum();
        let (gx, gw) = crate::quadrature::gauss_legendre(30);
        let mut o = C64::new(0.0, 0.0);
        let n = 4000;
        for k in 0..n {
            let (a, b) = (k as f64 / n as f64, (k + 1) as f64 / n as f64);
            for (xi, wi) in gx.iter().zip(&gw) {
                let u = 0.5 * (a + b) + 0.5 * (b - a) * xi;
                let y = seg.point(u);
                o += kernel::single(1.2, x - y) * y.x * seg.deriv(u).norm() * (wi * 0.5 * (b - a));
            }
        }
        assert!((v - o).norm() < 1e-12, "{v} vs {o}");
    }

    #[test]
    fn near_intervals_tile_panel_and_stay_separated() {
        let pan = Panelization::new(Arc::new(BoundaryCurve::stair(0.5, 1.0)), 16, 8, 16).unwrap();
        let ops = BoundaryOps::new(&pan, 1.2);
        for (q, x) in [(3, Point::new(-0.3, 0.2 + 1e-9)), (7, Point::new(1e-7, 0.5 - 1e-7)), (0, Point::new(0.2, 0.9))] {
            let mut iv = ops.near_intervals(q, 0, x);
            iv.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            assert_eq!(iv.first().unwrap().0, -1.0);
            assert_eq!(iv.last().unwrap().1, 1.0);
            for w in iv.windows(2) {
                assert!((w[0].1 - w[1].0).abs() < 1e-15);
            }
            let (v, dist) = ops.closest(q, 0, x);
            let speed = pan.local(q, v).1.norm();
            for (a, b) in iv {
                let gap = if v < a { a - v } else if v > b { v - b } else { 0.0 };
                let sep = (gap * gap * speed * speed + dist * dist).sqrt();
                assert!(sep >= 0.49 * (b - a) * speed, "piece {a}..{b} too close");
            }
        }
    }
}
