//! Floquet-Bloch synthesis of the aperiodic field from quasi-periodic solves
//! on a deformed contour in the Bloch wavenumber.

use crate::error::{Error, Result};
use crate::exec;
use crate::layer::kernel;
use crate::point::Point;
use crate::solver::Precompute;
use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::time::Instant;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Grading {
    None,
    /// Cluster nodes at `kappa = 0`.
    Zero,
    /// Cluster nodes at the zone edge `kappa = pi / d`.
    Pi,
}

impl std::str::FromStr for Grading {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Grading::None),
            "zero" => Ok(Grading::Zero),
            "pi" => Ok(Grading::Pi),
            _ => Err(Error::Config(format!("unknown grading '{s}' (expected none, zero or pi)"))),
        }
    }
}

/// Nodes and weights of a periodic rule on the deformed contour.
#[derive(Clone, Debug)]
pub struct ContourQuadrature {
    pub nodes: Vec<C64>,
    pub weights: Vec<C64>,
    /// Real parts `theta(s_j)` of the nodes.
    pub theta: Vec<f64>,
    pub grading: Grading,
    pub b: f64,
    pub period: f64,
    pub amplitude: f64,
}

impl ContourQuadrature {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn weight_sum(&self) -> C64 {
        self.weights.iter().sum()
    }

    /// `sum_j w_j f(kappa_j)`.
    pub fn integrate<F: Fn(C64) -> C64>(&self, f: F) -> C64 {
        self.nodes.iter().zip(&self.weights).map(|(&k, &w)| w * f(k)).sum()
    }
}

/// `kappa(s) = s - i A sin(s d)`.
pub fn contour(s: f64, period: f64, amplitude: f64) -> C64 {
    C64::new(s, -amplitude * (s * period).sin())
}

fn build(theta: Vec<f64>, dtheta: Vec<f64>, period: f64, amplitude: f64, grading: Grading, b: f64) -> ContourQuadrature {
    let n = theta.len();
    let h = 2.0 * PI / (period * n as f64);
    let nodes = theta.iter().map(|&t| contour(t, period, amplitude)).collect();
    let weights = theta
        .iter()
        .zip(&dtheta)
        .map(|(&t, &dt)| C64::new(1.0, -amplitude * period * (t * period).cos()) * (h * dt))
        .collect();
    ContourQuadrature { nodes, weights, theta, grading, b, period, amplitude }
}

fn check(n: usize, period: f64) -> Result<()> {
    if n < 2 {
        return Err(Error::Config(format!("nkappa must be at least 2, got {n}")));
    }
    if !(period > 0.0) || !period.is_finite() {
        return Err(Error::Config(format!("period must be positive, got {period}")));
    }
    Ok(())
}

/// Periodic trapezoid rule with `s_j` equispaced on `[-pi/d, pi/d)`.
pub fn trapezoid_nodes(n: usize, period: f64, amplitude: f64) -> Result<ContourQuadrature> {
    check(n, period)?;
    let h = 2.0 * PI / (period * n as f64);
    let s = (0..n).map(|j| -PI / period + h * j as f64).collect();
    Ok(build(s, vec![1.0; n], period, amplitude, Grading::None, 0.0))
}

/// Exponentially graded periodic rule. `theta(t) = -pi/d + int_0^t theta'` with
/// `theta'` a normalized `cosh(b sin(...))` density on `t in [0, 2 pi / d)`,
/// integrated through its Fourier series. Nodes cluster where `theta'` is
/// smallest: at the zone edge for `Pi` and at `kappa = 0` for `Zero`.
pub fn graded_nodes(n: usize, b: f64, target: Grading, period: f64, amplitude: f64) -> Result<ContourQuadrature> {
    check(n, period)?;
    if target == Grading::None {
        return trapezoid_nodes(n, period, amplitude);
    }
    if n % 2 != 0 {
        return Err(Error::Config(format!("graded contour rules need an even nkappa, got {n}")));
    }
    if !(b >= 0.0) || !b.is_finite() {
        return Err(Error::Config(format!("grading parameter b must be finite and non-negative, got {b}")));
    }
    let h = 2.0 * PI / (period * n as f64);
    let t: Vec<f64> = (0..n).map(|j| h * j as f64).collect();
    let raw: Vec<f64> = t
        .iter()
        .map(|&tj| {
            let arg = match target {
                Grading::Pi => (tj * period / 2.0).sin(),
                _ => ((tj * period - PI) / 2.0).sin(),
            };
            (b * arg).cosh()
        })
        .collect();
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config(format!("grading parameter b = {b} overflows the node density")));
    }
    let norm = raw.iter().sum::<f64>() / n as f64;
    let dtheta: Vec<f64> = raw.iter().map(|v| v / norm).collect();

    // antiderivative of dtheta - 1 through its Fourier series
    let mut buf: Vec<C64> = dtheta.iter().map(|&v| C64::new(v - 1.0, 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    for (k, c) in buf.iter_mut().enumerate() {
        let m = if k <= n / 2 { k as i64 } else { k as i64 - n as i64 };
        *c = if m == 0 || k == n / 2 { C64::new(0.0, 0.0) } else { *c / C64::new(0.0, m as f64 * period) };
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let f: Vec<f64> = buf.iter().map(|c| c.re / n as f64).collect();
    let theta: Vec<f64> = t.iter().zip(&f).map(|(&tj, &fj)| -PI / period + tj + fj - f[0]).collect();
    Ok(build(theta, dtheta, period, amplitude, target, b))
}

/// Quadrature selected by grading: trapezoid for `None`.
pub fn quadrature(n: usize, grading: Grading, b: f64, period: f64, amplitude: f64) -> Result<ContourQuadrature> {
    match grading {
        Grading::None => trapezoid_nodes(n, period, amplitude),
        g => graded_nodes(n, b, g, period, amplitude),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NodeDiagnostics {
    pub kappa_re: f64,
    pub kappa_im: f64,
    pub weight_re: f64,
    pub weight_im: f64,
    pub solve_seconds: f64,
}

#[derive(Clone, Debug)]
pub struct AperiodicField {
    pub targets: Vec<Point>,
    /// Total field `G(x, x0) + u_s`.
    pub total: Vec<C64>,
    /// Scattered field `u_s`.
    pub scattered: Vec<C64>,
    pub nodes: Vec<NodeDiagnostics>,
    pub solve_seconds: f64,
}

/// Field of a point source at `x0` over the periodic boundary, evaluated at `targets`.
pub fn solve_aperiodic(pre: &Precompute, x0: Point, targets: &[Point], quad: &ContourQuadrature) -> Result<AperiodicField> {
    let t0 = Instant::now();
    let per_node = exec::map_range(quad.len(), |j| {
        let start = Instant::now();
        let kappa = quad.nodes[j];
        let sol = pre.solve_point_source(kappa, x0).map_err(|e| e.context(&format!("solve at kappa = {kappa}")))?;
        let vals = sol.eval_field(targets);
        Ok::<_, Error>((vals, start.elapsed().as_secs_f64()))
    });
    let mut total = vec![C64::new(0.0, 0.0); targets.len()];
    let mut nodes = Vec::with_capacity(quad.len());
    for (j, r) in per_node.into_iter().enumerate() {
        let (vals, secs) = r?;
        let w = quad.weights[j];
        for (acc, v) in total.iter_mut().zip(vals) {
            *acc += w * v;
        }
        nodes.push(NodeDiagnostics {
            kappa_re: quad.nodes[j].re,
            kappa_im: quad.nodes[j].im,
            weight_re: w.re,
            weight_im: w.im,
            solve_seconds: secs,
        });
    }
    let scale = quad.period / (2.0 * PI);
    total.iter_mut().for_each(|v| *v *= scale);
    let scattered = targets.iter().zip(&total).map(|(&x, &u)| u - kernel::single(pre.omega, x - x0)).collect();
    Ok(AperiodicField { targets: targets.to_vec(), total, scattered, nodes, solve_seconds: t0.elapsed().as_secs_f64() })
}

/// Scattered field of a point source above the sound-hard line `y = 0`: its mirror image.
pub fn image_source_field(omega: f64, x0: Point, x: Point) -> C64 {
    kernel::single(omega, x - Point::new(x0.x, -x0.y))
}
