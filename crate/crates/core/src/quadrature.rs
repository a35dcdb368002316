//! Gauss-Legendre rules, panel interpolation and singular/near-singular
//! panel quadrature.

use std::f64::consts::PI;

/// Gauss-Legendre rule on `[-1, 1]`, nodes ascending.
#[derive(Clone, Debug)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Barycentric interpolation weights for `nodes`.
    pub bary: Vec<f64>,
}

impl GaussRule {
    pub fn new(n: usize) -> Self {
        let (nodes, weights) = gauss_legendre(n);
        let bary = barycentric_weights(&nodes);
        Self { nodes, weights, bary }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Lagrange basis polynomials of the nodes evaluated at `u`.
    pub fn lagrange(&self, u: f64, out: &mut [f64]) {
        lagrange_basis(&self.nodes, &self.bary, u, out);
    }
}

/// Legendre polynomial `P_n(x)` and its derivative.
pub fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

pub fn barycentric_weights(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut w: Vec<f64> = (0..n)
        .map(|j| {
            let mut prod = 1.0;
            for k in 0..n {
                if k != j {
                    prod *= nodes[j] - nodes[k];
                }
            }
            1.0 / prod
        })
        .collect();
    let scale = w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    w.iter_mut().for_each(|v| *v /= scale);
    w
}

pub fn lagrange_basis(nodes: &[f64], bary: &[f64], u: f64, out: &mut [f64]) {
    if let Some(k) = nodes.iter().position(|&x| x == u) {
        out.iter_mut().for_each(|v| *v = 0.0);
        out[k] = 1.0;
        return;
    }
    let mut sum = 0.0;
    for ((o, &x), &b) in out.iter_mut().zip(nodes).zip(bary) {
        *o = b / (u - x);
        sum += *o;
    }
    out.iter_mut().for_each(|v| *v /= sum);
}

fn xlogx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.abs().ln()
    }
}

/// `m_k = int_{-1}^{1} ln|u - tau| P_k(u) du` for `k < n`, `|tau| < 1`.
pub fn log_moments(tau: f64, n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n];
    m[0] = xlogx(1.0 - tau) + xlogx(1.0 + tau) - 2.0;
    // q_k = PV int P_k(u)/(u - tau) du
    let mut q = vec![0.0; n + 1];
    q[0] = ((1.0 - tau) / (1.0 + tau)).abs().ln();
    if n >= 1 {
        q[1] = tau * q[0] + 2.0;
    }
    for k in 1..n {
        let kf = k as f64;
        q[k + 1] = ((2.0 * kf + 1.0) * tau * q[k] - kf * q[k - 1]) / (kf + 1.0);
    }
    for k in 1..n {
        m[k] = (q[k - 1] - q[k + 1]) / (2.0 * k as f64 + 1.0);
    }
    m
}

/// Weights `W_j` with `sum_j W_j p(u_j) = int ln|u - tau| p(u) du` for
/// polynomials `p` of degree below the rule size.
pub fn log_weights(rule: &GaussRule, tau: f64) -> Vec<f64> {
    let n = rule.len();
    let m = log_moments(tau, n);
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&u, &w)| {
            let (mut p0, mut p1) = (1.0, u);
            let mut acc = 0.5 * m[0];
            if n > 1 {
                acc += 1.5 * u * m[1];
            }
            for k in 2..n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * u * p1 - (kf - 1.0) * p0) / kf;
                acc += (kf + 0.5) * p2 * m[k];
                p0 = p1;
                p1 = p2;
            }
            w * acc
        })
        .collect()
}
