//! Bessel and Hankel functions of orders 0 and 1 at real argument, the
//! free-space Green's function of the Helmholtz operator and the vertical
//! wavenumber of a Rayleigh-Bloch mode.
//!
//! Three regimes are used for `J0, Y0, J1, Y1`:
//! ascending series for `x < 2`, Steed's continued fractions for
//! `2 <= x < 25`, and the Hankel asymptotic expansion for `x >= 25`.

use crate::error::{Error, Result};
use crate::point::Point;
use num_complex::Complex64 as C64;
use std::f64::consts::{FRAC_2_PI, FRAC_PI_2, FRAC_PI_4, PI};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SERIES_LIMIT: f64 = 2.0;
const ASYMPTOTIC_LIMIT: f64 = 25.0;

/// Values of `J0, Y0, J1, Y1` at one argument.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BesselJY {
    pub j0: f64,
    pub y0: f64,
    pub j1: f64,
    pub y1: f64,
}

impl BesselJY {
    pub fn h0(&self) -> C64 {
        C64::new(self.j0, self.y0)
    }

    pub fn h1(&self) -> C64 {
        C64::new(self.j1, self.y1)
    }
}

/// `J0, Y0, J1, Y1` at `x > 0`. Non-positive or non-finite input yields NaN.
pub fn bessel_jy01(x: f64) -> BesselJY {
    if !(x > 0.0) || !x.is_finite() {
        return BesselJY { j0: f64::NAN, y0: f64::NAN, j1: f64::NAN, y1: f64::NAN };
    }
    if x < SERIES_LIMIT {
        series(x)
    } else if x < ASYMPTOTIC_LIMIT {
        steed(x)
    } else {
        asymptotic(x)
    }
}

/// `(H0(x), H1(x))` of the first kind; unchecked fast path for kernels.
#[inline]
pub fn hankel01(x: f64) -> (C64, C64) {
    let b = bessel_jy01(x);
    (b.h0(), b.h1())
}

/// Hankel function of the first kind of order 0 or 1.
pub fn hankel1(order: u32, x: f64) -> Result<C64> {
    if order > 1 {
        return Err(Error::Domain(format!("Hankel order {order} not supported (0 or 1)")));
    }
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("Hankel argument must be positive and finite, got {x}")));
    }
    let b = bessel_jy01(x);
    Ok(if order == 0 { b.h0() } else { b.h1() })
}

fn series(x: f64) -> BesselJY {
    let half = 0.5 * x;
    let mq = -half * half;
    let log_term = half.ln() + EULER_GAMMA;

    // k-th terms: t0 = (-q)^k/(k!)^2, t1 = (-q)^k/(k!(k+1)!)
    let mut t0 = 1.0;
    let mut t1 = 1.0;
    let mut hk = 0.0;
    let mut j0 = 1.0;
    let mut s1 = 1.0;
    let mut y0s = 0.0;
    let mut y1s = 1.0; // (H_0 + H_1) * t1 at k = 0
    for k in 1..40 {
        let kf = k as f64;
        t0 *= mq / (kf * kf);
        t1 *= mq / (kf * (kf + 1.0));
        hk += 1.0 / kf;
        let hk1 = hk + 1.0 / (kf + 1.0);
        j0 += t0;
        s1 += t1;
        y0s += hk * t0;
        y1s += (hk + hk1) * t1;
        if t0.abs() * (1.0 + hk1) < 1e-18 {
            break;
        }
    }
    let j1 = half * s1;
    let y0 = FRAC_2_PI * (log_term * j0 - y0s);
    let y1 = -FRAC_2_PI / x + FRAC_2_PI * log_term * j1 - half * y1s / PI;
    BesselJY { j0, y0, j1, y1 }
}

/// Steed's method for order zero: CF1 gives `J0'/J0`, CF2 gives `p + iq`.
fn steed(x: f64) -> BesselJY {
    const FPMIN: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let xi = 1.0 / x;
    let xi2 = 2.0 * xi;
    let w = xi2 / PI;

    // CF1 for f = J0'/J0 = -J1/J0 (nu = 0), modified Lentz.
    let mut isign = 1.0;
    let mut h = 0.0f64; // nu * xi
    if h < FPMIN {
        h = FPMIN;
    }
    let mut b = 0.0; // xi2 * nu
    let mut d = 0.0;
    let mut c = h;
    for _ in 0..100_000 {
        b += xi2;
        d = b - d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b - 1.0 / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = c * d;
        h *= del;
        if d < 0.0 {
            isign = -isign;
        }
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    let f = h; // J0'/J0 up to the starting scale; nu = 0 so no downward recurrence needed

    // CF2: p + iq = (J0' + iY0')/(J0 + iY0), complex Lentz.
    let mut a = 0.25; // 0.25 - nu^2
    let mut p = -0.5 * xi;
    let mut q = 1.0;
    let br = 2.0 * x;
    let mut bi = 2.0;
    let mut fact = a * xi / (p * p + q * q);
    let mut cr = br + q * fact;
    let mut ci = bi + p * fact;
    let mut den = br * br + bi * bi;
    let mut dr = br / den;
    let mut di = -bi / den;
    let mut dlr = cr * dr - ci * di;
    let mut dli = cr * di + ci * dr;
    let mut temp = p * dlr - q * dli;
    q = p * dli + q * dlr;
    p = temp;
    for i in 2..100_000 {
        a += (2 * (i - 1)) as f64;
        bi += 2.0;
        dr = a * dr + br;
        di = a * di + bi;
        if dr.abs() + di.abs() < FPMIN {
            dr = FPMIN;
        }
        fact = a / (cr * cr + ci * ci);
        cr = br + cr * fact;
        ci = bi - ci * fact;
        if cr.abs() + ci.abs() < FPMIN {
            cr = FPMIN;
        }
        den = dr * dr + di * di;
        dr /= den;
        di = -di / den;
        dlr = cr * dr - ci * di;
        dli = cr * di + ci * dr;
        temp = p * dlr - q * dli;
        q = p * dli + q * dlr;
        p = temp;
        if (dlr - 1.0).abs() + dli.abs() < EPS {
            break;
        }
    }
    let gam = (p - f) / q;
    let mut j0 = (w / ((p - f) * gam + q)).sqrt();
    j0 = j0.copysign(isign);
    let y0 = gam * j0;
    let j0p = f * j0;
    let y0p = y0 * (p + q / gam);
    BesselJY { j0, y0, j1: -j0p, y1: -y0p }
}

fn asymptotic(x: f64) -> BesselJY {
    let pre = (FRAC_2_PI / x).sqrt();
    let mut out = [C64::new(0.0, 0.0); 2];
    for (nu, slot) in out.iter_mut().enumerate() {
        let mu = 4.0 * (nu * nu) as f64;
        let mut term = C64::new(1.0, 0.0);
        let mut sum = term;
        let mut last = f64::INFINITY;
        for k in 1..60 {
            let kf = k as f64;
            let odd = 2.0 * kf - 1.0;
            term *= C64::new(0.0, (mu - odd * odd) / (8.0 * kf * x));
            let mag = term.norm();
            if mag > last {
                break;
            }
            sum += term;
            last = mag;
            if mag < 1e-17 {
                break;
            }
        }
        let chi = x - FRAC_PI_4 - nu as f64 * FRAC_PI_2;
        *slot = pre * C64::from_polar(1.0, chi) * sum;
    }
    BesselJY { j0: out[0].re, y0: out[0].im, j1: out[1].re, y1: out[1].im }
}

/// `G(x, y) = (i/4) H0(omega |x - y|)`.
pub fn greens(omega: f64, x: Point, y: Point) -> Result<C64> {
    let r = (x - y).norm();
    if r == 0.0 {
        return Err(Error::Domain("Green's function evaluated at coincident points".into()));
    }
    Ok(C64::new(0.0, 0.25) * hankel1(0, omega * r)?)
}

/// Gradient of `G(x, y)` with respect to `x`.
pub fn greens_gradient(omega: f64, x: Point, y: Point) -> Result<[C64; 2]> {
    let d = x - y;
    let r = d.norm();
    if r == 0.0 {
        return Err(Error::Domain("Green's gradient evaluated at coincident points".into()));
    }
    let s = C64::new(0.0, -0.25 * omega) * hankel1(1, omega * r)? / r;
    Ok([s * d.x, s * d.y])
}

/// Which argument of `G(x, y)` the normal derivative acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Target,
    Source,
}

/// `nu . grad G` taken at the target (`x`) or the source (`y`).
pub fn greens_normal_derivative(omega: f64, x: Point, y: Point, nu: Point, side: Side) -> Result<C64> {
    let g = greens_gradient(omega, x, y)?;
    let v = g[0] * nu.x + g[1] * nu.y;
    Ok(match side {
        Side::Target => v,
        Side::Source => -v,
    })
}

/// Vertical wavenumber `k` of a mode with horizontal wavenumber `beta`.
///
/// Real `beta`: `sqrt(omega^2 - beta^2)` for `|beta| <= omega`, else
/// `i sqrt(beta^2 - omega^2)`. For complex `beta` the same switch is made
/// on `|beta|`, which keeps `k` continuous along the deformed contour.
pub fn vertical_wavenumber(omega: f64, beta: C64) -> C64 {
    if beta.norm() <= omega {
        (C64::new(omega * omega, 0.0) - beta * beta).sqrt()
    } else {
        C64::new(0.0, 1.0) * (beta * beta - omega * omega).sqrt()
    }
}

/// Bloch phase and Rayleigh-Bloch wavenumbers for one `(omega, kappa, d)`.
#[derive(Clone, Copy, Debug)]
pub struct Wavenumbers {
    pub omega: f64,
    pub kappa: C64,
    pub period: f64,
}

impl Wavenumbers {
    pub fn new(omega: f64, kappa: C64, period: f64) -> Self {
        Self { omega, kappa, period }
    }

    /// `alpha = exp(i kappa d)`.
    pub fn alpha(&self) -> C64 {
        (C64::new(0.0, 1.0) * self.kappa * self.period).exp()
    }

    pub fn beta(&self, n: i32) -> C64 {
        self.kappa + 2.0 * PI * n as f64 / self.period
    }

    pub fn k(&self, n: i32) -> C64 {
        vertical_wavenumber(self.omega, self.beta(n))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // x, J0, Y0, J1, Y1 (30-digit reference values)
    const TABLE: &[[f64; 5]] = &[
        [1e-8, 0.999999999999999975, -11.800773877179530768, 4.9999999999999999375e-9, -63661977.236758194903],
        [1e-3, 0.999999750000015625, -4.471416611375923269, 0.00049999993750000260417, -636.62216723113942807],
        [0.5, 0.93846980724081290423, -0.44451873350670655715, 0.24226845767487388638, -1.4714723926702430692],
        [1.0, 0.76519768655796655145, 0.088256964215676957983, 0.44005058574493351596, -0.78121282130028871655],
        [1.9999, 0.22394845194430276074, 0.51036496658709797245, 0.57673125291779343998, -0.10708882173811194711],
        [2.0, 0.22389077914123566805, 0.5103756726497451196, 0.5767248077568733872, -0.10703243154093754689],
        [3.7, -0.39923020337119110577, 0.10607431532035418428, 0.053833987745461864015, 0.41667437268380749445],
        [7.5, 0.26633965788037839687, 0.11731328614820863084, 0.13524842757970550518, -0.2591285104861162518],
        [12.0, 0.047689310796833536624, -0.22523731263436143369, -0.22344710449062761237, -0.05709921826089652105],
        [24.9, 0.083245968353015681694, -0.13649918399676511316, -0.13485569953140874334, -0.086002557595554441547],
        [25.0, 0.096266783275958116174, -0.12724943226800613783, -0.12535024958028990465, -0.098829964783237410053],
        [60.0, -0.091471804089061869531, 0.047358952209449399203, 0.046598383758166317869, 0.091869609369866895264],
        [1000.0, 0.024786686152420174561, 0.0047159179776228133998, 0.0047283119070895239176, -0.024784331292351778915],
    ];

    #[test]
    fn hankel_matches_reference_table() {
        for row in TABLE {
            let x = row[0];
            let b = bessel_jy01(x);
            let h0 = C64::new(row[1], row[2]);
            let h1 = C64::new(row[3], row[4]);
            assert!((b.h0() - h0).norm() <= 1e-13 * h0.norm(), "H0 at {x}: {:?} vs {h0}", b.h0());
            assert!((b.h1() - h1).norm() <= 1e-13 * h1.norm(), "H1 at {x}: {:?} vs {h1}", b.h1());
        }
    }

    #[test]
    fn hankel_rejects_bad_input() {
        assert!(hankel1(0, 0.0).is_err());
        assert!(hankel1(1, -1.0).is_err());
        assert!(hankel1(2, 1.0).is_err());
        assert!(hankel1(0, f64::NAN).is_err());
    }

    #[test]
    fn regime_boundaries_are_continuous() {
        for &edge in &[SERIES_LIMIT, ASYMPTOTIC_LIMIT] {
            let below = bessel_jy01(f64::from_bits(edge.to_bits() - 1));
            let above = bessel_jy01(edge);
            assert!((below.h0() - above.h0()).norm() < 1e-13);
            assert!((below.h1() - above.h1()).norm() < 1e-13);
        }
    }

    #[test]
    fn greens_at_unit_distance() {
        let g = greens(1.0, Point::new(0.0, 0.0), Point::new(1.0, 0.0)).unwrap();
        let expect = C64::new(-0.25 * 0.088256964215676957983, 0.25 * 0.76519768655796655145);
        assert!((g - expect).norm() < 1e-15);
        assert!(greens(1.0, Point::new(0.3, 0.1), Point::new(0.3, 0.1)).is_err());
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let (om, x, y) = (1.7, Point::new(0.31, -0.2), Point::new(-0.4, 0.45));
        let g = greens_gradient(om, x, y).unwrap();
        let h = 1e-5;
        for (k, e) in [Point::new(1.0, 0.0), Point::new(0.0, 1.0)].into_iter().enumerate() {
            let fd = (greens(om, x + e * h, y).unwrap() - greens(om, x - e * h, y).unwrap()) / (2.0 * h);
            assert!((fd - g[k]).norm() < 1e-9);
        }
        let nu = Point::new(0.6, 0.8);
        let t = greens_normal_derivative(om, x, y, nu, Side::Target).unwrap();
        let s = greens_normal_derivative(om, y, x, nu, Side::Source).unwrap();
        assert!((t - s).norm() < 1e-15);
    }

    #[test]
    fn vertical_wavenumber_examples() {
        assert!((vertical_wavenumber(2.0, C64::new(0.0, 0.0)) - C64::new(2.0, 0.0)).norm() < 1e-15);
        let k = vertical_wavenumber(1.0, C64::new(2.0, 0.0));
        assert!((k - C64::new(0.0, 3f64.sqrt())).norm() < 1e-15);
    }

    #[test]
    fn vertical_wavenumber_is_continuous_on_contour() {
        let omega = 1.2;
        let n = 20000;
        let mut prev: Option<Vec<C64>> = None;
        for j in 0..=n {
            let s = -PI + 2.0 * PI * j as f64 / n as f64;
            let kappa = C64::new(s, -s.sin());
            let wn = Wavenumbers::new(omega, kappa, 1.0);
            let ks: Vec<C64> = (-3..=3).map(|m| wn.k(m)).collect();
            if let Some(p) = &prev {
                for (a, b) in ks.iter().zip(p) {
                    assert!((a - b).norm() < 1e-2, "jump at s = {s}: {a} vs {b}");
                }
            }
            prev = Some(ks);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn wronskian(x in 1e-3f64..1e3) {
                let b = bessel_jy01(x);
                let w = b.j1 * b.y0 - b.j0 * b.y1;
                prop_assert!((w - 2.0 / (PI * x)).abs() <= 1e-12 * (2.0 / (PI * x)));
            }

            #[test]
            fn greens_symmetric(ax in -2.0f64..2.0, ay in -2.0f64..2.0, bx in -2.0f64..2.0, by in -2.0f64..2.0, om in 0.01f64..10.0) {
                let (a, b) = (Point::new(ax, ay), Point::new(bx, by));
                prop_assume!((a - b).norm() > 1e-6);
                prop_assert_eq!(greens(om, a, b).unwrap(), greens(om, b, a).unwrap());
            }

            #[test]
            fn wavenumber_dispersion(om in 0.01f64..5.0, re in -8.0f64..8.0, im in -1.0f64..1.0) {
                let beta = C64::new(re, im);
                let k = vertical_wavenumber(om, beta);
                let res = k * k + beta * beta - om * om;
                prop_assert!(res.norm() <= 1e-12 * (1.0 + beta.norm_sqr()));
            }
        }
    }
}
