use super::{CompressionParams, ProxyCircle, RankRule, balance, hstack, row_id};
use crate::error::{Error, Result};
use crate::geometry::Panelization;
use crate::linalg::{CMat, cols, frob, rows};
use crate::point::Point;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProxyShape {
    Full,
    Half,
}

/// `A_side ~ L R` with `L` the interpolation matrix and `R = A_side(skel, :)`.
#[derive(Clone, Debug)]
pub struct NeighborFactor {
    pub l: CMat,
    pub r: CMat,
    pub skel: Vec<usize>,
    /// Relative ID residual on the compressed `[near | proxy]` matrix.
    pub id_residual: f64,
}

impl NeighborFactor {
    pub fn rank(&self) -> usize {
        self.skel.len()
    }
}

#[derive(Clone, Debug)]
pub struct NeighborFactors {
    pub minus: NeighborFactor,
    pub plus: NeighborFactor,
    pub shape: ProxyShape,
    pub n_proxy: usize,
    pub radius: f64,
}

/// Center and radius of the smallest axis-aligned-box-centered disk holding `pts`.
fn enclosing(pts: &[Point]) -> (Point, f64) {
    let (mut lo, mut hi) = (Point::new(f64::INFINITY, f64::INFINITY), Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
    for p in pts {
        lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let c = (lo + hi) * 0.5;
    let r = pts.iter().map(|&p| (p - c).norm()).fold(0.0, f64::max);
    (c, r)
}

/// Compresses `a_side`, the interaction of copy `side` (`-1` or `1`) with `Gamma_0`.
pub fn compress_neighbor(
    pan: &Panelization,
    omega: f64,
    a_side: &CMat,
    side: i32,
    shape: ProxyShape,
    params: &CompressionParams,
) -> Result<(NeighborFactor, f64)> {
    params.validate()?;
    if side != 1 && side != -1 {
        return Err(Error::Config(format!("neighbor side must be -1 or 1, got {side}")));
    }
    let (center, r0) = enclosing(&pan.nodes);
    let radius = params.proxy_scale * r0;
    let circle = match shape {
        ProxyShape::Full => ProxyCircle::full(center, radius, params.n_proxy),
        ProxyShape::Half => {
            let theta0 = if side < 0 { PI / 2.0 } else { -PI / 2.0 };
            ProxyCircle::new(center, radius, params.n_proxy, theta0, PI)
        }
    };
    let shift = side as f64 * pan.curve.period;
    let (mut near, mut far) = (Vec::new(), Vec::new());
    for (j, p) in pan.nodes.iter().enumerate() {
        if circle.contains(p.shifted(shift)) { near.push(j) } else { far.push(j) }
    }
    if let ProxyShape::Half = shape {
        // every far source must lie beyond the diameter on the neighbor's side
        let bad = far.iter().any(|&j| (pan.nodes[j].shifted(shift).x - center.x) * side as f64 <= 0.0);
        if bad {
            return Err(Error::Config("half proxy circle fails to separate the neighbor copy from Gamma_0".into()));
        }
    }
    let a_near = cols(a_side.as_ref(), &near);
    let far_norm = frob(cols(a_side.as_ref(), &far).as_ref());
    let proxy = if far.is_empty() {
        CMat::zeros(pan.len(), 0)
    } else {
        balance(circle.target_block(omega, &pan.nodes, &pan.normals), far_norm)
    };
    let m = hstack(&a_near, &proxy);
    let id = row_id(m.as_ref(), RankRule::Tolerance(params.eps));
    let r = rows(a_side.as_ref(), &id.skel);
    Ok((NeighborFactor { l: id.p, r, skel: id.skel, id_residual: id.residual }, radius))
}

pub fn compress_neighbors(
    pan: &Panelization,
    omega: f64,
    a_minus: &CMat,
    a_plus: &CMat,
    shape: ProxyShape,
    params: &CompressionParams,
) -> Result<NeighborFactors> {
    let (minus, radius) = compress_neighbor(pan, omega, a_minus, -1, shape, params)?;
    let (plus, _) = compress_neighbor(pan, omega, a_plus, 1, shape, params)?;
    Ok(NeighborFactors { minus, plus, shape, n_proxy: params.n_proxy, radius })
}
