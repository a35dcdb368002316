//! Periodic boundary curves, their panel discretization and the unit cell.

use crate::error::{Error, Result};
use crate::point::Point;
use crate::quadrature::{GaussRule, gauss_legendre};
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

/// A boundary described as a graph `y = f(x)` over one segment.
pub trait GraphProfile: Send + Sync {
    fn height(&self, x: f64) -> f64;
    fn slope(&self, x: f64) -> f64;
    fn second(&self, x: f64) -> f64;
}

#[derive(Clone, Copy, Debug)]
pub struct CosineProfile {
    pub amplitude: f64,
    pub period: f64,
}

impl GraphProfile for CosineProfile {
    fn height(&self, x: f64) -> f64 {
        self.amplitude * (2.0 * PI * x / self.period).cos()
    }
    fn slope(&self, x: f64) -> f64 {
        let k = 2.0 * PI / self.period;
        -self.amplitude * k * (k * x).sin()
    }
    fn second(&self, x: f64) -> f64 {
        let k = 2.0 * PI / self.period;
        -self.amplitude * k * k * (k * x).cos()
    }
}

/// One smooth piece of the boundary, parametrized by `u` in `[0, 1]`.
#[derive(Clone)]
pub enum Segment {
    Line { a: Point, b: Point },
    Graph { x0: f64, x1: f64, profile: Arc<dyn GraphProfile> },
}

impl fmt::Debug for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Segment::Line { a, b } => write!(f, "Line({a:?} -> {b:?})"),
            Segment::Graph { x0, x1, .. } => write!(f, "Graph([{x0}, {x1}])"),
        }
    }
}

impl Segment {
    pub fn point(&self, u: f64) -> Point {
        match self {
            Segment::Line { a, b } => *a + (*b - *a) * u,
            Segment::Graph { x0, x1, profile } => {
                let x = x0 + (x1 - x0) * u;
                Point::new(x, profile.height(x))
            }
        }
    }

    /// `d gamma / du`.
    pub fn deriv(&self, u: f64) -> Point {
        match self {
            Segment::Line { a, b } => *b - *a,
            Segment::Graph { x0, x1, profile } => {
                let h = x1 - x0;
                Point::new(h, h * profile.slope(x0 + h * u))
            }
        }
    }

    /// `d^2 gamma / du^2`.
    pub fn second(&self, u: f64) -> Point {
        match self {
            Segment::Line { .. } => Point::new(0.0, 0.0),
            Segment::Graph { x0, x1, profile } => {
                let h = x1 - x0;
                Point::new(0.0, h * h * profile.second(x0 + h * u))
            }
        }
    }

    pub fn is_straight(&self) -> bool {
        matches!(self, Segment::Line { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CurveKind {
    Flat,
    Cosine { amplitude: f64 },
    Stair { height: f64 },
    Custom,
}

/// One period of a `d`-periodic boundary, traversed left to right.
#[derive(Clone, Debug)]
pub struct BoundaryCurve {
    pub kind: CurveKind,
    pub period: f64,
    pub segments: Vec<Segment>,
}

/// Where two segments meet with a tangent jump.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Corner {
    pub position: Point,
    /// Index of the segment that starts at the corner; 0 is the period joint.
    pub joint: usize,
    /// Interior angle in the fluid, in radians.
    pub angle: f64,
}

impl BoundaryCurve {
    pub fn flat(period: f64) -> Self {
        let h = 0.5 * period;
        Self {
            kind: CurveKind::Flat,
            period,
            segments: vec![Segment::Line { a: Point::new(-h, 0.0), b: Point::new(h, 0.0) }],
        }
    }

    /// `y = A cos(2 pi x / d)` on `[-d/2, d/2]`.
    pub fn cosine(amplitude: f64, period: f64) -> Self {
        let h = 0.5 * period;
        Self {
            kind: CurveKind::Cosine { amplitude },
            period,
            segments: vec![Segment::Graph { x0: -h, x1: h, profile: Arc::new(CosineProfile { amplitude, period }) }],
        }
    }

    /// Symmetric zigzag with valleys at `x = -d/2, d/2` and a peak of the
    /// given height at `x = 0`. With `height = d/2` every corner is a right angle.
    pub fn stair(height: f64, period: f64) -> Self {
        let h = 0.5 * period;
        let (l, m, r) = (Point::new(-h, 0.0), Point::new(0.0, height), Point::new(h, 0.0));
        Self {
            kind: CurveKind::Stair { height },
            period,
            segments: vec![Segment::Line { a: l, b: m }, Segment::Line { a: m, b: r }],
        }
    }

    pub fn custom(period: f64, segments: Vec<Segment>) -> Result<Self> {
        let c = Self { kind: CurveKind::Custom, period, segments };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.period > 0.0) {
            return Err(Error::Geometry(format!("period must be positive, got {}", self.period)));
        }
        if self.segments.is_empty() {
            return Err(Error::Geometry("boundary has no segments".into()));
        }
        let n = self.segments.len();
        for i in 0..n {
            let end = self.segments[i].point(1.0);
            let next = if i + 1 < n { self.segments[i + 1].point(0.0) } else { self.segments[0].point(0.0).shifted(self.period) };
            if (end - next).norm() > 1e-12 * self.period.max(1.0) {
                return Err(Error::Geometry(format!("segments {i} and {} do not join", (i + 1) % n)));
            }
        }
        Ok(())
    }

    pub fn x_left(&self) -> f64 {
        self.segments[0].point(0.0).x
    }

    /// Point at global parameter `t`; segment `k` covers `[k, k + 1)` and
    /// `t + nseg` is the next period.
    pub fn point_at(&self, t: f64) -> Point {
        let (seg, u, shift) = self.locate(t);
        self.segments[seg].point(u).shifted(shift)
    }

    pub fn deriv_at(&self, t: f64) -> Point {
        let (seg, u, _) = self.locate(t);
        self.segments[seg].deriv(u)
    }

    fn locate(&self, t: f64) -> (usize, f64, f64) {
        let n = self.segments.len() as f64;
        let periods = (t / n).floor();
        let local = t - periods * n;
        let seg = (local.floor() as usize).min(self.segments.len() - 1);
        (seg, local - seg as f64, periods * self.period)
    }

    pub fn corners(&self) -> Vec<Corner> {
        let n = self.segments.len();
        let mut out = Vec::new();
        for j in 0..n {
            let prev = &self.segments[(j + n - 1) % n];
            let tin = prev.deriv(1.0).unit();
            let tout = self.segments[j].deriv(0.0).unit();
            let turn = tin.cross(tout).atan2(tin.dot(tout));
            if turn.abs() > 1e-10 {
                out.push(Corner { position: self.segments[j].point(0.0), joint: j, angle: PI - turn });
            }
        }
        out
    }
}

/// One Gauss-Legendre panel on a segment.
#[derive(Clone, Debug)]
pub struct Panel {
    pub segment: usize,
    pub u0: f64,
    pub u1: f64,
    /// Index of the first node of the panel.
    pub start: usize,
    pub length: f64,
    pub center: Point,
    /// Index into [`Panelization::corner_sets`] for refined corner panels.
    pub corner_set: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CornerKind {
    Full,
    HalfStart,
    HalfEnd,
}

/// Nodes belonging to the dyadically refined panels around one corner.
#[derive(Clone, Debug)]
pub struct CornerSet {
    pub kind: CornerKind,
    pub position: Point,
    pub nodes: Vec<usize>,
}

/// Panel discretization of one period `Gamma_0`.
#[derive(Clone, Debug)]
pub struct Panelization {
    pub curve: Arc<BoundaryCurve>,
    pub rule: GaussRule,
    pub panels: Vec<Panel>,
    pub nodes: Vec<Point>,
    pub normals: Vec<Point>,
    /// Arclength quadrature weights.
    pub weights: Vec<f64>,
    /// Signed curvature at each node.
    pub curvature: Vec<f64>,
    pub panel_of: Vec<usize>,
    pub corner_sets: Vec<CornerSet>,
    pub n_pan: usize,
    pub n_ref: usize,
}

impl Panelization {
    /// `n_pan` base panels split evenly over the segments, then `n_ref`
    /// dyadic refinements of each panel touching a corner.
    pub fn new(curve: Arc<BoundaryCurve>, n_pan: usize, n_ref: usize, order: usize) -> Result<Self> {
        curve.validate()?;
        let nseg = curve.segments.len();
        if n_pan == 0 || n_pan % nseg != 0 {
            return Err(Error::Geometry(format!("panel count {n_pan} must be a positive multiple of the {nseg} segments")));
        }
        if order < 2 {
            return Err(Error::Geometry(format!("panel order {order} too small")));
        }
        let corners = curve.corners();
        let is_corner = |joint: usize| corners.iter().any(|c| c.joint == joint);
        let m = n_pan / nseg;
        let rule = GaussRule::new(order);

        // corner set bookkeeping: full corners by joint, halves for the period joint
        let mut corner_sets: Vec<CornerSet> = Vec::new();
        let set_for = |kind: CornerKind, position: Point, sets: &mut Vec<CornerSet>| -> usize {
            if let Some(i) = sets.iter().position(|s| s.kind == kind && (s.position - position).norm() < 1e-14) {
                return i;
            }
            sets.push(CornerSet { kind, position, nodes: Vec::new() });
            sets.len() - 1
        };

        let mut pieces: Vec<(usize, f64, f64, Option<usize>)> = Vec::new();
        for s in 0..nseg {
            let seg = &curve.segments[s];
            let start_corner = n_ref > 0 && is_corner(s);
            let end_corner = n_ref > 0 && is_corner((s + 1) % nseg);
            let mut base: Vec<(f64, f64)> = (0..m).map(|k| (k as f64 / m as f64, (k + 1) as f64 / m as f64)).collect();
            if m == 1 && start_corner && end_corner {
                base = vec![(0.0, 0.5), (0.5, 1.0)];
            }
            let nb = base.len();
            for (k, &(u0, u1)) in base.iter().enumerate() {
                let refine_start = start_corner && k == 0;
                let refine_end = end_corner && k == nb - 1;
                if refine_start {
                    let (kind, pos) = if s == 0 { (CornerKind::HalfStart, seg.point(0.0)) } else { (CornerKind::Full, seg.point(0.0)) };
                    let id = set_for(kind, pos, &mut corner_sets);
                    let h = u1 - u0;
                    let mut lo = u0;
                    for lev in (1..=n_ref).rev() {
                        let hi = u0 + h / (1u64 << lev) as f64;
                        pieces.push((s, lo, hi, Some(id)));
                        lo = hi;
                    }
                    pieces.push((s, lo, u1, None));
                } else if refine_end {
                    let (kind, pos) = if s == nseg - 1 {
                        (CornerKind::HalfEnd, seg.point(1.0))
                    } else {
                        (CornerKind::Full, seg.point(1.0))
                    };
                    let id = set_for(kind, pos, &mut corner_sets);
                    let h = u1 - u0;
                    let mut cuts = vec![u0];
                    for lev in 1..=n_ref {
                        cuts.push(u1 - h / (1u64 << lev) as f64);
                    }
                    cuts.push(u1);
                    for (i, w) in cuts.windows(2).enumerate() {
                        pieces.push((s, w[0], w[1], if i == 0 { None } else { Some(id) }));
                    }
                } else {
                    pieces.push((s, u0, u1, None));
                }
            }
        }

        let p = rule.len();
        let mut panels = Vec::with_capacity(pieces.len());
        let mut nodes = Vec::with_capacity(pieces.len() * p);
        let mut normals = Vec::with_capacity(nodes.capacity());
        let mut weights = Vec::with_capacity(nodes.capacity());
        let mut curvature = Vec::with_capacity(nodes.capacity());
        let mut panel_of = Vec::with_capacity(nodes.capacity());
        for (pi, &(s, u0, u1, cs)) in pieces.iter().enumerate() {
            let seg = &curve.segments[s];
            let half = 0.5 * (u1 - u0);
            let start = nodes.len();
            let mut length = 0.0;
            for (&v, &w) in rule.nodes.iter().zip(&rule.weights) {
                let u = u0 + half * (v + 1.0);
                let d1 = seg.deriv(u);
                let d2 = seg.second(u);
                let speed = d1.norm();
                nodes.push(seg.point(u));
                normals.push(d1.perp().unit());
                weights.push(w * half * speed);
                curvature.push(d1.cross(d2) / speed.powi(3));
                panel_of.push(pi);
                length += w * half * speed;
                if let Some(id) = cs {
                    corner_sets[id].nodes.push(nodes.len() - 1);
                }
            }
            panels.push(Panel { segment: s, u0, u1, start, length, center: seg.point(0.5 * (u0 + u1)), corner_set: cs });
        }
        Ok(Self { curve, rule, panels, nodes, normals, weights, curvature, panel_of, corner_sets, n_pan, n_ref })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn order(&self) -> usize {
        self.rule.len()
    }

    /// Position and derivative with respect to the panel-local parameter `v` in `[-1, 1]`.
    pub fn local(&self, panel: usize, v: f64) -> (Point, Point) {
        let p = &self.panels[panel];
        let seg = &self.curve.segments[p.segment];
        let half = 0.5 * (p.u1 - p.u0);
        let u = p.u0 + half * (v + 1.0);
        (seg.point(u), seg.deriv(u) * half)
    }

    /// Nodes of the shifted copy `Gamma_0 + l d`.
    pub fn shifted_nodes(&self, l: i32) -> Vec<Point> {
        let dx = l as f64 * self.curve.period;
        self.nodes.iter().map(|p| p.shifted(dx)).collect()
    }

    /// Total arclength of one period.
    pub fn arclength(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Node indices that are not in any corner set.
    pub fn smooth_nodes(&self) -> Vec<usize> {
        let mut mark = vec![false; self.len()];
        for cs in &self.corner_sets {
            for &i in &cs.nodes {
                mark[i] = true;
            }
        }
        (0..self.len()).filter(|&i| !mark[i]).collect()
    }

    pub fn min_y(&self) -> f64 {
        let mut m = self.nodes.iter().fold(f64::INFINITY, |m, p| m.min(p.y));
        for s in &self.curve.segments {
            m = m.min(s.point(0.0).y).min(s.point(1.0).y);
        }
        m
    }

    pub fn max_y(&self) -> f64 {
        let mut m = self.nodes.iter().fold(f64::NEG_INFINITY, |m, p| m.max(p.y));
        for s in &self.curve.segments {
            m = m.max(s.point(0.0).y).max(s.point(1.0).y);
        }
        m
    }
}

/// Parameters of the unit cell and its auxiliary discretizations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellParams {
    /// Collocation points on both walls together.
    pub wall_nodes: usize,
    pub wall_panels: usize,
    pub top_nodes: usize,
    pub wall_height: f64,
    pub proxy_nodes: usize,
    pub proxy_radius: f64,
    /// Rayleigh-Bloch truncation `K`: modes `-K..=K`.
    pub rb_order: usize,
}

impl CellParams {
    pub fn for_period(d: f64) -> Self {
        Self { wall_nodes: 240, wall_panels: 1, top_nodes: 60, wall_height: d, proxy_nodes: 160, proxy_radius: 2.0 * d, rb_order: 20 }
    }
}

#[derive(Clone, Debug)]
pub struct UnitCell {
    pub params: CellParams,
    pub period: f64,
    pub x_left: f64,
    pub x_right: f64,
    pub y_wall_bottom: f64,
    pub y_top: f64,
    /// Ordinates of the wall collocation points (shared by both walls).
    pub wall_y: Vec<f64>,
    pub wall_w: Vec<f64>,
    pub top_x: Vec<f64>,
    pub proxy_center: Point,
    pub proxy_points: Vec<Point>,
    pub proxy_normals: Vec<Point>,
}

impl UnitCell {
    pub fn new(pan: &Panelization, params: CellParams) -> Result<Self> {
        let curve = &pan.curve;
        let d = curve.period;
        if params.wall_nodes < 2 || params.wall_nodes % (2 * params.wall_panels.max(1)) != 0 {
            return Err(Error::Config(format!(
                "wall node count {} must split evenly over 2 walls x {} panels",
                params.wall_nodes, params.wall_panels
            )));
        }
        if params.top_nodes == 0 || params.proxy_nodes == 0 {
            return Err(Error::Config("top and proxy node counts must be positive".into()));
        }
        let x_left = curve.x_left();
        let x_right = x_left + d;
        let y_wall_bottom = curve.segments[0].point(0.0).y;
        let y_top = y_wall_bottom + params.wall_height;
        if pan.max_y() >= y_top {
            return Err(Error::Geometry(format!("boundary reaches the top of the cell (y_U = {y_top})")));
        }
        let per_panel = params.wall_nodes / 2 / params.wall_panels.max(1);
        let (gx, gw) = gauss_legendre(per_panel);
        let np = params.wall_panels.max(1);
        let h = params.wall_height / np as f64;
        let mut wall_y = Vec::with_capacity(params.wall_nodes / 2);
        let mut wall_w = Vec::with_capacity(params.wall_nodes / 2);
        for k in 0..np {
            let a = y_wall_bottom + k as f64 * h;
            for (x, w) in gx.iter().zip(&gw) {
                wall_y.push(a + 0.5 * h * (x + 1.0));
                wall_w.push(0.5 * h * w);
            }
        }
        let m = params.top_nodes;
        let top_x = (0..m).map(|i| x_left + (i as f64 + 0.5) * d / m as f64).collect();
        let proxy_center = Point::new(x_left + 0.5 * d, 0.5 * (pan.min_y() + y_top));
        let r = params.proxy_radius;
        let np = params.proxy_nodes;
        let (proxy_points, proxy_normals) = (0..np)
            .map(|j| {
                let t = 2.0 * PI * j as f64 / np as f64;
                let n = Point::new(t.cos(), t.sin());
                (proxy_center + n * r, n)
            })
            .unzip();
        let cell = Self {
            params,
            period: d,
            x_left,
            x_right,
            y_wall_bottom,
            y_top,
            wall_y,
            wall_w,
            top_x,
            proxy_center,
            proxy_points,
            proxy_normals,
        };
        cell.check_enclosure(pan)?;
        Ok(cell)
    }

    fn check_enclosure(&self, pan: &Panelization) -> Result<()> {
        let mut far = 0.0f64;
        let d = self.period;
        for l in -1..=1 {
            for p in &pan.nodes {
                far = far.max((p.shifted(l as f64 * d) - self.proxy_center).norm());
            }
            for s in &pan.curve.segments {
                for u in [0.0, 1.0] {
                    far = far.max((s.point(u).shifted(l as f64 * d) - self.proxy_center).norm());
                }
            }
        }
        for &y in &self.wall_y {
            far = far.max((Point::new(self.x_left, y) - self.proxy_center).norm());
            far = far.max((Point::new(self.x_right, y) - self.proxy_center).norm());
        }
        for &x in &self.top_x {
            far = far.max((Point::new(x, self.y_top) - self.proxy_center).norm());
        }
        if far >= self.params.proxy_radius {
            return Err(Error::Geometry(format!(
                "proxy circle fails enclosure: radius {} does not enclose the three boundary copies and the cell (needs > {far:.4})",
                self.params.proxy_radius
            )));
        }
        Ok(())
    }

    pub fn rb_count(&self) -> usize {
        2 * self.params.rb_order + 1
    }

    pub fn wall_count(&self) -> usize {
        self.wall_y.len()
    }

    /// Index `m` and in-cell point with `x = x' + m d`, `x'` in `[x_L, x_R)`.
    pub fn fold(&self, x: Point) -> (i64, Point) {
        let m = ((x.x - self.x_left) / self.period).floor();
        (m as i64, Point::new(x.x - m * self.period, x.y))
    }
}
