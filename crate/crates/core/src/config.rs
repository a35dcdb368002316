//! Run configuration, read from TOML. Every field has a default, so an
//! empty file describes the reference cosine setup.

use crate::error::{Error, Result};
use crate::floquet::Grading;
use crate::geometry::{BoundaryCurve, CellParams, Panelization, UnitCell};
use crate::point::Point;
use crate::solver::{SolverMode, SolverParams};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeometryKind {
    Flat,
    Cosine,
    Stair,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    pub kind: GeometryKind,
    pub period: f64,
    /// Cosine amplitude `A` in `y = A cos(2 pi x / d)`.
    pub amplitude: f64,
    /// Stair peak height.
    pub height: f64,
    pub n_pan: usize,
    pub n_ref: usize,
    pub order: usize,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self { kind: GeometryKind::Cosine, period: 1.0, amplitude: 0.25, height: 0.5, n_pan: 10, n_ref: 0, order: 16 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CellConfig {
    /// Collocation points on both walls together (`M_w`).
    pub wall_nodes: usize,
    pub wall_panels: usize,
    /// Collocation points on the top (`M`).
    pub top_nodes: usize,
    /// Rayleigh-Bloch truncation `K`.
    pub rb_order: usize,
    pub proxy_nodes: usize,
    /// Proxy radius; `2 d` when absent.
    pub proxy_radius: Option<f64>,
    /// Wall height above the lowest boundary point; `d` when absent.
    pub wall_height: Option<f64>,
}

impl Default for CellConfig {
    fn default() -> Self {
        let p = CellParams::for_period(1.0);
        Self {
            wall_nodes: p.wall_nodes,
            wall_panels: p.wall_panels,
            top_nodes: p.top_nodes,
            rb_order: p.rb_order,
            proxy_nodes: p.proxy_nodes,
            proxy_radius: None,
            wall_height: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FloquetConfig {
    pub omega: f64,
    /// Bloch wavenumber `[re, im]` for quasi-periodic runs; `omega cos(pi/5)` when absent.
    pub kappa: Option<[f64; 2]>,
    pub nkappa: usize,
    pub grading: Grading,
    pub b: f64,
    /// Height of the contour deformation.
    pub contour_amplitude: f64,
}

impl Default for FloquetConfig {
    fn default() -> Self {
        Self { omega: 1.2, kappa: None, nkappa: 60, grading: Grading::None, b: 5.0, contour_amplitude: 1.0 }
    }
}

/// Uniform evaluation grid, inclusive of both ends.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub nx: usize,
    pub ny: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemConfig {
    pub source: [f64; 2],
    pub targets: Vec<[f64; 2]>,
    pub grid: Option<GridSpec>,
    /// Off-node probes per panel for the boundary residual.
    pub residual_probes: usize,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self { source: [-0.2, 0.35], targets: vec![[0.3, 0.25]], grid: None, residual_probes: 3 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sweep {
    Panels,
    Refinements,
    Nkappa,
}

impl std::str::FromStr for Sweep {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "panels" => Ok(Sweep::Panels),
            "refinements" => Ok(Sweep::Refinements),
            "nkappa" => Ok(Sweep::Nkappa),
            _ => Err(Error::Config(format!("unknown sweep '{s}' (expected panels, refinements or nkappa)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub sweep: Sweep,
    pub values: Vec<usize>,
    pub modes: Vec<SolverMode>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            sweep: Sweep::Panels,
            values: vec![4, 8, 20, 40, 100, 200],
            modes: vec![SolverMode::Dense, SolverMode::IdFull, SolverMode::IdHalf],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub modes: Vec<SolverMode>,
    pub repetitions: usize,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self { modes: vec![SolverMode::Dense, SolverMode::IdHalf], repetitions: 3 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: GeometryConfig,
    pub cell: CellConfig,
    pub solver: SolverParams,
    pub floquet: FloquetConfig,
    pub problem: ProblemConfig,
    pub study: StudyConfig,
    pub benchmark: BenchmarkConfig,
    pub output: OutputConfig,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() { Ok(()) } else { Err(Error::Config(format!("{name} must be positive, got {v}"))) }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| e.context(&path.display().to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.geometry;
        positive("geometry.period", g.period)?;
        if g.n_pan == 0 {
            return Err(Error::Config("geometry.n_pan must be at least 1".into()));
        }
        if g.order < 2 {
            return Err(Error::Config(format!("geometry.order must be at least 2, got {}", g.order)));
        }
        match g.kind {
            GeometryKind::Cosine if !(g.amplitude.is_finite() && g.amplitude >= 0.0) => {
                return Err(Error::Config(format!("geometry.amplitude must be non-negative, got {}", g.amplitude)));
            }
            GeometryKind::Stair => {
                positive("geometry.height", g.height)?;
                if g.n_pan % 2 != 0 {
                    return Err(Error::Config(format!("geometry.n_pan must be even for the stair, got {}", g.n_pan)));
                }
            }
            _ => {}
        }
        if let Some(r) = self.cell.proxy_radius {
            positive("cell.proxy_radius", r)?;
        }
        if let Some(h) = self.cell.wall_height {
            positive("cell.wall_height", h)?;
        }
        if self.cell.top_nodes == 0 || self.cell.proxy_nodes == 0 {
            return Err(Error::Config("cell.top_nodes and cell.proxy_nodes must be positive".into()));
        }
        self.solver.validate().map_err(|e| e.context("solver"))?;
        positive("floquet.omega", self.floquet.omega)?;
        if self.floquet.nkappa < 2 {
            return Err(Error::Config(format!("floquet.nkappa must be at least 2, got {}", self.floquet.nkappa)));
        }
        if !(self.floquet.b >= 0.0 && self.floquet.b.is_finite()) {
            return Err(Error::Config(format!("floquet.b must be non-negative, got {}", self.floquet.b)));
        }
        if let Some(grid) = &self.problem.grid {
            if grid.nx == 0 || grid.ny == 0 {
                return Err(Error::Config("problem.grid.nx and problem.grid.ny must be positive".into()));
            }
        }
        if self.problem.residual_probes == 0 {
            return Err(Error::Config("problem.residual_probes must be positive".into()));
        }
        if self.benchmark.repetitions == 0 {
            return Err(Error::Config("benchmark.repetitions must be positive".into()));
        }
        Ok(())
    }

    pub fn curve(&self) -> BoundaryCurve {
        let g = &self.geometry;
        match g.kind {
            GeometryKind::Flat => BoundaryCurve::flat(g.period),
            GeometryKind::Cosine => BoundaryCurve::cosine(g.amplitude, g.period),
            GeometryKind::Stair => BoundaryCurve::stair(g.height, g.period),
        }
    }

    pub fn cell_params(&self) -> CellParams {
        let d = self.geometry.period;
        let c = &self.cell;
        CellParams {
            wall_nodes: c.wall_nodes,
            wall_panels: c.wall_panels,
            top_nodes: c.top_nodes,
            wall_height: c.wall_height.unwrap_or(d),
            proxy_nodes: c.proxy_nodes,
            proxy_radius: c.proxy_radius.unwrap_or(2.0 * d),
            rb_order: c.rb_order,
        }
    }

    /// Panelization and unit cell for the configured discretization.
    pub fn discretize(&self) -> Result<(Arc<Panelization>, Arc<UnitCell>)> {
        let g = &self.geometry;
        let pan = Arc::new(Panelization::new(Arc::new(self.curve()), g.n_pan, g.n_ref, g.order)?);
        let cell = Arc::new(UnitCell::new(&pan, self.cell_params())?);
        Ok((pan, cell))
    }

    pub fn kappa(&self) -> C64 {
        match self.floquet.kappa {
            Some([re, im]) => C64::new(re, im),
            None => C64::new(self.floquet.omega * (PI / 5.0).cos(), 0.0),
        }
    }

    pub fn source(&self) -> Point {
        Point::new(self.problem.source[0], self.problem.source[1])
    }

    /// Explicit targets followed by the grid points (row-major in y, then x).
    pub fn evaluation_points(&self) -> Vec<Point> {
        let mut pts: Vec<Point> = self.problem.targets.iter().map(|t| Point::new(t[0], t[1])).collect();
        if let Some(g) = &self.problem.grid {
            let lin = |r: [f64; 2], n: usize, k: usize| if n == 1 { r[0] } else { r[0] + (r[1] - r[0]) * k as f64 / (n - 1) as f64 };
            for j in 0..g.ny {
                for i in 0..g.nx {
                    pts.push(Point::new(lin(g.x, g.nx, i), lin(g.y, g.ny, j)));
                }
            }
        }
        pts
    }
}
