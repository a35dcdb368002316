//! The four run commands (quasi-periodic solve, aperiodic solve, convergence
//! study, benchmark) producing field, table and report artifacts.

use crate::config::{GeometryKind, RunConfig, Sweep};
use crate::error::{Error, Result};
use crate::floquet::{self, ContourQuadrature, Grading};
use crate::io::{self, Table, cell, pairs};
use crate::solver::{Precompute, SolverMode, SolverParams};
use num_complex::Complex64 as C64;
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

/// Probes per wall and along the top line for the structural residuals.
const LINE_PROBES: usize = 20;

/// Artifacts of one command.
pub struct Outcome {
    pub field: Option<Table>,
    pub table: Option<Table>,
    pub report: serde_json::Value,
    /// Human-readable summary lines.
    pub summary: Vec<String>,
}

impl Outcome {
    /// Writes `field.csv`, `table.csv` and `report.json` (those present) into `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io(e).context(&dir.display().to_string()))?;
        let mut written = Vec::new();
        if let Some(f) = &self.field {
            let p = dir.join("field.csv");
            f.write(&p)?;
            written.push(p);
        }
        if let Some(t) = &self.table {
            let p = dir.join("table.csv");
            t.write(&p)?;
            written.push(p);
        }
        let p = dir.join("report.json");
        io::write_json(&p, &self.report)?;
        written.push(p);
        Ok(written)
    }
}

fn to_value<T: Serialize>(v: &T) -> Result<serde_json::Value> {
    serde_json::to_value(v).map_err(|e| Error::Numerical(format!("report serialization: {e}")))
}

fn check_finite(what: &str, u: &[C64]) -> Result<()> {
    match u.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
        Some(k) => Err(Error::Numerical(format!("{what}: non-finite value at sample {k}"))),
        None => Ok(()),
    }
}

/// `max |u - r| / max |r|`.
pub fn relative_error(u: &[C64], reference: &[C64]) -> f64 {
    let diff = u.iter().zip(reference).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    let scale = reference.iter().map(|z| z.norm()).fold(0.0, f64::max);
    diff / scale
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 1 { s[m] } else { 0.5 * (s[m - 1] + s[m]) }
}

fn params_for(cfg: &RunConfig, mode: SolverMode) -> SolverParams {
    SolverParams { mode, ..cfg.solver.clone() }
}

fn quadrature_for(cfg: &RunConfig) -> Result<ContourQuadrature> {
    let f = &cfg.floquet;
    floquet::quadrature(f.nkappa, f.grading, f.b, cfg.geometry.period, f.contour_amplitude)
}

#[derive(Serialize)]
struct Timing {
    assemble_s: f64,
    factor_s: f64,
    solve_s: f64,
}

#[derive(Serialize)]
pub struct Residuals {
    /// Off-node Neumann residual over all panels.
    pub boundary: f64,
    /// Same, restricted to panels outside the dyadic corner zones.
    pub boundary_outside_corners: Option<f64>,
    pub quasi_periodicity: f64,
    pub top_matching: f64,
}

#[derive(Serialize)]
struct QuasiReport<'a> {
    version: &'static str,
    command: &'static str,
    config: &'a RunConfig,
    kappa: [f64; 2],
    alpha: [f64; 2],
    n: usize,
    mode: SolverMode,
    n_compress: Option<usize>,
    neighbor_ranks: Option<(usize, usize)>,
    schur_rank: usize,
    timing: Timing,
    residuals: Residuals,
    field_points: usize,
    sigma: Vec<[f64; 2]>,
    c: Vec<[f64; 2]>,
    a: Vec<[f64; 2]>,
}

/// Quasi-periodic solve at the configured Bloch wavenumber, driven by the
/// periodized point source.
pub fn solve_quasi(cfg: &RunConfig) -> Result<Outcome> {
    cfg.validate()?;
    let (pan, cell_geom) = cfg.discretize()?;
    let pre = Precompute::new(pan.clone(), cell_geom, cfg.floquet.omega, cfg.solver.clone())?;
    let kappa = cfg.kappa();
    let t = Instant::now();
    let sol = pre.solve_point_source(kappa, cfg.source())?;
    let solve_s = t.elapsed().as_secs_f64();
    let pts = cfg.evaluation_points();
    let u = sol.eval_field(&pts);
    check_finite("field", &u)?;
    check_finite("density", &sol.sigma)?;
    let probes = cfg.problem.residual_probes;
    let residuals = Residuals {
        boundary: sol.boundary_residual(probes)?,
        boundary_outside_corners: if pan.corner_sets.is_empty() { None } else { Some(sol.boundary_residual_smooth(probes)?) },
        quasi_periodicity: sol.quasi_residual(LINE_PROBES),
        top_matching: sol.top_residual(LINE_PROBES),
    };
    let mut summary = vec![
        format!(
            "N = {}, mode {}, kappa = {}{:+}i, schur rank {}",
            pre.n(),
            pre.mode().name(),
            kappa.re,
            kappa.im,
            sol.schur_rank
        ),
        format!(
            "precompute {:.3} s (assemble {:.3} s, factor {:.3} s), solve {:.3} s",
            pre.timing.assemble + pre.timing.factor,
            pre.timing.assemble,
            pre.timing.factor,
            solve_s
        ),
        format!(
            "boundary residual {:.3e}, quasi-periodicity residual {:.3e}, top matching residual {:.3e}",
            residuals.boundary, residuals.quasi_periodicity, residuals.top_matching
        ),
    ];
    if let Some(s) = residuals.boundary_outside_corners {
        summary.push(format!("boundary residual outside corner zones {s:.3e}"));
    }
    let report = QuasiReport {
        version: io::VERSION,
        command: "solve-quasi",
        config: cfg,
        kappa: [kappa.re, kappa.im],
        alpha: [sol.alpha.re, sol.alpha.im],
        n: pre.n(),
        mode: pre.mode(),
        n_compress: pre.n_compress(),
        neighbor_ranks: pre.neighbor_ranks(),
        schur_rank: sol.schur_rank,
        timing: Timing { assemble_s: pre.timing.assemble, factor_s: pre.timing.factor, solve_s },
        residuals,
        field_points: pts.len(),
        sigma: pairs(&sol.sigma),
        c: pairs(&sol.c),
        a: pairs(&sol.a),
    };
    Ok(Outcome { field: Some(io::field_table(&pts, &u)), table: None, report: to_value(&report)?, summary })
}

#[derive(Serialize)]
pub struct ImageOracle {
    /// Largest relative deviation of the scattered field from the image source.
    pub max_rel_error: f64,
    pub points: usize,
}

#[derive(Serialize)]
struct AperiodicReport<'a> {
    version: &'static str,
    command: &'static str,
    config: &'a RunConfig,
    n: usize,
    mode: SolverMode,
    nkappa: usize,
    grading: Grading,
    b: f64,
    workers: usize,
    timing: AperiodicTiming,
    image_oracle: Option<ImageOracle>,
    scattered: Vec<[f64; 2]>,
}

#[derive(Serialize)]
struct AperiodicTiming {
    assemble_s: f64,
    factor_s: f64,
    solve_total_s: f64,
    wall_s: f64,
}

/// Aperiodic field of the point source: quasi-periodic solves at the contour
/// nodes combined by the Floquet-Bloch quadrature.
pub fn solve_aperiodic(cfg: &RunConfig) -> Result<Outcome> {
    cfg.validate()?;
    let quad = quadrature_for(cfg)?;
    let (pan, cell_geom) = cfg.discretize()?;
    let pre = Precompute::new(pan, cell_geom, cfg.floquet.omega, cfg.solver.clone())?;
    let pts = cfg.evaluation_points();
    let x0 = cfg.source();
    let t = Instant::now();
    let res = floquet::solve_aperiodic(&pre, x0, &pts, &quad)?;
    let wall_s = t.elapsed().as_secs_f64();
    check_finite("field", &res.total)?;
    let mut table = Table::new(&["j", "kappa_re", "kappa_im", "weight_re", "weight_im", "solve_s"]);
    for (j, d) in res.nodes.iter().enumerate() {
        table.push(vec![
            j.to_string(),
            d.kappa_re.to_string(),
            d.kappa_im.to_string(),
            d.weight_re.to_string(),
            d.weight_im.to_string(),
            d.solve_seconds.to_string(),
        ]);
    }
    let image_oracle = (cfg.geometry.kind == GeometryKind::Flat).then(|| {
        let exact: Vec<C64> = pts.iter().map(|&p| floquet::image_source_field(cfg.floquet.omega, x0, p)).collect();
        ImageOracle { max_rel_error: relative_error(&res.scattered, &exact), points: pts.len() }
    });
    let timing = AperiodicTiming {
        assemble_s: pre.timing.assemble,
        factor_s: pre.timing.factor,
        solve_total_s: res.solve_seconds,
        wall_s,
    };
    let mut summary = vec![
        format!(
            "N = {}, mode {}, {} contour nodes{}",
            pre.n(),
            pre.mode().name(),
            quad.len(),
            if quad.grading == Grading::None { String::new() } else { format!(", graded toward {:?} with b = {}", quad.grading, quad.b) }
        ),
        format!(
            "precompute {:.3} s (assemble {:.3} s, factor {:.3} s), solves {:.3} s summed, {:.3} s wall on {} worker(s)",
            timing.assemble_s + timing.factor_s,
            timing.assemble_s,
            timing.factor_s,
            timing.solve_total_s,
            wall_s,
            crate::exec::workers()
        ),
    ];
    if let Some(o) = &image_oracle {
        summary.push(format!("image-source oracle: max relative error {:.3e} over {} point(s)", o.max_rel_error, o.points));
    }
    let report = AperiodicReport {
        version: io::VERSION,
        command: "solve-aperiodic",
        config: cfg,
        n: pre.n(),
        mode: pre.mode(),
        nkappa: quad.len(),
        grading: quad.grading,
        b: quad.b,
        workers: crate::exec::workers(),
        timing,
        image_oracle,
        scattered: pairs(&res.scattered),
    };
    Ok(Outcome { field: Some(io::field_table(&pts, &res.total)), table: Some(table), report: to_value(&report)?, summary })
}

/// One row of a convergence study.
#[derive(Clone, Debug, Serialize)]
pub struct StudyRow {
    pub value: usize,
    pub mode: SolverMode,
    pub n: usize,
    pub n_compress: Option<usize>,
    pub precompute_s: f64,
    pub solve_s: f64,
    /// Relative error against the largest sweep value; `None` on the reference row.
    pub rel_error: Option<f64>,
    #[serde(skip)]
    pub field: Vec<C64>,
}

#[derive(Serialize)]
struct StudyReport<'a> {
    version: &'static str,
    command: &'static str,
    config: &'a RunConfig,
    sweep: Sweep,
    values: &'a [usize],
    rows: &'a [StudyRow],
}

fn sweep_config(cfg: &RunConfig, sweep: Sweep, v: usize) -> RunConfig {
    let mut c = cfg.clone();
    match sweep {
        Sweep::Panels => c.geometry.n_pan = v,
        Sweep::Refinements => c.geometry.n_ref = v,
        Sweep::Nkappa => c.floquet.nkappa = v,
    }
    c
}

/// Runs the sweep and returns rows ordered by value, then mode.
pub fn study_rows(cfg: &RunConfig) -> Result<Vec<StudyRow>> {
    cfg.validate()?;
    let st = &cfg.study;
    if st.values.len() < 2 {
        return Err(Error::Config(format!("study needs at least 2 sweep values, got {}", st.values.len())));
    }
    if st.values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(format!("study values must be strictly ascending, got {:?}", st.values)));
    }
    if st.modes.is_empty() {
        return Err(Error::Config("study needs at least one mode".into()));
    }
    for &v in &st.values {
        sweep_config(cfg, st.sweep, v).validate().map_err(|e| e.context(&format!("sweep value {v}")))?;
    }
    let pts = cfg.evaluation_points();
    let x0 = cfg.source();
    let omega = cfg.floquet.omega;
    let mut rows = Vec::new();
    let mut shared: Option<Vec<Precompute>> = None;
    for &v in &st.values {
        let c = sweep_config(cfg, st.sweep, v);
        let rebuild = st.sweep != Sweep::Nkappa || shared.is_none();
        if rebuild {
            let (pan, cell_geom) = c.discretize()?;
            let t = Instant::now();
            let blocks = Arc::new(crate::assembly::SystemBlocks::assemble(&pan, &cell_geom, omega)?);
            let assemble = t.elapsed().as_secs_f64();
            let pres = st
                .modes
                .iter()
                .map(|&m| Precompute::from_blocks(pan.clone(), cell_geom.clone(), omega, blocks.clone(), assemble, params_for(&c, m)))
                .collect::<Result<Vec<_>>>()?;
            shared = Some(pres);
        }
        let pres = shared.as_ref().expect("precompute built");
        for pre in pres {
            let t = Instant::now();
            let field = if st.sweep == Sweep::Nkappa {
                floquet::solve_aperiodic(pre, x0, &pts, &quadrature_for(&c)?)?.total
            } else {
                pre.solve_point_source(c.kappa(), x0)?.eval_field(&pts)
            };
            let solve_s = t.elapsed().as_secs_f64();
            check_finite(&format!("{} at {v}", pre.mode().name()), &field)?;
            rows.push(StudyRow {
                value: v,
                mode: pre.mode(),
                n: pre.n(),
                n_compress: pre.n_compress(),
                precompute_s: pre.timing.assemble + pre.timing.factor,
                solve_s,
                rel_error: None,
                field,
            });
        }
        if st.sweep != Sweep::Nkappa {
            shared = None;
        }
    }
    let last = *st.values.last().expect("non-empty");
    for m in &st.modes {
        let reference = rows.iter().find(|r| r.value == last && r.mode == *m).expect("reference row").field.clone();
        for r in rows.iter_mut().filter(|r| r.mode == *m && r.value != last) {
            r.rel_error = Some(relative_error(&r.field, &reference));
        }
    }
    Ok(rows)
}

pub const STUDY_HEADER: [&str; 7] = ["value", "mode", "n", "n_compress", "precompute_s", "solve_s", "rel_error"];

/// Convergence study over panels, corner refinements or contour nodes.
pub fn study(cfg: &RunConfig) -> Result<Outcome> {
    let rows = study_rows(cfg)?;
    let mut table = Table::new(&STUDY_HEADER);
    let mut summary = vec![format!("{:?} sweep, reference value {}", cfg.study.sweep, cfg.study.values.last().expect("non-empty"))];
    for r in &rows {
        table.push(vec![
            r.value.to_string(),
            r.mode.name().to_string(),
            r.n.to_string(),
            r.n_compress.map(|n| n.to_string()).unwrap_or_default(),
            r.precompute_s.to_string(),
            r.solve_s.to_string(),
            cell(r.rel_error),
        ]);
        summary.push(format!(
            "{:>5} {:>8} N={:<5} precompute {:8.3} s  solve {:8.3} s  error {}",
            r.value,
            r.mode.name(),
            r.n,
            r.precompute_s,
            r.solve_s,
            r.rel_error.map(|e| format!("{e:.2e}")).unwrap_or_else(|| "reference".into())
        ));
    }
    let report = StudyReport {
        version: io::VERSION,
        command: "study",
        config: cfg,
        sweep: cfg.study.sweep,
        values: &cfg.study.values,
        rows: &rows,
    };
    Ok(Outcome { field: None, table: Some(table), report: to_value(&report)?, summary })
}

/// Timings of one mode in a benchmark.
#[derive(Clone, Debug, Serialize)]
pub struct BenchRow {
    pub mode: SolverMode,
    pub n: usize,
    pub n_compress: Option<usize>,
    pub neighbor_ranks: Option<(usize, usize)>,
    pub assemble_s: f64,
    pub factor_s: f64,
    pub solve_s: Vec<f64>,
    pub solve_median_s: f64,
    /// Factorization plus `nkappa` solves, the cost of one aperiodic run
    /// after assembly.
    pub nkappa_run_s: f64,
    /// Baseline median solve time over this mode's; `None` with a single mode.
    pub solve_speedup: Option<f64>,
    pub nkappa_speedup: Option<f64>,
}

#[derive(Serialize)]
struct BenchReport<'a> {
    version: &'static str,
    command: &'static str,
    config: &'a RunConfig,
    baseline: SolverMode,
    repetitions: usize,
    nkappa: usize,
    workers: usize,
    rows: &'a [BenchRow],
}

/// Precompute once per mode, then time repeated solves at the configured
/// Bloch wavenumber. The assembly is shared between modes.
pub fn benchmark_rows(cfg: &RunConfig) -> Result<Vec<BenchRow>> {
    cfg.validate()?;
    let modes = &cfg.benchmark.modes;
    if modes.is_empty() {
        return Err(Error::Config("benchmark needs at least one mode".into()));
    }
    let omega = cfg.floquet.omega;
    let (pan, cell_geom) = cfg.discretize()?;
    let t = Instant::now();
    let blocks = Arc::new(crate::assembly::SystemBlocks::assemble(&pan, &cell_geom, omega)?);
    let assemble = t.elapsed().as_secs_f64();
    let nk = cfg.floquet.nkappa as f64;
    let mut rows = Vec::new();
    for &m in modes {
        let pre = Precompute::from_blocks(pan.clone(), cell_geom.clone(), omega, blocks.clone(), assemble, params_for(cfg, m))?;
        let mut times = Vec::with_capacity(cfg.benchmark.repetitions);
        for _ in 0..cfg.benchmark.repetitions {
            let t = Instant::now();
            let sol = pre.solve_point_source(cfg.kappa(), cfg.source())?;
            times.push(t.elapsed().as_secs_f64());
            check_finite(m.name(), &sol.sigma)?;
        }
        let med = median(&times);
        rows.push(BenchRow {
            mode: m,
            n: pre.n(),
            n_compress: pre.n_compress(),
            neighbor_ranks: pre.neighbor_ranks(),
            assemble_s: assemble,
            factor_s: pre.timing.factor,
            solve_s: times,
            solve_median_s: med,
            nkappa_run_s: pre.timing.factor + nk * med,
            solve_speedup: None,
            nkappa_speedup: None,
        });
    }
    if rows.len() > 1 {
        let (b_solve, b_run) = (rows[0].solve_median_s, rows[0].nkappa_run_s);
        for r in &mut rows {
            r.solve_speedup = Some(b_solve / r.solve_median_s);
            r.nkappa_speedup = Some(b_run / r.nkappa_run_s);
        }
    }
    Ok(rows)
}

pub const BENCH_HEADER: [&str; 11] = [
    "mode",
    "n",
    "n_compress",
    "assemble_s",
    "factor_s",
    "solve_median_s",
    "solve_min_s",
    "solve_max_s",
    "nkappa_run_s",
    "solve_speedup",
    "nkappa_speedup",
];

/// Per-mode precompute and solve timings.
pub fn benchmark(cfg: &RunConfig) -> Result<Outcome> {
    let rows = benchmark_rows(cfg)?;
    let mut table = Table::new(&BENCH_HEADER);
    let mut summary = vec![format!(
        "N = {}, {} repetition(s), baseline {}, {} worker(s)",
        rows[0].n,
        cfg.benchmark.repetitions,
        rows[0].mode.name(),
        crate::exec::workers()
    )];
    for r in &rows {
        let min = r.solve_s.iter().copied().fold(f64::INFINITY, f64::min);
        let max = r.solve_s.iter().copied().fold(0.0, f64::max);
        table.push(vec![
            r.mode.name().to_string(),
            r.n.to_string(),
            r.n_compress.map(|n| n.to_string()).unwrap_or_default(),
            r.assemble_s.to_string(),
            r.factor_s.to_string(),
            r.solve_median_s.to_string(),
            min.to_string(),
            max.to_string(),
            r.nkappa_run_s.to_string(),
            cell(r.solve_speedup),
            cell(r.nkappa_speedup),
        ]);
        summary.push(format!(
            "{:>8}: factor {:7.3} s, solve median {:7.4} s{}{}",
            r.mode.name(),
            r.factor_s,
            r.solve_median_s,
            r.n_compress.map(|n| format!(", N_compress {n}")).unwrap_or_default(),
            r.solve_speedup.map(|s| format!(", solve speedup {s:.2}x")).unwrap_or_default()
        ));
    }
    let report = BenchReport {
        version: io::VERSION,
        command: "benchmark",
        config: cfg,
        baseline: rows[0].mode,
        repetitions: cfg.benchmark.repetitions,
        nkappa: cfg.floquet.nkappa,
        workers: crate::exec::workers(),
        rows: &rows,
    };
    Ok(Outcome { field: None, table: Some(table), report: to_value(&report)?, summary })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> RunConfig {
        let mut c = RunConfig::default();
        c.geometry.n_pan = 6;
        c.floquet.nkappa = 8;
        c.benchmark.repetitions = 1;
        c
    }

    #[test]
    fn median_of_odd_and_even() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
    }

    #[test]
    fn quasi_outcome_has_field_and_residuals() {
        let out = solve_quasi(&small()).unwrap();
        let f = out.field.unwrap();
        assert_eq!(f.rows.len(), 1);
        assert!(out.report["residuals"]["boundary"].as_f64().unwrap() < 1e-6);
        assert_eq!(out.report["sigma"].as_array().unwrap().len(), 96);
        assert!(out.report["version"].as_str().unwrap().starts_with(env!("CARGO_PKG_VERSION")));
    }

    #[test]
    fn study_rejects_bad_sweeps() {
        let mut c = small();
        c.study.values = vec![8];
        assert!(matches!(study(&c), Err(Error::Config(_))));
        c.study.values = vec![8, 4];
        assert!(matches!(study(&c), Err(Error::Config(_))));
    }

    #[test]
    fn nkappa_study_shares_precompute_and_marks_reference() {
        let mut c = small();
        c.study.sweep = Sweep::Nkappa;
        c.study.values = vec![4, 8];
        c.study.modes = vec![SolverMode::IdHalf];
        let rows = study_rows(&c).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].precompute_s, rows[1].precompute_s);
        assert!(rows[0].rel_error.unwrap() > 0.0);
        assert!(rows[1].rel_error.is_none());
    }

    #[test]
    fn single_mode_benchmark_leaves_comparisons_empty() {
        let mut c = small();
        c.benchmark.modes = vec![SolverMode::IdHalf];
        let out = benchmark(&c).unwrap();
        let t = out.table.unwrap();
        assert_eq!(t.column("solve_speedup").unwrap(), vec![""]);
        c.benchmark.modes = vec![SolverMode::Dense, SolverMode::IdHalf];
        let t = benchmark(&c).unwrap().table.unwrap();
        assert_eq!(t.column("solve_speedup").unwrap()[0], "1");
    }
}
