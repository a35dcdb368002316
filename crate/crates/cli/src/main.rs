//! `pscat`: solves, convergence studies and benchmarks for Helmholtz
//! scattering of a point source by a periodic sound-hard boundary.

use clap::{Args, Parser, Subcommand};
use periodic_scatter::config::{RunConfig, Sweep};
use periodic_scatter::floquet::Grading;
use periodic_scatter::runner::{self, Outcome};
use periodic_scatter::solver::SolverMode;
use periodic_scatter::{Error, Result, exec};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "pscat", version = periodic_scatter::io::VERSION, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand)]
enum Command {
    /// Quasi-periodic solve at one Bloch wavenumber (field, density, residuals).
    SolveQuasi {
        /// Bloch wavenumber as RE or RE,IM (default omega*cos(pi/5)).
        #[arg(long, value_name = "RE[,IM]")]
        kappa: Option<String>,
    },
    /// Aperiodic point-source field via the Floquet-Bloch contour integral.
    SolveAperiodic,
    /// Self-convergence study; the largest sweep value is the reference.
    Study {
        /// Parameter to sweep.
        #[arg(long, value_name = "panels|refinements|nkappa")]
        sweep: Option<String>,
        /// Ascending sweep values, comma separated.
        #[arg(long, value_delimiter = ',', value_name = "LIST")]
        values: Option<Vec<usize>>,
    },
    /// Precompute and median solve timings per solver mode.
    Benchmark,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Solver mode; a comma separated list for study and benchmark.
    #[arg(long, global = true, value_delimiter = ',', value_name = "dense|id-full|id-half|corner")]
    mode: Vec<String>,
    /// Contour grading.
    #[arg(long, global = true, value_name = "none|zero|pi")]
    grading: Option<String>,
    /// Grading strength.
    #[arg(long, global = true, value_name = "FLOAT")]
    b: Option<f64>,
    /// Number of contour nodes.
    #[arg(long, global = true, value_name = "INT")]
    nkappa: Option<usize>,
    /// Worker threads for parallel solves.
    #[arg(long, global = true, value_name = "INT")]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
}

fn parse_kappa(s: &str) -> Result<[f64; 2]> {
    let bad = || Error::Config(format!("--kappa expects RE or RE,IM, got '{s}'"));
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |t: &str| t.parse::<f64>().map_err(|_| bad());
    match parts.as_slice() {
        [re] => Ok([num(re)?, 0.0]),
        [re, im] => Ok([num(re)?, num(im)?]),
        _ => Err(bad()),
    }
}

fn configure(cli: &Cli) -> Result<RunConfig> {
    let c = &cli.common;
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let modes = c.mode.iter().map(|m| m.parse::<SolverMode>()).collect::<Result<Vec<_>>>()?;
    if !modes.is_empty() {
        match cli.command {
            Command::Study { .. } => cfg.study.modes = modes,
            Command::Benchmark => cfg.benchmark.modes = modes,
            _ if modes.len() == 1 => cfg.solver.mode = modes[0],
            _ => return Err(Error::Config("this command takes a single --mode".into())),
        }
    }
    if let Some(g) = &c.grading {
        cfg.floquet.grading = g.parse::<Grading>()?;
    }
    if let Some(b) = c.b {
        cfg.floquet.b = b;
    }
    if let Some(n) = c.nkappa {
        cfg.floquet.nkappa = n;
    }
    if let Some(o) = &c.out {
        cfg.output.dir = o.clone();
    }
    match &cli.command {
        Command::SolveQuasi { kappa: Some(k) } => cfg.floquet.kappa = Some(parse_kappa(k)?),
        Command::Study { sweep, values } => {
            if let Some(s) = sweep {
                cfg.study.sweep = s.parse::<Sweep>()?;
            }
            if let Some(v) = values {
                cfg.study.values = v.clone();
            }
        }
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = configure(cli)?;
    if let Some(w) = cli.common.workers {
        exec::configure_workers(w).map_err(|e| Error::Config(format!("--workers: {e}")))?;
    }
    let outcome: Outcome = match cli.command {
        Command::SolveQuasi { .. } => runner::solve_quasi(&cfg)?,
        Command::SolveAperiodic => runner::solve_aperiodic(&cfg)?,
        Command::Study { .. } => runner::study(&cfg)?,
        Command::Benchmark => runner::benchmark(&cfg)?,
    };
    let written = outcome.write(&cfg.output.dir)?;
    let mut out = std::io::stdout().lock();
    for line in &outcome.summary {
        let _ = writeln!(out, "{line}");
    }
    for p in written {
        let _ = writeln!(out, "wrote {}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pscat: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
