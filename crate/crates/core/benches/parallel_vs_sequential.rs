//! Data-parallel versus sequential execution of the two hot paths: system
//! assembly and the fan-out of quasi-periodic solves over contour nodes.

use criterion::{BenchmarkId, Criterion, criterion_group, criterion_main};
use periodic_scatter::Point;
use periodic_scatter::assembly::SystemBlocks;
use periodic_scatter::config::RunConfig;
use periodic_scatter::exec;
use periodic_scatter::floquet;
use periodic_scatter::solver::{Precompute, SolverMode, SolverParams};
use std::hint::black_box;
use std::time::Duration;

fn setup(n_pan: usize) -> RunConfig {
    let mut c = RunConfig::default();
    c.geometry.n_pan = n_pan;
    c
}

fn assembly(c: &mut Criterion) {
    let mut g = c.benchmark_group("assembly");
    g.sample_size(10).measurement_time(Duration::from_secs(10));
    for n_pan in [10, 40] {
        let cfg = setup(n_pan);
        let (pan, cell) = cfg.discretize().expect("discretize");
        for parallel in [true, false] {
            let id = BenchmarkId::new(if parallel { "parallel" } else { "sequential" }, 16 * n_pan);
            g.bench_with_input(id, &parallel, |b, &p| {
                exec::set_parallel(p);
                b.iter(|| black_box(SystemBlocks::assemble(&pan, &cell, cfg.floquet.omega).expect("assemble")));
            });
        }
    }
    exec::set_parallel(true);
    g.finish();
}

fn contour_solves(c: &mut Criterion) {
    let mut g = c.benchmark_group("contour_solves");
    g.sample_size(10).measurement_time(Duration::from_secs(10));
    let cfg = setup(10);
    let (pan, cell) = cfg.discretize().expect("discretize");
    let params = SolverParams { mode: SolverMode::IdHalf, ..cfg.solver.clone() };
    let pre = Precompute::new(pan, cell, cfg.floquet.omega, params).expect("precompute");
    let quad = floquet::trapezoid_nodes(16, 1.0, 1.0).expect("nodes");
    let targets = [Point::new(0.3, 0.25)];
    for parallel in [true, false] {
        g.bench_function(if parallel { "parallel" } else { "sequential" }, |b| {
            exec::set_parallel(parallel);
            b.iter(|| black_box(floquet::solve_aperiodic(&pre, cfg.source(), &targets, &quad).expect("solve")));
        });
    }
    exec::set_parallel(true);
    g.finish();
}

criterion_group!(benches, assembly, contour_solves);
criterion_main!(benches);
