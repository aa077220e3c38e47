//! Sequential vs rayon execution of the data-parallel loops.
//!
//! Without the `parallel` feature both variants run sequentially.

use std::hint::black_box;

use bezier_simplex::exec::Execution;
use bezier_simplex::metrics::{gd_with, grid_sample_with};
use bezier_simplex::problems::FrontSource;
use bezier_simplex::{fit_all_at_once, Face, FitConfig, Problem, Target};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn front(problem: Problem, n: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut source = FrontSource::new(problem, 7, 20_000, Execution::default()).unwrap();
    let m = source.num_objectives();
    let vertices = (0..m)
        .map(|i| source.draw(&Face::vertex(i), 1).unwrap().targets(Target::Front).unwrap().remove(0))
        .collect();
    let xs = source.draw(&Face::full(m), n).unwrap().targets(Target::Front).unwrap();
    (xs, vertices)
}

fn metrics(c: &mut Criterion) {
    let (xs, vertices) = front(Problem::Med(5), 1000);
    let model = fit_all_at_once(&xs[..200], &vertices, &FitConfig::new(3)).unwrap().model;
    let mut group = c.benchmark_group("gd_5med_grid20_vs_1000");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                let grid = grid_sample_with(&model, 20, exec).unwrap();
                black_box(gd_with(&grid, &xs, exec).unwrap())
            })
        });
    }
    group.finish();
}

fn fitting(c: &mut Criterion) {
    let (xs, vertices) = front(Problem::Med(3), 400);
    let mut group = c.benchmark_group("fit_all_at_once_3med_400");
    group.sample_size(10);
    for (name, exec) in MODES {
        let cfg = FitConfig::new(3).with_execution(exec);
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| black_box(fit_all_at_once(&xs, &vertices, &cfg).unwrap().outer_iterations))
        });
    }
    group.finish();
}

fn pools(c: &mut Criterion) {
    let mut group = c.benchmark_group("viennet2_pool_20000");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                let mut source = FrontSource::new(Problem::Viennet2, 3, 20_000, exec).unwrap();
                black_box(source.front_range())
            })
        });
    }
    group.finish();
}

criterion_group!(benches, metrics, fitting, pools);
criterion_main!(benches);
