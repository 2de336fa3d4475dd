//! Sequential against rayon evaluation of the operator on a grid.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use logkant::funcexpr::resolve;
use logkant::operators::apply_grid;
use logkant::{Execution, LogWeight, OperatorSpec, QuadratureRule};
use std::hint::black_box;

fn grid_eval(c: &mut Criterion) {
    let w = LogWeight::new(1.0).unwrap();
    let f = resolve("x_lnmu", &w).unwrap();
    let rule = QuadratureRule::default();
    let xs: Vec<f64> = (0..=512).map(|i| i as f64 / 512.0).collect();
    let mut group = c.benchmark_group("grid_eval");
    group.sample_size(10);
    for n in [64u64, 1024] {
        let spec = OperatorSpec::log_kantorovich(n, 1.0).unwrap();
        for exec in [Execution::Sequential, Execution::Parallel] {
            group.bench_with_input(BenchmarkId::new(format!("{exec:?}"), n), &n, |b, _| {
                b.iter(|| apply_grid(&spec, &f, black_box(&xs), &rule, exec).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, grid_eval);
criterion_main!(benches);
