use std::hint::black_box;

use acfb::grid::{init_field, GridSpec, InitMode};
use acfb::minimizer::{energy_with, minimize, projected_gradient_norm, MinimizeConfig, PotentialForm};
use acfb::{Exec, Potential, VectorField};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn setup(nodes: usize) -> (Potential, VectorField) {
    let p = Potential::with_constant_g(Potential::unit_circle_wells(3), 1.0, 1.0).unwrap();
    let spec = GridSpec::centered(2, nodes, (nodes - 1) as f64 / 8.0).unwrap();
    let f = init_field(
        spec,
        &p,
        &InitMode::Random {
            seed: 3,
            boundary: None,
        },
    )
    .unwrap();
    (p, f)
}

fn kernels(c: &mut Criterion) {
    let (p, f) = setup(257);
    let mut g = c.benchmark_group("energy");
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| energy_with(black_box(&f), &p, PotentialForm::Exact, exec))
        });
    }
    g.finish();

    let mut g = c.benchmark_group("projected_gradient");
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| projected_gradient_norm(black_box(&f), &p, exec))
        });
    }
    g.finish();
}

fn descent(c: &mut Criterion) {
    let (p, f) = setup(129);
    let mut g = c.benchmark_group("minimize_50_iters");
    g.sample_size(10);
    for (name, exec) in MODES {
        let mut cfg = MinimizeConfig::new(1e-14, 50);
        cfg.exec = exec;
        g.bench_with_input(BenchmarkId::from_parameter(name), &cfg, |b, cfg| {
            b.iter(|| minimize(black_box(&f), &p, cfg).unwrap().iterations)
        });
    }
    g.finish();
}

criterion_group!(benches, kernels, descent);
criterion_main!(benches);
