//! Sequential vs. parallel throughput for the crate's data-parallel stages:
//! Gram assembly, Monte Carlo risk estimation, and a small rate sweep.
//!
//! Both modes produce bitwise-identical numbers; these benches measure the
//! speed difference only. With the `parallel` feature disabled the
//! "parallel" rows simply repeat the sequential path.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use iterreg::engine::ScheduleMode;
use iterreg::evaluation::expected_risk_mc_with;
use iterreg::exec::ExecMode;
use iterreg::experiment::{rate_sweep_with, SweepConfig};
use iterreg::kernel::{Kernel, KernelExpansion};
use iterreg::loss::Loss;
use iterreg::synth::{DecisionFn, SyntheticDist};

const MODES: [(&str, ExecMode); 2] =
    [("sequential", ExecMode::Sequential), ("parallel", ExecMode::Parallel)];

fn flip_dist(dim: usize) -> SyntheticDist {
    let mut weights = vec![0.0; dim];
    weights[0] = 1.0;
    weights[1] = -1.0;
    SyntheticDist::flip_classification(DecisionFn::linear(weights, 0.0).unwrap(), 0.1).unwrap()
}

fn bench_gram(c: &mut Criterion) {
    let dist = flip_dist(4);
    let sample = dist.sample(512, 7).unwrap();
    let kernel = Kernel::gaussian(0.4).unwrap();
    let mut group = c.benchmark_group("gram_512x4");
    for (name, mode) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| black_box(kernel.gram_with(black_box(&sample.points), mode)))
        });
    }
    group.finish();
}

fn bench_mc_risk(c: &mut Criterion) {
    let dist = flip_dist(4);
    let sample = dist.sample(128, 7).unwrap();
    let kernel = Kernel::gaussian(0.4).unwrap();
    let coeffs: Vec<f64> = (0..sample.len()).map(|i| if i % 2 == 0 { 0.01 } else { -0.01 }).collect();
    let f = KernelExpansion::new(kernel, sample.points.clone(), coeffs).unwrap();
    let loss = Loss::hinge();
    let mut group = c.benchmark_group("mc_risk_20k_128centers");
    for (name, mode) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| expected_risk_mc_with(mode, &loss, &f, &dist, 20_000, 11).unwrap())
        });
    }
    group.finish();
}

fn bench_rate_sweep(c: &mut Criterion) {
    let cfg = SweepConfig {
        kernel: Kernel::gaussian(0.4).unwrap(),
        loss: Loss::hinge(),
        dist: flip_dist(2),
        eta1: None,
        theta: 0.75,
        mode: ScheduleMode::Nonsmooth,
        forced: false,
        kappa: None,
        gamma: 0.5,
        grid: vec![48, 96],
        repetitions: 2,
        mc_samples: 2_000,
        incremental: true,
        seed: 11,
    };
    let mut group = c.benchmark_group("rate_sweep_2x2_cells");
    group.sample_size(10);
    for (name, mode) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| rate_sweep_with(mode, &cfg).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_gram, bench_mc_risk, bench_rate_sweep);
criterion_main!(benches);
