//! Head-to-head timing of the rayon scheduler against the sequential
//! fallback on the data-parallel workloads that dominate production runs:
//! dense operator assembly, the character transform, batched field draws,
//! and the Monte Carlo partition estimator.
//!
//! Run with `cargo bench -p pfield-core`. Both schedules produce
//! bit-identical results (see `tests/determinism.rs`), so these benches
//! measure scheduling overhead and speedup only.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pfield_core::exec::ExecMode;
use pfield_core::gibbs::{sample_free, FreeMeasureSpec};
use pfield_core::interacting::{partition_interacting, InteractionSpec};
use pfield_core::lattice::{assemble_u, dft, FieldVec, Lattice, ModelParams};
use pfield_core::padic::PrimeConfig;
use pfield_core::radial::KernelSpec;
use std::hint::black_box;

const MODES: [(&str, ExecMode); 2] = [
    ("sequential", ExecMode::Sequential),
    ("parallel", ExecMode::Parallel),
];

fn lattice(p: u64, n: u32, l: u32) -> Lattice {
    Lattice::build(PrimeConfig::new(p, n, l).unwrap()).unwrap()
}

fn spec_for(lat: &Lattice) -> FreeMeasureSpec<'_> {
    let kernel = KernelSpec::new(2.0, 1.0, lat.cfg()).unwrap();
    FreeMeasureSpec::new(lat, ModelParams::new(2.0, 2.0, 0.0, kernel).unwrap()).unwrap()
}

/// Row-parallel dense assembly of the quadratic-form operator.
fn bench_assembly(c: &mut Criterion) {
    let lat = lattice(7, 1, 2); // 2401 sites, 2401 dense rows
    let kernel = KernelSpec::new(2.0, 1.0, lat.cfg()).unwrap();
    let params = ModelParams::new(2.0, 2.0, 0.0, kernel).unwrap();
    let mut group = c.benchmark_group("assemble_u/p7_l2");
    group.sample_size(20);
    for (name, mode) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| assemble_u(black_box(&lat), black_box(&params), mode));
        });
    }
    group.finish();
}

/// The O(n^2) character transform, parallel over output modes.
fn bench_dft(c: &mut Criterion) {
    let lat = lattice(7, 1, 2);
    let field =
        FieldVec::new((0..lat.len()).map(|i| (i as f64 * 0.37).sin()).collect()).unwrap();
    let mut group = c.benchmark_group("dft/p7_l2");
    group.sample_size(20);
    for (name, mode) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| dft(black_box(&field), black_box(&lat), mode));
        });
    }
    group.finish();
}

/// Batched Gaussian field draws, parallel over draws.
fn bench_sampler(c: &mut Criterion) {
    let lat = lattice(3, 1, 2);
    let spec = spec_for(&lat);
    let mut group = c.benchmark_group("sample_free/p3_l2_x256");
    group.sample_size(20);
    for (name, mode) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| sample_free(black_box(&spec), 7, 256, mode).unwrap());
        });
    }
    group.finish();
}

/// The interacting partition-function estimator, parallel over replicas.
fn bench_partition(c: &mut Criterion) {
    let lat = lattice(3, 1, 1);
    let spec = spec_for(&lat);
    let quartic = InteractionSpec::phi4(0.1).unwrap();
    let mut group = c.benchmark_group("partition/p3_l1_x4096");
    group.sample_size(20);
    for (name, mode) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                partition_interacting(black_box(&spec), black_box(&quartic), 11, 4096, mode)
                    .unwrap()
            });
        });
    }
    group.finish();
}

criterion_group!(benches, bench_assembly, bench_dft, bench_sampler, bench_partition);
criterion_main!(benches);
