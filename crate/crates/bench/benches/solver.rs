use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use nlkg_core::ensemble::Ensemble;
use nlkg_core::evolution::{free_propagate, nonlinear_evolve};
use nlkg_core::scattering::wave_in;
use nlkg_core::spectral::sobolev_inner;
use nlkg_core::structure::map_r;
use nlkg_core::wick::kernel;
use nlkg_core::{FockBasis, Grid, IntegratorParams, MatchingParams, MultiIndex, PhaseSpacePoint};

fn setup(n: usize) -> (Grid, PhaseSpacePoint) {
    let grid = Grid::new(1, n, 64.0, 1.0, 0.1).unwrap();
    let d = Ensemble::default().sample(&grid, 1, 0).unwrap();
    (grid, d)
}

fn spectral(c: &mut Criterion) {
    let (_, d) = setup(512);
    let z = map_r(&d);
    c.bench_function("free_propagate n=512", |b| b.iter(|| free_propagate(black_box(&d), 3.7)));
    c.bench_function("sobolev_inner n=512", |b| b.iter(|| sobolev_inner(black_box(&z), &z, 0.5).unwrap()));
}

fn evolution(c: &mut Criterion) {
    let (_, d) = setup(512);
    let mut group = c.benchmark_group("nonlinear_evolve t=1");
    for dt in [1e-2, 1e-3] {
        let params = IntegratorParams {
            dt,
            ..IntegratorParams::default()
        };
        group.bench_function(format!("dt={dt}"), |b| {
            b.iter(|| nonlinear_evolve(black_box(&d), 1.0, &params).unwrap())
        });
    }
    group.finish();
}

fn scattering(c: &mut Criterion) {
    let (_, d) = setup(256);
    let mp = MatchingParams::new(2.0, IntegratorParams::default()).unwrap();
    let z = map_r(&d);
    let mut group = c.benchmark_group("scattering");
    group.sample_size(10);
    group.bench_function("wave_in n=256 T=2", |b| b.iter(|| wave_in(black_box(&d), &mp).unwrap()));
    group.bench_function("kernel n=256 T=2", |b| b.iter(|| kernel(black_box(&z), &z, &mp).unwrap()));
    group.finish();
}

fn basis(c: &mut Criterion) {
    let (grid, _) = setup(512);
    let idx = MultiIndex::up_to_degree(1, 3);
    c.bench_function("fock gram degree<=3 n=512", |b| {
        b.iter(|| FockBasis::new(black_box(&grid), 4).gram(&idx).unwrap())
    });
}

criterion_group!(benches, spectral, evolution, scattering, basis);
criterion_main!(benches);
