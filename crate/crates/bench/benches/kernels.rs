use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use semilab::diffusion::diffusion_propagate;
use semilab::shift::shift_forward;
use semilab::{DensityKernel, Grid, Profile};
use std::hint::black_box;

fn state(h: f64, profile: Profile) -> DensityKernel {
    DensityKernel::from_profile(Grid::with_extent(h, 8.0).unwrap(), profile, 1.0).unwrap()
}

fn spectrum(c: &mut Criterion) {
    let mut group = c.benchmark_group("spectrum");
    group.sample_size(10);
    for inv_h in [16u32, 32, 64] {
        let h = 1.0 / inv_h as f64;
        let pure = state(h, Profile::XExp);
        group.bench_with_input(BenchmarkId::new("rank_one", inv_h), &pure, |b, rho| {
            b.iter(|| black_box(rho.kernel().spectrum().unwrap()))
        });
        let evolved = diffusion_propagate(pure.kernel(), 0.25).unwrap();
        group.bench_with_input(BenchmarkId::new("diffused", inv_h), &evolved, |b, k| {
            b.iter(|| black_box(k.spectrum().unwrap()))
        });
    }
    group.finish();
}

fn propagation(c: &mut Criterion) {
    let mut group = c.benchmark_group("propagate");
    group.sample_size(10);
    for inv_h in [16u32, 32, 64] {
        let rho = state(1.0 / inv_h as f64, Profile::X2Exp);
        group.bench_with_input(BenchmarkId::new("shift", inv_h), &rho, |b, rho| {
            b.iter(|| black_box(shift_forward(rho.kernel(), 0.5).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("diffusion", inv_h), &rho, |b, rho| {
            b.iter(|| black_box(diffusion_propagate(rho.kernel(), 0.5).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, spectrum, propagation);
criterion_main!(benches);
