use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use semilab::engine::{dual_solve, duhamel_solve, ModelSpec};
use semilab::{DensityKernel, DiffusionModel, DuhamelConfig, Grid, Observable, Profile, ShiftModel};
use std::hint::black_box;

fn shift_spec(grid: Grid) -> ModelSpec {
    ModelSpec::Shift(ShiftModel::new(DensityKernel::from_profile(grid, Profile::Exp, 1.0).unwrap()))
}

fn duhamel(c: &mut Criterion) {
    let mut group = c.benchmark_group("duhamel");
    group.sample_size(10);
    for inv_h in [16u32, 32] {
        let h = 1.0 / inv_h as f64;
        let grid = Grid::with_extent(h, 8.0).unwrap();
        let omega0 = DensityKernel::from_profile(grid, Profile::XExp, 1.0).unwrap();
        let shift = shift_spec(grid);
        for fast_path in [true, false] {
            let cfg = DuhamelConfig { fast_path, keep_states: false, ..DuhamelConfig::new(0.5, h) };
            let label = if fast_path { "shift_fast" } else { "shift_kernel" };
            group.bench_with_input(BenchmarkId::new(label, inv_h), &cfg, |b, cfg| {
                b.iter(|| black_box(duhamel_solve(&shift, omega0.kernel(), cfg).unwrap()))
            });
        }
        let rebound = DensityKernel::from_profile(grid, Profile::X2Exp, 1.0).unwrap();
        let diffusion = ModelSpec::Diffusion(DiffusionModel::new(rebound.clone()));
        let cfg = DuhamelConfig { keep_states: false, ..DuhamelConfig::new(0.5, h) };
        group.bench_with_input(BenchmarkId::new("diffusion", inv_h), &cfg, |b, cfg| {
            b.iter(|| black_box(duhamel_solve(&diffusion, rebound.kernel(), cfg).unwrap()))
        });
    }
    group.finish();
}

fn dual(c: &mut Criterion) {
    let mut group = c.benchmark_group("dual");
    group.sample_size(10);
    for inv_h in [16u32, 32] {
        let h = 1.0 / inv_h as f64;
        let grid = Grid::with_extent(h, 8.0).unwrap();
        let spec = shift_spec(grid);
        let x = Observable::identity(grid);
        group.bench_with_input(BenchmarkId::new("shift_identity", inv_h), &x, |b, x| {
            b.iter(|| black_box(dual_solve(&spec, x, 0.5, h).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, duhamel, dual);
criterion_main!(benches);
