mod common;

use common::*;
use proptest::prelude::*;
use semilab::shift::*;
use semilab::*;

fn grid16() -> Grid {
    Grid::new(1.0 / 8.0, 16).unwrap()
}

fn exp_model(grid: Grid) -> ShiftModel {
    ShiftModel::new(DensityKernel::from_profile(grid, Profile::Exp, 1.0).unwrap())
}

#[test]
fn forward_shift_at_zero_is_identity() {
    let omega = random_kernel(grid16(), &mut rng(1));
    assert_eq!(shift_forward(&omega, 0.0).unwrap(), omega);
}

#[test]
fn forward_shift_relocates_exponential_samples() {
    let g = Grid::with_extent(1.0 / 64.0, 12.0).unwrap();
    let omega = exp_kernel(g);
    for m in [1usize, 5, 64, 200] {
        let t = m as f64 * g.h();
        let out = shift_forward(&omega, t).unwrap();
        for i in (0..g.n()).step_by(37) {
            for j in (0..g.n()).step_by(41) {
                let expected =
                    if i + m < g.n() && j + m < g.n() { (-(g.node(i) + g.node(j) + 2.0 * t)).exp() } else { 0.0 };
                assert!((out.entry(i, j).re - expected).abs() <= 1e-14);
            }
        }
        let tr = out.trace().re;
        assert!((tr - exp_kernel_trace(g, m)).abs() < 1e-12);
        assert!((tr - 0.5 * (-2.0 * t).exp()).abs() < 0.6 * g.h());
    }
}

#[test]
fn trace_deficit_telescopes_exactly() {
    let g = Grid::with_extent(1.0 / 32.0, 8.0).unwrap();
    let omega = DensityKernel::from_profile(g, Profile::XExp, 1.0).unwrap();
    for m in [1usize, 7, 32] {
        let shifted = shift_forward(omega.kernel(), m as f64 * g.h()).unwrap();
        let deficit = omega.kernel().trace() - shifted.trace();
        let escaped: Complex64 = (0..m).map(|i| omega.kernel().entry(i, i)).sum::<Complex64>() * g.h();
        assert!((deficit - escaped).norm() < 1e-14);
    }
}

#[test]
fn forward_shift_rejects_bad_times() {
    let omega = random_kernel(grid16(), &mut rng(2));
    assert!(matches!(shift_forward(&omega, -0.125), Err(Error::InvalidTime { .. })));
    assert!(matches!(shift_forward(&omega, 0.1), Err(Error::InvalidTime { .. })));
    assert!(shift_backward_obs(&Observable::identity(grid16()), 0.3).is_err());
}

#[test]
fn backward_identity_is_a_projector() {
    let g = grid16();
    let id = Observable::identity(g);
    for m in 1..4 {
        let out = shift_backward_obs(&id, m as f64 * g.h()).unwrap();
        let diff = out.sub(&id).unwrap();
        assert!((diff.op_norm() - 1.0).abs() < 1e-12);
        assert!(out.matmul(&out).unwrap().sub(&out).unwrap().max_abs() == 0.0);
    }
    assert_eq!(shift_backward_obs(&id, 0.0).unwrap(), id);
}

#[test]
fn forward_and_backward_shifts_are_dual() {
    let g = grid16();
    let mut r = rng(3);
    for trial in 0..20 {
        let omega = random_kernel(g, &mut r);
        let x = random_observable(g, &mut r);
        let t = (trial % 6) as f64 * g.h();
        let lhs = shift_forward(&omega, t).unwrap().expectation(&x).unwrap();
        let rhs = omega.expectation(&shift_backward_obs(&x, t).unwrap()).unwrap();
        assert!((lhs - rhs).norm() < 1e-12);
    }
}

#[test]
fn generator_of_exponential_kernel_is_minus_two_omega() {
    let hs = [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0];
    let mut errors = vec![];
    for &h in &hs {
        let g = Grid::with_extent(h, 8.0).unwrap();
        let omega = exp_kernel(g);
        let gen = shift_generator(&omega);
        assert_eq!(gen.boundary_value, c(1.0));
        let mut err: f64 = 0.0;
        for i in 0..g.n() - 1 {
            for j in 0..g.n() - 1 {
                err = err.max((gen.sigma.entry(i, j) + omega.entry(i, j) * 2.0).norm());
            }
        }
        assert!(err < 2.0 * h, "h={h} err={err}");
        errors.push(err);
    }
    assert!(convergence_order(&hs, &errors) > 0.9);
}

#[test]
fn generator_vanishes_on_diagonal_bands() {
    let g = grid16();
    let omega = KernelOperator::from_fn(g, |x, y| Complex64::new((-(x - y).powi(2)).exp(), (x - y).sin()));
    let sigma = shift_generator(&omega).sigma;
    for i in 0..g.n() - 1 {
        for j in 0..g.n() - 1 {
            assert_eq!(sigma.entry(i, j), c(0.0));
        }
    }
}

#[test]
fn generator_conservativity_defect_telescopes_to_zero() {
    for h in [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0] {
        let g = Grid::with_extent(h, 12.0).unwrap();
        let omega = DensityKernel::from_profile(g, Profile::Exp, 1.0).unwrap();
        let gen = shift_generator(omega.kernel());
        let direct = gen.sigma.trace() + gen.boundary_value;
        assert!((direct - gen.conservativity_defect).norm() < 1e-14);
        assert!(direct.norm() < 1e-14);
    }
}

#[test]
fn resolvent_of_exponential_kernel_matches_geometric_sum() {
    let g = Grid::with_extent(1.0 / 256.0, 4.0).unwrap();
    let h = g.h();
    let omega = exp_kernel(g);
    let inner = g.n() / 4;
    for lambda in [5.0, 10.0, 20.0, 40.0] {
        let r = shift_resolvent(&omega, lambda).unwrap();
        let q: f64 = (-(lambda + 2.0) * h).exp();
        let mut dist: f64 = 0.0;
        for i in 0..inner {
            for j in 0..inner {
                let len = (g.n() - i.max(j)) as f64;
                let factor = h * (1.0 - q.powf(len)) / (1.0 - q);
                assert!((r.entry(i, j) - omega.entry(i, j) * factor).norm() < 1e-12 * omega.entry(i, j).norm());
                dist = dist.max((r.entry(i, j) * lambda - omega.entry(i, j)).norm());
            }
        }
        assert!(dist * lambda < 4.0, "lambda={lambda} dist={dist}");
    }
}

fn resolvent_residuals(h: f64, lambda: f64) -> (f64, f64) {
    let g = Grid::with_extent(h, 8.0).unwrap();
    let omega = DensityKernel::from_profile(g, Profile::Exp, 1.0).unwrap();
    let k = omega.kernel();
    let r = shift_resolvent(k, lambda).unwrap();
    let first = r.scaled(c(lambda)).sub(&shift_generator(&r).sigma).unwrap().sub(k).unwrap();
    let source = k.scaled(c(lambda)).sub(&shift_generator(k).sigma).unwrap();
    let second = shift_resolvent(&source, lambda).unwrap().sub(k).unwrap();
    (first.trace_norm().unwrap(), second.trace_norm().unwrap())
}

#[test]
fn resolvent_identities_hold_at_first_order() {
    let hs = [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0];
    for lambda in [1.0, 4.0] {
        let (first, second): (Vec<f64>, Vec<f64>) = hs.iter().map(|&h| resolvent_residuals(h, lambda)).unzip();
        for (i, &h) in hs.iter().enumerate() {
            assert!(first[i] <= 2.0 * lambda * h && second[i] <= 2.0 * lambda * h, "{first:?} {second:?}");
        }
        assert!(convergence_order(&hs, &first) >= 0.9);
        assert!(convergence_order(&hs, &second) >= 0.9);
    }
}

#[test]
fn resolvent_rejects_nonpositive_lambda() {
    let omega = random_kernel(grid16(), &mut rng(4));
    assert!(shift_resolvent(&omega, 0.0).is_err());
    assert!(shift_resolvent(&omega, -1.0).is_err());
}

#[test]
fn closed_form_is_trace_preserving_and_starts_at_input() {
    let g = Grid::with_extent(1.0 / 32.0, 8.0).unwrap();
    let model = exp_model(g);
    let omega = DensityKernel::from_profile(g, Profile::XExp, 2.0).unwrap();
    assert_eq!(arveson_closed_form(&model, omega.kernel(), 0.0).unwrap(), *omega.kernel());
    for m in [1, 10, 100, 300] {
        let out = arveson_closed_form(&model, omega.kernel(), m as f64 * g.h()).unwrap();
        assert!((out.trace() - omega.kernel().trace()).norm() < 1e-14);
    }
}

#[test]
fn heisenberg_closed_form_is_unital_and_dual() {
    let g = grid16();
    let mut r = rng(5);
    let model = ShiftModel::new(random_density(g, &mut r));
    let id = Observable::identity(g);
    for m in 0..5 {
        let t = m as f64 * g.h();
        let out = heisenberg_closed_form(&model, &id, t).unwrap();
        assert!(out.sub(&id).unwrap().max_abs() < 1e-15);
    }
    for trial in 0..20 {
        let omega = random_kernel(g, &mut r);
        let x = random_observable(g, &mut r);
        let t = (trial % 7) as f64 * g.h();
        let lhs = arveson_closed_form(&model, &omega, t).unwrap().expectation(&x).unwrap();
        let rhs = omega.expectation(&heisenberg_closed_form(&model, &x, t).unwrap()).unwrap();
        assert!((lhs - rhs).norm() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn forward_shift_is_a_semigroup(seed in any::<u64>(), s in 0usize..10, t in 0usize..10) {
        let g = grid16();
        let omega = random_kernel(g, &mut rng(seed));
        let h = g.h();
        let two = shift_forward(&shift_forward(&omega, s as f64 * h).unwrap(), t as f64 * h).unwrap();
        prop_assert_eq!(two, shift_forward(&omega, (s + t) as f64 * h).unwrap());
    }

    #[test]
    fn shifts_preserve_positivity_and_lose_trace(seed in any::<u64>(), m in 1usize..12) {
        let g = grid16();
        let mut r = rng(seed);
        let rho = random_density(g, &mut r);
        let model = ShiftModel::new(random_density(g, &mut r));
        let mut last = rho.kernel().trace().re;
        for k in 1..=m {
            let t = k as f64 * g.h();
            let free = shift_forward(rho.kernel(), t).unwrap();
            prop_assert!(free.relative_min_eigenvalue().unwrap() >= -1e-8);
            prop_assert!(free.trace().re <= last + 1e-15);
            last = free.trace().re;
            let closed = arveson_closed_form(&model, rho.kernel(), t).unwrap();
            prop_assert!(closed.relative_min_eigenvalue().unwrap() >= -1e-8);
        }
    }
}
