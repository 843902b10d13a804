mod common;

use common::*;
use semilab::diffusion::*;
use semilab::probes::random_domain_kernel;
use semilab::*;

fn grid(h: f64, x_max: f64) -> Grid {
    Grid::with_extent(h, x_max).unwrap()
}

fn two_x_exp(g: Grid) -> GridFunction {
    GridFunction::from_real_fn(g, |x| 2.0 * x * (-x).exp())
}

fn pure(psi: &GridFunction) -> KernelOperator {
    KernelOperator::outer(psi, psi).unwrap()
}

#[test]
fn rotated_coordinates_round_trip() {
    let g = grid(0.25, 4.0);
    let rc = RotatedCoords::new(g);
    for i in 0..g.n() {
        for j in 0..g.n() {
            let (x, y) = (g.node(i), g.node(j));
            let (u, v) = RotatedCoords::to_uv(x, y);
            assert!(RotatedCoords::in_quadrant(u, v));
            let (x2, y2) = RotatedCoords::from_uv(u, v);
            assert!((x - x2).abs() < 1e-15 && (y - y2).abs() < 1e-15);
            let (offset, pos) = rc.line_of(i, j);
            assert_eq!(rc.node_of(offset, pos), Some((i, j)));
            assert!(pos < rc.line_len(offset));
        }
    }
    assert!(!RotatedCoords::in_quadrant(1.0, 2.0));
}

#[test]
fn propagator_rejects_nonpositive_time() {
    let omega = pure(&two_x_exp(grid(0.125, 4.0)));
    assert!(diffusion_propagate(&omega, 0.0).is_err());
    assert!(diffusion_propagate(&omega, -1.0).is_err());
}

#[test]
fn propagator_is_close_to_identity_at_small_time() {
    let g = grid(1.0 / 64.0, 10.0);
    let omega = DensityKernel::from_profile(g, Profile::XExp, 1.0).unwrap();
    let out = diffusion_propagate(omega.kernel(), g.h() * g.h()).unwrap();
    let dist = out.trace_distance(omega.kernel()).unwrap();
    assert!(dist <= 0.05 * omega.trace_norm(), "{dist}");
}

#[test]
fn propagated_kernels_vanish_on_the_wall() {
    let g = grid(1.0 / 64.0, 12.0);
    let omega = pure(&two_x_exp(g));
    let bound = 1e-6 * omega.max_abs();
    for t in [0.1, 0.5, 1.0] {
        let out = diffusion_propagate(&omega, t).unwrap();
        for j in 0..g.n() {
            assert!(out.entry(0, j).norm() <= bound);
            assert!(out.entry(j, 0).norm() <= bound);
        }
    }
}

#[test]
fn diagonal_trace_matches_crank_nicolson() {
    let g = grid(1.0 / 64.0, 12.0);
    let omega = pure(&two_x_exp(g));
    for t in [0.1, 0.5, 1.0] {
        let diag = diffusion_propagate_diagonal(&omega, t).unwrap();
        let tr = g.h() * diag.iter().map(|z| z.re).sum::<f64>();
        let oracle = crank_nicolson_trace(|u| u * u * (-u).exp(), t, 1.0 / 256.0, 24.0, 1.0 / 2048.0);
        assert!((tr - oracle).abs() < 1e-3, "t={t}: {tr} vs {oracle}");
    }
}

#[test]
fn diagonal_only_propagation_matches_full() {
    let g = grid(1.0 / 32.0, 8.0);
    let omega = DensityKernel::from_profile(g, Profile::X2Exp, 1.0).unwrap();
    let full = diffusion_propagate(omega.kernel(), 0.3).unwrap();
    let diag = diffusion_propagate_diagonal(omega.kernel(), 0.3).unwrap();
    for (i, d) in diag.iter().enumerate() {
        assert!((full.entry(i, i) - d).norm() < 1e-15);
    }
}

#[test]
fn propagation_is_a_semigroup() {
    let g = grid(1.0 / 32.0, 16.0);
    let omega = DensityKernel::from_profile(g, Profile::X2Exp, 1.0).unwrap();
    for s in [0.25, 0.5] {
        for t in [0.25, 0.5] {
            let two = diffusion_propagate(&diffusion_propagate(omega.kernel(), s).unwrap(), t).unwrap();
            let one = diffusion_propagate(omega.kernel(), s + t).unwrap();
            assert!(two.trace_distance(&one).unwrap() <= 1e-4);
        }
    }
}

#[test]
fn propagation_preserves_positivity() {
    let g = grid(1.0 / 32.0, 8.0);
    let mut r = rng(11);
    for _ in 0..3 {
        let omega = random_domain_kernel(g, &mut r).unwrap();
        for t in [0.05, 0.5, 2.0] {
            let out = diffusion_propagate(omega.kernel(), t).unwrap();
            assert!(out.relative_min_eigenvalue().unwrap() >= -1e-8);
        }
    }
}

#[test]
fn dual_propagation_is_the_adjoint() {
    let g = grid(0.25, 4.0);
    let mut r = rng(12);
    for t in [0.1, 0.7] {
        let omega = random_kernel(g, &mut r);
        let x = random_observable(g, &mut r);
        let lhs = diffusion_propagate(&omega, t).unwrap().expectation(&x).unwrap();
        let rhs = omega.expectation(&diffusion_propagate_dual(&x, t).unwrap()).unwrap();
        assert!((lhs - rhs).norm() < 1e-12);
    }
}

#[test]
fn generator_matches_product_rule_at_second_order() {
    let hs = [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0];
    let rate = Complex64::new(-1.0, 0.5);
    let phi_fn = |x: f64| x * (rate * x).exp();
    let dphi = |x: f64| (1.0 + rate * x) * (rate * x).exp();
    let ddphi = |x: f64| (2.0 * rate + rate * rate * x) * (rate * x).exp();
    let psi_fn = |x: f64| x * (-x).exp();
    let dpsi = |x: f64| (1.0 - x) * (-x).exp();
    let ddpsi = |x: f64| (x - 2.0) * (-x).exp();
    let mut errors = vec![];
    for &h in &hs {
        let g = grid(h, 6.0);
        let psi = GridFunction::from_real_fn(g, psi_fn);
        let phi = GridFunction::from_fn(g, phi_fn);
        let out = diffusion_generator(&KernelOperator::outer(&psi, &phi).unwrap());
        let mut err: f64 = 0.0;
        for i in 0..g.n() - 4 {
            for j in 0..g.n() - 4 {
                let (x, y) = (g.node(i), g.node(j));
                let exact = dpsi(x) * dphi(y).conj() * 2.0 + ddpsi(x) * phi_fn(y).conj() + psi_fn(x) * ddphi(y).conj();
                err = err.max((out.entry(i, j) - exact).norm());
            }
        }
        errors.push(err);
    }
    assert!(convergence_order(&hs, &errors) > 1.8, "{errors:?}");
}

#[test]
fn generator_vanishes_on_diagonal_bands_and_is_linear() {
    let g = grid(0.125, 3.0);
    let band = KernelOperator::from_fn(g, |x, y| Complex64::new((x - y).cos(), (x - y).powi(3)));
    let out = diffusion_generator(&band);
    for i in 0..g.n() - 4 {
        for j in 0..g.n() - 4 {
            assert!(out.entry(i, j).norm() < 1e-9, "{:?}", out.entry(i, j));
        }
    }
    let mut r = rng(13);
    let (a, b) = (random_kernel(g, &mut r), random_kernel(g, &mut r));
    let (p, q) = (random_complex(&mut r), random_complex(&mut r));
    let lhs = diffusion_generator(&a.scaled(p).add(&b.scaled(q)).unwrap());
    let rhs = diffusion_generator(&a).scaled(p).add(&diffusion_generator(&b).scaled(q)).unwrap();
    assert!(lhs.sub(&rhs).unwrap().max_abs() < 1e-10 * lhs.max_abs());
}

#[test]
fn generator_is_the_derivative_of_the_propagator() {
    let hs = [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0];
    let mut errors = vec![];
    for &h in &hs {
        let g = grid(h, 8.0);
        let omega = pure(&GridFunction::from_real_fn(g, |x| x * (-x * x).exp()));
        let dt = h * h;
        let quotient = diffusion_propagate(&omega, dt).unwrap().sub(&omega).unwrap().scaled(c(1.0 / dt));
        errors.push(quotient.sub(&diffusion_generator(&omega)).unwrap().trace_norm().unwrap());
    }
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
    assert!(convergence_order(&hs, &errors) > 0.4, "{errors:?}");
}

#[test]
fn flux_oracles() {
    let hs = [1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0];
    let mut exp_errors = vec![];
    let mut vanishing = vec![];
    for &h in &hs {
        let g = grid(h, 8.0);
        exp_errors.push((boundary_flux(&exp_kernel(g)).re + 2.0).abs());
        vanishing.push(boundary_flux(&pure(&two_x_exp(g))).norm());
    }
    assert!(exp_errors[1] < 5e-3);
    assert!(convergence_order(&hs, &exp_errors) > 1.9);
    assert!(convergence_order(&hs, &vanishing) > 1.9);
    let g = grid(1.0 / 64.0, 8.0);
    let first = boundary_flux_with(&exp_kernel(g), FluxStencil::FirstOrder).re;
    assert!((first - ((-2.0 * g.h()).exp() - 1.0) / g.h()).abs() < 1e-12);
}

#[test]
fn flux_of_propagated_state_is_positive() {
    let g = grid(1.0 / 64.0, 10.0);
    let omega = pure(&two_x_exp(g));
    assert!(boundary_flux(&omega).re.abs() < 16.0 * g.h() * g.h());
    for t in [0.05, 0.2, 1.0] {
        assert!(boundary_flux(&diffusion_propagate(&omega, t).unwrap()).re > 0.0);
    }
}

#[test]
fn flux_is_nonnegative_on_random_domain_kernels() {
    let g = grid(1.0 / 64.0, 8.0);
    let mut r = rng(14);
    for _ in 0..50 {
        let omega = random_domain_kernel(g, &mut r).unwrap();
        assert!(omega.kernel().entry(0, 0).norm() == 0.0);
        assert!(boundary_flux(omega.kernel()).re >= -1e-6);
    }
}

#[test]
fn mass_balance_matches_integrated_flux() {
    let g = grid(1.0 / 64.0, 10.0);
    let omega = DensityKernel::from_profile(g, Profile::X2Exp, 1.0).unwrap();
    let dt = 1.0 / 64.0;
    let mut integral = 0.0;
    let mut last = boundary_flux(omega.kernel()).re;
    for k in 1..=64 {
        let diag = diffusion_propagate_diagonal(omega.kernel(), k as f64 * dt).unwrap();
        let flux = (-3.0 * diag[0].re + 4.0 * diag[1].re - diag[2].re) / (2.0 * g.h());
        integral += 0.5 * dt * (last + flux);
        last = flux;
        if k % 16 == 0 {
            let deficit = 1.0 - g.h() * diag.iter().map(|z| z.re).sum::<f64>();
            assert!((deficit - integral).abs() <= 2e-3, "t={}: {deficit} vs {integral}", k as f64 * dt);
        }
    }
}

#[test]
fn mme_residual_converges() {
    let steps = [(1.0 / 16.0, 0.05), (1.0 / 32.0, 0.025), (1.0 / 64.0, 0.0125)];
    let mut residuals = vec![];
    for &(h, dt) in &steps {
        let g = grid(h, 8.0);
        let omega = pure(&GridFunction::from_real_fn(g, |x| x * (-x * x).exp()));
        let f = GridFunction::from_real_fn(g, |x| x * (-x).exp());
        let gg = GridFunction::from_real_fn(g, |x| x * x * (-x).exp());
        let res = mme_residual(&omega, &f, &gg, 0.5, dt).unwrap();
        assert!(res <= 0.01 * (h + dt * dt), "h={h}: {res}");
        residuals.push(res);
    }
    let hs: Vec<f64> = steps.iter().map(|s| s.0).collect();
    assert!(convergence_order(&hs, &residuals) > 0.9, "{residuals:?}");
}

#[test]
fn mme_residual_symmetries_and_contract() {
    let g = grid(1.0 / 16.0, 6.0);
    let f = GridFunction::from_real_fn(g, |x| x * (-x).exp());
    let gg = GridFunction::from_fn(g, |x| x * Complex64::new(-1.0, 1.0).scale(x).exp());
    assert_eq!(mme_residual(&KernelOperator::zeros(g), &f, &gg, 0.5, 0.1).unwrap(), 0.0);
    let omega = random_domain_kernel(g, &mut rng(15)).unwrap();
    let skew = omega.kernel().add(&KernelOperator::outer(&gg, &f).unwrap()).unwrap();
    let a = mme_residual(&skew, &f, &gg, 0.5, 0.1).unwrap();
    let b = mme_residual(&skew.adjoint(), &gg, &f, 0.5, 0.1).unwrap();
    assert!((a - b).abs() <= 1e-12 * a.max(1e-300));
    let bad = GridFunction::from_real_fn(g, |x| (-x).exp());
    assert!(matches!(mme_residual(omega.kernel(), &bad, &f, 0.5, 0.1), Err(Error::BoundaryNonzero(_))));
}
