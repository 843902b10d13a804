#![allow(dead_code)]

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use semilab::{Complex64, DensityKernel, Grid, GridFunction, KernelOperator, Observable};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn random_complex(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

pub fn random_matrix(n: usize, rng: &mut impl Rng) -> Array2<Complex64> {
    Array2::from_shape_fn((n, n), |_| random_complex(rng))
}

pub fn random_kernel(grid: Grid, rng: &mut impl Rng) -> KernelOperator {
    KernelOperator::new(grid, random_matrix(grid.n(), rng)).unwrap()
}

pub fn random_hermitian(grid: Grid, rng: &mut impl Rng) -> KernelOperator {
    let k = random_kernel(grid, rng);
    k.add(&k.adjoint()).unwrap().scaled(c(0.5))
}

pub fn random_function(grid: Grid, rng: &mut impl Rng) -> GridFunction {
    GridFunction::new(grid, (0..grid.n()).map(|_| random_complex(rng)).collect()).unwrap()
}

pub fn random_observable(grid: Grid, rng: &mut impl Rng) -> Observable {
    Observable::new(grid, random_matrix(grid.n(), rng)).unwrap()
}

/// Random full-rank density built from Gram matrix plus a diagonal shift.
pub fn random_density(grid: Grid, rng: &mut impl Rng) -> DensityKernel {
    let a = random_matrix(grid.n(), rng);
    let gram = a.t().mapv(|z| z.conj()).dot(&a) + Array2::from_diag_elem(grid.n(), c(0.1));
    let k = KernelOperator::new(grid, gram).unwrap();
    let tr = k.trace().re;
    DensityKernel::new(k.scaled(c(1.0 / tr))).unwrap()
}

/// `e^{-(x+y)}` sampled on the grid.
pub fn exp_kernel(grid: Grid) -> KernelOperator {
    KernelOperator::from_fn(grid, |x, y| c((-(x + y)).exp()))
}

/// Rectangle-rule trace of `e^{-(x+y+2t)}` on `n - m` nodes.
pub fn exp_kernel_trace(grid: Grid, m: usize) -> f64 {
    let h = grid.h();
    let r = (-2.0 * h).exp();
    let len = grid.n().saturating_sub(m) as f64;
    h * (-2.0 * m as f64 * h).exp() * (1.0 - r.powf(len)) / (1.0 - r)
}

/// Log-log slope of errors against step sizes.
pub fn convergence_order(hs: &[f64], errors: &[f64]) -> f64 {
    let n = hs.len() as f64;
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Mass of `w_t = 4 w_uu` on `u > 0` with `w = 0` at `u = 0`, halved to give the
/// trace of the diagonal slice `u = 2x`. Crank-Nicolson on `[0, u_max]` after a few
/// backward Euler steps that damp the startup oscillation.
pub fn crank_nicolson_trace(w0: impl Fn(f64) -> f64, t: f64, du: f64, u_max: f64, dt: f64) -> f64 {
    let n = (u_max / du).round() as usize;
    let mut w: Vec<f64> = (1..n).map(|i| w0(i as f64 * du)).collect();
    let steps = (t / dt).round() as usize;
    let euler = 4.min(steps);
    for s in 0..steps {
        let theta = if s < euler { 1.0 } else { 0.5 };
        let r = 4.0 * dt / (du * du);
        let m = w.len();
        let rhs: Vec<f64> = (0..m)
            .map(|i| {
                let left = if i > 0 { w[i - 1] } else { 0.0 };
                let right = if i + 1 < m { w[i + 1] } else { 0.0 };
                w[i] + (1.0 - theta) * r * (left - 2.0 * w[i] + right)
            })
            .collect();
        w = thomas(-theta * r, 1.0 + 2.0 * theta * r, -theta * r, &rhs);
    }
    0.5 * du * w.iter().sum::<f64>()
}

fn thomas(a: f64, b: f64, cc: f64, d: &[f64]) -> Vec<f64> {
    let m = d.len();
    let mut cp = vec![0.0; m];
    let mut dp = vec![0.0; m];
    cp[0] = cc / b;
    dp[0] = d[0] / b;
    for i in 1..m {
        let den = b - a * cp[i - 1];
        cp[i] = cc / den;
        dp[i] = (d[i] - a * dp[i - 1]) / den;
    }
    let mut x = vec![0.0; m];
    x[m - 1] = dp[m - 1];
    for i in (0..m - 1).rev() {
        x[i] = dp[i] - cp[i] * x[i + 1];
    }
    x
}
