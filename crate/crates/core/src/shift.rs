//! Left shift `W_t psi(x) = psi(x + t)` on the half-line and its reset perturbation.
//!
//! Times are whole multiples of the grid step, so the free semigroup
//! `S_t[omega](x, y) = omega(x + t, y + t)` relocates samples exactly and all
//! discretization error sits in the generator and resolvent.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernel::{DensityKernel, Grid, KernelOperator, Observable};

/// Shift semigroup together with its reset state `Omega`.
#[derive(Debug, Clone)]
pub struct ShiftModel {
    omega: DensityKernel,
}

impl ShiftModel {
    pub fn new(omega: DensityKernel) -> Self {
        Self { omega }
    }

    pub fn grid(&self) -> &Grid {
        self.omega.grid()
    }

    pub fn omega(&self) -> &DensityKernel {
        &self.omega
    }
}

/// `k'[i][j] = k[i+m][j+m]` with `m = t/h`, zero past `x_max`.
pub fn shift_forward(omega: &KernelOperator, t: f64) -> Result<KernelOperator> {
    let m = omega.grid().steps(t)?;
    Ok(shift_steps(omega, m))
}

pub(crate) fn shift_steps(omega: &KernelOperator, m: usize) -> KernelOperator {
    let mut out = KernelOperator::zeros(*omega.grid());
    add_shifted(out.as_slice_mut(), omega, m, Complex64::new(1.0, 0.0));
    out
}

/// `target += c * shift_steps(src, m)` without allocating.
pub(crate) fn add_shifted(target: &mut [Complex64], src: &KernelOperator, m: usize, c: Complex64) {
    let n = src.grid().n();
    if m >= n {
        return;
    }
    let s = src.as_slice();
    for i in 0..n - m {
        let from = &s[(i + m) * n + m..(i + m + 1) * n];
        let to = &mut target[i * n..i * n + (n - m)];
        for (a, b) in to.iter_mut().zip(from) {
            *a += c * b;
        }
    }
}

/// `h * sum_{r<m} omega(x_r, x_r)`: trace removed by shifting `m` steps.
pub(crate) fn escaped_mass(omega: &KernelOperator, m: usize) -> Complex64 {
    let n = omega.grid().n();
    let s = omega.as_slice();
    let total: Complex64 = (0..m.min(n)).map(|r| s[r * n + r]).sum();
    total * omega.grid().h()
}

/// Heisenberg dual `W_t* X W_t`: entries move to `(i+m, j+m)`.
pub fn shift_backward_obs(x: &Observable, t: f64) -> Result<Observable> {
    let m = x.grid().steps(t)?;
    Ok(shift_obs_steps(x, m))
}

pub(crate) fn shift_obs_steps(x: &Observable, m: usize) -> Observable {
    let n = x.grid().n();
    let mut out = ndarray::Array2::zeros((n, n));
    for i in m..n {
        for j in m..n {
            out[[i, j]] = x.entry(i - m, j - m);
        }
    }
    Observable::from_raw(*x.grid(), out)
}

/// Forward-difference generator along the diagonal direction.
#[derive(Debug, Clone)]
pub struct ShiftGenerator {
    /// `(k[i+1][j+1] - k[i][j]) / h`
    pub sigma: KernelOperator,
    /// `k[0][0]`
    pub boundary_value: Complex64,
    /// `trace(sigma) + boundary_value`; vanishes exactly by telescoping.
    pub conservativity_defect: Complex64,
}

pub fn shift_generator(omega: &KernelOperator) -> ShiftGenerator {
    let n = omega.grid().n();
    let inv_h = 1.0 / omega.grid().h();
    let shifted = shift_steps(omega, 1);
    let mut sigma = KernelOperator::zeros(*omega.grid());
    {
        let (a, b) = (shifted.as_slice(), omega.as_slice());
        for (s, (x, y)) in sigma.as_slice_mut().iter_mut().zip(a.iter().zip(b)) {
            *s = (x - y) * inv_h;
        }
    }
    debug_assert_eq!(sigma.grid().n(), n);
    let boundary_value = omega.entry(0, 0);
    let conservativity_defect = sigma.trace() + boundary_value;
    ShiftGenerator { sigma, boundary_value, conservativity_defect }
}

/// Discrete Laplace transform `h sum_m e^{-lambda m h} k[i+m][j+m]`.
///
/// Evaluated by the backward recursion `R_p = h k_p + e^{-lambda h} R_{p+1}` along
/// each diagonal, which sums every sample up to the end of the grid.
pub fn shift_resolvent(omega: &KernelOperator, lambda: f64) -> Result<KernelOperator> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("resolvent needs lambda > 0, got {lambda}")));
    }
    let grid = *omega.grid();
    let (n, h) = (grid.n(), grid.h());
    let decay = (-lambda * h).exp();
    let src = omega.as_slice();
    let mut out = KernelOperator::zeros(grid);
    let dst = out.as_slice_mut();
    for offset in -(n as isize - 1)..(n as isize) {
        let (i0, j0) = if offset >= 0 { (offset as usize, 0) } else { (0, (-offset) as usize) };
        let len = n - i0.max(j0);
        let mut acc = Complex64::new(0.0, 0.0);
        for p in (0..len).rev() {
            let idx = (i0 + p) * n + j0 + p;
            acc = src[idx] * h + acc * decay;
            dst[idx] = acc;
        }
    }
    Ok(out)
}

/// `S_t[omega] + Omega * (trace(omega) - trace(S_t[omega]))`.
pub fn arveson_closed_form(model: &ShiftModel, omega: &KernelOperator, t: f64) -> Result<KernelOperator> {
    model.grid().ensure_same(omega.grid())?;
    let m = omega.grid().steps(t)?;
    let mut out = shift_steps(omega, m);
    let deficit = omega.trace() - out.trace();
    out.axpy(deficit, model.omega.kernel())?;
    Ok(out)
}

/// `W_t* X W_t + (I - W_t* W_t) Tr(Omega X)`; unital exactly.
pub fn heisenberg_closed_form(model: &ShiftModel, x: &Observable, t: f64) -> Result<Observable> {
    model.grid().ensure_same(x.grid())?;
    let m = x.grid().steps(t)?;
    let expect = model.omega.kernel().expectation(x)?;
    let mut out = shift_obs_steps(x, m).m().clone();
    for i in 0..m.min(x.grid().n()) {
        out[[i, i]] += expect;
    }
    Ok(Observable::from_raw(*x.grid(), out))
}
