use ndarray::Array2;
use num_complex::Complex64;

use super::spectrum::{self, Spectrum};
use super::{Grid, GridFunction, Observable};
use crate::error::{Error, Result};

/// Samples `k[i][j] = omega(x_i, x_j)` of a trace-class operator kernel.
///
/// The operator acting on sample vectors is `h * k`, so the quadrature trace is
/// `h * sum_i k[i][i]` and the conjugate transpose is the adjoint.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelOperator {
    grid: Grid,
    k: Array2<Complex64>,
}

impl KernelOperator {
    pub fn new(grid: Grid, k: Array2<Complex64>) -> Result<Self> {
        let n = grid.n();
        if k.dim() != (n, n) {
            return Err(Error::InvalidParameter(format!("kernel shape {:?} does not match grid n={n}", k.dim())));
        }
        if k.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::InvalidParameter("non-finite kernel entry".into()));
        }
        let k = if k.is_standard_layout() { k } else { k.as_standard_layout().into_owned() };
        Ok(Self { grid, k })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, k: Array2::zeros((grid.n(), grid.n())) }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let k = Array2::from_shape_fn((grid.n(), grid.n()), |(i, j)| f(grid.node(i), grid.node(j)));
        Self { grid, k }
    }

    /// Rank-one kernel `psi(x) conj(phi(y))`, i.e. the operator `|psi><phi|`.
    pub fn outer(psi: &GridFunction, phi: &GridFunction) -> Result<Self> {
        psi.grid().ensure_same(phi.grid())?;
        let (a, b) = (psi.values(), phi.values());
        let k = Array2::from_shape_fn((a.len(), a.len()), |(i, j)| a[i] * b[j].conj());
        Ok(Self { grid: *psi.grid(), k })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn k(&self) -> &Array2<Complex64> {
        &self.k
    }

    pub fn into_matrix(self) -> Array2<Complex64> {
        self.k
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.k[[i, j]]
    }

    pub(crate) fn as_slice(&self) -> &[Complex64] {
        self.k.as_slice().expect("standard layout")
    }

    pub(crate) fn as_slice_mut(&mut self) -> &mut [Complex64] {
        self.k.as_slice_mut().expect("standard layout")
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        self.k.diag().to_vec()
    }

    pub fn adjoint(&self) -> Self {
        let k = self.k.t().mapv(|v| v.conj()).as_standard_layout().into_owned();
        Self { grid: self.grid, k }
    }

    pub fn trace(&self) -> Complex64 {
        self.k.diag().sum() * self.grid.h()
    }

    pub fn pairing(&self, f: &GridFunction, g: &GridFunction) -> Result<Complex64> {
        self.grid.ensure_same(f.grid())?;
        self.grid.ensure_same(g.grid())?;
        let n = self.grid.n();
        let k = self.as_slice();
        let (fv, gv) = (f.values(), g.values());
        let mut total = Complex64::new(0.0, 0.0);
        for i in 0..n {
            let row = &k[i * n..(i + 1) * n];
            let kg: Complex64 = row.iter().zip(gv).map(|(a, b)| a * b).sum();
            total += fv[i].conj() * kg;
        }
        let h = self.grid.h();
        Ok(total * h * h)
    }

    /// `Tr(omega X)` for the operator `h k` and the matrix of `X`.
    pub fn expectation(&self, x: &Observable) -> Result<Complex64> {
        self.grid.ensure_same(x.grid())?;
        let n = self.grid.n();
        let k = self.as_slice();
        let m = x.as_slice();
        let mut total = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                total += k[i * n + j] * m[j * n + i];
            }
        }
        Ok(total * self.grid.h())
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self { grid: self.grid, k: self.k.mapv(|v| v * c) }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Self { grid: self.grid, k: &self.k + &other.k })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Self { grid: self.grid, k: &self.k - &other.k })
    }

    /// `self += c * other`
    pub fn axpy(&mut self, c: Complex64, other: &Self) -> Result<()> {
        self.grid.ensure_same(&other.grid)?;
        self.k.scaled_add(c, &other.k);
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.k.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// `max |k_ij - conj(k_ji)|`
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.grid.n();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.k[[i, j]] - self.k[[j, i]].conj()).norm());
            }
        }
        worst
    }

    /// Hilbert-Schmidt norm of the operator `h k`.
    pub fn hs_norm(&self) -> f64 {
        self.grid.h() * self.k.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn spectrum(&self) -> Result<Spectrum> {
        spectrum::hermitian_spectrum(self)
    }

    pub fn trace_norm(&self) -> Result<f64> {
        Ok(self.spectrum()?.trace_norm())
    }

    /// Trace norm of `self - other` for two Hermitian kernels. Hermiticity is
    /// judged against the inputs, so rounding in nearly equal kernels is accepted.
    pub fn trace_distance(&self, other: &Self) -> Result<f64> {
        let diff = self.sub(other)?;
        let defect = diff.hermitian_defect();
        let tolerance = crate::tolerances::tol_herm(self.max_abs().max(other.max_abs()));
        if defect > tolerance {
            return Err(Error::NotHermitian { asymmetry: defect, tolerance });
        }
        let h = self.grid.h();
        Ok(spectrum::hermitian_matrix_spectrum(&diff.k.mapv(|v| v * h)).trace_norm())
    }

    /// Smallest eigenvalue relative to the trace norm (0 for the zero kernel).
    pub fn relative_min_eigenvalue(&self) -> Result<f64> {
        let s = self.spectrum()?;
        if s.trace_norm() == 0.0 {
            return Ok(0.0);
        }
        Ok(s.min() / s.trace_norm())
    }
}

/// Quadrature trace `h * sum_i omega(x_i, x_i)`.
pub fn trace(omega: &KernelOperator) -> Complex64 {
    omega.trace()
}

/// Quadrature pairing `h^2 * sum_ij conj(f_i) omega(x_i, x_j) g_j`.
pub fn pairing(f: &GridFunction, omega: &KernelOperator, g: &GridFunction) -> Result<Complex64> {
    omega.pairing(f, g)
}
