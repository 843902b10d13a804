use ndarray::Array2;
use num_complex::Complex64;

use super::spectrum::hermitian_matrix_spectrum;
use super::{Grid, GridFunction, KernelOperator};
use crate::error::{Error, Result};

/// Bounded operator in the Heisenberg picture, as a matrix acting on sample vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    grid: Grid,
    m: Array2<Complex64>,
}

impl Observable {
    pub fn new(grid: Grid, m: Array2<Complex64>) -> Result<Self> {
        let n = grid.n();
        if m.dim() != (n, n) {
            return Err(Error::InvalidParameter(format!("observable shape {:?} does not match grid n={n}", m.dim())));
        }
        if m.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::InvalidParameter("non-finite observable entry".into()));
        }
        let m = if m.is_standard_layout() { m } else { m.as_standard_layout().into_owned() };
        Ok(Self { grid, m })
    }

    pub(crate) fn from_raw(grid: Grid, m: Array2<Complex64>) -> Self {
        debug_assert!(m.is_standard_layout());
        Self { grid, m }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, m: Array2::zeros((grid.n(), grid.n())) }
    }

    pub fn identity(grid: Grid) -> Self {
        Self::scalar(grid, Complex64::new(1.0, 0.0))
    }

    pub fn scalar(grid: Grid, c: Complex64) -> Self {
        let mut m = Array2::zeros((grid.n(), grid.n()));
        m.diag_mut().fill(c);
        Self { grid, m }
    }

    /// Multiplication operator by `f(x)`.
    pub fn diagonal(grid: Grid, f: impl Fn(f64) -> Complex64) -> Self {
        let mut m = Array2::zeros((grid.n(), grid.n()));
        for (i, d) in m.diag_mut().iter_mut().enumerate() {
            *d = f(grid.node(i));
        }
        Self { grid, m }
    }

    /// Projector-like rank-one operator `|psi><phi|` on the quadrature Hilbert space.
    pub fn rank_one(psi: &GridFunction, phi: &GridFunction) -> Result<Self> {
        psi.grid().ensure_same(phi.grid())?;
        let h = psi.grid().h();
        let (a, b) = (psi.values(), phi.values());
        let m = Array2::from_shape_fn((a.len(), a.len()), |(i, j)| a[i] * b[j].conj() * h);
        Ok(Self { grid: *psi.grid(), m })
    }

    /// The operator `h k` of a kernel, viewed as an observable.
    pub fn from_kernel(omega: &KernelOperator) -> Self {
        Self { grid: *omega.grid(), m: omega.k().mapv(|v| v * omega.grid().h()) }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn m(&self) -> &Array2<Complex64> {
        &self.m
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.m[[i, j]]
    }

    pub(crate) fn as_slice(&self) -> &[Complex64] {
        self.m.as_slice().expect("standard layout")
    }

    pub fn adjoint(&self) -> Self {
        let m = self.m.t().mapv(|v| v.conj()).as_standard_layout().into_owned();
        Self { grid: self.grid, m }
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Self { grid: self.grid, m: self.m.dot(&other.m) })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Self { grid: self.grid, m: &self.m + &other.m })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Self { grid: self.grid, m: &self.m - &other.m })
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self { grid: self.grid, m: self.m.mapv(|v| v * c) }
    }

    pub fn apply(&self, psi: &GridFunction) -> Result<GridFunction> {
        self.grid.ensure_same(psi.grid())?;
        let v = ndarray::Array1::from(psi.values().to_vec());
        GridFunction::new(self.grid, self.m.dot(&v).to_vec())
    }

    pub fn max_abs(&self) -> f64 {
        self.m.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn is_diagonal(&self) -> bool {
        self.m.indexed_iter().all(|((i, j), v)| i == j || *v == Complex64::new(0.0, 0.0))
    }

    /// Largest singular value, from the spectrum of `X* X`.
    pub fn op_norm(&self) -> f64 {
        if self.is_diagonal() {
            return self.m.diag().iter().fold(0.0, |m, v| m.max(v.norm()));
        }
        let gram = self.m.t().mapv(|v| v.conj()).dot(&self.m);
        hermitian_matrix_spectrum(&gram).max().max(0.0).sqrt()
    }
}
