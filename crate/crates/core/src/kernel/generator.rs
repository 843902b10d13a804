use ndarray::{Array1, Array2};
use num_complex::Complex64;

use super::{Grid, GridFunction};
use crate::error::{Error, Result};

/// Discretized `K` and `L_j` of a GKLS-type generator.
#[derive(Debug, Clone)]
pub struct GeneratorData {
    grid: Grid,
    k: Array2<Complex64>,
    ls: Vec<Array2<Complex64>>,
}

impl GeneratorData {
    pub fn new(grid: Grid, k: Array2<Complex64>, ls: Vec<Array2<Complex64>>) -> Result<Self> {
        let n = grid.n();
        if k.dim() != (n, n) || ls.iter().any(|l| l.dim() != (n, n)) {
            return Err(Error::InvalidParameter("generator matrices must be n x n".into()));
        }
        Ok(Self { grid, k, ls })
    }

    /// Shift with reset: `K = (I - W)/h` (upwind `-d/dx`), `L_j psi = l_j psi(0)`.
    pub fn shift_reset(grid: Grid, ls: &[GridFunction]) -> Result<Self> {
        let n = grid.n();
        let inv_h = 1.0 / grid.h();
        let mut k = Array2::zeros((n, n));
        for i in 0..n {
            k[[i, i]] = Complex64::new(inv_h, 0.0);
            if i + 1 < n {
                k[[i, i + 1]] = Complex64::new(-inv_h, 0.0);
            }
        }
        let mut mats = Vec::with_capacity(ls.len());
        for l in ls {
            grid.ensure_same(l.grid())?;
            let mut m = Array2::zeros((n, n));
            for i in 0..n {
                m[[i, 0]] = l.value(i);
            }
            mats.push(m);
        }
        Self::new(grid, k, mats)
    }

    /// Diffusion: `K = -D^2` with zero ghosts at both ends, `L = sqrt(2) D_+`.
    pub fn diffusion(grid: Grid) -> Result<Self> {
        let n = grid.n();
        let inv_h = 1.0 / grid.h();
        let inv_h2 = inv_h * inv_h;
        let mut k = Array2::zeros((n, n));
        let mut l = Array2::zeros((n, n));
        let root2 = std::f64::consts::SQRT_2;
        for i in 0..n {
            k[[i, i]] = Complex64::new(2.0 * inv_h2, 0.0);
            l[[i, i]] = Complex64::new(-root2 * inv_h, 0.0);
            if i + 1 < n {
                k[[i, i + 1]] = Complex64::new(-inv_h2, 0.0);
                k[[i + 1, i]] = Complex64::new(-inv_h2, 0.0);
                l[[i, i + 1]] = Complex64::new(root2 * inv_h, 0.0);
            }
        }
        Self::new(grid, k, vec![l])
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn k(&self) -> &Array2<Complex64> {
        &self.k
    }

    pub fn ls(&self) -> &[Array2<Complex64>] {
        &self.ls
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DissipativityReport {
    /// `sum_j ||L_j psi||^2`
    pub lhs: f64,
    /// `2 Re <psi|K psi>`
    pub rhs: f64,
    /// `rhs - lhs`
    pub conservative_gap: f64,
    pub dissipative: bool,
}

pub fn dissipativity_check(gen: &GeneratorData, psi: &GridFunction) -> Result<DissipativityReport> {
    gen.grid.ensure_same(psi.grid())?;
    let h = gen.grid.h();
    let v = Array1::from(psi.values().to_vec());
    let norm_sqr = |w: &Array1<Complex64>| h * w.iter().map(|c| c.norm_sqr()).sum::<f64>();
    let lhs: f64 = gen.ls.iter().map(|l| norm_sqr(&l.dot(&v))).sum();
    let kv = gen.k.dot(&v);
    let rhs = 2.0 * h * v.iter().zip(kv.iter()).map(|(a, b)| (a.conj() * b).re).sum::<f64>();
    let gap = rhs - lhs;
    let tol = 1e-10 * (lhs.abs() + rhs.abs()) + 1e-14;
    Ok(DissipativityReport { lhs, rhs, conservative_gap: gap, dissipative: gap >= -tol })
}
