use num_complex::Complex64;

use super::{Grid, GridFunction, KernelOperator, Profile, Spectrum};
use crate::error::{Error, Result};
use crate::tolerances::{tol_psd, TOL_TR};

/// Hermitian, positive semidefinite, unit-trace kernel with cached spectrum.
#[derive(Debug, Clone)]
pub struct DensityKernel {
    kernel: KernelOperator,
    spectrum: Spectrum,
}

impl DensityKernel {
    pub fn new(kernel: KernelOperator) -> Result<Self> {
        let spectrum = kernel.spectrum()?;
        if spectrum.min() < -tol_psd(spectrum.trace_norm()) {
            return Err(Error::NotDensity(format!("min eigenvalue {:e} below tolerance", spectrum.min())));
        }
        let tr = kernel.trace();
        if (tr - Complex64::new(1.0, 0.0)).norm() > TOL_TR {
            return Err(Error::NotDensity(format!("trace {tr} is not 1")));
        }
        Ok(Self { kernel, spectrum })
    }

    /// Pure state `|psi><psi| / ||psi||^2`.
    pub fn pure(psi: &GridFunction) -> Result<Self> {
        let psi = psi.normalized()?;
        Self::new(KernelOperator::outer(&psi, &psi)?)
    }

    pub fn from_profile(grid: Grid, profile: Profile, alpha: f64) -> Result<Self> {
        Self::pure(&GridFunction::from_profile(grid, profile, alpha)?)
    }

    /// Convex combination of pure states; weights are renormalized to sum to 1.
    pub fn mixture(parts: &[(f64, GridFunction)]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::InvalidParameter("empty mixture".into()))?;
        let total: f64 = parts.iter().map(|(w, _)| *w).sum();
        if parts.iter().any(|(w, _)| w.is_nan() || *w < 0.0) || total <= 0.0 {
            return Err(Error::InvalidParameter("mixture weights must be nonnegative".into()));
        }
        let mut k = KernelOperator::zeros(*first.1.grid());
        for (w, psi) in parts {
            let psi = psi.normalized()?;
            k.axpy(Complex64::new(w / total, 0.0), &KernelOperator::outer(&psi, &psi)?)?;
        }
        Self::new(k)
    }

    /// Diagonal density with operator eigenvalues proportional to `weight(x_i)`.
    pub fn diagonal(grid: Grid, weight: impl Fn(f64) -> f64) -> Result<Self> {
        let w: Vec<f64> = grid.nodes().map(weight).collect();
        let total: f64 = w.iter().sum();
        if w.iter().any(|v| v.is_nan() || *v < 0.0) || total <= 0.0 {
            return Err(Error::InvalidParameter("diagonal weights must be nonnegative".into()));
        }
        let mut k = KernelOperator::zeros(grid);
        for (i, wi) in w.iter().enumerate() {
            k.as_slice_mut()[i * grid.n() + i] = Complex64::new(wi / total / grid.h(), 0.0);
        }
        Self::new(k)
    }

    pub fn kernel(&self) -> &KernelOperator {
        &self.kernel
    }

    pub fn grid(&self) -> &Grid {
        self.kernel.grid()
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn trace_norm(&self) -> f64 {
        self.spectrum.trace_norm()
    }
}

impl AsRef<KernelOperator> for DensityKernel {
    fn as_ref(&self) -> &KernelOperator {
        &self.kernel
    }
}
