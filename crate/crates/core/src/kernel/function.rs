use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use super::Grid;
use crate::error::{Error, Result};

/// Samples `psi(x_i)` of a wave function on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::InvalidParameter(format!(
                "function has {} samples, grid has {}",
                values.len(),
                grid.n()
            )));
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::InvalidParameter("non-finite function sample".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: vec![Complex64::new(0.0, 0.0); grid.n()] }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> Complex64) -> Self {
        Self { grid, values: grid.nodes().map(f).collect() }
    }

    pub fn from_real_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    /// Named profile normalized by quadrature.
    pub fn from_profile(grid: Grid, profile: Profile, alpha: f64) -> Result<Self> {
        Self::from_real_fn(grid, |x| profile.eval(x, alpha)).normalized()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn value(&self, i: usize) -> Complex64 {
        self.values[i]
    }

    /// Quadrature norm `sqrt(h sum |psi_i|^2)`.
    pub fn norm(&self) -> f64 {
        (self.grid.h() * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// Quadrature inner product `h sum conj(f_i) g_i`, conjugate-linear in `self`.
    pub fn inner(&self, other: &GridFunction) -> Result<Complex64> {
        self.grid.ensure_same(&other.grid)?;
        let s: Complex64 = self.values.iter().zip(&other.values).map(|(a, b)| a.conj() * b).sum();
        Ok(s * self.grid.h())
    }

    pub fn normalized(&self) -> Result<Self> {
        let norm = self.norm();
        if norm == 0.0 {
            return Err(Error::InvalidParameter("cannot normalize the zero function".into()));
        }
        Ok(self.scaled(Complex64::new(1.0 / norm, 0.0)))
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|v| v * c).collect() }
    }
}

/// Named radial profiles used for states and reset targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// `e^{-alpha x}`
    Exp,
    /// `x e^{-alpha x}`
    XExp,
    /// `x^2 e^{-alpha x}`
    X2Exp,
}

impl Profile {
    pub fn eval(self, x: f64, alpha: f64) -> f64 {
        let e = (-alpha * x).exp();
        match self {
            Profile::Exp => e,
            Profile::XExp => x * e,
            Profile::X2Exp => x * x * e,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Profile::Exp => "exp",
            Profile::XExp => "x_exp",
            Profile::X2Exp => "x2_exp",
        }
    }

    /// Whether the profile vanishes at the wall.
    pub fn vanishes_at_zero(self) -> bool {
        !matches!(self, Profile::Exp)
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exp" => Ok(Profile::Exp),
            "x_exp" => Ok(Profile::XExp),
            "x2_exp" => Ok(Profile::X2Exp),
            other => Err(Error::InvalidParameter(format!("unknown profile `{other}`"))),
        }
    }
}
