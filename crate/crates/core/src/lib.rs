//! Numerical laboratory for two quantum dynamical semigroups on the half-line:
//! the left shift with reset and the absorbing-wall diffusion with rebound.
//!
//! States are trace-class kernels sampled on a uniform grid over `[0, x_max]`.
//! The free semigroups lose trace through the boundary; [`engine`] restores it
//! with a rank-one perturbation by Picard iteration of the Duhamel equation, and
//! [`probes`] checks the structural consequences numerically.

pub mod diffusion;
pub mod engine;
pub mod error;
pub mod kernel;
pub mod probes;
pub mod shift;
pub mod tolerances;

pub use diffusion::{DiffusionModel, FluxStencil, RotatedCoords};
pub use engine::{DuhamelConfig, DuhamelSolution, LatticePoint, ModelSpec};
pub use error::{Error, Result};
pub use kernel::{DensityKernel, GeneratorData, Grid, GridFunction, KernelOperator, Observable, Profile, Spectrum};
pub use ndarray::Array2;
pub use num_complex::Complex64;
pub use shift::ShiftModel;
