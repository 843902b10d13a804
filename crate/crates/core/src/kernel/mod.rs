//! Grid kernels: sampling, quadrature, spectra and generator checks.

mod density;
mod function;
mod generator;
mod grid;
mod observable;
mod operator;
pub mod snapshot;
pub mod spectrum;

pub use density::DensityKernel;
pub use function::{GridFunction, Profile};
pub use generator::{dissipativity_check, DissipativityReport, GeneratorData};
pub use grid::Grid;
pub use observable::Observable;
pub use operator::{pairing, trace, KernelOperator};
pub use spectrum::{hermitian_spectrum, Spectrum};
