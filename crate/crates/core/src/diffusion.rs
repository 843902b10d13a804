//! Diffusion on the quadrant with an absorbing wall, and the boundary flux.
//!
//! In rotated coordinates `u = x + y`, `v = x - y` the free evolution is the heat
//! equation `d/dt = 4 d^2/du^2` on each diagonal line `v = const`, killed where
//! the line meets the wall. Every diagonal line starts on the boundary, so along
//! a line the propagator is the 1-D Dirichlet heat kernel built by reflection.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernel::{DensityKernel, Grid, GridFunction, KernelOperator, Observable};

/// One-sided stencil for `d/dx omega(x, x)` at the wall.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FluxStencil {
    /// `(-3 k00 + 4 k11 - k22) / (2h)`
    #[default]
    SecondOrder,
    /// `(k11 - k00) / h`
    FirstOrder,
}

/// Absorbing-wall diffusion together with its rebound state `Omega`.
#[derive(Debug, Clone)]
pub struct DiffusionModel {
    omega: DensityKernel,
    stencil: FluxStencil,
}

impl DiffusionModel {
    pub fn new(omega: DensityKernel) -> Self {
        Self { omega, stencil: FluxStencil::SecondOrder }
    }

    pub fn with_flux_stencil(mut self, stencil: FluxStencil) -> Self {
        self.stencil = stencil;
        self
    }

    pub fn grid(&self) -> &Grid {
        self.omega.grid()
    }

    pub fn omega(&self) -> &DensityKernel {
        &self.omega
    }

    pub fn flux_stencil(&self) -> FluxStencil {
        self.stencil
    }

    pub fn flux(&self, omega: &KernelOperator) -> Complex64 {
        boundary_flux_with(omega, self.stencil)
    }
}

/// Change of variables `(u, v) = (x + y, x - y)`; the first quadrant maps to `u >= |v|`.
///
/// On grid indices, `v` labels a diagonal line by its offset `i - j` and the
/// position along the line is `min(i, j)`, the distance (in steps) from the wall.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotatedCoords {
    grid: Grid,
}

impl RotatedCoords {
    pub fn new(grid: Grid) -> Self {
        Self { grid }
    }

    pub fn to_uv(x: f64, y: f64) -> (f64, f64) {
        (x + y, x - y)
    }

    pub fn from_uv(u: f64, v: f64) -> (f64, f64) {
        (0.5 * (u + v), 0.5 * (u - v))
    }

    pub fn in_quadrant(u: f64, v: f64) -> bool {
        u >= v.abs()
    }

    /// `(offset, position)` of node `(i, j)`.
    pub fn line_of(&self, i: usize, j: usize) -> (isize, usize) {
        (i as isize - j as isize, i.min(j))
    }

    /// Node `(i, j)` at `position` on the line with `offset`, if inside the grid.
    pub fn node_of(&self, offset: isize, position: usize) -> Option<(usize, usize)> {
        let (i0, j0) = Self::line_start(offset);
        let (i, j) = (i0 + position, j0 + position);
        (i < self.grid.n() && j < self.grid.n()).then_some((i, j))
    }

    /// Number of grid nodes on the line with `offset`.
    pub fn line_len(&self, offset: isize) -> usize {
        self.grid.n().saturating_sub(offset.unsigned_abs())
    }

    fn line_start(offset: isize) -> (usize, usize) {
        if offset >= 0 {
            (offset as usize, 0)
        } else {
            (0, offset.unsigned_abs())
        }
    }

    fn offsets(&self) -> impl Iterator<Item = isize> {
        let n = self.grid.n() as isize;
        -(n - 1)..n
    }
}

/// Dirichlet heat matrix on one diagonal line:
/// `H[p][k] = h (G((p-k)h) - G((p+k)h))`, `G(z) = exp(-z^2/4t) / (2 sqrt(pi t))`.
/// Symmetric, banded at `|p-k| h <= 8 sqrt(4t)`.
struct LinePropagator {
    n: usize,
    band: usize,
    mat: Vec<f64>,
}

impl LinePropagator {
    fn new(grid: &Grid, t: f64) -> Self {
        let (n, h) = (grid.n(), grid.h());
        let cutoff = 8.0 * (4.0 * t).sqrt();
        let band = ((cutoff / h).floor() as usize).min(n - 1);
        let norm = 1.0 / (2.0 * (std::f64::consts::PI * t).sqrt());
        let gauss = |steps: usize| {
            if steps > band {
                0.0
            } else {
                let z = steps as f64 * h;
                norm * (-z * z / (4.0 * t)).exp()
            }
        };
        let table: Vec<f64> = (0..2 * n).map(gauss).collect();
        let mut mat = vec![0.0; n * n];
        for p in 0..n {
            let lo = p.saturating_sub(band);
            let hi = (p + band + 1).min(n);
            for k in lo..hi {
                mat[p * n + k] = h * (table[p.abs_diff(k)] - table[p + k]);
            }
        }
        Self { n, band, mat }
    }

    /// Applies the leading `len x len` block to a line stored as split real/imag parts.
    fn apply(&self, re: &[f64], im: &[f64], out_re: &mut [f64], out_im: &mut [f64]) {
        let len = re.len();
        for p in 0..len {
            let lo = p.saturating_sub(self.band);
            let hi = (p + self.band + 1).min(len);
            let row = &self.mat[p * self.n + lo..p * self.n + hi];
            let (a, b) = dot2(row, &re[lo..hi], &im[lo..hi]);
            out_re[p] = a;
            out_im[p] = b;
        }
    }
}

/// Two dot products with a fixed four-lane summation order.
fn dot2(w: &[f64], x: &[f64], y: &[f64]) -> (f64, f64) {
    let mut sx = [0.0; 4];
    let mut sy = [0.0; 4];
    let chunks = w.len() / 4;
    for c in 0..chunks {
        for l in 0..4 {
            let idx = 4 * c + l;
            sx[l] += w[idx] * x[idx];
            sy[l] += w[idx] * y[idx];
        }
    }
    let mut tx = (sx[0] + sx[1]) + (sx[2] + sx[3]);
    let mut ty = (sy[0] + sy[1]) + (sy[2] + sy[3]);
    for idx in 4 * chunks..w.len() {
        tx += w[idx] * x[idx];
        ty += w[idx] * y[idx];
    }
    (tx, ty)
}

fn validate_time(t: f64) -> Result<()> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidTime { t, reason: "diffusion needs t > 0" })
    }
}

/// Applies the line propagator to every diagonal of a row-major `n x n` matrix.
fn propagate_lines(grid: &Grid, src: &[Complex64], dst: &mut [Complex64], prop: &LinePropagator) {
    let n = grid.n();
    let coords = RotatedCoords::new(*grid);
    let mut re = vec![0.0; n];
    let mut im = vec![0.0; n];
    let mut out_re = vec![0.0; n];
    let mut out_im = vec![0.0; n];
    for offset in coords.offsets() {
        let len = coords.line_len(offset);
        let (i0, j0) = RotatedCoords::line_start(offset);
        for p in 0..len {
            let z = src[(i0 + p) * n + j0 + p];
            re[p] = z.re;
            im[p] = z.im;
        }
        prop.apply(&re[..len], &im[..len], &mut out_re[..len], &mut out_im[..len]);
        for p in 0..len {
            dst[(i0 + p) * n + j0 + p] = Complex64::new(out_re[p], out_im[p]);
        }
    }
}

fn warn_if_boundary_nonzero(omega: &KernelOperator) {
    let n = omega.grid().n();
    let edge = (0..n).fold(0.0f64, |m, j| m.max(omega.entry(0, j).norm()).max(omega.entry(j, 0).norm()));
    let scale = omega.max_abs();
    if edge > 1e-8 * scale {
        log::warn!("diffusion input does not vanish on the wall: max edge value {edge:e}");
    }
}

/// Reflection Poisson integral: the free absorbing-wall evolution at time `t`.
///
/// Boundary entries come out of the quadrature (the `k = 0` sample has zero
/// weight), they are not forced to zero.
pub fn diffusion_propagate(omega0: &KernelOperator, t: f64) -> Result<KernelOperator> {
    validate_time(t)?;
    warn_if_boundary_nonzero(omega0);
    let grid = *omega0.grid();
    let prop = LinePropagator::new(&grid, t);
    let mut out = KernelOperator::zeros(grid);
    propagate_lines(&grid, omega0.as_slice(), out.as_slice_mut(), &prop);
    Ok(out)
}

/// Diagonal `omega_t(x_i, x_i)` only; bitwise equal to the diagonal of [`diffusion_propagate`].
pub fn diffusion_propagate_diagonal(omega0: &KernelOperator, t: f64) -> Result<Vec<Complex64>> {
    validate_time(t)?;
    let grid = *omega0.grid();
    let n = grid.n();
    let prop = LinePropagator::new(&grid, t);
    let re: Vec<f64> = omega0.diagonal().iter().map(|z| z.re).collect();
    let im: Vec<f64> = omega0.diagonal().iter().map(|z| z.im).collect();
    let mut out_re = vec![0.0; n];
    let mut out_im = vec![0.0; n];
    prop.apply(&re, &im, &mut out_re, &mut out_im);
    Ok(out_re.into_iter().zip(out_im).map(|(a, b)| Complex64::new(a, b)).collect())
}

/// Heisenberg dual: `trace(S_t[omega] X) = trace(omega T_t[X])`.
///
/// The line matrix is symmetric, so the dual acts on the diagonals of `X` with
/// the same matrix.
pub fn diffusion_propagate_dual(x: &Observable, t: f64) -> Result<Observable> {
    validate_time(t)?;
    let grid = *x.grid();
    let prop = LinePropagator::new(&grid, t);
    let mut out = ndarray::Array2::zeros((grid.n(), grid.n()));
    propagate_lines(&grid, x.as_slice(), out.as_slice_mut().expect("standard layout"), &prop);
    Ok(Observable::from_raw(grid, out))
}

/// Second difference along the (1,1) direction, one-sided at the wall, zero past `x_max`.
pub fn diffusion_generator(omega: &KernelOperator) -> KernelOperator {
    let grid = *omega.grid();
    let n = grid.n();
    let inv_h2 = 1.0 / (grid.h() * grid.h());
    let coords = RotatedCoords::new(grid);
    let src = omega.as_slice();
    let mut out = KernelOperator::zeros(grid);
    let dst = out.as_slice_mut();
    let zero = Complex64::new(0.0, 0.0);
    for offset in coords.offsets() {
        let len = coords.line_len(offset);
        let (i0, j0) = RotatedCoords::line_start(offset);
        let at = |p: usize| if p < len { src[(i0 + p) * n + j0 + p] } else { zero };
        for p in 0..len {
            let d2 = if p == 0 {
                at(0) * 2.0 - at(1) * 5.0 + at(2) * 4.0 - at(3)
            } else {
                at(p + 1) - at(p) * 2.0 + at(p - 1)
            };
            dst[(i0 + p) * n + j0 + p] = d2 * inv_h2;
        }
    }
    out
}

/// `d/dx omega(x, x)` at the wall, second-order one-sided stencil.
pub fn boundary_flux(omega: &KernelOperator) -> Complex64 {
    boundary_flux_with(omega, FluxStencil::SecondOrder)
}

pub fn boundary_flux_with(omega: &KernelOperator, stencil: FluxStencil) -> Complex64 {
    let h = omega.grid().h();
    let (k0, k1, k2) = (omega.entry(0, 0), omega.entry(1, 1), omega.entry(2, 2));
    match stencil {
        FluxStencil::SecondOrder => (k1 * 4.0 - k0 * 3.0 - k2) / (2.0 * h),
        FluxStencil::FirstOrder => (k1 - k0) / h,
    }
}

fn first_derivative(f: &GridFunction) -> Vec<Complex64> {
    let v = f.values();
    let n = v.len();
    let inv = 1.0 / (2.0 * f.grid().h());
    (0..n)
        .map(|i| {
            if i == 0 {
                (v[1] * 4.0 - v[0] * 3.0 - v[2]) * inv
            } else if i == n - 1 {
                (v[n - 1] * 3.0 - v[n - 2] * 4.0 + v[n - 3]) * inv
            } else {
                (v[i + 1] - v[i - 1]) * inv
            }
        })
        .collect()
}

fn second_derivative(f: &GridFunction) -> Vec<Complex64> {
    let v = f.values();
    let n = v.len();
    let inv = 1.0 / (f.grid().h() * f.grid().h());
    (0..n)
        .map(|i| {
            if i == 0 {
                (v[0] * 2.0 - v[1] * 5.0 + v[2] * 4.0 - v[3]) * inv
            } else if i == n - 1 {
                (v[n - 1] * 2.0 - v[n - 2] * 5.0 + v[n - 3] * 4.0 - v[n - 4]) * inv
            } else {
                (v[i + 1] - v[i] * 2.0 + v[i - 1]) * inv
            }
        })
        .collect()
}

pub(crate) fn require_vanishing(f: &GridFunction) -> Result<()> {
    let scale = f.values().iter().fold(0.0f64, |m, v| m.max(v.norm()));
    let at0 = f.value(0).norm();
    if at0 > 1e-12 * scale {
        return Err(Error::BoundaryNonzero(at0));
    }
    Ok(())
}

/// Weak-form forward master equation residual at time `t`:
/// centered `d/dt <f|omega_t|g>` minus `2<f'|omega_t|g'> + <f''|omega_t|g> + <f|omega_t|g''>`.
pub fn mme_residual(omega0: &KernelOperator, f: &GridFunction, g: &GridFunction, t: f64, dt: f64) -> Result<f64> {
    omega0.grid().ensure_same(f.grid())?;
    omega0.grid().ensure_same(g.grid())?;
    require_vanishing(f)?;
    require_vanishing(g)?;
    if !(dt > 0.0 && dt < t) {
        return Err(Error::InvalidParameter(format!("need 0 < dt < t, got dt={dt} t={t}")));
    }
    let grid = *omega0.grid();
    let later = diffusion_propagate(omega0, t + dt)?;
    let earlier = diffusion_propagate(omega0, t - dt)?;
    let now = diffusion_propagate(omega0, t)?;
    let rate = (later.pairing(f, g)? - earlier.pairing(f, g)?) / (2.0 * dt);
    let df = GridFunction::new(grid, first_derivative(f))?;
    let dg = GridFunction::new(grid, first_derivative(g))?;
    let d2f = GridFunction::new(grid, second_derivative(f))?;
    let d2g = GridFunction::new(grid, second_derivative(g))?;
    let rhs = now.pairing(&df, &dg)? * 2.0 + now.pairing(&d2f, g)? + now.pairing(f, &d2g)?;
    Ok((rate - rhs).norm())
}
