//! Minimal trace-restoring perturbations by Picard iteration of the Duhamel equation
//!
//! `S_t[w] = S0_t[w] + int_0^t S_{t-s}[Omega] * escape(S0_s[w]) ds`
//!
//! on the lattice `t_k = k dt`. Every correction is a multiple of a propagated
//! `Omega`, so the solution is `S_k = b_k + sum_i gamma_k[i] a_i` with the free
//! orbits `a_i = S0_{i dt}[Omega]` and `b_k = S0_{k dt}[w]`. The fast path runs
//! the iteration on the coefficients `gamma`; the kernel path iterates full
//! kernels. Both start from the free semigroup, so iterate `m` is the `m`-th
//! rebound generation and traces increase monotonically.

use std::borrow::Cow;

use num_complex::Complex64;

use crate::diffusion::{self, DiffusionModel, FluxStencil};
use crate::error::{Error, Result};
use crate::kernel::{DensityKernel, Grid, KernelOperator, Observable};
use crate::shift::{self, ShiftModel};

/// Which free semigroup is perturbed.
#[derive(Debug, Clone)]
pub enum ModelSpec {
    Shift(ShiftModel),
    Diffusion(DiffusionModel),
}

/// Quadrature of the Duhamel convolution on the lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvolutionRule {
    /// Trace that leaves during a step is reinjected as `Omega` at the end of
    /// that step. This is the exact one-step chain of the shift model.
    Reinjection,
    /// Composite trapezoid in `s` over the escape rate, implicit at `s = 0`.
    Trapezoid,
}

impl ModelSpec {
    pub fn grid(&self) -> &Grid {
        self.omega().grid()
    }

    pub fn omega(&self) -> &DensityKernel {
        match self {
            ModelSpec::Shift(m) => m.omega(),
            ModelSpec::Diffusion(m) => m.omega(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Shift(_) => "shift",
            ModelSpec::Diffusion(_) => "diffusion",
        }
    }

    pub fn rule(&self) -> ConvolutionRule {
        match self {
            ModelSpec::Shift(_) => ConvolutionRule::Reinjection,
            ModelSpec::Diffusion(_) => ConvolutionRule::Trapezoid,
        }
    }

    /// Free evolution `S0_t`; `t = 0` is the identity.
    pub fn free_propagate(&self, omega: &KernelOperator, t: f64) -> Result<KernelOperator> {
        match self {
            ModelSpec::Shift(_) => shift::shift_forward(omega, t),
            ModelSpec::Diffusion(_) if t == 0.0 => Ok(omega.clone()),
            ModelSpec::Diffusion(_) => diffusion::diffusion_propagate(omega, t),
        }
    }

    /// Heisenberg dual of [`ModelSpec::free_propagate`].
    pub fn free_propagate_dual(&self, x: &Observable, t: f64) -> Result<Observable> {
        match self {
            ModelSpec::Shift(_) => shift::shift_backward_obs(x, t),
            ModelSpec::Diffusion(_) if t == 0.0 => Ok(x.clone()),
            ModelSpec::Diffusion(_) => diffusion::diffusion_propagate_dual(x, t),
        }
    }

    /// `omega(0,0)` for the shift, the wall flux for diffusion.
    pub fn escape_rate(&self, omega: &KernelOperator) -> Complex64 {
        match self {
            ModelSpec::Shift(_) => omega.entry(0, 0),
            ModelSpec::Diffusion(m) => m.flux(omega),
        }
    }

    fn validate_step(&self, dt: f64) -> Result<()> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidTime { t: dt, reason: "time step must be positive" });
        }
        if let ModelSpec::Shift(_) = self {
            if self.grid().steps(dt)? == 0 {
                return Err(Error::InvalidTime { t: dt, reason: "shift step below grid step" });
            }
        }
        Ok(())
    }

    /// Escape functional weighted by the quadrature: trace lost during one step
    /// for [`ConvolutionRule::Reinjection`], the escape rate for the trapezoid.
    fn lattice_escape(&self, omega: &KernelOperator, dt: f64) -> Complex64 {
        match self {
            ModelSpec::Shift(_) => {
                let q = self.grid().steps(dt).expect("validated step");
                shift::escaped_mass(omega, q)
            }
            ModelSpec::Diffusion(_) => self.escape_rate(omega),
        }
    }

    /// Observable `E` with `trace(omega E)` equal to the lattice escape functional.
    pub fn escape_observable(&self, dt: f64) -> Result<Observable> {
        self.validate_step(dt)?;
        let grid = *self.grid();
        let h = grid.h();
        let mut m = ndarray::Array2::zeros((grid.n(), grid.n()));
        match self {
            ModelSpec::Shift(_) => {
                for i in 0..grid.steps(dt)?.min(grid.n()) {
                    m[[i, i]] = Complex64::new(1.0, 0.0);
                }
            }
            ModelSpec::Diffusion(model) => {
                let weights: &[f64] = match model.flux_stencil() {
                    FluxStencil::SecondOrder => &[-1.5, 2.0, -0.5],
                    FluxStencil::FirstOrder => &[-1.0, 1.0],
                };
                for (i, w) in weights.iter().enumerate() {
                    m[[i, i]] = Complex64::new(w / (h * h), 0.0);
                }
            }
        }
        Observable::new(grid, m)
    }
}

/// `Omega * escape_rate(omega)`.
pub fn lambda_apply(spec: &ModelSpec, omega: &KernelOperator) -> KernelOperator {
    spec.omega().kernel().scaled(spec.escape_rate(omega))
}

/// Parameters of [`duhamel_solve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DuhamelConfig {
    pub horizon: f64,
    pub dt: f64,
    /// Stop once the largest trace increment over the lattice is below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Iterate on coefficients instead of full kernels.
    pub fast_path: bool,
    /// Keep every lattice state, not only the last one.
    pub keep_states: bool,
}

impl DuhamelConfig {
    pub fn new(horizon: f64, dt: f64) -> Self {
        Self { horizon, dt, tol: 1e-10, max_iter: 200, fast_path: true, keep_states: true }
    }
}

/// Diagnostics at one lattice time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticePoint {
    pub t: f64,
    pub trace: f64,
    pub min_eig: f64,
    pub trace_norm: f64,
    pub escape_rate: f64,
    /// Trace of the free orbit `S0_t[w]`.
    pub free_trace: f64,
    /// Escape rate of the free orbit.
    pub free_escape_rate: f64,
    /// Escape of the free orbit integrated up to `t` with the model's quadrature.
    pub reset_mass: f64,
}

#[derive(Debug, Clone)]
pub struct DuhamelSolution {
    points: Vec<LatticePoint>,
    states: Vec<KernelOperator>,
    final_state: KernelOperator,
    iterations: usize,
    final_increment: f64,
    converged: bool,
    trace_profile: Vec<f64>,
}

impl DuhamelSolution {
    pub fn points(&self) -> &[LatticePoint] {
        &self.points
    }

    pub fn times(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.t).collect()
    }

    /// All lattice states; empty unless `keep_states` was set.
    pub fn states(&self) -> &[KernelOperator] {
        &self.states
    }

    pub fn final_state(&self) -> &KernelOperator {
        &self.final_state
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn final_increment(&self) -> f64 {
        self.final_increment
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn trace_profile(&self) -> &[f64] {
        &self.trace_profile
    }
}

/// Trace at the final time after each Picard iteration, starting with the free orbit.
pub fn picard_trace_profile(solution: &DuhamelSolution) -> &[f64] {
    solution.trace_profile()
}

fn lattice_steps(horizon: f64, dt: f64) -> Result<usize> {
    if !(horizon.is_finite() && horizon >= 0.0) {
        return Err(Error::InvalidTime { t: horizon, reason: "horizon must be nonnegative" });
    }
    let steps = (horizon / dt).round();
    if (steps * dt - horizon).abs() > 1e-9 * horizon.max(dt) {
        return Err(Error::InvalidTime { t: horizon, reason: "time step must divide the horizon" });
    }
    Ok(steps as usize)
}

/// `(j, idx, weight)`: the node `s_j = j dt` contributes
/// `weight * escape(orbit_j) * S_{idx dt}[Omega]` at lattice time `k`.
fn quadrature_terms(rule: ConvolutionRule, k: usize, dt: f64) -> Vec<(usize, usize, f64)> {
    match rule {
        ConvolutionRule::Reinjection => (0..k).map(|j| (j, k - j - 1, 1.0)).collect(),
        ConvolutionRule::Trapezoid if k == 0 => Vec::new(),
        ConvolutionRule::Trapezoid => {
            (0..=k).map(|j| (j, k - j, if j == 0 || j == k { 0.5 * dt } else { dt })).collect()
        }
    }
}

/// Free orbit on the lattice; shift orbits are generated on demand.
enum Orbit {
    Shifted { base: KernelOperator, q: usize },
    Stored(Vec<KernelOperator>),
}

impl Orbit {
    fn build(spec: &ModelSpec, omega: &KernelOperator, steps: usize, dt: f64) -> Result<Self> {
        match spec {
            ModelSpec::Shift(_) => Ok(Orbit::Shifted { base: omega.clone(), q: spec.grid().steps(dt)? }),
            ModelSpec::Diffusion(_) => (0..=steps)
                .map(|k| spec.free_propagate(omega, k as f64 * dt))
                .collect::<Result<Vec<_>>>()
                .map(Orbit::Stored),
        }
    }

    fn get(&self, k: usize) -> Cow<'_, KernelOperator> {
        match self {
            Orbit::Shifted { base, q } => Cow::Owned(shift::shift_steps(base, k * q)),
            Orbit::Stored(v) => Cow::Borrowed(&v[k]),
        }
    }

    fn add_into(&self, k: usize, c: Complex64, target: &mut KernelOperator) {
        match self {
            Orbit::Shifted { base, q } => shift::add_shifted(target.as_slice_mut(), base, k * q, c),
            Orbit::Stored(v) => target.axpy(c, &v[k]).expect("shared grid"),
        }
    }
}

struct Lattice {
    steps: usize,
    /// Per lattice time: `(idx, coefficient)` for the `Omega` orbit and the state orbit.
    omega_terms: Vec<Vec<(usize, Complex64)>>,
    state_terms: Vec<Vec<(usize, Complex64)>>,
    omega_traces: Vec<Complex64>,
    state_traces: Vec<Complex64>,
    state_escape: Vec<Complex64>,
}

impl Lattice {
    fn new(spec: &ModelSpec, a: &Orbit, b: &Orbit, steps: usize, dt: f64) -> Self {
        let rule = spec.rule();
        let (mut a_esc, mut a_tr, mut b_esc, mut b_tr) = (vec![], vec![], vec![], vec![]);
        for k in 0..=steps {
            let ak = a.get(k);
            a_esc.push(spec.lattice_escape(&ak, dt));
            a_tr.push(ak.trace());
            let bk = b.get(k);
            b_esc.push(spec.lattice_escape(&bk, dt));
            b_tr.push(bk.trace());
        }
        let weigh = |esc: &[Complex64], k: usize| -> Vec<(usize, Complex64)> {
            quadrature_terms(rule, k, dt).into_iter().map(|(j, idx, w)| (idx, esc[j] * w)).collect()
        };
        Self {
            steps,
            omega_terms: (0..=steps).map(|k| weigh(&a_esc, k)).collect(),
            state_terms: (0..=steps).map(|k| weigh(&b_esc, k)).collect(),
            omega_traces: a_tr,
            state_traces: b_tr,
            state_escape: b_esc,
        }
    }
}

/// Solves the Duhamel equation on `[0, horizon]` with step `dt`.
///
/// Non-convergence within `max_iter` is not an error: the last iterate (a lower
/// approximant of the minimal solution) is returned with `converged == false`.
pub fn duhamel_solve(spec: &ModelSpec, omega0: &KernelOperator, cfg: &DuhamelConfig) -> Result<DuhamelSolution> {
    spec.grid().ensure_same(omega0.grid())?;
    if cfg.tol.is_nan() || cfg.tol <= 0.0 {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {}", cfg.tol)));
    }
    spec.validate_step(cfg.dt)?;
    let steps = lattice_steps(cfg.horizon, cfg.dt)?;
    let a = Orbit::build(spec, spec.omega().kernel(), steps, cfg.dt)?;
    let shared = omega0 == spec.omega().kernel();
    let b_owned = if shared { None } else { Some(Orbit::build(spec, omega0, steps, cfg.dt)?) };
    let b = b_owned.as_ref().unwrap_or(&a);
    let lattice = Lattice::new(spec, &a, b, steps, cfg.dt);

    let (states, iterations, increment, profile) =
        if cfg.fast_path { solve_coefficients(&lattice, &a, b, cfg) } else { solve_kernels(&lattice, &a, b, cfg) };
    let converged = increment < cfg.tol;
    finish(spec, &lattice, b, cfg, states, iterations, increment, converged, profile)
}

type Sweep<'a> = (Box<dyn Fn(usize) -> KernelOperator + 'a>, usize, f64, Vec<f64>);

fn solve_coefficients<'a>(lat: &'a Lattice, a: &'a Orbit, b: &'a Orbit, cfg: &DuhamelConfig) -> Sweep<'a> {
    let n = lat.steps + 1;
    let zero = Complex64::new(0.0, 0.0);
    let unit = |k: usize| {
        let mut v = vec![zero; n];
        v[k] = Complex64::new(1.0, 0.0);
        v
    };
    let mut coeff: Vec<Vec<Complex64>> = (0..n).map(unit).collect();
    let mut gamma: Vec<Vec<Complex64>> = vec![vec![zero; n]; n];
    let mut tr_p = lat.omega_traces.clone();
    let mut tr_s = lat.state_traces.clone();
    let mut profile = vec![tr_s[n - 1].re];
    let mut iterations = 0;
    let mut increment = f64::INFINITY;
    let combine = |terms: &[(usize, Complex64)], prev: &[Vec<Complex64>], base: Vec<Complex64>| {
        let mut v = base;
        for &(idx, c) in terms {
            for (x, y) in v.iter_mut().zip(&prev[idx]) {
                *x += c * y;
            }
        }
        v
    };
    let dot = |v: &[Complex64]| -> Complex64 { v.iter().zip(&lat.omega_traces).map(|(x, y)| x * y).sum() };
    for m in 1..=cfg.max_iter {
        let next: Vec<Vec<Complex64>> = (0..n).map(|k| combine(&lat.omega_terms[k], &coeff, unit(k))).collect();
        gamma = (0..n).map(|k| combine(&lat.state_terms[k], &coeff, vec![zero; n])).collect();
        let new_p: Vec<Complex64> = next.iter().map(|v| dot(v)).collect();
        let new_s: Vec<Complex64> = (0..n).map(|k| lat.state_traces[k] + dot(&gamma[k])).collect();
        increment = (0..n).map(|k| (new_s[k] - tr_s[k]).norm().max((new_p[k] - tr_p[k]).norm())).fold(0.0, f64::max);
        coeff = next;
        tr_p = new_p;
        tr_s = new_s;
        profile.push(tr_s[n - 1].re);
        iterations = m;
        if increment < cfg.tol {
            break;
        }
    }
    let assemble = move |k: usize| {
        let mut s = b.get(k).into_owned();
        for (i, c) in gamma[k].iter().enumerate() {
            if *c != zero {
                a.add_into(i, *c, &mut s);
            }
        }
        s
    };
    (Box::new(assemble), iterations, increment, profile)
}

fn solve_kernels<'a>(lat: &'a Lattice, a: &'a Orbit, b: &'a Orbit, cfg: &DuhamelConfig) -> Sweep<'a> {
    let n = lat.steps + 1;
    let mut prev: Vec<KernelOperator> = (0..n).map(|k| a.get(k).into_owned()).collect();
    let mut tr_p: Vec<Complex64> = prev.iter().map(|p| p.trace()).collect();
    let mut tr_s = lat.state_traces.clone();
    let mut profile = vec![tr_s[n - 1].re];
    let mut iterations = 0;
    let mut increment = f64::INFINITY;
    for m in 1..=cfg.max_iter {
        let next: Vec<KernelOperator> = (0..n)
            .map(|k| {
                let mut p = a.get(k).into_owned();
                for &(idx, c) in &lat.omega_terms[k] {
                    p.axpy(c, &prev[idx]).expect("shared grid");
                }
                p
            })
            .collect();
        let new_s: Vec<Complex64> = (0..n)
            .map(|k| lat.state_traces[k] + lat.state_terms[k].iter().map(|&(idx, c)| c * tr_p[idx]).sum::<Complex64>())
            .collect();
        let new_p: Vec<Complex64> = next.iter().map(|p| p.trace()).collect();
        increment = (0..n).map(|k| (new_s[k] - tr_s[k]).norm().max((new_p[k] - tr_p[k]).norm())).fold(0.0, f64::max);
        tr_s = new_s;
        profile.push(tr_s[n - 1].re);
        iterations = m;
        if increment < cfg.tol {
            break;
        }
        prev = next;
        tr_p = new_p;
    }
    // The last state traces were built from `prev`, so the states are too.
    let assemble = move |k: usize| {
        let mut s = b.get(k).into_owned();
        for &(idx, c) in &lat.state_terms[k] {
            s.axpy(c, &prev[idx]).expect("shared grid");
        }
        s
    };
    (Box::new(assemble), iterations, increment, profile)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    spec: &ModelSpec,
    lat: &Lattice,
    b: &Orbit,
    cfg: &DuhamelConfig,
    state_at: Box<dyn Fn(usize) -> KernelOperator + '_>,
    iterations: usize,
    final_increment: f64,
    converged: bool,
    trace_profile: Vec<f64>,
) -> Result<DuhamelSolution> {
    let mut points = Vec::with_capacity(lat.steps + 1);
    let mut states = Vec::new();
    let mut final_state = None;
    let mut reset_mass = 0.0;
    let mut last_rate = 0.0;
    for k in 0..=lat.steps {
        let state = state_at(k);
        let spectrum = state.spectrum()?;
        let free = b.get(k);
        let free_rate = spec.escape_rate(&free).re;
        if k > 0 {
            reset_mass += match spec.rule() {
                ConvolutionRule::Reinjection => lat.state_escape[k - 1].re,
                ConvolutionRule::Trapezoid => 0.5 * cfg.dt * (last_rate + free_rate),
            };
        }
        last_rate = free_rate;
        points.push(LatticePoint {
            t: k as f64 * cfg.dt,
            trace: state.trace().re,
            min_eig: spectrum.min(),
            trace_norm: spectrum.trace_norm(),
            escape_rate: spec.escape_rate(&state).re,
            free_trace: free.trace().re,
            free_escape_rate: free_rate,
            reset_mass,
        });
        if k == lat.steps {
            final_state = Some(state.clone());
        }
        if cfg.keep_states {
            states.push(state);
        }
    }
    Ok(DuhamelSolution {
        points,
        states,
        final_state: final_state.expect("lattice has at least one point"),
        iterations,
        final_increment,
        converged,
        trace_profile,
    })
}

/// Heisenberg dual of the converged Duhamel solution at `horizon`:
/// `trace(S_T[w] X) = trace(w T_T[X])` for every state `w`.
pub fn dual_solve(spec: &ModelSpec, x: &Observable, horizon: f64, dt: f64) -> Result<Observable> {
    spec.grid().ensure_same(x.grid())?;
    spec.validate_step(dt)?;
    let steps = lattice_steps(horizon, dt)?;
    let rule = spec.rule();
    let a = Orbit::build(spec, spec.omega().kernel(), steps, dt)?;
    let a_esc: Vec<Complex64> = (0..=steps).map(|k| spec.lattice_escape(&a.get(k), dt)).collect();
    // tau_u = trace(S_u[Omega] X) solves the same triangular system as the Omega orbit.
    let mut tau: Vec<Complex64> = Vec::with_capacity(steps + 1);
    for u in 0..=steps {
        let mut rhs = a.get(u).expectation(x)?;
        let mut diag = Complex64::new(1.0, 0.0);
        for (j, idx, w) in quadrature_terms(rule, u, dt) {
            let c = a_esc[j] * w;
            if idx == u {
                diag -= c;
            } else {
                rhs += c * tau[idx];
            }
        }
        tau.push(rhs / diag);
    }
    let e = spec.escape_observable(dt)?;
    let mut out = spec.free_propagate_dual(x, horizon)?;
    for (j, idx, w) in quadrature_terms(rule, steps, dt) {
        let back = spec.free_propagate_dual(&e, j as f64 * dt)?;
        out = out.add(&back.scaled(tau[idx] * w))?;
    }
    Ok(out)
}
