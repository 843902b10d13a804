//! Finite-grid witnesses for the structure of the perturbed semigroups.

use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diffusion::{self, require_vanishing};
use crate::engine::{self, ModelSpec};
use crate::error::{Error, Result};
use crate::kernel::{DensityKernel, Grid, GridFunction, KernelOperator, Observable};
use crate::shift::{self, ShiftModel};
use crate::tolerances::{BOUNDED_EXPONENT, DIVERGENT_EXPONENT, FLUX_NEG_TOL, PROBE_ZERO_REL};

/// Minimum number of time scales for a growth fit.
pub const MIN_SCALES: usize = 4;

/// Number of random domain kernels in the Kraus witness batch.
pub const WITNESS_SAMPLES: usize = 50;

/// A Heisenberg-picture evolution `X -> T_t[X]`.
pub trait DualEvolution {
    fn name(&self) -> String;
    fn grid(&self) -> &Grid;
    fn evolve(&self, x: &Observable, t: f64) -> Result<Observable>;
}

/// Dual of the unperturbed semigroup.
#[derive(Debug, Clone)]
pub struct FreeDual(pub ModelSpec);

impl DualEvolution for FreeDual {
    fn name(&self) -> String {
        format!("free {}", self.0.name())
    }

    fn grid(&self) -> &Grid {
        self.0.grid()
    }

    fn evolve(&self, x: &Observable, t: f64) -> Result<Observable> {
        self.0.free_propagate_dual(x, t)
    }
}

/// Dual of the Duhamel solution on a lattice with step `dt`.
#[derive(Debug, Clone)]
pub struct PerturbedDual {
    spec: ModelSpec,
    dt: f64,
}

impl PerturbedDual {
    pub fn new(spec: ModelSpec, dt: f64) -> Self {
        Self { spec, dt }
    }

    /// Shift dual on the grid lattice, where the Duhamel chain is exact.
    pub fn shift(model: ShiftModel) -> Self {
        let dt = model.grid().h();
        Self::new(ModelSpec::Shift(model), dt)
    }
}

impl DualEvolution for PerturbedDual {
    fn name(&self) -> String {
        format!("perturbed {} dt={}", self.spec.name(), self.dt)
    }

    fn grid(&self) -> &Grid {
        self.spec.grid()
    }

    fn evolve(&self, x: &Observable, t: f64) -> Result<Observable> {
        engine::dual_solve(&self.spec, x, t, self.dt)
    }
}

/// Closed-form dual of the perturbed shift semigroup.
#[derive(Debug, Clone)]
pub struct ClosedFormShiftDual(pub ShiftModel);

impl DualEvolution for ClosedFormShiftDual {
    fn name(&self) -> String {
        "closed-form shift".into()
    }

    fn grid(&self) -> &Grid {
        self.0.grid()
    }

    fn evolve(&self, x: &Observable, t: f64) -> Result<Observable> {
        shift::heisenberg_closed_form(&self.0, x, t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Bounded,
    Divergent,
    Inconclusive,
    /// A PSD kernel with negative escape functional was found while the
    /// boundary-vanishing batch stayed nonnegative.
    Witnessed,
    NotWitnessed,
    /// Vanishing gap and vanishing left defect agree on every sample.
    Consistent,
    Inconsistent,
    /// A measured value within or above its a priori bound.
    Within,
    Exceeds,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Bounded => "BOUNDED",
            Verdict::Divergent => "DIVERGENT",
            Verdict::Inconclusive => "INCONCLUSIVE",
            Verdict::Witnessed => "WITNESSED",
            Verdict::NotWitnessed => "NOT_WITNESSED",
            Verdict::Consistent => "CONSISTENT",
            Verdict::Inconsistent => "INCONSISTENT",
            Verdict::Within => "WITHIN",
            Verdict::Exceeds => "EXCEEDS",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRow {
    pub label: String,
    pub scale: f64,
    pub measurement: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub probe: String,
    pub inputs: String,
    pub rows: Vec<ProbeRow>,
    pub exponent: Option<f64>,
    pub verdict: Verdict,
}

impl ProbeReport {
    pub fn measurements(&self, label: &str) -> impl Iterator<Item = f64> + '_ {
        let label = label.to_owned();
        self.rows.iter().filter(move |r| r.label == label).map(|r| r.measurement)
    }

    /// `probe,scale,measurement,exponent,verdict` rows without a header. The
    /// probe column is `probe/label` when the row label differs from the probe.
    pub fn csv_rows(&self) -> String {
        let exponent = self.exponent.map(|e| format!("{e:e}")).unwrap_or_default();
        self.rows
            .iter()
            .map(|r| {
                let name = if r.label == self.probe { r.label.clone() } else { format!("{}/{}", self.probe, r.label) };
                format!("{name},{:e},{:e},{exponent},{}\n", r.scale, r.measurement, self.verdict)
            })
            .collect()
    }
}

/// Classifies the growth of `t^-1 ||T_t[X] - X||` as `t` shrinks.
pub fn domain_membership_probe(evolve: &dyn DualEvolution, x: &Observable, t_list: &[f64]) -> Result<ProbeReport> {
    if t_list.len() < MIN_SCALES {
        return Err(Error::InvalidParameter(format!(
            "domain probe needs at least {MIN_SCALES} time scales, got {}",
            t_list.len()
        )));
    }
    if let Some(t) = t_list.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
        return Err(Error::InvalidTime { t: *t, reason: "probe times must be positive" });
    }
    evolve.grid().ensure_same(x.grid())?;
    let x_norm = x.op_norm();
    let zero = PROBE_ZERO_REL * x_norm;
    let mut rows = Vec::with_capacity(t_list.len());
    for &t in t_list {
        let diff = evolve.evolve(x, t)?.sub(x)?;
        let q = diff.op_norm() / t;
        rows.push(ProbeRow { label: "domain".into(), scale: t, measurement: if q <= zero { 0.0 } else { q } });
    }
    let points: Vec<(f64, f64)> =
        rows.iter().filter(|r| r.measurement > 0.0).map(|r| (r.scale.ln(), r.measurement.ln())).collect();
    let (exponent, verdict) = match points.len() {
        0 => (0.0, Verdict::Bounded),
        1 => (0.0, Verdict::Inconclusive),
        _ => {
            let e = -least_squares_slope(&points);
            let v = if e <= BOUNDED_EXPONENT {
                Verdict::Bounded
            } else if e >= DIVERGENT_EXPONENT {
                Verdict::Divergent
            } else {
                Verdict::Inconclusive
            };
            (e, v)
        }
    };
    Ok(ProbeReport {
        probe: "domain".into(),
        inputs: format!("{}; {} scales; |X|={x_norm:e}", evolve.name(), t_list.len()),
        rows,
        exponent: Some(exponent),
        verdict,
    })
}

fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Cauchy-Schwarz gap of `X` in the state `Omega` and its factorization defects.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsGap {
    pub gap: f64,
    pub left_defect: f64,
    pub right_defect: f64,
    pub x_norm: f64,
}

impl CsGap {
    pub fn gap_vanishes(&self) -> bool {
        self.gap <= PROBE_ZERO_REL * self.x_norm * self.x_norm
    }

    pub fn left_defect_vanishes(&self) -> bool {
        self.left_defect <= 1e-8 * self.x_norm
    }
}

/// `Tr(Omega X*X) - |Tr(Omega X)|^2` with the defects `|(X - cI) Omega|` and `|Omega (X - cI)|`.
pub fn cs_gap(x: &Observable, omega: &DensityKernel) -> Result<CsGap> {
    omega.grid().ensure_same(x.grid())?;
    let rho = Observable::from_kernel(omega.kernel());
    let c = omega.kernel().expectation(x)?;
    let second = omega.kernel().expectation(&x.adjoint().matmul(x)?)?;
    let centered = x.sub(&Observable::scalar(*x.grid(), c))?;
    Ok(CsGap {
        gap: second.re - c.norm_sqr(),
        left_defect: centered.matmul(&rho)?.op_norm(),
        right_defect: rho.matmul(&centered)?.op_norm(),
        x_norm: x.op_norm(),
    })
}

/// [`cs_gap`] over a batch of observables. Rows `gap`, `left_defect` and
/// `right_defect` are indexed by sample; the verdict checks that a vanishing gap
/// and a vanishing left defect always occur together.
pub fn cs_gap_survey(omega: &DensityKernel, observables: &[Observable]) -> Result<ProbeReport> {
    let mut rows = Vec::with_capacity(3 * observables.len());
    let mut consistent = true;
    for (i, x) in observables.iter().enumerate() {
        let g = cs_gap(x, omega)?;
        consistent &= g.gap_vanishes() == g.left_defect_vanishes() && g.gap >= -PROBE_ZERO_REL * g.x_norm * g.x_norm;
        let scale = i as f64;
        rows.push(ProbeRow { label: "gap".into(), scale, measurement: g.gap });
        rows.push(ProbeRow { label: "left_defect".into(), scale, measurement: g.left_defect });
        rows.push(ProbeRow { label: "right_defect".into(), scale, measurement: g.right_defect });
    }
    Ok(ProbeReport {
        probe: "cs-gap".into(),
        inputs: format!("grid {}; {} observables", omega.grid(), observables.len()),
        rows,
        exponent: None,
        verdict: if consistent { Verdict::Consistent } else { Verdict::Inconsistent },
    })
}

/// Trace-normalized `sum c_k |psi_k><psi_k|` with `psi_k(x) = x exp(-(beta - i gamma) x)`.
pub fn random_domain_kernel(grid: Grid, rng: &mut impl Rng) -> Result<DensityKernel> {
    let terms = rng.random_range(1..=4);
    let mut k = KernelOperator::zeros(grid);
    for _ in 0..terms {
        let c = rng.random_range(0.1..1.0);
        let beta = rng.random_range(0.5..3.0);
        let gamma = rng.random_range(-2.0..2.0);
        let rate = Complex64::new(-beta, gamma);
        let psi = GridFunction::from_fn(grid, |x| x * (rate * x).exp());
        k.axpy(Complex64::new(c, 0.0), &KernelOperator::outer(&psi, &psi)?)?;
    }
    let tr = k.trace().re;
    DensityKernel::new(k.scaled(Complex64::new(1.0 / tr, 0.0)))
}

/// The unnormalized witness kernel `exp(-(x + y))`, whose wall flux is `-2`.
pub fn witness_kernel(grid: Grid) -> KernelOperator {
    KernelOperator::from_fn(grid, |x, y| Complex64::new((-(x + y)).exp(), 0.0))
}

/// Wall flux on [`WITNESS_SAMPLES`] seeded boundary-vanishing PSD kernels
/// (label `domain`), on `x exp(-x)` (label `vanishing`) and on the witness
/// kernel (label `witness`).
pub fn kraus_obstruction_witness(grid: Grid, seed: u64) -> Result<ProbeReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(WITNESS_SAMPLES + 2);
    for i in 0..WITNESS_SAMPLES {
        let omega = random_domain_kernel(grid, &mut rng)?;
        let flux = diffusion::boundary_flux(omega.kernel()).re;
        rows.push(ProbeRow { label: "domain".into(), scale: i as f64, measurement: flux });
    }
    let vanishing = DensityKernel::from_profile(grid, crate::kernel::Profile::XExp, 1.0)?;
    rows.push(ProbeRow {
        label: "vanishing".into(),
        scale: grid.h(),
        measurement: diffusion::boundary_flux(vanishing.kernel()).re,
    });
    let witness = diffusion::boundary_flux(&witness_kernel(grid)).re;
    rows.push(ProbeRow { label: "witness".into(), scale: grid.h(), measurement: witness });
    let domain_ok = rows.iter().filter(|r| r.label != "witness").all(|r| r.measurement >= -FLUX_NEG_TOL);
    let verdict = if domain_ok && witness < -FLUX_NEG_TOL { Verdict::Witnessed } else { Verdict::NotWitnessed };
    Ok(ProbeReport {
        probe: "kraus-witness".into(),
        inputs: format!("grid {grid}; seed {seed}; {WITNESS_SAMPLES} samples"),
        rows,
        exponent: None,
        verdict,
    })
}

/// `|Lambda[|psi><phi|]|` in trace norm; both functions must vanish at the wall.
pub fn zero_correction_check(spec: &ModelSpec, psi: &GridFunction, phi: &GridFunction) -> Result<f64> {
    spec.grid().ensure_same(psi.grid())?;
    spec.grid().ensure_same(phi.grid())?;
    require_vanishing(psi)?;
    require_vanishing(phi)?;
    let rate = spec.escape_rate(&KernelOperator::outer(psi, phi)?);
    Ok(rate.norm() * spec.omega().trace_norm())
}
