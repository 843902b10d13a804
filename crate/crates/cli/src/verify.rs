//! `verify`: invariant suite of every module on fixed standard states.
//!
//! Tolerances scale as `base * max(1, h / (1/64))`; convergence-order checks
//! are skipped on grids coarser than `h = 1/32`.

use std::fmt;
use std::path::PathBuf;

use log::info;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use semilab::diffusion::{boundary_flux, diffusion_propagate, diffusion_propagate_diagonal};
use semilab::engine::{dual_solve, duhamel_solve, ModelSpec};
use semilab::kernel::snapshot::{read_snapshot, write_snapshot};
use semilab::kernel::{dissipativity_check, GeneratorData};
use semilab::probes::{
    cs_gap, domain_membership_probe, kraus_obstruction_witness, zero_correction_check, FreeDual, PerturbedDual,
};
use semilab::shift::{arveson_closed_form, shift_backward_obs, shift_forward, shift_generator, shift_resolvent};
use semilab::{
    Complex64, DensityKernel, DiffusionModel, DuhamelConfig, DuhamelSolution, Grid, GridFunction, KernelOperator,
    Observable, Profile, ShiftModel,
};

use crate::config::ScenarioConfig;
use crate::oracle::{convergence_order, crank_nicolson_trace};
use crate::output::{num, Output, Table};
use crate::probe::random_observable;
use crate::CliError;

/// Grid spacing at which the base tolerances apply.
pub const REFERENCE_H: f64 = 1.0 / 64.0;

/// Coarsest spacing for which convergence orders are measured.
pub const ORDER_MAX_H: f64 = 1.0 / 32.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skipped => "SKIPPED",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    AtMost(f64),
    AtLeast(f64),
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::AtMost(v) => write!(f, "<={}", num(*v)),
            Bound::AtLeast(v) => write!(f, ">={}", num(*v)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub value: Option<f64>,
    pub bound: Bound,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn count(&self, status: Status) -> usize {
        self.checks.iter().filter(|c| c.status == status).count()
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.status == Status::Fail)
    }

    pub fn passed(&self) -> bool {
        self.count(Status::Fail) == 0
    }

    pub fn get(&self, suite: &str, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.suite == suite && c.name == name)
    }

    pub fn summary(&self) -> String {
        let mut s = format!(
            "verify: {} checks, {} passed, {} failed, {} skipped\n",
            self.checks.len(),
            self.count(Status::Pass),
            self.count(Status::Fail),
            self.count(Status::Skipped)
        );
        for suite in suites(&self.checks) {
            let of_suite: Vec<&Check> = self.checks.iter().filter(|c| c.suite == suite).collect();
            let failed = of_suite.iter().filter(|c| c.status == Status::Fail).count();
            s.push_str(&format!(
                "  {suite}: {}/{} passed{}\n",
                of_suite.iter().filter(|c| c.status == Status::Pass).count(),
                of_suite.len(),
                if failed > 0 { format!(", {failed} FAILED") } else { String::new() }
            ));
        }
        for c in self.failures() {
            let value = c.value.map(num).unwrap_or_default();
            s.push_str(&format!("  FAIL {}/{}: {value} (want {})\n", c.suite, c.name, c.bound));
        }
        s
    }
}

fn suites(checks: &[Check]) -> Vec<&'static str> {
    let mut out: Vec<&'static str> = Vec::new();
    for c in checks {
        if !out.contains(&c.suite) {
            out.push(c.suite);
        }
    }
    out
}

struct Suite<'a> {
    name: &'static str,
    checks: &'a mut Vec<Check>,
}

impl Suite<'_> {
    fn record(&mut self, name: &str, value: f64, bound: Bound) {
        let ok = match bound {
            Bound::AtMost(b) => value <= b,
            Bound::AtLeast(b) => value >= b,
        };
        let status = if ok { Status::Pass } else { Status::Fail };
        info!("{}/{name}: {value:e} {bound} {status}", self.name);
        self.checks.push(Check { suite: self.name, name: name.to_owned(), value: Some(value), bound, status });
    }

    fn at_most(&mut self, name: &str, value: f64, bound: f64) {
        self.record(name, value, Bound::AtMost(bound));
    }

    fn at_least(&mut self, name: &str, value: f64, bound: f64) {
        self.record(name, value, Bound::AtLeast(bound));
    }

    fn skip(&mut self, name: &str, bound: Bound) {
        info!("{}/{name}: SKIPPED", self.name);
        self.checks.push(Check {
            suite: self.name,
            name: name.to_owned(),
            value: None,
            bound,
            status: Status::Skipped,
        });
    }

    /// Runs `f`; a library error becomes a failed check instead of aborting.
    fn guard(&mut self, name: &str, bound: Bound, f: impl FnOnce(&mut Self) -> semilab::Result<()>) {
        if let Err(e) = f(self) {
            log::warn!("{}/{name}: {e}", self.name);
            self.checks.push(Check {
                suite: self.name,
                name: name.to_owned(),
                value: None,
                bound,
                status: Status::Fail,
            });
        }
    }
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Relative amount by which the smallest eigenvalue is negative.
fn negativity(omega: &KernelOperator) -> semilab::Result<f64> {
    Ok((-omega.relative_min_eigenvalue()?).max(0.0))
}

fn solution_negativity(sol: &DuhamelSolution) -> f64 {
    sol.points().iter().map(|p| (-p.min_eig / p.trace_norm.max(f64::MIN_POSITIVE)).max(0.0)).fold(0.0, f64::max)
}

fn standard_mixture(grid: Grid) -> semilab::Result<DensityKernel> {
    DensityKernel::mixture(&[
        (0.5, GridFunction::from_profile(grid, Profile::Exp, 1.0)?),
        (0.3, GridFunction::from_profile(grid, Profile::XExp, 2.0)?),
        (0.2, GridFunction::from_profile(grid, Profile::X2Exp, 1.5)?),
    ])
}

struct Context {
    h: f64,
    x_max: f64,
    horizon: f64,
    dt: f64,
    tol: f64,
    max_iter: usize,
    seed: u64,
    scale: f64,
}

impl Context {
    fn grid(&self) -> semilab::Result<Grid> {
        Grid::with_extent(self.h, self.x_max)
    }

    fn tol(&self, base: f64) -> f64 {
        base * self.scale
    }

    fn duhamel(&self) -> DuhamelConfig {
        DuhamelConfig {
            horizon: self.horizon,
            dt: self.dt,
            tol: self.tol,
            max_iter: self.max_iter,
            ..DuhamelConfig::new(0.0, 1.0)
        }
    }

    fn orders(&self) -> bool {
        self.h <= ORDER_MAX_H
    }
}

fn kernel_core(ctx: &Context, s: &mut Suite) {
    let always = Bound::AtMost(0.0);
    s.guard("standard_state", always, |s| {
        let grid = ctx.grid()?;
        let rho = standard_mixture(grid)?;
        let k = rho.kernel();
        s.at_most("trace_unit", (k.trace() - c(1.0)).norm(), 1e-12);
        s.at_most("hermitian_defect", k.hermitian_defect() / k.max_abs(), 1e-14);
        s.at_most("negativity", negativity(k)?, 1e-8);
        s.at_most("trace_norm_equals_trace", (rho.trace_norm() - 1.0).abs(), 1e-10);

        let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
        let values =
            (0..grid.n()).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let f = GridFunction::new(grid, values)?;
        let g = GridFunction::from_fn(grid, |x| Complex64::new((-x).exp(), x.sin()));
        let lhs = k.pairing(&f, &g)?;
        let rhs = k.adjoint().pairing(&g, &f)?.conj();
        s.at_most("adjoint_pairing", (lhs - rhs).norm(), 1e-12);

        let mut buf = Vec::new();
        write_snapshot(k, &mut buf)?;
        let back = read_snapshot(buf.as_slice())?;
        s.at_most("snapshot_roundtrip", back.sub(k)?.max_abs(), 0.0);
        Ok(())
    });
    s.guard("dissipativity", always, |s| {
        let grid = ctx.grid()?;
        let psi = GridFunction::from_profile(grid, Profile::XExp, 1.0)?;
        let reset = GridFunction::from_profile(grid, Profile::Exp, 1.0)?.normalized()?;
        let shift = dissipativity_check(&GeneratorData::shift_reset(grid, &[reset])?, &psi)?;
        s.at_most("shift_dissipative", (-shift.conservative_gap).max(0.0), 1e-12);
        let diff = dissipativity_check(&GeneratorData::diffusion(grid)?, &psi)?;
        s.at_most("diffusion_dissipative", (-diff.conservative_gap).max(0.0), 1e-12);
        s.at_most("diffusion_conservative_on_vanishing", diff.conservative_gap.abs() / diff.rhs.abs(), 1e-10);
        Ok(())
    });
}

fn resolvent_residuals(h: f64, lambda: f64) -> semilab::Result<(f64, f64)> {
    let grid = Grid::with_extent(h, 8.0)?;
    let omega = DensityKernel::from_profile(grid, Profile::Exp, 1.0)?;
    let k = omega.kernel();
    let r = shift_resolvent(k, lambda)?;
    let first = r.scaled(c(lambda)).sub(&shift_generator(&r).sigma)?.sub(k)?;
    let source = k.scaled(c(lambda)).sub(&shift_generator(k).sigma)?;
    let second = shift_resolvent(&source, lambda)?.sub(k)?;
    Ok((first.trace_norm()?, second.trace_norm()?))
}

fn shift_model(ctx: &Context, s: &mut Suite) {
    let always = Bound::AtMost(0.0);
    s.guard("propagation", always, |s| {
        let grid = ctx.grid()?;
        let rho = standard_mixture(grid)?;
        let k = rho.kernel();
        let a = 8.0 * ctx.h;
        let twice = shift_forward(k, 2.0 * a)?;
        let composed = shift_forward(&shift_forward(k, a)?, a)?;
        s.at_most("semigroup_law", twice.sub(&composed)?.max_abs(), 0.0);
        s.at_most("negativity", negativity(&twice)?, 1e-8);
        let gen = shift_generator(k);
        s.at_most("generator_conservativity", gen.conservativity_defect.norm() / k.max_abs(), 1e-14);

        let x = random_observable(grid, &mut ChaCha8Rng::seed_from_u64(ctx.seed));
        let forward = shift_forward(k, a)?.expectation(&x)?;
        let backward = k.expectation(&shift_backward_obs(&x, a)?)?;
        s.at_most("duality", (forward - backward).norm(), 1e-12);
        Ok(())
    });
    for lambda in [1.0, 4.0] {
        let bound = 2.0 * lambda * ctx.h;
        s.guard(&format!("resolvent_lambda{lambda}"), Bound::AtMost(bound), |s| {
            let (first, second) = resolvent_residuals(ctx.h, lambda)?;
            s.at_most(&format!("resolvent_left_lambda{lambda}"), first, bound);
            s.at_most(&format!("resolvent_right_lambda{lambda}"), second, bound);
            Ok(())
        });
        let name = format!("resolvent_order_lambda{lambda}");
        if ctx.orders() {
            s.guard(&name, Bound::AtLeast(0.9), |s| {
                let hs = [2.0 * ctx.h, ctx.h, 0.5 * ctx.h];
                let mut first = Vec::new();
                let mut second = Vec::new();
                for &h in &hs {
                    let (a, b) = resolvent_residuals(h, lambda)?;
                    first.push(a);
                    second.push(b);
                }
                s.at_least(&name, convergence_order(&hs, &first).min(convergence_order(&hs, &second)), 0.9);
                Ok(())
            });
        } else {
            s.skip(&name, Bound::AtLeast(0.9));
        }
    }
}

fn diffusion_model(ctx: &Context, s: &mut Suite) {
    let always = Bound::AtMost(0.0);
    s.guard("propagation", always, |s| {
        let grid = ctx.grid()?;
        let psi = GridFunction::from_real_fn(grid, |x| 2.0 * x * (-x).exp());
        let omega = DensityKernel::pure(&psi)?;
        let k = omega.kernel();
        let max0 = k.max_abs();
        let mut wall: f64 = 0.0;
        let mut cn: f64 = 0.0;
        let mut traces = vec![k.trace().re];
        for t in [0.1, 0.5, 1.0] {
            let out = diffusion_propagate(k, t)?;
            for j in 0..grid.n() {
                wall = wall.max(out.entry(0, j).norm()).max(out.entry(j, 0).norm());
            }
            traces.push(out.trace().re);
            let oracle = crank_nicolson_trace(|u| u * u * (-u).exp(), t, 1.0 / 256.0, 24.0, 1.0 / 2048.0);
            cn = cn.max((out.trace().re - oracle).abs());
        }
        s.at_most("wall_vanishing", wall / max0, 1e-6);
        s.at_most("crank_nicolson_trace", cn, ctx.tol(1e-3));
        let increase = traces.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        s.at_most("trace_nonincreasing", increase, 1e-14);

        let x = random_observable(grid, &mut ChaCha8Rng::seed_from_u64(ctx.seed)).scaled(c(1.0));
        let spec = ModelSpec::Diffusion(DiffusionModel::new(omega.clone()));
        let forward = spec.free_propagate(k, 0.25)?.expectation(&x)?;
        let backward = k.expectation(&spec.free_propagate_dual(&x, 0.25)?)?;
        s.at_most("duality", (forward - backward).norm(), 1e-10);
        Ok(())
    });
    s.guard("flux", always, |s| {
        let grid = ctx.grid()?;
        let vanishing = DensityKernel::from_profile(grid, Profile::XExp, 1.0)?;
        s.at_least("flux_nonnegative_on_vanishing", boundary_flux(vanishing.kernel()).re, -1e-6);
        let diag = diffusion_propagate_diagonal(vanishing.kernel(), 0.5)?;
        let full = diffusion_propagate(vanishing.kernel(), 0.5)?;
        let gap = diag.iter().enumerate().map(|(i, z)| (z - full.entry(i, i)).norm()).fold(0.0, f64::max);
        s.at_most("diagonal_matches_full", gap, 1e-12 * full.max_abs());
        Ok(())
    });
}

fn perturbation_engine(ctx: &Context, s: &mut Suite) {
    let always = Bound::AtMost(0.0);
    s.guard("shift_run", always, |s| {
        let grid = ctx.grid()?;
        let spec = ModelSpec::Shift(ShiftModel::new(DensityKernel::from_profile(grid, Profile::Exp, 1.0)?));
        let omega0 = DensityKernel::from_profile(grid, Profile::XExp, 1.0)?;
        let sol = duhamel_solve(&spec, omega0.kernel(), &ctx.duhamel())?;
        record_run(ctx, s, "shift", &sol);
        let telescoping = sol.points().iter().map(|p| (1.0 - p.free_trace - p.reset_mass).abs()).fold(0.0, f64::max);
        s.at_most("shift_extinction_telescoping", telescoping, 1e-12);
        let unit = dual_solve(&spec, &Observable::identity(grid), ctx.horizon, ctx.dt)?;
        s.at_most("shift_dual_unital", unit.sub(&Observable::identity(grid))?.max_abs(), 1e-12);
        Ok(())
    });
    s.guard("diffusion_run", always, |s| {
        let grid = Grid::with_extent(ctx.h, 10.0)?;
        let omega = DensityKernel::from_profile(grid, Profile::X2Exp, 1.0)?;
        let spec = ModelSpec::Diffusion(DiffusionModel::new(omega.clone()));
        let sol = duhamel_solve(&spec, omega.kernel(), &ctx.duhamel())?;
        record_run(ctx, s, "diffusion", &sol);
        let balance = sol.points().iter().map(|p| (1.0 - p.free_trace - p.reset_mass).abs()).fold(0.0, f64::max);
        s.at_most("diffusion_mass_balance", balance, ctx.tol(2e-3));
        Ok(())
    });
    s.guard("closed_form", always, |s| {
        let grid = Grid::with_extent(ctx.h, ctx.x_max.max(20.0))?;
        let model = ShiftModel::new(DensityKernel::from_profile(grid, Profile::Exp, 1.0)?);
        let spec = ModelSpec::Shift(model.clone());
        let omega0 = DensityKernel::from_profile(grid, Profile::XExp, 1.0)?;
        let horizon = 16.0 * ctx.h;
        let cfg = DuhamelConfig { tol: ctx.tol, max_iter: ctx.max_iter, ..DuhamelConfig::new(horizon, ctx.h) };
        let sol = duhamel_solve(&spec, omega0.kernel(), &cfg)?;
        let mut worst: f64 = 0.0;
        for (p, state) in sol.points().iter().zip(sol.states()).step_by(4) {
            let exact = arveson_closed_form(&model, omega0.kernel(), p.t)?;
            worst = worst.max(state.trace_distance(&exact)?);
        }
        s.at_most("closed_form_agreement", worst, ctx.tol(1e-6));

        let kernel_cfg = DuhamelConfig { fast_path: false, ..cfg };
        let slow = duhamel_solve(&spec, omega0.kernel(), &kernel_cfg)?;
        s.at_most("fast_path_matches_kernel_path", slow.final_state().trace_distance(sol.final_state())?, 1e-10);
        s.at_most("fast_path_same_iterations", (slow.iterations() as f64 - sol.iterations() as f64).abs(), 0.0);
        Ok(())
    });
}

fn record_run(ctx: &Context, s: &mut Suite, model: &str, sol: &DuhamelSolution) {
    let drift = sol.points().iter().map(|p| (p.trace - 1.0).abs()).fold(0.0, f64::max);
    s.at_most(&format!("{model}_trace_preservation"), drift, ctx.tol(2e-3));
    s.at_most(&format!("{model}_negativity"), solution_negativity(sol), 1e-8);
    let drop = sol.trace_profile().windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max);
    s.at_most(&format!("{model}_picard_monotone"), drop, 1e-12);
    s.at_most(&format!("{model}_picard_increment"), sol.final_increment(), ctx.tol);
}

fn probes(ctx: &Context, s: &mut Suite) {
    let always = Bound::AtMost(0.0);
    s.guard("domain", always, |s| {
        let grid = ctx.grid()?;
        let model = ShiftModel::new(DensityKernel::from_profile(grid, Profile::Exp, 1.0)?);
        let times: Vec<f64> = [32.0, 16.0, 8.0, 4.0, 2.0].iter().map(|m| m * ctx.h).collect();
        let x = Observable::identity(grid);
        let free = domain_membership_probe(&FreeDual(ModelSpec::Shift(model.clone())), &x, &times)?;
        s.at_most("domain_free_exponent", (free.exponent.unwrap_or(f64::NAN) - 1.0).abs(), 0.05);
        let perturbed = domain_membership_probe(&PerturbedDual::shift(model), &x, &times)?;
        s.at_most("domain_perturbed_quotients", perturbed.rows.iter().map(|r| r.measurement).fold(0.0, f64::max), 0.0);
        Ok(())
    });
    s.guard("cs_gap", always, |s| {
        let small = Grid::new(ctx.x_max / 15.0, 16)?;
        let omega = DensityKernel::diagonal(small, |x| (-x).exp())?;
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
        let mut wrong = 0usize;
        let mut samples: Vec<(Observable, bool)> =
            (0..20).map(|_| (random_observable(small, &mut rng), false)).collect();
        samples.push((Observable::scalar(small, Complex64::new(1.5, -0.5)), true));
        samples.push((Observable::identity(small), true));
        for (x, commuting) in &samples {
            let g = cs_gap(x, &omega)?;
            if g.gap_vanishes() != g.left_defect_vanishes() || g.gap_vanishes() != *commuting {
                wrong += 1;
            }
        }
        s.at_most("cs_gap_misclassified", wrong as f64, 0.0);
        Ok(())
    });
    s.guard("kraus", always, |s| {
        let grid = ctx.grid()?;
        let report = kraus_obstruction_witness(grid, ctx.seed)?;
        let domain_min =
            report.rows.iter().filter(|r| r.label != "witness").map(|r| r.measurement).fold(f64::INFINITY, f64::min);
        s.at_least("kraus_domain_flux_min", domain_min, -1e-6);
        let witness = report.measurements("witness").next().unwrap_or(f64::NAN);
        s.at_most("kraus_witness_flux", (witness + 2.0).abs(), ctx.tol(5e-3));
        Ok(())
    });
    s.guard("zero_correction", always, |s| {
        let grid = ctx.grid()?;
        let psi = GridFunction::from_real_fn(grid, |x| 2.0 * x * (-x).exp());
        let omega = DensityKernel::from_profile(grid, Profile::Exp, 1.0)?;
        let shift = ModelSpec::Shift(ShiftModel::new(omega.clone()));
        s.at_most("zero_correction_shift", zero_correction_check(&shift, &psi, &psi)?, 1e-14);
        let diffusion = ModelSpec::Diffusion(DiffusionModel::new(omega));
        let bound = crate::probe::ZERO_CORRECTION_BOUND * ctx.h * ctx.h;
        s.at_most("zero_correction_diffusion", zero_correction_check(&diffusion, &psi, &psi)?, bound);
        Ok(())
    });
}

/// Runs every suite. The configured states are validated but the checks use
/// fixed standard states on the configured grid.
pub fn verify(cfg: &ScenarioConfig) -> Result<VerifyReport, CliError> {
    let grid = cfg.grid()?;
    cfg.model_spec()?;
    cfg.initial.build(grid)?;
    let ctx = Context {
        h: cfg.h,
        x_max: cfg.x_max,
        horizon: cfg.horizon,
        dt: cfg.dt,
        tol: cfg.tol,
        max_iter: cfg.max_iter,
        seed: cfg.seed,
        scale: (cfg.h / REFERENCE_H).max(1.0),
    };
    let mut checks = Vec::new();
    kernel_core(&ctx, &mut Suite { name: "kernel-core", checks: &mut checks });
    shift_model(&ctx, &mut Suite { name: "shift-model", checks: &mut checks });
    diffusion_model(&ctx, &mut Suite { name: "diffusion-model", checks: &mut checks });
    perturbation_engine(&ctx, &mut Suite { name: "perturbation-engine", checks: &mut checks });
    probes(&ctx, &mut Suite { name: "probes", checks: &mut checks });
    Ok(VerifyReport { checks })
}

pub fn report_table(cfg: &ScenarioConfig, report: &VerifyReport) -> Result<Table, CliError> {
    let mut table = Table::new(cfg, &cfg.grid()?, &["suite", "check", "value", "tolerance", "status"]);
    for c in &report.checks {
        table.push(vec![
            c.suite.to_owned(),
            c.name.clone(),
            c.value.map(num).unwrap_or_default(),
            c.bound.to_string(),
            c.status.to_string(),
        ]);
    }
    Ok(table)
}

/// Runs `verify`, writes `verify.csv` and `verify_summary.txt`, and fails with a
/// numeric error when any check fails.
pub fn run_verify(cfg: &ScenarioConfig) -> Result<(VerifyReport, Vec<PathBuf>), CliError> {
    let report = verify(cfg)?;
    let mut output = Output::default();
    output.add_table("verify.csv", &report_table(cfg, &report)?);
    output.add("verify_summary.txt", report.summary());
    let written = output.write(&cfg.out)?;
    Ok((report, written))
}
