//! `probe <name>`: structural probes written as `probe_<name>.csv`.

use std::path::PathBuf;

use log::info;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use semilab::engine::ModelSpec;
use semilab::probes::{
    cs_gap_survey, domain_membership_probe, kraus_obstruction_witness, zero_correction_check, ClosedFormShiftDual,
    DualEvolution, FreeDual, PerturbedDual, ProbeReport, ProbeRow, Verdict,
};
use semilab::{Complex64, Grid, GridFunction, Observable};

use crate::config::{DualKind, ModelKind, ProbeObservable, ScenarioConfig};
use crate::output::{Output, Table};
use crate::CliError;

pub const PROBE_NAMES: &[&str] = &["domain", "cs-gap", "kraus-witness", "zero-correction"];

/// Nodes per axis of the `cs-gap` survey grid.
pub const CS_GAP_NODES: usize = 16;

/// A priori bound on the zero-correction residual in units of `h^2`.
pub const ZERO_CORRECTION_BOUND: f64 = 20.0;

/// Seeded complex matrix with entries uniform in the unit square.
pub fn random_observable(grid: Grid, rng: &mut impl Rng) -> Observable {
    let n = grid.n();
    let m = (0..n * n)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect::<Vec<_>>();
    Observable::new(grid, semilab::Array2::from_shape_vec((n, n), m).expect("square")).expect("finite entries")
}

pub fn probe_observable(kind: ProbeObservable, grid: Grid, seed: u64) -> Observable {
    match kind {
        ProbeObservable::Identity => Observable::identity(grid),
        ProbeObservable::Diagonal => Observable::diagonal(grid, |x| Complex64::new((-x).exp(), 0.0)),
        ProbeObservable::Scalar => Observable::scalar(grid, Complex64::new(2.0, 0.0)),
        ProbeObservable::Random => random_observable(grid, &mut ChaCha8Rng::seed_from_u64(seed)),
    }
}

fn dual(cfg: &ScenarioConfig, spec: ModelSpec) -> Result<Box<dyn DualEvolution>, CliError> {
    Ok(match (cfg.probe.dual, spec) {
        (DualKind::Free, spec) => Box::new(FreeDual(spec)),
        (DualKind::Perturbed, spec) => Box::new(PerturbedDual::new(spec, cfg.dt)),
        (DualKind::ClosedForm, ModelSpec::Shift(model)) => Box::new(ClosedFormShiftDual(model)),
        (DualKind::ClosedForm, _) => {
            return Err(CliError::Config("probe_dual = closed_form needs model = shift".into()))
        }
    })
}

pub fn probe(cfg: &ScenarioConfig, name: &str) -> Result<ProbeReport, CliError> {
    let grid = cfg.grid()?;
    let report = match name {
        "domain" => {
            let evolution = dual(cfg, cfg.model_spec()?)?;
            let x = probe_observable(cfg.probe.observable, grid, cfg.seed);
            let times: Vec<f64> = cfg.probe.scales.iter().map(|&m| m as f64 * grid.h()).collect();
            domain_membership_probe(evolution.as_ref(), &x, &times)?
        }
        "cs-gap" => {
            let small = Grid::new(cfg.x_max / (CS_GAP_NODES - 1) as f64, CS_GAP_NODES)?;
            let omega = cfg.omega.build(small)?;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let mut observables = vec![probe_observable(cfg.probe.observable, small, cfg.seed)];
            observables.extend((0..cfg.probe.samples).map(|_| random_observable(small, &mut rng)));
            cs_gap_survey(&omega, &observables)?
        }
        "kraus-witness" => kraus_obstruction_witness(grid, cfg.seed)?,
        "zero-correction" => {
            let spec = cfg.model_spec()?;
            let psi = GridFunction::from_profile(grid, cfg.probe.psi, cfg.probe.psi_alpha)?;
            let value = zero_correction_check(&spec, &psi, &psi)?;
            let bound = ZERO_CORRECTION_BOUND * grid.h() * grid.h();
            ProbeReport {
                probe: "zero-correction".into(),
                inputs: format!("{} on {grid}; psi = {} alpha {}", spec.name(), cfg.probe.psi, cfg.probe.psi_alpha),
                rows: vec![ProbeRow { label: "zero-correction".into(), scale: grid.h(), measurement: value }],
                exponent: None,
                verdict: if value <= bound { Verdict::Within } else { Verdict::Exceeds },
            }
        }
        other => {
            return Err(CliError::Config(format!(
                "unknown probe '{other}' (expected one of {})",
                PROBE_NAMES.join(", ")
            )))
        }
    };
    if cfg.model == ModelKind::Shift && name == "kraus-witness" {
        info!("kraus-witness uses the diffusion wall flux regardless of model");
    }
    info!("probe {name}: {} -> {}", report.inputs, report.verdict);
    Ok(report)
}

pub fn report_table(cfg: &ScenarioConfig, report: &ProbeReport) -> Result<Table, CliError> {
    let mut table = Table::new(cfg, &cfg.grid()?, &["probe", "scale", "measurement", "exponent", "verdict"]);
    table.push_raw(&report.csv_rows());
    Ok(table)
}

pub fn run_probe(cfg: &ScenarioConfig, name: &str) -> Result<(ProbeReport, Vec<PathBuf>), CliError> {
    let report = probe(cfg, name)?;
    let mut output = Output::default();
    output.add_table(&format!("probe_{name}.csv"), &report_table(cfg, &report)?);
    let written = output.write(&cfg.out)?;
    Ok((report, written))
}
