//! `evolve`: Duhamel solution of the configured scenario.

use std::path::PathBuf;

use log::info;
use semilab::engine::duhamel_solve;
use semilab::{DuhamelConfig, DuhamelSolution};

use crate::config::{ModelKind, ScenarioConfig, SnapshotMode};
use crate::output::{num, Output, Table};
use crate::CliError;

/// Solution of one `evolve` run together with the files it produces.
#[derive(Debug)]
pub struct EvolveRun {
    pub solution: DuhamelSolution,
    pub output: Output,
}

pub fn evolve(cfg: &ScenarioConfig) -> Result<EvolveRun, CliError> {
    let grid = cfg.grid()?;
    let spec = cfg.model_spec()?;
    let omega0 = cfg.initial.build(grid)?;
    let duhamel = DuhamelConfig {
        horizon: cfg.horizon,
        dt: cfg.dt,
        tol: cfg.tol,
        max_iter: cfg.max_iter,
        fast_path: cfg.fast_path,
        keep_states: cfg.snapshots == SnapshotMode::All,
    };
    info!("evolve {} on {grid}, T={} dt={}", spec.name(), cfg.horizon, cfg.dt);
    let solution = duhamel_solve(&spec, omega0.kernel(), &duhamel)?;
    info!(
        "{} Picard iterations, increment {:e}, converged={}",
        solution.iterations(),
        solution.final_increment(),
        solution.converged()
    );

    let iterations = solution.iterations().to_string();
    let mut sol = Table::new(cfg, &grid, &["t", "trace", "min_eig", "escape_rate", "iterations"]);
    let diffusion = cfg.model == ModelKind::Diffusion;
    let mut series_cols = vec!["t", "trace", "min_eig", "trace_deficit", "reset_mass"];
    if diffusion {
        series_cols.push("flux");
    }
    let mut series = Table::new(cfg, &grid, &series_cols);
    let initial_trace = omega0.kernel().trace().re;
    for p in solution.points() {
        sol.push(vec![num(p.t), num(p.trace), num(p.min_eig), num(p.escape_rate), iterations.clone()]);
        let mut row =
            vec![num(p.t), num(p.trace), num(p.min_eig), num(initial_trace - p.free_trace), num(p.reset_mass)];
        if diffusion {
            row.push(num(p.free_escape_rate));
        }
        series.push(row);
    }
    let mut picard = Table::new(cfg, &grid, &["iteration", "trace"]);
    for (m, tr) in solution.trace_profile().iter().enumerate() {
        picard.push(vec![m.to_string(), num(*tr)]);
    }

    let mut output = Output::default();
    output.add_table("solution.csv", &sol);
    output.add_table("timeseries.csv", &series);
    output.add_table("picard.csv", &picard);
    match cfg.snapshots {
        SnapshotMode::None => {}
        SnapshotMode::Final => output.add_snapshot("state_final.csv", solution.final_state())?,
        SnapshotMode::All => {
            for (k, state) in solution.states().iter().enumerate() {
                output.add_snapshot(&format!("state_{k:05}.csv"), state)?;
            }
        }
    }
    Ok(EvolveRun { solution, output })
}

/// Runs `evolve` and writes its files. Without convergence the files are still
/// written and a numeric error is returned.
pub fn run_evolve(cfg: &ScenarioConfig) -> Result<Vec<PathBuf>, CliError> {
    let run = evolve(cfg)?;
    let written = run.output.write(&cfg.out)?;
    if !run.solution.converged() {
        return Err(CliError::Numeric(format!(
            "Picard iteration did not converge in {} iterations (last increment {:e}, tol {:e}); partial output in {}",
            run.solution.iterations(),
            run.solution.final_increment(),
            cfg.tol,
            cfg.out.display()
        )));
    }
    Ok(written)
}
