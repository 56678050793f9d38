//! The `bound` and `solve` subcommands.

use paraopt::analysis::{bound_grid_sweep, log_grid, SweepTable};
use paraopt::{paraopt_solve, LinearPreconditioner, PropagatorKind, SolveLog, Termination};
use serde::Serialize;

use crate::config::{FineChoice, RunConfig, SolveSetup};
use crate::output::{ensure_dir, solve_log_csv, sweep_csv, write_json, write_text};
use crate::CliError;

/// ρ* over the configured `(σ̂, γ̂)` grid.
pub fn bound_table(c: &RunConfig, fine: PropagatorKind, coarse: PropagatorKind) -> Result<SweepTable, CliError> {
    let cfg = |e: paraopt::Error| CliError::Config(e.to_string());
    let g = &c.bound;
    let s = log_grid(g.sigma_hat.min, g.sigma_hat.max, g.sigma_hat.points).map_err(cfg)?;
    let h = log_grid(g.gamma_hat.min, g.gamma_hat.max, g.gamma_hat.points).map_err(cfg)?;
    bound_grid_sweep(c.objective_kind(), fine, coarse, &s, &h).map_err(CliError::solver)
}

fn bound_fine_kind(c: &RunConfig) -> PropagatorKind {
    match c.propagators.fine {
        FineChoice::Exact => PropagatorKind::Exact,
        FineChoice::Ie => c.fine_kind(),
    }
}

/// Writes `rho_star.csv`; returns the largest ρ* on the grid.
pub fn cmd_bound(c: &RunConfig) -> Result<f64, CliError> {
    ensure_dir(&c.output)?;
    let t = bound_table(c, bound_fine_kind(c), c.coarse_kind())?;
    write_text(&c.output.join("rho_star.csv"), &sweep_csv(&t))?;
    Ok(t.max())
}

#[derive(Serialize)]
struct Summary<'a> {
    format: &'static str,
    converged: bool,
    termination: String,
    outer_iterations: usize,
    total_inner_iterations: usize,
    initial_residual: f64,
    final_residual: f64,
    l_hat: usize,
    unknowns: usize,
    config: &'a RunConfig,
}

fn describe(t: &Termination) -> String {
    match t {
        Termination::Converged => "converged".into(),
        Termination::MaxOuter => "max_outer".into(),
        Termination::Diverged { from, to } => format!("diverged ({from:e} -> {to:e})"),
        Termination::InnerFailure(m) => format!("inner_failure: {m}"),
    }
}

/// Runs one ParaOpt solve and writes `solve_log.csv` and `summary.json`. The
/// files are written even when the solve does not converge.
pub fn cmd_solve(c: &RunConfig) -> Result<SolveLog, CliError> {
    ensure_dir(&c.output)?;
    let setup = SolveSetup::build(c)?;
    let pre = setup.plan.as_ref().map(|p| p as &dyn LinearPreconditioner);
    let (_, log) = paraopt_solve(&setup.problem, &setup.decomp, &setup.fine, &setup.coarse, pre, &c.newton())
        .map_err(CliError::solver)?;
    write_text(&c.output.join("solve_log.csv"), &solve_log_csv(&log))?;
    let l_hat = setup.decomp.l_hat();
    let summary = Summary {
        format: "paraopt-kit v1",
        converged: log.converged(),
        termination: describe(&log.termination),
        outer_iterations: log.outer_iterations(),
        total_inner_iterations: log.total_inner_iterations(),
        initial_residual: log.initial_residual,
        final_residual: *log.residuals().last().unwrap_or(&log.initial_residual),
        l_hat,
        unknowns: 2 * l_hat * setup.problem.dim(),
        config: c,
    };
    write_json(&c.output.join("summary.json"), &summary)?;
    if !log.converged() {
        return Err(CliError::NotConverged(describe(&log.termination)));
    }
    Ok(log)
}
