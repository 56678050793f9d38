//! Experiment drivers: each regenerates the data behind one family of
//! figures and writes one CSV per panel plus `manifest.json`.

use std::path::Path;

use paraopt::analysis::{
    exact_rho, phi_psi_hat, phi_psi_tracking_ie, rho_bound, SsigmaSpec,
};
use paraopt::propagators::build_propagator;
use paraopt::{
    make_advection_diffusion_problem, make_heat_problem, make_scalar_constant, paraopt_solve,
    HattedScalings, IeVariant, LinearControlProblem, LinearPreconditioner, NewtonConfig,
    ObjectiveKind, PreconditionerPlan, PropagatorKind, SolveLog, TimeDecomposition,
};
use serde::Serialize;

use crate::commands::bound_table;
use crate::config::{MethodChoice, Objective, ProblemConfig, RunConfig};
use crate::output::{csv, ensure_dir, num, sweep_csv, write_json, write_text};
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentId {
    /// Spectral radius and bound against fine and coarse step sizes (scalar tracking).
    ScalarTimestepSweep,
    /// Residual histories of the scalar cases A and B with their bounds.
    ScalarConvergenceAB,
    /// Spectral radius and bound against the number of intervals, fixed ΔT and fixed T.
    ScalarWeakScaling,
    /// Terminal-cost bound for FOTD and FDTO coarse propagators, and their ratio.
    TcFotdVsFdto,
    /// Heat-problem residual histories for several GMRES tolerances.
    GmresToleranceStudy,
    /// GMRES iterations per outer iteration, heat problem, L̂ ∈ {10, 100}.
    HeatIterationCounts,
    /// Total GMRES iterations against L̂, heat problem.
    HeatTotalIterations,
    /// GMRES iterations per outer iteration, advection-diffusion problem.
    AdvectionIterationCounts,
    /// ρ* contour data for tracking and both terminal-cost variants, J ∈ {1, 10}.
    BoundContours,
}

const OBJECTIVES: [ObjectiveKind; 2] = [ObjectiveKind::Tracking, ObjectiveKind::TerminalCost];

#[derive(Serialize)]
struct Panel {
    file: String,
    description: String,
    columns: Vec<String>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    format: &'static str,
    experiment: ExperimentId,
    panels: Vec<Panel>,
    config: &'a RunConfig,
}

struct Writer<'a> {
    dir: &'a Path,
    panels: Vec<Panel>,
}

impl Writer<'_> {
    fn panel(&mut self, file: &str, description: &str, text: String) -> Result<(), CliError> {
        let columns = text
            .lines()
            .nth(1)
            .map(|h| h.split(',').map(str::to_string).collect())
            .unwrap_or_default();
        write_text(&self.dir.join(file), &text)?;
        self.panels.push(Panel {
            file: file.into(),
            description: description.into(),
            columns,
        });
        Ok(())
    }
}

fn intervals_for(objective: ObjectiveKind, l_hat: usize) -> usize {
    match objective {
        ObjectiveKind::Tracking => l_hat + 1,
        ObjectiveKind::TerminalCost => l_hat,
    }
}

fn solver_err(e: paraopt::Error) -> CliError {
    CliError::solver(e)
}

/// Runs `id` and writes its artifacts into `c.output`.
pub fn cmd_experiment(id: ExperimentId, c: &RunConfig) -> Result<(), CliError> {
    ensure_dir(&c.output)?;
    let mut w = Writer {
        dir: &c.output,
        panels: Vec::new(),
    };
    match id {
        ExperimentId::ScalarTimestepSweep => scalar_timestep_sweep(&mut w)?,
        ExperimentId::ScalarConvergenceAB => scalar_convergence_ab(&mut w)?,
        ExperimentId::ScalarWeakScaling => scalar_weak_scaling(&mut w)?,
        ExperimentId::TcFotdVsFdto => tc_fotd_vs_fdto(&mut w, c)?,
        ExperimentId::GmresToleranceStudy => gmres_tolerance_study(&mut w, c)?,
        ExperimentId::HeatIterationCounts => iteration_counts(&mut w, c, Family::Heat)?,
        ExperimentId::HeatTotalIterations => heat_total_iterations(&mut w, c)?,
        ExperimentId::AdvectionIterationCounts => iteration_counts(&mut w, c, Family::Advection)?,
        ExperimentId::BoundContours => bound_contours(&mut w, c)?,
    }
    let manifest = Manifest {
        format: "paraopt-kit v1",
        experiment: id,
        panels: w.panels,
        config: c,
    };
    write_json(&c.output.join("manifest.json"), &manifest)
}

/// Tracking, γ = 1, σ = 16, T = 1, L̂ = 100.
fn scalar_timestep_sweep(w: &mut Writer) -> Result<(), CliError> {
    let (sigma, gamma, horizon, l_hat) = (16.0, 1.0, 1.0, 100);
    let obj = ObjectiveKind::Tracking;
    let dt = horizon / intervals_for(obj, l_hat) as f64;
    let ie = |j: usize| phi_psi_tracking_ie(sigma, gamma, dt / j as f64, j).map_err(solver_err);
    let point = |f, c| -> Result<(f64, f64), CliError> {
        let r = exact_rho(&SsigmaSpec::new(l_hat, f, c).map_err(solver_err)?).map_err(solver_err)?;
        Ok((r, rho_bound(&f, &c).map_err(solver_err)?))
    };

    let coarse = ie(1)?;
    let mut rows = Vec::new();
    for j in [1usize, 2, 5, 10, 20, 50, 100, 1_000, 10_000, 100_000] {
        let (r, b) = point(ie(j)?, coarse)?;
        rows.push(vec![num(1.0 / j as f64), num(r), num(b)]);
    }
    let exact = phi_psi_hat(obj, PropagatorKind::Exact, sigma * dt, obj.gamma_hat(gamma, dt))
        .map_err(solver_err)?;
    let (r, b) = point(exact, coarse)?;
    rows.push(vec![num(0.0), num(r), num(b)]);
    w.panel(
        "fixed_coarse_step.csv",
        "one-step coarse propagator; fine step as a fraction of the interval (0 = exact)",
        csv(&["fine_dt_over_interval", "rho", "rho_star"], rows),
    )?;

    let fine = ie(100_000)?;
    let mut rows = Vec::new();
    for j in [1usize, 2, 5, 10, 20, 50, 100, 1_000, 10_000] {
        let (r, b) = point(fine, ie(j)?)?;
        rows.push(vec![num(1.0 / j as f64), num(r), num(b)]);
    }
    w.panel(
        "fixed_fine_step.csv",
        "fine step 1e-5 of the interval; coarse step as a fraction of the interval",
        csv(&["coarse_dt_over_interval", "rho", "rho_star"], rows),
    )
}

fn fitted_rate(residuals: &[f64], floor: f64) -> f64 {
    let pts: Vec<(f64, f64)> = residuals
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, &r)| r > floor)
        .map(|(k, &r)| (k as f64, r.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxy / sxx).exp()
}

/// Tracking, T = L = 50, exact fine and 10-step implicit-Euler coarse,
/// `y_init = y_d = 1`.
fn scalar_convergence_ab(w: &mut Writer) -> Result<(), CliError> {
    let obj = ObjectiveKind::Tracking;
    let (horizon, l) = (50.0, 50);
    let dt = horizon / l as f64;
    let mut rates = Vec::new();
    for (name, sigma_hat, gamma_hat) in [("A", 1e-6, 6.0), ("B", 6e-4, 0.4)] {
        let (sigma, gamma) = HattedScalings { sigma_hat, gamma_hat, tau: dt }
            .to_raw(obj)
            .map_err(solver_err)?;
        let problem = make_scalar_constant(sigma, gamma, horizon, obj, 1.0, 1.0).map_err(solver_err)?;
        let d = TimeDecomposition::new(obj, horizon, l, 10, 10).map_err(solver_err)?;
        let fine = build_propagator(&problem, &d, PropagatorKind::Exact).map_err(solver_err)?;
        let coarse = build_propagator(&problem, &d, PropagatorKind::ie(10)).map_err(solver_err)?;
        let cfg = NewtonConfig {
            outer_tolerance: 1e-13,
            max_outer: 60,
            inner: paraopt::GmresConfig::new(1e-10, 500),
            record_time: false,
            ..NewtonConfig::default()
        };
        let (_, log) = paraopt_solve(&problem, &d, &fine, &coarse, None, &cfg).map_err(solver_err)?;
        let res = log.residuals();
        w.panel(
            &format!("convergence_{}.csv", name.to_lowercase()),
            &format!("residual history of case {name}"),
            csv(
                &["iteration", "residual"],
                res.iter().enumerate().map(|(k, r)| vec![k.to_string(), num(*r)]),
            ),
        )?;
        let f = phi_psi_hat(obj, PropagatorKind::Exact, sigma_hat, gamma_hat).map_err(solver_err)?;
        let c = phi_psi_hat(obj, PropagatorKind::ie(10), sigma_hat, gamma_hat).map_err(solver_err)?;
        let bound = rho_bound(&f, &c).map_err(solver_err)?;
        rates.push(vec![
            name.to_string(),
            num(sigma_hat),
            num(gamma_hat),
            num(bound),
            num(fitted_rate(&res, 1e-10 * res[0])),
        ]);
    }
    w.panel(
        "rates.csv",
        "bound and fitted geometric residual rate per case",
        csv(&["case", "sigma_hat", "gamma_hat", "rho_star", "fitted_rate"], rates),
    )
}

/// Exact fine, one-step coarse, σ = 16; ΔT = 1 fixed or T = 1 fixed.
fn scalar_weak_scaling(w: &mut Writer) -> Result<(), CliError> {
    let sigma = 16.0;
    let l_hats = [1usize, 2, 5, 10, 20, 50, 100, 200];
    for (obj, gamma) in [
        (ObjectiveKind::Tracking, 1.0),
        (ObjectiveKind::TerminalCost, 1.0),
        (ObjectiveKind::TerminalCost, 1e-6),
    ] {
        for fixed_t in [false, true] {
            let mut rows = Vec::new();
            for &l_hat in &l_hats {
                let dt = if fixed_t { 1.0 / intervals_for(obj, l_hat) as f64 } else { 1.0 };
                let (s, g) = (sigma * dt, obj.gamma_hat(gamma, dt));
                let f = phi_psi_hat(obj, PropagatorKind::Exact, s, g).map_err(solver_err)?;
                let c = phi_psi_hat(obj, PropagatorKind::ie(1), s, g).map_err(solver_err)?;
                let r = exact_rho(&SsigmaSpec::new(l_hat, f, c).map_err(solver_err)?)
                    .map_err(solver_err)?;
                let b = rho_bound(&f, &c).map_err(solver_err)?;
                rows.push(vec![l_hat.to_string(), num(dt), num(r), num(b)]);
            }
            let regime = if fixed_t { "fixed_t" } else { "fixed_dt" };
            w.panel(
                &format!("{obj}_gamma_{}_{regime}.csv", num(gamma)),
                &format!(
                    "{obj}, gamma = {gamma:e}, sigma = 16, {}",
                    if fixed_t { "T = 1" } else { "interval length 1" }
                ),
                csv(&["l_hat", "dt", "rho", "rho_star"], rows),
            )?;
        }
    }
    Ok(())
}

fn tc_fotd_vs_fdto(w: &mut Writer, c: &RunConfig) -> Result<(), CliError> {
    let mut tc = c.clone();
    tc.objective = Objective::TerminalCost;
    let fdto = PropagatorKind::ImplicitEuler { steps: 1, variant: IeVariant::Fdto };
    let a = bound_table(&tc, PropagatorKind::Exact, PropagatorKind::ie(1))?;
    let b = bound_table(&tc, PropagatorKind::Exact, fdto)?;
    let ratio = b.ratio(&a).map_err(solver_err)?;
    w.panel("rho_star_fotd.csv", "terminal cost, exact fine, one-step FOTD coarse", sweep_csv(&a))?;
    w.panel("rho_star_fdto.csv", "terminal cost, exact fine, one-step FDTO coarse", sweep_csv(&b))?;
    w.panel(
        "ratio_fdto_over_fotd.csv",
        "pointwise ratio of the FDTO and FOTD bounds",
        csv(
            &["sigma_hat", "gamma_hat", "ratio"],
            ratio.rows().map(|(s, g, r)| vec![num(s), num(g), num(r)]),
        ),
    )
}

#[derive(Clone, Copy)]
enum Family {
    Heat,
    Advection,
}

/// `(n, γ, T)` from the config when it describes a grid problem, otherwise
/// the standard heat setup.
fn grid_params(c: &RunConfig) -> (usize, f64, f64) {
    match c.problem {
        ProblemConfig::Heat { n, gamma, horizon }
        | ProblemConfig::AdvectionDiffusion { n, gamma, horizon } => (n, gamma, horizon),
        ProblemConfig::Scalar { .. } => (8, 0.05, 2.0),
    }
}

fn grid_problem(c: &RunConfig, family: Family, obj: ObjectiveKind) -> Result<LinearControlProblem, CliError> {
    let (n, gamma, horizon) = grid_params(c);
    match family {
        Family::Heat => make_heat_problem(n, gamma, horizon, obj),
        Family::Advection => make_advection_diffusion_problem(n, gamma, horizon, obj),
    }
    .map_err(|e| CliError::Config(e.to_string()))
}

/// One solve with the configured propagator steps and solver settings.
fn grid_solve(
    c: &RunConfig,
    problem: &LinearControlProblem,
    l_hat: usize,
    preconditioned: bool,
    inner_tol: f64,
) -> Result<SolveLog, CliError> {
    let obj = problem.objective();
    let d = TimeDecomposition::new(
        obj,
        problem.horizon(),
        intervals_for(obj, l_hat),
        c.decomposition.j_fine,
        c.decomposition.j_coarse,
    )
    .map_err(|e| CliError::Config(e.to_string()))?;
    let fine = build_propagator(problem, &d, PropagatorKind::ie(c.decomposition.j_fine)).map_err(solver_err)?;
    let coarse = build_propagator(problem, &d, PropagatorKind::ie(c.decomposition.j_coarse)).map_err(solver_err)?;
    let plan = if preconditioned {
        let mut pc = c.clone();
        pc.objective = match obj {
            ObjectiveKind::Tracking => Objective::Tracking,
            ObjectiveKind::TerminalCost => Objective::TerminalCost,
        };
        if obj == ObjectiveKind::Tracking && pc.preconditioner.method == MethodChoice::Triangular {
            pc.preconditioner.method = MethodChoice::General;
        }
        let method = pc.method();
        let alpha = pc.preconditioner.alpha.unwrap_or(method.default_alpha());
        Some(
            PreconditionerPlan::build(&coarse, &d, alpha, method, pc.small_system())
                .map_err(|e| CliError::Config(e.to_string()))?,
        )
    } else {
        None
    };
    let mut cfg = c.newton();
    cfg.inner.rel_tolerance = inner_tol;
    let pre = plan.as_ref().map(|p| p as &dyn LinearPreconditioner);
    let (_, log) = paraopt_solve(problem, &d, &fine, &coarse, pre, &cfg).map_err(solver_err)?;
    Ok(log)
}

fn gmres_tolerance_study(w: &mut Writer, c: &RunConfig) -> Result<(), CliError> {
    for obj in OBJECTIVES {
        let problem = grid_problem(c, Family::Heat, obj)?;
        let mut rows = Vec::new();
        for tol in [1e-1, 1e-2, 1e-3, 1e-4, 1e-6, 1e-8] {
            let log = grid_solve(c, &problem, 10, c.preconditioner.enabled, tol)?;
            let inner = std::iter::once(0).chain(log.records.iter().map(|r| r.inner_iterations));
            for (k, (r, i)) in log.residuals().into_iter().zip(inner).enumerate() {
                rows.push(vec![num(tol), k.to_string(), num(r), i.to_string()]);
            }
        }
        w.panel(
            &format!("gmres_tolerance_{obj}.csv"),
            &format!("heat problem, {obj}, L_hat = 10: residual per outer iteration for each GMRES tolerance"),
            csv(&["tolerance", "iteration", "residual", "inner_iters"], rows),
        )?;
    }
    Ok(())
}

fn iteration_counts(w: &mut Writer, c: &RunConfig, family: Family) -> Result<(), CliError> {
    let label = match family {
        Family::Heat => "heat",
        Family::Advection => "advection_diffusion",
    };
    for obj in OBJECTIVES {
        let problem = grid_problem(c, family, obj)?;
        let mut rows = Vec::new();
        for l_hat in [10usize, 100] {
            for pre in [false, true] {
                let log = grid_solve(c, &problem, l_hat, pre, c.solver.inner_tol)?;
                for r in &log.records {
                    rows.push(vec![
                        l_hat.to_string(),
                        (pre as u8).to_string(),
                        r.iteration.to_string(),
                        r.inner_iterations.to_string(),
                    ]);
                }
            }
        }
        w.panel(
            &format!("{label}_iteration_counts_{obj}.csv"),
            &format!("{label}, {obj}: GMRES iterations per outer iteration"),
            csv(&["l_hat", "preconditioned", "iteration", "inner_iters"], rows),
        )?;
    }
    Ok(())
}

fn heat_total_iterations(w: &mut Writer, c: &RunConfig) -> Result<(), CliError> {
    for obj in OBJECTIVES {
        let problem = grid_problem(c, Family::Heat, obj)?;
        let mut rows = Vec::new();
        for l_hat in [10usize, 20, 50, 100] {
            for pre in [false, true] {
                let log = grid_solve(c, &problem, l_hat, pre, c.solver.inner_tol)?;
                rows.push(vec![
                    l_hat.to_string(),
                    (pre as u8).to_string(),
                    log.outer_iterations().to_string(),
                    log.total_inner_iterations().to_string(),
                ]);
            }
        }
        w.panel(
            &format!("heat_total_iterations_{obj}.csv"),
            &format!("heat, {obj}: outer iterations and total GMRES iterations against L_hat"),
            csv(&["l_hat", "preconditioned", "outer_iterations", "total_inner_iters"], rows),
        )?;
    }
    Ok(())
}

fn bound_contours(w: &mut Writer, c: &RunConfig) -> Result<(), CliError> {
    for (obj, variant, label) in [
        (Objective::Tracking, IeVariant::Fotd, "tracking"),
        (Objective::TerminalCost, IeVariant::Fotd, "terminal_cost_fotd"),
        (Objective::TerminalCost, IeVariant::Fdto, "terminal_cost_fdto"),
    ] {
        for j in [1usize, 10] {
            let mut oc = c.clone();
            oc.objective = obj;
            let coarse = PropagatorKind::ImplicitEuler { steps: j, variant };
            let t = bound_table(&oc, PropagatorKind::Exact, coarse)?;
            w.panel(
                &format!("rho_star_{label}_j{j}.csv"),
                &format!("{label}, exact fine, {j}-step implicit-Euler coarse"),
                sweep_csv(&t),
            )?;
        }
    }
    Ok(())
}
