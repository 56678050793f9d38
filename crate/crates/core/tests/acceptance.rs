//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test -p paraopt --test acceptance`.

mod common;

use std::time::{Duration, Instant};

use paraopt::analysis::{
    bound_grid_sweep, exact_rho, log_grid, phi_psi_hat, phi_psi_tc_exact, phi_psi_tc_ie,
    phi_psi_tracking_exact, phi_psi_tracking_ie, rho_bound_terminal, rho_bound_tracking, PhiPsi,
    Provenance, SsigmaSpec,
};
use paraopt::numerics::{eigenvalues_general, GmresConfig, RealMatrix, RealVector};
use paraopt::paraopt::{matching_residual, PairedTrajectory};
use paraopt::propagators::build_propagator;
use paraopt::{
    make_advection_diffusion_problem, make_heat_problem, make_scalar_constant, paraopt_solve,
    AffinePropagator, HattedScalings, IeVariant, LinearControlProblem, NewtonConfig,
    ObjectiveKind, PreconditionerMethod, PreconditionerPlan, PropagatorKind, SmallSystemMethod,
    TimeDecomposition,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

const OBJECTIVES: [ObjectiveKind; 2] = [ObjectiveKind::Tracking, ObjectiveKind::TerminalCost];

fn check(cond: bool, msg: String) -> Outcome {
    if cond {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

/// Number of sub-intervals `L` giving `l_hat` Newton blocks.
fn intervals_for(objective: ObjectiveKind, l_hat: usize) -> usize {
    match objective {
        ObjectiveKind::Tracking => l_hat + 1,
        ObjectiveKind::TerminalCost => l_hat,
    }
}

fn random_phi_psi<R: Rng>(rng: &mut R, prov: Provenance) -> PhiPsi {
    let phi = rng.gen_range(0.001..0.999);
    let psi = 10f64.powf(rng.gen_range(-3.0..1.0));
    PhiPsi::raw(phi, psi, prov)
}

fn criterion_1() -> Outcome {
    let grid = log_grid(1e-4, 1e4, 50).map_err(e)?;
    let t = bound_grid_sweep(
        ObjectiveKind::Tracking,
        PropagatorKind::Exact,
        PropagatorKind::ie(1),
        &grid,
        &grid,
    )
    .map_err(e)?;
    let max = t.max();
    check(max < 1.0, format!("max rho* over 50x50 grid = {max:.6}"))
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_tr = f64::NEG_INFINITY;
    let mut worst_tc = f64::NEG_INFINITY;
    let draws = 500;
    for i in 0..draws {
        let l_hat = rng.gen_range(1..=12);
        // Half the tuples are free draws, half come from actual propagators.
        let (ftr, ctr, ftc, ctc) = if i % 2 == 0 {
            (
                random_phi_psi(&mut rng, Provenance::TrackingExact),
                random_phi_psi(&mut rng, Provenance::TrackingExact),
                random_phi_psi(&mut rng, Provenance::TcExact),
                random_phi_psi(&mut rng, Provenance::TcExact),
            )
        } else {
            let s = 10f64.powf(rng.gen_range(-3.0..1.5));
            let g = 10f64.powf(rng.gen_range(-2.0..2.0));
            let j = rng.gen_range(1..=5);
            let variant = if rng.gen_bool(0.5) { IeVariant::Fotd } else { IeVariant::Fdto };
            let tr = ObjectiveKind::Tracking;
            let tc = ObjectiveKind::TerminalCost;
            (
                phi_psi_hat(tr, PropagatorKind::Exact, s, g).map_err(e)?,
                phi_psi_hat(tr, PropagatorKind::ie(j), s, g).map_err(e)?,
                phi_psi_hat(tc, PropagatorKind::Exact, s, g).map_err(e)?,
                phi_psi_hat(tc, PropagatorKind::ImplicitEuler { steps: j, variant }, s, g)
                    .map_err(e)?,
            )
        };
        let r = exact_rho(&SsigmaSpec::new(l_hat, ftr, ctr).map_err(e)?).map_err(e)?;
        let b = rho_bound_tracking(&ftr, &ctr);
        if !(r < b) {
            return Err(format!("tracking: exact {r:e} >= bound {b:e} at {ftr:?} {ctr:?} L_hat={l_hat}"));
        }
        worst_tr = worst_tr.max(r / b);
        let r = exact_rho(&SsigmaSpec::new(l_hat, ftc, ctc).map_err(e)?).map_err(e)?;
        let b = rho_bound_terminal(&ftc, &ctc).map_err(e)?;
        if !(r <= b + 1e-10) {
            return Err(format!("terminal: exact {r:e} > bound {b:e} at {ftc:?} {ctc:?} L_hat={l_hat}"));
        }
        worst_tc = worst_tc.max(r - b);
    }
    Ok(format!(
        "{draws} tuples; max exact/bound (tracking) = {worst_tr:.4}, max exact-bound (terminal) = {worst_tc:.3e}"
    ))
}

fn criterion_3() -> Outcome {
    let (gamma, sigma, horizon, l_hat) = (1.0, 16.0, 1.0, 100);
    let obj = ObjectiveKind::Tracking;
    let dt = horizon / intervals_for(obj, l_hat) as f64;
    let fine = phi_psi_tracking_exact(sigma, gamma, dt).map_err(e)?;
    let coarse = phi_psi_tracking_ie(sigma, gamma, dt, 1).map_err(e)?;
    let r = exact_rho(&SsigmaSpec::new(l_hat, fine, coarse).map_err(e)?).map_err(e)?;
    let b = rho_bound_tracking(&fine, &coarse);
    let ratio = r / b;
    check(
        ratio >= 0.5 && r < b,
        format!("exact rho = {r:.6}, rho* = {b:.6}, ratio = {ratio:.4}"),
    )
}

/// Least-squares slope of `log r_k` against `k`, over residuals above `floor`.
fn fitted_rate(residuals: &[f64], floor: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = residuals
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, &r)| r > floor)
        .map(|(k, &r)| (k as f64, r.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some((sxy / sxx).exp())
}

fn scalar_case(sigma_hat: f64, gamma_hat: f64) -> Result<(f64, f64), String> {
    let obj = ObjectiveKind::Tracking;
    let (horizon, l) = (50.0, 50);
    let dt = horizon / l as f64;
    let (sigma, gamma) = HattedScalings { sigma_hat, gamma_hat, tau: dt }
        .to_raw(obj)
        .map_err(e)?;
    let problem = make_scalar_constant(sigma, gamma, horizon, obj, 1.0, 1.0).map_err(e)?;
    let decomp = TimeDecomposition::new(obj, horizon, l, 10, 10).map_err(e)?;
    let fine = build_propagator(&problem, &decomp, PropagatorKind::Exact).map_err(e)?;
    let coarse = build_propagator(&problem, &decomp, PropagatorKind::ie(10)).map_err(e)?;
    let cfg = NewtonConfig {
        outer_tolerance: 1e-13,
        max_outer: 60,
        inner: GmresConfig::new(1e-10, 500),
        record_time: false,
        ..NewtonConfig::default()
    };
    let (_, log) = paraopt_solve(&problem, &decomp, &fine, &coarse, None, &cfg).map_err(e)?;
    let res = log.residuals();
    let rate = fitted_rate(&res, 1e-10 * res[0]).ok_or("too few iterations to fit a rate")?;
    let f = phi_psi_hat(obj, PropagatorKind::Exact, sigma_hat, gamma_hat).map_err(e)?;
    let c = phi_psi_hat(obj, PropagatorKind::ie(10), sigma_hat, gamma_hat).map_err(e)?;
    Ok((rate, rho_bound_tracking(&f, &c)))
}

fn criterion_4() -> Outcome {
    let (ra, ba) = scalar_case(1e-6, 6.0)?;
    let (rb, bb) = scalar_case(6e-4, 0.4)?;
    let msg = format!("A: rate {ra:.4e} vs rho* {ba:.4e}; B: rate {rb:.4e} vs rho* {bb:.4e}");
    check(ra <= 1.05 * ba && rb <= 1.05 * bb && rb < ra, msg)
}

fn error_recurrence(problem: &LinearControlProblem, l: usize) -> Result<f64, String> {
    let obj = problem.objective();
    let decomp = TimeDecomposition::new(obj, problem.horizon(), l, 6, 1).map_err(e)?;
    let l_hat = decomp.l_hat();
    let fine = build_propagator(problem, &decomp, PropagatorKind::ie(6)).map_err(e)?;
    let coarse = build_propagator(problem, &decomp, PropagatorKind::ie(1)).map_err(e)?;
    let a = common::dense_jacobian(&fine, l_hat);
    let at = common::dense_jacobian(&coarse, l_hat);
    let n = a.nrows();
    let s = RealMatrix::identity(n, n) - at.clone().lu().solve(&a).ok_or("singular coarse Jacobian")?;
    // f(x) = A x + f(0), so the solution is x* = −A⁻¹ f(0).
    let zero = PairedTrajectory::zeros(l_hat, problem.dim());
    let f0 = matching_residual(&fine, problem, &decomp, &zero).map_err(e)?;
    let x_star = -a.lu().solve(&f0).ok_or("singular Jacobian")?;
    let cfg = NewtonConfig {
        outer_tolerance: 1e-11,
        max_outer: 30,
        inner: GmresConfig::new(1e-12, 2 * n),
        keep_iterates: true,
        record_time: false,
    };
    let (_, log) = paraopt_solve(problem, &decomp, &fine, &coarse, None, &cfg).map_err(e)?;
    let e0 = (&log.iterates[0] - &x_star).norm();
    let mut worst = 0.0f64;
    let mut steps = 0;
    for w in log.iterates.windows(2) {
        let prev = &w[0] - &x_star;
        let cur = &w[1] - &x_star;
        if prev.norm() < 1e-6 * e0 {
            break;
        }
        worst = worst.max((&cur - &s * &prev).norm() / prev.norm());
        steps += 1;
    }
    if steps < 2 {
        return Err(format!(
            "only {steps} usable iterations ({} iterates, ||e0|| = {e0:e}, {:?}, residuals {:?})",
            log.iterates.len(),
            log.termination,
            log.residuals()
        ));
    }
    Ok(worst)
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for obj in OBJECTIVES {
        let four = common::random_problem(&mut rng, 4, obj, 0.05, 2.0);
        worst = worst.max(error_recurrence(&four, intervals_for(obj, 8))?);
        let rand = common::random_problem(&mut rng, 3, obj, 0.1, 3.0);
        worst = worst.max(error_recurrence(&rand, intervals_for(obj, 6))?);
    }
    check(worst <= 1e-8, format!("max ||e^k - S e^(k-1)|| / ||e^(k-1)|| = {worst:.3e}"))
}

fn small_instances(seed: u64) -> Result<Vec<(AffinePropagator, TimeDecomposition)>, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for obj in OBJECTIVES {
        for (m, l_hat, kind) in [
            (1usize, 8usize, PropagatorKind::ie(1)),
            (4, 6, PropagatorKind::ie(2)),
            (6, 8, PropagatorKind::ie(1)),
            (5, 5, PropagatorKind::Exact),
        ] {
            let problem = if m == 4 {
                make_heat_problem(2, 0.05, 2.0, obj).map_err(e)?
            } else {
                common::random_problem(&mut rng, m, obj, 0.2, 2.0)
            };
            let d = TimeDecomposition::new(obj, problem.horizon(), intervals_for(obj, l_hat), 1, 1)
                .map_err(e)?;
            out.push((build_propagator(&problem, &d, kind).map_err(e)?, d));
        }
        if obj == ObjectiveKind::TerminalCost {
            let problem = make_advection_diffusion_problem(2, 0.05, 2.0, obj).map_err(e)?;
            let d = TimeDecomposition::new(obj, 2.0, 7, 1, 1).map_err(e)?;
            out.push((
                build_propagator(
                    &problem,
                    &d,
                    PropagatorKind::ImplicitEuler { steps: 1, variant: IeVariant::Fdto },
                )
                .map_err(e)?,
                d,
            ));
        }
    }
    Ok(out)
}

fn plan_variants(prop: &AffinePropagator) -> Vec<(PreconditionerMethod, SmallSystemMethod, f64)> {
    let mut v = Vec::new();
    for small in [SmallSystemMethod::ExplicitDirect, SmallSystemMethod::BlackBoxIterative] {
        v.push((PreconditionerMethod::General, small, -1.0));
        if prop.psi_q_is_zero() {
            v.push((PreconditionerMethod::Triangular, small, 0.01));
            v.push((PreconditionerMethod::Triangular, small, -1.0));
        }
    }
    v
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    let mut count = 0;
    let mut tri = 0;
    for (prop, d) in small_instances(6)? {
        for (method, small, alpha) in plan_variants(&prop) {
            let plan = PreconditionerPlan::build(&prop, &d, alpha, method, small).map_err(e)?;
            let p = common::dense_p_alpha(&prop, d.l_hat(), alpha);
            for _ in 0..3 {
                let v = RealVector::from_fn(p.nrows(), |_, _| rng.gen_range(-1.0..1.0));
                let x = plan.apply_inverse(&v).map_err(e)?;
                worst = worst.max((&p * x - &v).norm() / v.norm());
            }
            count += 1;
            tri += (method == PreconditionerMethod::Triangular) as usize;
        }
    }
    check(
        worst <= 1e-10 && tri > 0,
        format!("{count} plans ({tri} triangular); max ||P x - v|| / ||v|| = {worst:.3e}"),
    )
}

fn criterion_7() -> Outcome {
    let mut worst_excess = i64::MIN;
    let mut count = 0;
    for (prop, d) in small_instances(7)? {
        let m = prop.dim();
        let at = common::dense_jacobian(&prop, d.l_hat());
        for (method, small, alpha) in plan_variants(&prop) {
            if small == SmallSystemMethod::BlackBoxIterative {
                continue;
            }
            let plan = PreconditionerPlan::build(&prop, &d, alpha, method, small).map_err(e)?;
            let n = at.nrows();
            let mut pa = RealMatrix::zeros(n, n);
            for j in 0..n {
                let col = plan.apply_inverse(&at.column(j).into_owned()).map_err(e)?;
                pa.set_column(j, &col);
            }
            let eig = eigenvalues_general(&pa).map_err(|err| {
                format!("{err} for M = {m}, L_hat = {}, {method:?}, alpha = {alpha}, ||PA - I|| = {:e}", d.l_hat(), (&pa - RealMatrix::identity(n, n)).norm())
            })?;
            let away = eig.iter().filter(|z| (*z - 1.0).norm() > 1e-8).count();
            if away > 2 * m {
                return Err(format!(
                    "{away} eigenvalues away from 1 for M = {m}, L_hat = {}, {method:?}, alpha = {alpha}",
                    d.l_hat()
                ));
            }
            worst_excess = worst_excess.max(away as i64 - 2 * m as i64);
            count += 1;
        }
    }
    Ok(format!("{count} operators; max (count away from 1) - 2M = {worst_excess}"))
}

struct Counts {
    per_outer: Vec<usize>,
    outer: usize,
    mean_inner: f64,
    converged: bool,
}

fn heat_like_solve(
    problem: &LinearControlProblem,
    l_hat: usize,
    preconditioned: bool,
    inner_tol: f64,
) -> Result<Counts, String> {
    let obj = problem.objective();
    let d = TimeDecomposition::new(obj, problem.horizon(), intervals_for(obj, l_hat), 10, 1)
        .map_err(e)?;
    let fine = build_propagator(problem, &d, PropagatorKind::ie(10)).map_err(e)?;
    let coarse = build_propagator(problem, &d, PropagatorKind::ie(1)).map_err(e)?;
    let plan = if preconditioned {
        let method = match obj {
            ObjectiveKind::Tracking => PreconditionerMethod::General,
            ObjectiveKind::TerminalCost => PreconditionerMethod::Triangular,
        };
        Some(
            PreconditionerPlan::build(
                &coarse,
                &d,
                method.default_alpha(),
                method,
                SmallSystemMethod::ExplicitDirect,
            )
            .map_err(e)?,
        )
    } else {
        None
    };
    let cfg = NewtonConfig {
        outer_tolerance: 1e-6,
        max_outer: 50,
        inner: GmresConfig::new(inner_tol, 5000),
        record_time: false,
        ..NewtonConfig::default()
    };
    let pre = plan.as_ref().map(|p| p as &dyn paraopt::LinearPreconditioner);
    let (_, log) = paraopt_solve(problem, &d, &fine, &coarse, pre, &cfg).map_err(e)?;
    Ok(Counts {
        per_outer: log.records.iter().map(|r| r.inner_iterations).collect(),
        outer: log.outer_iterations(),
        mean_inner: log.total_inner_iterations() as f64 / log.outer_iterations().max(1) as f64,
        converged: log.converged(),
    })
}

fn scaling_check(
    make: fn(usize, f64, f64, ObjectiveKind) -> paraopt::Result<LinearControlProblem>,
    check_unpreconditioned: bool,
) -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for obj in OBJECTIVES {
        let problem = make(8, 0.05, 2.0, obj).map_err(e)?;
        let p10 = heat_like_solve(&problem, 10, true, 1e-4)?;
        let p100 = heat_like_solve(&problem, 100, true, 1e-4)?;
        let pr = p100.mean_inner / p10.mean_inner;
        ok &= p10.converged && p100.converged && pr <= 1.5;
        let mut line = format!(
            "{obj}: precond mean inner {:.2} -> {:.2} (x{pr:.2})",
            p10.mean_inner, p100.mean_inner
        );
        if check_unpreconditioned {
            let u10 = heat_like_solve(&problem, 10, false, 1e-4)?;
            let u100 = heat_like_solve(&problem, 100, false, 1e-4)?;
            let ur = u100.mean_inner / u10.mean_inner;
            ok &= ur >= 2.0;
            line += &format!(
                ", unprecond {:.2} -> {:.2} (x{ur:.2}, totals {} -> {})",
                u10.mean_inner,
                u100.mean_inner,
                u10.per_outer.iter().sum::<usize>(),
                u100.per_outer.iter().sum::<usize>()
            );
            if std::env::var("ACCEPTANCE_VERBOSE").is_ok() {
                line += &format!(
                    " [{:?} {:?} | {:?} {:?}]",
                    p10.per_outer, p100.per_outer, u10.per_outer, u100.per_outer
                );
            }
        }
        parts.push(line);
    }
    check(ok, parts.join("; "))
}

fn criterion_8() -> Outcome {
    scaling_check(make_heat_problem, true)
}

fn criterion_9() -> Outcome {
    scaling_check(make_advection_diffusion_problem, false)
}

fn criterion_10() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for obj in OBJECTIVES {
        let problem = make_heat_problem(8, 0.05, 2.0, obj).map_err(e)?;
        let loose = heat_like_solve(&problem, 10, true, 1e-3)?;
        let tight = heat_like_solve(&problem, 10, true, 1e-8)?;
        ok &= loose.converged && tight.converged && loose.outer <= tight.outer + 2;
        parts.push(format!("{obj}: outer {} (1e-3) vs {} (1e-8)", loose.outer, tight.outer));
    }
    check(ok, parts.join("; "))
}

fn criterion_11() -> Outcome {
    let obj = ObjectiveKind::TerminalCost;
    let (gamma, dt) = (1e-6, 1.0);
    let gamma_hat = obj.gamma_hat(gamma, dt);
    let grid = log_grid(1e-4, 1e4, 200).map_err(e)?;
    let fdto = PropagatorKind::ImplicitEuler { steps: 1, variant: IeVariant::Fdto };
    let a = bound_grid_sweep(obj, PropagatorKind::Exact, fdto, &grid, &[gamma_hat]).map_err(e)?;
    let b = bound_grid_sweep(obj, PropagatorKind::Exact, PropagatorKind::ie(1), &grid, &[gamma_hat])
        .map_err(e)?;
    let hits: Vec<f64> = grid
        .iter()
        .zip(a.rho.iter().zip(&b.rho))
        .filter(|(_, (f, o))| **f > 1.0 && **o < 1.0)
        .map(|(s, _)| *s)
        .collect();
    check(
        !hits.is_empty(),
        format!(
            "{} of {} grid points separate (first sigma_hat = {:e}); max FOTD rho* = {:.4}",
            hits.len(),
            grid.len(),
            hits.first().copied().unwrap_or(f64::NAN),
            b.max()
        ),
    )
}

fn criterion_12() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst = (0.0f64, String::new());
    let mut note = |dev: f64, what: &str, params: (f64, f64, f64, usize)| {
        if !(dev <= worst.0) {
            worst = (dev, format!("{what} at (sigma, gamma, tau, J) = {params:?}"));
        }
    };
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1.0);
    for _ in 0..200 {
        let sigma = 10f64.powf(rng.gen_range(-3.0..2.0));
        let gamma = 10f64.powf(rng.gen_range(-3.0..1.0));
        let tau = rng.gen_range(0.01..1.0);
        let j = rng.gen_range(1..=8);
        let at = (sigma, gamma, tau, j);
        let tr = ObjectiveKind::Tracking;
        let tc = ObjectiveKind::TerminalCost;

        let c = phi_psi_tracking_ie(sigma, gamma, tau, j).map_err(e)?;
        let (pp, sp, pq, sq) = common::scalar_ie_assembly(tr, IeVariant::Fotd, sigma, gamma, tau, j);
        let dev = rel(c.phi, pp).max(rel(c.psi, sp)).max(rel(c.phi, pq)).max(rel(c.psi, sq));
        note(dev, "tracking IE", at);

        for variant in [IeVariant::Fotd, IeVariant::Fdto] {
            let c = phi_psi_tc_ie(sigma, gamma, tau, j, variant).map_err(e)?;
            let (pp, sp, pq, sq) = common::scalar_ie_assembly(tc, variant, sigma, gamma, tau, j);
            let dev = rel(c.phi, pp).max(rel(c.psi, sp)).max(rel(c.phi, pq)).max(sq.abs());
            note(dev, &format!("terminal-cost IE {variant:?}"), at);
        }

        let dt = tau * j as f64;
        let c = phi_psi_tracking_exact(sigma, gamma, dt).map_err(e)?;
        let (p, s) = common::scalar_exact_expm(tr, sigma, gamma, dt);
        note(rel(c.phi, p).max(rel(c.psi, s)), "tracking exact", at);
        let c = phi_psi_tc_exact(sigma, gamma, dt).map_err(e)?;
        let (p, s) = common::scalar_exact_expm(tc, sigma, gamma, dt);
        note(rel(c.phi, p).max(rel(c.psi, s)), "terminal-cost exact", at);
    }
    check(
        worst.0 <= 1e-10,
        format!("200 draws; max relative deviation = {:.3e} ({})", worst.0, worst.1),
    )
}

fn main() {
    let criteria: [(&str, Duration, fn() -> Outcome); 12] = [
        ("example non-divergence grid", Duration::from_secs(5), criterion_1),
        ("bound validity", Duration::from_secs(60), criterion_2),
        ("bound sharpness", Duration::from_secs(10), criterion_3),
        ("convergence-rate realization", Duration::from_secs(30), criterion_4),
        ("error-recurrence oracle", Duration::from_secs(5), criterion_5),
        ("preconditioner exactness", Duration::from_secs(10), criterion_6),
        ("eigenvalue clustering of P^-1 A~", Duration::from_secs(10), criterion_7),
        ("heat weak scaling", Duration::from_secs(600), criterion_8),
        ("advection-diffusion robustness", Duration::from_secs(600), criterion_9),
        ("GMRES tolerance study", Duration::from_secs(300), criterion_10),
        ("FOTD vs FDTO separation", Duration::from_secs(5), criterion_11),
        ("coefficient catalog oracle", Duration::from_secs(30), criterion_12),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|s| s.parse().ok());
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let id = i + 1;
        if only.is_some_and(|o| o != id) {
            continue;
        }
        let start = Instant::now();
        let outcome = run();
        let took = start.elapsed();
        let timing = format!("{:.2}s of {}s", took.as_secs_f64(), budget.as_secs());
        match outcome {
            Ok(msg) if took <= *budget => println!("PASS {id:>2} {name}: {msg} [{timing}]"),
            Ok(msg) => {
                failed += 1;
                println!("FAIL {id:>2} {name}: over time budget; {msg} [{timing}]");
            }
            Err(msg) => {
                failed += 1;
                println!("FAIL {id:>2} {name}: {msg} [{timing}]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criterion/criteria failed");
        std::process::exit(1);
    }
}

