//! The ParaOpt outer iteration: matching conditions between sub-intervals,
//! their Jacobian with fine or coarse propagator blocks, and the inexact
//! Newton driver whose inner systems are solved by GMRES.

use std::time::Instant;

use log::{debug, warn};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::{gmres, GmresConfig, RealVector};
use crate::problem::{LinearControlProblem, ObjectiveKind, TimeDecomposition};
use crate::propagators::AffinePropagator;

/// Interval-boundary unknowns `y_1..y_L̂` and `λ̂_1..λ̂_L̂`.
#[derive(Clone, Debug, PartialEq)]
pub struct PairedTrajectory {
    pub y: Vec<RealVector>,
    pub lam_hat: Vec<RealVector>,
}

impl PairedTrajectory {
    pub fn zeros(l_hat: usize, m: usize) -> Self {
        Self {
            y: vec![RealVector::zeros(m); l_hat],
            lam_hat: vec![RealVector::zeros(m); l_hat],
        }
    }

    /// Splits `x = [y; λ̂]` into blocks of length `m`.
    pub fn from_stacked(x: &RealVector, l_hat: usize, m: usize) -> Result<Self> {
        if x.len() != 2 * l_hat * m {
            return Err(Error::Dimension(format!(
                "stacked vector has length {}, expected {}",
                x.len(),
                2 * l_hat * m
            )));
        }
        let block = |i: usize| x.rows(i * m, m).into_owned();
        Ok(Self {
            y: (0..l_hat).map(block).collect(),
            lam_hat: (l_hat..2 * l_hat).map(block).collect(),
        })
    }

    pub fn to_stacked(&self) -> RealVector {
        let m = self.dim();
        let l_hat = self.l_hat();
        let mut x = RealVector::zeros(2 * l_hat * m);
        for (i, b) in self.y.iter().chain(&self.lam_hat).enumerate() {
            x.rows_mut(i * m, m).copy_from(b);
        }
        x
    }

    pub fn l_hat(&self) -> usize {
        self.y.len()
    }

    pub fn dim(&self) -> usize {
        self.y.first().map_or(0, |v| v.len())
    }

    /// Unscaled adjoint `λ_l` given the problem's γ.
    pub fn lambda(&self, objective: ObjectiveKind, gamma: f64) -> Vec<RealVector> {
        let c = objective.adjoint_scale(gamma);
        self.lam_hat.iter().map(|v| v / c).collect()
    }
}

/// Below this many flops per product, block loops run sequentially.
const PARALLEL_WORK: usize = 1 << 16;

/// Evaluates `f(l)` for `l = 1..=n` and stacks the results in order.
fn stack_blocks<F>(n: usize, m: usize, out: &mut RealVector, offset: usize, f: F) -> Result<()>
where
    F: Fn(usize) -> Result<RealVector> + Sync,
{
    let blocks: Vec<RealVector> = if n * m * m >= PARALLEL_WORK {
        (1..=n).into_par_iter().map(&f).collect::<Result<_>>()?
    } else {
        (1..=n).map(&f).collect::<Result<_>>()?
    };
    for (i, b) in blocks.iter().enumerate() {
        out.rows_mut(offset + i * m, m).copy_from(b);
    }
    Ok(())
}

fn check_shapes(prop: &AffinePropagator, decomp: &TimeDecomposition, len: usize) -> Result<usize> {
    let m = prop.dim();
    if prop.objective() != decomp.objective() {
        return Err(Error::InvalidConfig(format!(
            "propagator objective {} differs from decomposition objective {}",
            prop.objective(),
            decomp.objective()
        )));
    }
    if len != 2 * decomp.l_hat() * m {
        return Err(Error::Dimension(format!(
            "vector has length {len}, expected {}",
            2 * decomp.l_hat() * m
        )));
    }
    Ok(m)
}

/// Stacked matching conditions `f(x)`; zero exactly at the discrete optimum.
pub fn matching_residual(
    fine: &AffinePropagator,
    problem: &LinearControlProblem,
    decomp: &TimeDecomposition,
    x: &PairedTrajectory,
) -> Result<RealVector> {
    let l_hat = decomp.l_hat();
    if x.l_hat() != l_hat || x.dim() != problem.dim() || fine.dim() != problem.dim() {
        return Err(Error::Dimension(format!(
            "trajectory has {} blocks of length {}, expected {l_hat} of length {}",
            x.l_hat(),
            x.dim(),
            problem.dim()
        )));
    }
    if fine.intervals() < decomp.l() {
        return Err(Error::Dimension(format!(
            "propagator has offsets for {} intervals, decomposition has {}",
            fine.intervals(),
            decomp.l()
        )));
    }
    let m = check_shapes(fine, decomp, 2 * l_hat * x.dim())?;
    let zero = RealVector::zeros(m);
    let mut out = RealVector::zeros(2 * l_hat * m);
    stack_blocks(l_hat, m, &mut out, 0, |l| {
        let y_prev = if l == 1 { problem.y_init() } else { &x.y[l - 2] };
        let (p, _) = fine.propagate(l, y_prev, &x.lam_hat[l - 1])?;
        Ok(&x.y[l - 1] - p)
    })?;
    stack_blocks(l_hat, m, &mut out, l_hat * m, |l| {
        let lam = &x.lam_hat[l - 1];
        if l < l_hat {
            let (_, q) = fine.propagate(l + 1, &x.y[l - 1], &x.lam_hat[l])?;
            return Ok(lam - q);
        }
        match (problem.objective(), problem.y_target()) {
            (ObjectiveKind::Tracking, _) => {
                let (_, q) = fine.propagate(l + 1, &x.y[l - 1], &zero)?;
                Ok(lam - q)
            }
            (ObjectiveKind::TerminalCost, Some(target)) => Ok(lam - (&x.y[l - 1] - target)),
            (ObjectiveKind::TerminalCost, None) => {
                Err(Error::InvalidConfig("terminal-cost problem without target".into()))
            }
        }
    })?;
    Ok(out)
}

/// Product of the matching-condition Jacobian built from `prop`'s blocks with `v`.
///
/// With the fine propagator this is `A`; with the coarse one it is the
/// coarse-grid-correction matrix `Ã`. Offsets do not enter.
pub fn apply_jacobian(
    prop: &AffinePropagator,
    decomp: &TimeDecomposition,
    v: &RealVector,
) -> Result<RealVector> {
    let m = check_shapes(prop, decomp, v.len())?;
    let l_hat = decomp.l_hat();
    let vy = |l: usize| v.rows((l - 1) * m, m);
    let vl = |l: usize| v.rows((l_hat + l - 1) * m, m);
    let mut out = RealVector::zeros(v.len());
    stack_blocks(l_hat, m, &mut out, 0, |l| {
        let mut r = vy(l).into_owned() + prop.psi_p() * vl(l);
        if l > 1 {
            r -= prop.phi_p() * vy(l - 1);
        }
        Ok(r)
    })?;
    stack_blocks(l_hat, m, &mut out, l_hat * m, |l| {
        let mut r = vl(l).into_owned();
        if l < l_hat {
            r -= prop.psi_q() * vy(l) + prop.phi_q() * vl(l + 1);
        } else {
            match prop.objective() {
                ObjectiveKind::Tracking => r -= prop.psi_q() * vy(l),
                ObjectiveKind::TerminalCost => r -= vy(l),
            }
        }
        Ok(r)
    })?;
    Ok(out)
}

/// `A v` with the fine propagator.
pub fn apply_a(fine: &AffinePropagator, decomp: &TimeDecomposition, v: &RealVector) -> Result<RealVector> {
    apply_jacobian(fine, decomp, v)
}

/// `Ã v` with the coarse propagator.
pub fn apply_a_tilde(
    coarse: &AffinePropagator,
    decomp: &TimeDecomposition,
    v: &RealVector,
) -> Result<RealVector> {
    apply_jacobian(coarse, decomp, v)
}

/// Approximate inverse of `Ã` used as right preconditioner.
pub trait LinearPreconditioner: Sync {
    fn apply(&self, v: &RealVector) -> Result<RealVector>;
}

/// Settings of the outer Newton iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct NewtonConfig {
    /// Stop when `‖f‖ ≤ outer_tolerance · max(1, ‖f⁰‖)`.
    pub outer_tolerance: f64,
    pub max_outer: usize,
    pub inner: GmresConfig,
    /// Keep every iterate in the log (for error-propagation studies).
    pub keep_iterates: bool,
    /// Report zero wall time so that logs are reproducible byte for byte.
    pub record_time: bool,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            outer_tolerance: 1e-6,
            max_outer: 100,
            inner: GmresConfig::new(1e-4, 1000),
            keep_iterates: false,
            record_time: true,
        }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.outer_tolerance > 0.0 && self.outer_tolerance.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "outer tolerance must be positive, got {}",
                self.outer_tolerance
            )));
        }
        self.inner.validate()
    }
}

/// One executed outer iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// `‖f(x^k)‖` after the update.
    pub residual: f64,
    pub inner_iterations: usize,
    pub inner_converged: bool,
    pub seconds: f64,
}

/// Why the outer iteration stopped.
#[derive(Clone, Debug, PartialEq)]
pub enum Termination {
    Converged,
    MaxOuter,
    Diverged { from: f64, to: f64 },
    InnerFailure(String),
}

/// Per-iteration history of a solve.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveLog {
    pub initial_residual: f64,
    pub records: Vec<IterationRecord>,
    pub termination: Termination,
    /// `x⁰, x¹, …` stacked, when requested.
    pub iterates: Vec<RealVector>,
}

impl SolveLog {
    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }

    pub fn outer_iterations(&self) -> usize {
        self.records.len()
    }

    pub fn total_inner_iterations(&self) -> usize {
        self.records.iter().map(|r| r.inner_iterations).sum()
    }

    /// Residual norms `‖f⁰‖, ‖f¹‖, …`.
    pub fn residuals(&self) -> Vec<f64> {
        std::iter::once(self.initial_residual)
            .chain(self.records.iter().map(|r| r.residual))
            .collect()
    }
}

const DIVERGENCE_WINDOW: usize = 5;
const DIVERGENCE_FACTOR: f64 = 10.0;

/// Runs ParaOpt from the zero trajectory.
///
/// Each step solves `Ã δ = −f(x)` with right-preconditioned GMRES and sets
/// `x ← x + δ`. Solver breakdowns end the run and are reported through
/// [`SolveLog::termination`]; only invalid inputs produce an `Err`.
pub fn paraopt_solve(
    problem: &LinearControlProblem,
    decomp: &TimeDecomposition,
    fine: &AffinePropagator,
    coarse: &AffinePropagator,
    preconditioner: Option<&dyn LinearPreconditioner>,
    cfg: &NewtonConfig,
) -> Result<(PairedTrajectory, SolveLog)> {
    cfg.validate()?;
    if coarse.dim() != problem.dim() {
        return Err(Error::Dimension(format!(
            "coarse propagator has dimension {}, problem {}",
            coarse.dim(),
            problem.dim()
        )));
    }
    let (l_hat, m) = (decomp.l_hat(), problem.dim());
    let mut x = PairedTrajectory::zeros(l_hat, m);
    let mut xs = x.to_stacked();
    let mut f = matching_residual(fine, problem, decomp, &x)?;
    let r0 = f.norm();
    let threshold = cfg.outer_tolerance * r0.max(1.0);
    let mut log = SolveLog {
        initial_residual: r0,
        records: Vec::new(),
        termination: Termination::MaxOuter,
        iterates: Vec::new(),
    };
    if cfg.keep_iterates {
        log.iterates.push(xs.clone());
    }
    let mut current = r0;
    loop {
        if !current.is_finite() {
            log.termination = Termination::InnerFailure("non-finite outer residual".into());
            break;
        }
        if current <= threshold {
            log.termination = Termination::Converged;
            break;
        }
        if log.records.len() >= cfg.max_outer {
            log.termination = Termination::MaxOuter;
            break;
        }
        let start = Instant::now();
        let rhs = -&f;
        let apply = |v: &RealVector| apply_a_tilde(coarse, decomp, v);
        let mut pre = |v: &RealVector| preconditioner.expect("checked").apply(v);
        let pre_ref: Option<&mut dyn FnMut(&RealVector) -> Result<RealVector>> =
            if preconditioner.is_some() { Some(&mut pre) } else { None };
        let (delta, report) = match gmres(apply, &rhs, &RealVector::zeros(rhs.len()), pre_ref, &cfg.inner) {
            Ok(out) => out,
            Err(e) => {
                warn!("inner solve failed at outer iteration {}: {e}", log.records.len() + 1);
                log.termination = Termination::InnerFailure(e.to_string());
                break;
            }
        };
        if !report.converged {
            warn!(
                "inner GMRES stopped at relative residual {:e} after {} iterations",
                report.final_relative_residual, report.iterations
            );
        }
        xs += delta;
        x = PairedTrajectory::from_stacked(&xs, l_hat, m)?;
        f = matching_residual(fine, problem, decomp, &x)?;
        current = f.norm();
        let seconds = if cfg.record_time {
            start.elapsed().as_secs_f64()
        } else {
            0.0
        };
        log.records.push(IterationRecord {
            iteration: log.records.len() + 1,
            residual: current,
            inner_iterations: report.iterations,
            inner_converged: report.converged,
            seconds,
        });
        if cfg.keep_iterates {
            log.iterates.push(xs.clone());
        }
        debug!(
            "outer {}: residual {current:e}, {} inner iterations",
            log.records.len(),
            report.iterations
        );
        let k = log.records.len();
        if k >= DIVERGENCE_WINDOW {
            let earlier = if k == DIVERGENCE_WINDOW {
                r0
            } else {
                log.records[k - DIVERGENCE_WINDOW - 1].residual
            };
            if current > DIVERGENCE_FACTOR * earlier {
                warn!("outer iteration diverged: {earlier:e} -> {current:e}");
                log.termination = Termination::Diverged {
                    from: earlier,
                    to: current,
                };
                break;
            }
        }
    }
    Ok((x, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RealMatrix;
    use crate::problem::{make_scalar_constant, make_scalar_problem, ObjectiveData};
    use crate::propagators::{build_propagator, PropagatorKind};

    fn identity_prop(objective: ObjectiveKind, intervals: usize) -> AffinePropagator {
        AffinePropagator::from_parts(
            objective,
            RealMatrix::identity(1, 1),
            RealMatrix::identity(1, 1),
            RealMatrix::identity(1, 1),
            if objective == ObjectiveKind::Tracking {
                RealMatrix::identity(1, 1)
            } else {
                RealMatrix::zeros(1, 1)
            },
            vec![RealVector::zeros(1); intervals],
            vec![RealVector::zeros(1); intervals],
        )
        .unwrap()
    }

    #[test]
    fn identity_blocks_by_hand() {
        // Tracking, L̂ = 2, M = 1, Φ = Ψ = 1:
        // rows: y1 + λ1; y2 − y1 + λ2; λ1 − y1 − λ2; λ2 − y2.
        let d = TimeDecomposition::with_l_hat(ObjectiveKind::Tracking, 1.0, 2, 1, 1).unwrap();
        let prop = identity_prop(ObjectiveKind::Tracking, 3);
        let v = RealVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]);
        let got = apply_jacobian(&prop, &d, &v).unwrap();
        let want = [1.0 + 3.0, 2.0 - 1.0 + 4.0, 3.0 - 1.0 - 4.0, 4.0 - 2.0];
        for (g, w) in got.iter().zip(want) {
            assert_eq!(*g, w);
        }
        assert_eq!(apply_jacobian(&prop, &d, &RealVector::zeros(4)).unwrap().norm(), 0.0);
    }

    #[test]
    fn terminal_cost_single_block_matrix() {
        // L̂ = 1, M = 1: Ã = [[1, ψ̃], [−1, 1]].
        let d = TimeDecomposition::new(ObjectiveKind::TerminalCost, 1.0, 2, 1, 1).unwrap();
        let d1 = TimeDecomposition::with_l_hat(ObjectiveKind::TerminalCost, 1.0, 2, 1, 1).unwrap();
        assert_eq!(d.l_hat(), d1.l_hat());
        let psi = 0.3;
        let prop = AffinePropagator::from_parts(
            ObjectiveKind::TerminalCost,
            RealMatrix::from_element(1, 1, 0.5),
            RealMatrix::from_element(1, 1, psi),
            RealMatrix::from_element(1, 1, 0.5),
            RealMatrix::zeros(1, 1),
            vec![RealVector::zeros(1); 2],
            vec![RealVector::zeros(1); 2],
        )
        .unwrap();
        let e = |i: usize| RealVector::from_fn(4, |r, _| if r == i { 1.0 } else { 0.0 });
        // Column of y_2 (index 1): top row 2 gets 1, bottom row 2 gets −1.
        let c = apply_jacobian(&prop, &d, &e(1)).unwrap();
        assert_eq!(c.as_slice(), &[0.0, 1.0, 0.0, -1.0]);
        // Column of λ_2 (index 3): top row 2 gets ψ̃, bottom row 2 gets 1, bottom row 1 gets −φ̃.
        let c = apply_jacobian(&prop, &d, &e(3)).unwrap();
        assert_eq!(c.as_slice(), &[0.0, psi, -0.5, 1.0]);
    }

    #[test]
    fn zero_problem_has_zero_residual() {
        let p = make_scalar_constant(3.0, 1.0, 1.0, ObjectiveKind::Tracking, 0.0, 0.0).unwrap();
        let d = TimeDecomposition::new(ObjectiveKind::Tracking, 1.0, 4, 2, 1).unwrap();
        let fine = build_propagator(&p, &d, PropagatorKind::ie(2)).unwrap();
        let r = matching_residual(&fine, &p, &d, &PairedTrajectory::zeros(3, 1)).unwrap();
        assert_eq!(r.norm(), 0.0);
    }

    #[test]
    fn residual_is_affine_with_jacobian() {
        let p = make_scalar_problem(
            2.0,
            0.5,
            1.0,
            1.0,
            ObjectiveData::Tracking {
                y_d: std::sync::Arc::new(|t| RealVector::from_element(1, t.sin())),
            },
        )
        .unwrap();
        let d = TimeDecomposition::new(ObjectiveKind::Tracking, 1.0, 6, 3, 1).unwrap();
        let fine = build_propagator(&p, &d, PropagatorKind::ie(3)).unwrap();
        let n = 2 * d.l_hat();
        let x = RealVector::from_fn(n, |i, _| (i as f64 * 0.7).cos());
        let v = RealVector::from_fn(n, |i, _| (i as f64 * 1.3).sin());
        let f = |z: &RealVector| {
            matching_residual(&fine, &p, &d, &PairedTrajectory::from_stacked(z, d.l_hat(), 1).unwrap())
                .unwrap()
        };
        let diff = f(&(&x + &v)) - f(&x);
        let av = apply_a(&fine, &d, &v).unwrap();
        assert!((diff - av).norm() < 1e-12);
    }

    #[test]
    fn coarse_equal_to_fine_converges_in_one_step() {
        for objective in [ObjectiveKind::Tracking, ObjectiveKind::TerminalCost] {
            let p = make_scalar_constant(16.0, 1.0, 1.0, objective, 1.0, 1.0).unwrap();
            let d = TimeDecomposition::new(objective, 1.0, 10, 4, 4).unwrap();
            let fine = build_propagator(&p, &d, PropagatorKind::ie(4)).unwrap();
            let cfg = NewtonConfig {
                inner: GmresConfig::new(1e-12, 200),
                ..Default::default()
            };
            let (x, log) = paraopt_solve(&p, &d, &fine, &fine, None, &cfg).unwrap();
            assert!(log.converged());
            assert_eq!(log.outer_iterations(), 1);
            let r = matching_residual(&fine, &p, &d, &x).unwrap();
            assert!(r.norm() <= 1e-6 * log.initial_residual.max(1.0));
        }
    }

    #[test]
    fn converges_with_coarse_propagator() {
        let p = make_scalar_constant(16.0, 1.0, 1.0, ObjectiveKind::Tracking, 1.0, 1.0).unwrap();
        let d = TimeDecomposition::new(ObjectiveKind::Tracking, 1.0, 20, 1, 1).unwrap();
        let fine = build_propagator(&p, &d, PropagatorKind::Exact).unwrap();
        let coarse = build_propagator(&p, &d, PropagatorKind::ie(1)).unwrap();
        let (_, log) = paraopt_solve(&p, &d, &fine, &coarse, None, &NewtonConfig::default()).unwrap();
        assert!(log.converged());
        assert!(log.outer_iterations() > 1);
        let res = log.residuals();
        assert!(res.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn divergence_is_detected() {
        // Underestimating a strong coupling Ψ makes the iteration blow up.
        let p = make_scalar_constant(0.1, 1e-3, 1.0, ObjectiveKind::TerminalCost, 1.0, 1.0).unwrap();
        let d = TimeDecomposition::new(ObjectiveKind::TerminalCost, 1.0, 8, 1, 1).unwrap();
        let fine = build_propagator(&p, &d, PropagatorKind::Exact).unwrap();
        let bad = AffinePropagator::from_parts(
            ObjectiveKind::TerminalCost,
            fine.phi_p().clone(),
            fine.psi_p() * 0.1,
            fine.phi_q().clone(),
            RealMatrix::zeros(1, 1),
            vec![RealVector::zeros(1); 8],
            vec![RealVector::zeros(1); 8],
        )
        .unwrap();
        let cfg = NewtonConfig {
            inner: GmresConfig::new(1e-12, 100),
            ..Default::default()
        };
        let (_, log) = paraopt_solve(&p, &d, &fine, &bad, None, &cfg).unwrap();
        assert!(matches!(log.termination, Termination::Diverged { .. }), "{:?}", log.termination);
    }

    #[test]
    fn stacking_round_trip() {
        let x = RealVector::from_fn(12, |i, _| i as f64);
        let t = PairedTrajectory::from_stacked(&x, 3, 2).unwrap();
        assert_eq!(t.y[1].as_slice(), &[2.0, 3.0]);
        assert_eq!(t.lam_hat[0].as_slice(), &[6.0, 7.0]);
        assert_eq!(t.to_stacked(), x);
        assert!(PairedTrajectory::from_stacked(&x, 4, 2).is_err());
    }
}
