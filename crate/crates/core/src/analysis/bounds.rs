//! Computable upper bounds ρ* on the ParaOpt convergence factor.

use log::warn;

use super::coefficients::PhiPsi;
use crate::error::{Error, Result};

/// Tracking bound at one eigenvalue:
/// `√(((φ̃−φ)² + (ψ̃−ψ)²) / ((1−φ̃)² + ψ̃²))`.
pub fn rho_bound_tracking(fine: &PhiPsi, coarse: &PhiPsi) -> f64 {
    let num = (coarse.phi - fine.phi).powi(2) + (coarse.psi - fine.psi).powi(2);
    let den = (1.0 - coarse.phi).powi(2) + coarse.psi.powi(2);
    (num / den).sqrt()
}

/// Result of the terminal-cost root search.
#[derive(Clone, Debug, PartialEq)]
pub struct TerminalBound {
    pub rho_star: f64,
    /// Selected root of `f∞`.
    pub x_star: f64,
    /// Every root found, whether or not its series converges: `(x, converges)`.
    pub candidates: Vec<(f64, bool)>,
}

/// Ratio `φ̃ + δ/x` of the geometric series inside `f∞`.
fn series_ratio(phi_c: f64, delta: f64, x: f64) -> f64 {
    if x == 0.0 {
        if delta == 0.0 {
            phi_c
        } else {
            f64::INFINITY
        }
    } else {
        phi_c + delta / x
    }
}

/// Terminal-cost bound with the root search exposed.
///
/// `ρ* = max(|δ|/(1−φ̃), |x*|)` with `δ = φ − φ̃`. The root `x*` of `f∞` is
/// `(ψ̃−ψ)/ψ̃` when the series diverges there; otherwise it solves
/// `(1+ψ̃−φ̃²)x² − (2φ̃δ + ψ̃−ψ)x − δ² = 0` among the roots where the series
/// converges, taking the largest magnitude (positive on ties).
pub fn terminal_bound_details(fine: &PhiPsi, coarse: &PhiPsi) -> Result<TerminalBound> {
    let (phi, psi, phi_c, psi_c) = (fine.phi, fine.psi, coarse.phi, coarse.psi);
    if !(phi_c < 1.0) {
        return Err(Error::AssumptionViolated(format!(
            "coarse phi = {phi_c:e} must be below 1"
        )));
    }
    let delta = phi - phi_c;
    let first = delta.abs() / (1.0 - phi_c);
    let mut candidates = Vec::new();

    if psi_c > 0.0 {
        let x2 = (psi_c - psi) / psi_c;
        let diverges = series_ratio(phi_c, delta, x2).abs() >= 1.0;
        candidates.push((x2, !diverges));
        if diverges {
            return Ok(TerminalBound {
                rho_star: first.max(x2.abs()),
                x_star: x2,
                candidates,
            });
        }
        candidates.clear();
    }

    let a = 1.0 + psi_c - phi_c * phi_c;
    let x_star = if delta == 0.0 {
        let x = (psi_c - psi) / a;
        candidates.push((x, phi_c.abs() < 1.0));
        x
    } else {
        let b = -(2.0 * phi_c * delta + psi_c - psi);
        let c = -delta * delta;
        // a > 0 and c < 0, so both roots are real and of opposite sign.
        let disc = (b * b - 4.0 * a * c).sqrt();
        let q = -0.5 * (b + b.signum() * disc);
        let roots = [q / a, c / q];
        let mut best: Option<f64> = None;
        for x in roots {
            let ok = series_ratio(phi_c, delta, x).abs() < 1.0;
            candidates.push((x, ok));
            if ok {
                best = Some(match best {
                    None => x,
                    Some(b) if x.abs() > b.abs() || (x.abs() == b.abs() && x > b) => x,
                    Some(b) => b,
                });
            }
        }
        match best {
            Some(x) => x,
            None => {
                return Err(Error::NoRoot(format!(
                    "no admissible root of f_inf for phi = {phi:e}, psi = {psi:e}, \
                     coarse phi = {phi_c:e}, coarse psi = {psi_c:e}; candidates {candidates:?}"
                )))
            }
        }
    };
    Ok(TerminalBound {
        rho_star: first.max(x_star.abs()),
        x_star,
        candidates,
    })
}

/// Terminal-cost bound at one eigenvalue.
pub fn rho_bound_terminal(fine: &PhiPsi, coarse: &PhiPsi) -> Result<f64> {
    terminal_bound_details(fine, coarse).map(|b| b.rho_star)
}

/// Bound at one eigenvalue for the objective of `fine`.
pub fn rho_bound(fine: &PhiPsi, coarse: &PhiPsi) -> Result<f64> {
    let obj = fine.provenance.objective();
    if obj != coarse.provenance.objective() {
        return Err(Error::InvalidConfig(
            "fine and coarse coefficients belong to different objectives".into(),
        ));
    }
    match obj {
        crate::problem::ObjectiveKind::Tracking => Ok(rho_bound_tracking(fine, coarse)),
        crate::problem::ObjectiveKind::TerminalCost => rho_bound_terminal(fine, coarse),
    }
}

/// Maximum of [`rho_bound`] over the eigenvalues `sigmas`, with `pair`
/// producing the fine and coarse coefficients at each one. Non-positive
/// eigenvalues fall outside the theory and are skipped with a warning.
pub fn rho_bound_max<F>(sigmas: &[f64], pair: F) -> Result<f64>
where
    F: Fn(f64) -> Result<(PhiPsi, PhiPsi)>,
{
    let mut worst: Option<f64> = None;
    let mut skipped = 0usize;
    for &s in sigmas {
        if !(s > 0.0) {
            skipped += 1;
            continue;
        }
        let (f, c) = pair(s)?;
        let r = rho_bound(&f, &c)?;
        worst = Some(worst.map_or(r, |w: f64| w.max(r)));
    }
    if skipped > 0 {
        warn!("skipped {skipped} non-positive eigenvalue(s) in the bound");
    }
    worst.ok_or_else(|| Error::InvalidConfig("no positive eigenvalue to evaluate".into()))
}
