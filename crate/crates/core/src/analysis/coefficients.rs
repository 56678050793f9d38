//! Scalar actions (φ, ψ) of the fine and coarse propagators at one eigenvalue σ.
//!
//! The `*_hat` functions take the rescaled quantities directly: `sigma_hat`
//! and `gamma_hat` refer to one sub-interval for the exact propagators and to
//! one implicit-Euler step for the `*_ie_hat` variants.

use crate::error::{Error, Result};
use crate::problem::ObjectiveKind;
use crate::propagators::{IeVariant, PropagatorKind};

/// Where a coefficient pair came from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Provenance {
    TrackingIe { j: usize, tau: f64 },
    TrackingExact,
    TcFdtoIe { j: usize, tau: f64 },
    TcFotdIe { j: usize, tau: f64 },
    TcExact,
}

impl Provenance {
    pub fn objective(&self) -> ObjectiveKind {
        match self {
            Provenance::TrackingIe { .. } | Provenance::TrackingExact => ObjectiveKind::Tracking,
            _ => ObjectiveKind::TerminalCost,
        }
    }
}

/// Eigen-coefficients of a propagator: `P(y, λ̂) = φ y − ψ λ̂` per mode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhiPsi {
    pub phi: f64,
    pub psi: f64,
    pub provenance: Provenance,
}

impl PhiPsi {
    /// Checks `0 ≤ φ ≤ 1` and `ψ ≥ 0` when `sigma_hat ≥ 0`; the bounds are
    /// attained only through underflow or rounding.
    fn checked(phi: f64, psi: f64, sigma_hat: f64, provenance: Provenance) -> Result<Self> {
        if !(phi.is_finite() && psi.is_finite()) {
            return Err(Error::NonFinite("propagator coefficient"));
        }
        if sigma_hat >= 0.0 && !((0.0..=1.0).contains(&phi) && psi >= 0.0) {
            return Err(Error::AssumptionViolated(format!(
                "phi = {phi:e}, psi = {psi:e} at sigma_hat = {sigma_hat:e} ({provenance:?})"
            )));
        }
        Ok(Self {
            phi,
            psi,
            provenance,
        })
    }

    /// Builds a pair without range checks (random sampling in tests and sweeps).
    pub fn raw(phi: f64, psi: f64, provenance: Provenance) -> Self {
        Self {
            phi,
            psi,
            provenance,
        }
    }
}

fn check_step(sigma_hat: f64, what: &str) -> Result<()> {
    if !sigma_hat.is_finite() {
        return Err(Error::NonFinite("sigma_hat"));
    }
    if 1.0 + sigma_hat <= 0.0 {
        return Err(Error::AssumptionViolated(format!(
            "{what}: implicit-Euler step singular at sigma_hat = {sigma_hat:e}"
        )));
    }
    Ok(())
}

/// `(1 − e^{−2s})/s`, finite at `s = 0`.
fn one_minus_exp_neg2_over(s: f64) -> f64 {
    if s.abs() < 1e-6 {
        2.0 - 2.0 * s + 4.0 / 3.0 * s * s - 2.0 / 3.0 * s * s * s
    } else {
        -(-2.0 * s).exp_m1() / s
    }
}

/// Tracking, `J` implicit-Euler steps with per-step `σ̂_τ`, `γ̂_τ`.
pub fn tracking_ie_hat(sigma_hat: f64, gamma_hat: f64, j: usize) -> Result<(f64, f64)> {
    check_step(sigma_hat, "tracking implicit Euler")?;
    if j == 0 {
        return Err(Error::InvalidConfig("implicit Euler needs J >= 1".into()));
    }
    let zeta = 1.0 + sigma_hat;
    let inv = 1.0 / zeta;
    let g = gamma_hat;
    let (mut phi, mut psi) = (1.0, 0.0);
    for _ in 0..j {
        let psi_next = (g + inv * (1.0 + g * g) * psi) / (zeta + g * psi);
        phi *= inv - g * (psi_next - g * inv);
        psi = psi_next;
    }
    Ok((phi, psi))
}

/// Tracking, exact solve over one sub-interval of rescaled length 1.
pub fn tracking_exact_hat(sigma_hat: f64, gamma_hat: f64) -> Result<(f64, f64)> {
    let s = sigma_hat.hypot(gamma_hat);
    if !s.is_finite() {
        return Err(Error::NonFinite("tracking exact coefficients"));
    }
    let e = (-s).exp();
    let q = one_minus_exp_neg2_over(s);
    let denom = 1.0 + e * e + sigma_hat * q;
    Ok((2.0 * e / denom, gamma_hat * q / denom))
}

/// `Σ_{k=1}^{J} (1+x)^{−2k}`, with the `x → 0` limit handled by series.
fn geometric_sum_sq(x: f64, j: usize) -> f64 {
    let jf = j as f64;
    if x.abs() < 1e-8 {
        jf * (1.0 - (jf + 1.0) * x)
    } else {
        -(-2.0 * jf * x.ln_1p()).exp_m1() / (x * (2.0 + x))
    }
}

/// Terminal cost, `J` implicit-Euler steps with per-step `σ̂_τ`, `γ̂_τ`.
pub fn tc_ie_hat(sigma_hat: f64, gamma_hat: f64, j: usize, variant: IeVariant) -> Result<(f64, f64)> {
    check_step(sigma_hat, "terminal-cost implicit Euler")?;
    if j == 0 {
        return Err(Error::InvalidConfig("implicit Euler needs J >= 1".into()));
    }
    let phi = (-(j as f64) * sigma_hat.ln_1p()).exp();
    let fdto = gamma_hat * geometric_sum_sq(sigma_hat, j);
    let psi = match variant {
        IeVariant::Fdto => fdto,
        IeVariant::Fotd => (1.0 + sigma_hat) * fdto,
    };
    Ok((phi, psi))
}

/// Terminal cost, exact solve over one sub-interval of rescaled length 1.
pub fn tc_exact_hat(sigma_hat: f64, gamma_hat: f64) -> Result<(f64, f64)> {
    if !sigma_hat.is_finite() {
        return Err(Error::NonFinite("sigma_hat"));
    }
    let phi = (-sigma_hat).exp();
    let psi = gamma_hat * 0.5 * one_minus_exp_neg2_over(sigma_hat);
    Ok((phi, psi))
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

/// Tracking implicit Euler with `J` steps of length `tau`.
pub fn phi_psi_tracking_ie(sigma: f64, gamma: f64, tau: f64, j: usize) -> Result<PhiPsi> {
    check_positive("gamma", gamma)?;
    check_positive("tau", tau)?;
    let sh = tau * sigma;
    let (phi, psi) = tracking_ie_hat(sh, ObjectiveKind::Tracking.gamma_hat(gamma, tau), j)?;
    PhiPsi::checked(phi, psi, sh, Provenance::TrackingIe { j, tau })
}

/// Tracking exact propagator over a sub-interval of length `dt`.
pub fn phi_psi_tracking_exact(sigma: f64, gamma: f64, dt: f64) -> Result<PhiPsi> {
    check_positive("gamma", gamma)?;
    check_positive("dt", dt)?;
    let sh = dt * sigma;
    let (phi, psi) = tracking_exact_hat(sh, ObjectiveKind::Tracking.gamma_hat(gamma, dt))?;
    PhiPsi::checked(phi, psi, sh, Provenance::TrackingExact)
}

/// Terminal-cost implicit Euler with `J` steps of length `tau`.
pub fn phi_psi_tc_ie(
    sigma: f64,
    gamma: f64,
    tau: f64,
    j: usize,
    variant: IeVariant,
) -> Result<PhiPsi> {
    check_positive("gamma", gamma)?;
    check_positive("tau", tau)?;
    let sh = tau * sigma;
    let (phi, psi) = tc_ie_hat(sh, ObjectiveKind::TerminalCost.gamma_hat(gamma, tau), j, variant)?;
    let provenance = match variant {
        IeVariant::Fdto => Provenance::TcFdtoIe { j, tau },
        IeVariant::Fotd => Provenance::TcFotdIe { j, tau },
    };
    PhiPsi::checked(phi, psi, sh, provenance)
}

/// Terminal-cost exact propagator over a sub-interval of length `dt`.
pub fn phi_psi_tc_exact(sigma: f64, gamma: f64, dt: f64) -> Result<PhiPsi> {
    check_positive("gamma", gamma)?;
    check_positive("dt", dt)?;
    let sh = dt * sigma;
    let (phi, psi) = tc_exact_hat(sh, ObjectiveKind::TerminalCost.gamma_hat(gamma, dt))?;
    PhiPsi::checked(phi, psi, sh, Provenance::TcExact)
}

/// Coefficients of `kind` at sub-interval scalings `(σ̂, γ̂)`.
pub fn phi_psi_hat(
    objective: ObjectiveKind,
    kind: PropagatorKind,
    sigma_hat: f64,
    gamma_hat: f64,
) -> Result<PhiPsi> {
    match (objective, kind) {
        (ObjectiveKind::Tracking, PropagatorKind::Exact) => {
            let (phi, psi) = tracking_exact_hat(sigma_hat, gamma_hat)?;
            PhiPsi::checked(phi, psi, sigma_hat, Provenance::TrackingExact)
        }
        (ObjectiveKind::TerminalCost, PropagatorKind::Exact) => {
            let (phi, psi) = tc_exact_hat(sigma_hat, gamma_hat)?;
            PhiPsi::checked(phi, psi, sigma_hat, Provenance::TcExact)
        }
        (ObjectiveKind::Tracking, PropagatorKind::ImplicitEuler { steps, variant }) => {
            if variant == IeVariant::Fdto {
                return Err(Error::InvalidConfig(
                    "tracking propagators are only available in the FOTD variant".into(),
                ));
            }
            let j = steps as f64;
            let (phi, psi) = tracking_ie_hat(sigma_hat / j, gamma_hat / j, steps)?;
            PhiPsi::checked(
                phi,
                psi,
                sigma_hat,
                Provenance::TrackingIe {
                    j: steps,
                    tau: 1.0 / j,
                },
            )
        }
        (ObjectiveKind::TerminalCost, PropagatorKind::ImplicitEuler { steps, variant }) => {
            let j = steps as f64;
            let (phi, psi) = tc_ie_hat(sigma_hat / j, gamma_hat / j, steps, variant)?;
            let tau = 1.0 / j;
            let provenance = match variant {
                IeVariant::Fdto => Provenance::TcFdtoIe { j: steps, tau },
                IeVariant::Fotd => Provenance::TcFotdIe { j: steps, tau },
            };
            PhiPsi::checked(phi, psi, sigma_hat, provenance)
        }
    }
}
