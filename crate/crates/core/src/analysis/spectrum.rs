//! Exact spectral radius of the iteration matrix `S_σ = I − Ã_σ⁻¹ A_σ` for one
//! eigenvalue σ, from dense `2L̂ × 2L̂` assembly.

use super::coefficients::PhiPsi;
use crate::error::{Error, Result};
use crate::numerics::{dense_solve, spectral_radius, RealMatrix};
use crate::problem::ObjectiveKind;

/// Data for `S_σ` at one eigenvalue.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SsigmaSpec {
    pub l_hat: usize,
    pub fine: PhiPsi,
    pub coarse: PhiPsi,
    pub objective: ObjectiveKind,
}

impl SsigmaSpec {
    pub fn new(l_hat: usize, fine: PhiPsi, coarse: PhiPsi) -> Result<Self> {
        let objective = fine.provenance.objective();
        if coarse.provenance.objective() != objective {
            return Err(Error::InvalidConfig(
                "fine and coarse coefficients belong to different objectives".into(),
            ));
        }
        if l_hat == 0 {
            return Err(Error::InvalidConfig("need at least one time block".into()));
        }
        Ok(Self {
            l_hat,
            fine,
            coarse,
            objective,
        })
    }
}

/// Scalar matching Jacobian at one eigenvalue, unknowns `[y_1..y_L̂, λ̂_1..λ̂_L̂]`.
///
/// Rows are `y_l − φ y_{l−1} + ψ λ̂_l` and `λ̂_l − ψ_Q y_l − φ λ̂_{l+1}` with
/// `ψ_Q = ψ` for tracking and `0` for terminal cost; the last adjoint row is
/// `λ̂_L̂ − ψ y_L̂` (tracking) or `λ̂_L̂ − y_L̂` (terminal cost).
pub fn assemble_a_sigma(l_hat: usize, objective: ObjectiveKind, c: &PhiPsi) -> RealMatrix {
    let n = l_hat;
    let mut a = RealMatrix::identity(2 * n, 2 * n);
    let psi_q = match objective {
        ObjectiveKind::Tracking => c.psi,
        ObjectiveKind::TerminalCost => 0.0,
    };
    for l in 0..n {
        a[(l, n + l)] = c.psi;
        if l > 0 {
            a[(l, l - 1)] = -c.phi;
        }
        if l + 1 < n {
            a[(n + l, l)] = -psi_q;
            a[(n + l, n + l + 1)] = -c.phi;
        }
    }
    a[(2 * n - 1, n - 1)] = match objective {
        ObjectiveKind::Tracking => -c.psi,
        ObjectiveKind::TerminalCost => -1.0,
    };
    a
}

/// `S_σ = I − Ã_σ⁻¹ A_σ`.
pub fn iteration_matrix(spec: &SsigmaSpec) -> Result<RealMatrix> {
    let a = assemble_a_sigma(spec.l_hat, spec.objective, &spec.fine);
    let at = assemble_a_sigma(spec.l_hat, spec.objective, &spec.coarse);
    let n = 2 * spec.l_hat;
    Ok(RealMatrix::identity(n, n) - dense_solve(&at, &a)?)
}

/// Spectral radius of `S_σ`.
pub fn exact_rho(spec: &SsigmaSpec) -> Result<f64> {
    spectral_radius(&iteration_matrix(spec)?)
}
