//! Bound sweeps over `(σ̂, γ̂)` grids (contour data).

use std::io::{self, Write};

use rayon::prelude::*;

use super::bounds::rho_bound;
use super::coefficients::phi_psi_hat;
use crate::error::{Error, Result};
use crate::problem::ObjectiveKind;
use crate::propagators::PropagatorKind;

/// `n` logarithmically spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) || n == 0 {
        return Err(Error::InvalidConfig(format!(
            "log grid needs 0 < lo <= hi and n >= 1, got [{lo}, {hi}] with n = {n}"
        )));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.log10(), hi.log10());
    Ok((0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64)
            }
        })
        .collect())
}

/// ρ* on a grid; `rho[i * gamma_hat.len() + j]` belongs to
/// `(sigma_hat[i], gamma_hat[j])`.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepTable {
    pub sigma_hat: Vec<f64>,
    pub gamma_hat: Vec<f64>,
    pub rho: Vec<f64>,
}

impl SweepTable {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rho[i * self.gamma_hat.len() + j]
    }

    /// `(σ̂, γ̂, ρ*)` in row-major order.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let ng = self.gamma_hat.len();
        self.rho
            .iter()
            .enumerate()
            .map(move |(k, &r)| (self.sigma_hat[k / ng], self.gamma_hat[k % ng], r))
    }

    pub fn max(&self) -> f64 {
        self.rho.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Header line and one row per grid point.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "sigma_hat,gamma_hat,rho_star")?;
        for (s, g, r) in self.rows() {
            writeln!(w, "{s:e},{g:e},{r:e}")?;
        }
        Ok(())
    }

    /// Pointwise `self / other` on the same grid.
    pub fn ratio(&self, other: &SweepTable) -> Result<SweepTable> {
        if self.sigma_hat != other.sigma_hat || self.gamma_hat != other.gamma_hat {
            return Err(Error::Dimension("sweep grids differ".into()));
        }
        Ok(SweepTable {
            sigma_hat: self.sigma_hat.clone(),
            gamma_hat: self.gamma_hat.clone(),
            rho: self.rho.iter().zip(&other.rho).map(|(a, b)| a / b).collect(),
        })
    }
}

/// ρ* for the fine/coarse pair at every grid point, computed in parallel.
pub fn bound_grid_sweep(
    objective: ObjectiveKind,
    fine: PropagatorKind,
    coarse: PropagatorKind,
    sigma_hat: &[f64],
    gamma_hat: &[f64],
) -> Result<SweepTable> {
    if sigma_hat.is_empty() || gamma_hat.is_empty() {
        return Err(Error::InvalidConfig("empty sweep grid".into()));
    }
    if sigma_hat.iter().chain(gamma_hat).any(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::InvalidConfig("sweep grids must be positive".into()));
    }
    let ng = gamma_hat.len();
    let rho = (0..sigma_hat.len() * ng)
        .into_par_iter()
        .map(|k| {
            let (s, g) = (sigma_hat[k / ng], gamma_hat[k % ng]);
            let f = phi_psi_hat(objective, fine, s, g)?;
            let c = phi_psi_hat(objective, coarse, s, g)?;
            rho_bound(&f, &c)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable {
        sigma_hat: sigma_hat.to_vec(),
        gamma_hat: gamma_hat.to_vec(),
        rho,
    })
}
