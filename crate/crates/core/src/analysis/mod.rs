//! Convergence theory: scalar propagator coefficients, the computable bounds
//! ρ*, exact spectral radii of the iteration matrix, and parameter sweeps.

pub mod bounds;
pub mod coefficients;
pub mod spectrum;
pub mod sweep;

pub use bounds::{
    rho_bound, rho_bound_max, rho_bound_terminal, rho_bound_tracking, terminal_bound_details,
    TerminalBound,
};
pub use coefficients::{
    phi_psi_hat, phi_psi_tc_exact, phi_psi_tc_ie, phi_psi_tracking_exact, phi_psi_tracking_ie,
    PhiPsi, Provenance,
};
pub use spectrum::{assemble_a_sigma, exact_rho, iteration_matrix, SsigmaSpec};
pub use sweep::{bound_grid_sweep, log_grid, SweepTable};
