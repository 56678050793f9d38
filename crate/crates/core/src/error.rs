use thiserror::Error;

/// Errors raised by the solver toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is singular to working precision ({0})")]
    Singular(String),

    #[error("matrix is not symmetric (defect {defect:e}, allowed {allowed:e})")]
    NotSymmetric { defect: f64, allowed: f64 },

    #[error("eigenvalue iteration did not converge")]
    EigenNoConvergence,

    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("coefficient outside the admissible range: {0}")]
    AssumptionViolated(String),

    #[error("no admissible root of the terminal-cost bound equation: {0}")]
    NoRoot(String),

    #[error("preconditioner output has imaginary residue {residue:e} relative to its norm")]
    ImaginaryResidue { residue: f64 },

    #[error("inner solver did not converge: {0}")]
    InnerNoConvergence(String),

    #[error("outer iteration diverged: residual grew from {from:e} to {to:e}")]
    Diverged { from: f64, to: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
