//! ParaOpt: time-parallel solution of linear-quadratic optimal control
//! problems `y' = −K y + u` by an inexact Newton iteration on the interval
//! matching conditions, with alpha-circulant preconditioners for the coarse
//! linear systems and tools for the convergence analysis.

pub mod analysis;
pub mod error;
pub mod numerics;
pub mod paraopt;
pub mod preconditioner;
pub mod problem;
pub mod propagators;

pub use error::{Error, Result};
pub use numerics::{Complex64, ComplexMatrix, ComplexVector, GmresConfig, RealMatrix, RealVector};
pub use paraopt::{
    paraopt_solve, IterationRecord, LinearPreconditioner, NewtonConfig, PairedTrajectory,
    SolveLog, Termination,
};
pub use preconditioner::{PreconditionerMethod, PreconditionerPlan, SmallSystemMethod};
pub use problem::{
    make_advection_diffusion_problem, make_heat_problem, make_scalar_constant,
    make_scalar_problem, HattedScalings, LinearControlProblem, ObjectiveData, ObjectiveKind,
    TimeDecomposition,
};
pub use propagators::{build_propagator, AffinePropagator, IeVariant, PropagatorKind};
