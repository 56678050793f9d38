//! Optimal-control problem instances, time decompositions and the
//! objective-dependent rescalings of state, adjoint and time step.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numerics::{RealMatrix, RealVector};

/// Which objective the control minimizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ObjectiveKind {
    /// Integral penalty on `y(t) − y_d(t)` over the horizon.
    Tracking,
    /// Penalty on `y(T) − y_target` only.
    TerminalCost,
}

impl ObjectiveKind {
    /// Number of unknown state (and adjoint) blocks for `l` sub-intervals.
    pub fn l_hat(self, l: usize) -> usize {
        match self {
            ObjectiveKind::Tracking => l - 1,
            ObjectiveKind::TerminalCost => l,
        }
    }

    /// Coupling scale γ̂ for a step of length `tau`.
    pub fn gamma_hat(self, gamma: f64, tau: f64) -> f64 {
        match self {
            ObjectiveKind::Tracking => tau / gamma.sqrt(),
            ObjectiveKind::TerminalCost => tau / gamma,
        }
    }

    /// Factor `c` such that λ̂ = c·λ.
    pub fn adjoint_scale(self, gamma: f64) -> f64 {
        match self {
            ObjectiveKind::Tracking => 1.0 / gamma.sqrt(),
            ObjectiveKind::TerminalCost => 1.0,
        }
    }
}

impl fmt::Display for ObjectiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ObjectiveKind::Tracking => "tracking",
            ObjectiveKind::TerminalCost => "terminal_cost",
        })
    }
}

/// Target trajectory `t ↦ y_d(t)`.
pub type TrajectoryFn = Arc<dyn Fn(f64) -> RealVector + Send + Sync>;

/// Objective data attached to a problem.
#[derive(Clone)]
pub enum ObjectiveData {
    Tracking { y_d: TrajectoryFn },
    TerminalCost { y_target: RealVector },
}

impl ObjectiveData {
    pub fn kind(&self) -> ObjectiveKind {
        match self {
            ObjectiveData::Tracking { .. } => ObjectiveKind::Tracking,
            ObjectiveData::TerminalCost { .. } => ObjectiveKind::TerminalCost,
        }
    }

    /// Constant target trajectory.
    pub fn constant_tracking(y_d: RealVector) -> Self {
        ObjectiveData::Tracking {
            y_d: Arc::new(move |_| y_d.clone()),
        }
    }
}

impl fmt::Debug for ObjectiveData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObjectiveData::Tracking { .. } => f.write_str("Tracking { y_d: <fn> }"),
            ObjectiveData::TerminalCost { y_target } => f
                .debug_struct("TerminalCost")
                .field("y_target", y_target)
                .finish(),
        }
    }
}

/// `min J(y, u)` subject to `y' = −K y + u`, `y(0) = y_init`.
#[derive(Clone, Debug)]
pub struct LinearControlProblem {
    k: RealMatrix,
    gamma: f64,
    horizon: f64,
    y_init: RealVector,
    data: ObjectiveData,
}

impl LinearControlProblem {
    pub fn new(
        k: RealMatrix,
        gamma: f64,
        horizon: f64,
        y_init: RealVector,
        data: ObjectiveData,
    ) -> Result<Self> {
        let m = k.nrows();
        if m == 0 || !k.is_square() {
            return Err(Error::Dimension(format!(
                "system matrix must be square and non-empty, got {}x{}",
                k.nrows(),
                k.ncols()
            )));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidConfig(format!("gamma must be positive, got {gamma}")));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        if k.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("system matrix"));
        }
        if y_init.len() != m {
            return Err(Error::Dimension(format!(
                "y_init has length {}, state dimension is {m}",
                y_init.len()
            )));
        }
        match &data {
            ObjectiveData::TerminalCost { y_target } if y_target.len() != m => {
                return Err(Error::Dimension(format!(
                    "y_target has length {}, state dimension is {m}",
                    y_target.len()
                )));
            }
            ObjectiveData::Tracking { y_d } => {
                let probe = y_d(0.0);
                if probe.len() != m {
                    return Err(Error::Dimension(format!(
                        "y_d returns length {}, state dimension is {m}",
                        probe.len()
                    )));
                }
            }
            _ => {}
        }
        Ok(Self {
            k,
            gamma,
            horizon,
            y_init,
            data,
        })
    }

    /// State dimension M.
    pub fn dim(&self) -> usize {
        self.k.nrows()
    }

    pub fn k(&self) -> &RealMatrix {
        &self.k
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn y_init(&self) -> &RealVector {
        &self.y_init
    }

    pub fn data(&self) -> &ObjectiveData {
        &self.data
    }

    pub fn objective(&self) -> ObjectiveKind {
        self.data.kind()
    }

    /// `y_d(t)`; zero for terminal-cost problems.
    pub fn y_d(&self, t: f64) -> RealVector {
        match &self.data {
            ObjectiveData::Tracking { y_d } => y_d(t),
            ObjectiveData::TerminalCost { .. } => RealVector::zeros(self.dim()),
        }
    }

    /// `y_target`; `None` for tracking problems.
    pub fn y_target(&self) -> Option<&RealVector> {
        match &self.data {
            ObjectiveData::TerminalCost { y_target } => Some(y_target),
            ObjectiveData::Tracking { .. } => None,
        }
    }

    /// Copy of the problem with the other objective's data replaced.
    pub fn with_data(&self, data: ObjectiveData) -> Result<Self> {
        Self::new(self.k.clone(), self.gamma, self.horizon, self.y_init.clone(), data)
    }
}

/// Split of `[0, T]` into `L` equal sub-intervals with `J` implicit-Euler
/// steps each for the fine and coarse propagators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeDecomposition {
    l: usize,
    dt: f64,
    l_hat: usize,
    j_fine: usize,
    j_coarse: usize,
    objective: ObjectiveKind,
}

impl TimeDecomposition {
    pub fn new(
        objective: ObjectiveKind,
        horizon: f64,
        l: usize,
        j_fine: usize,
        j_coarse: usize,
    ) -> Result<Self> {
        if l < 2 {
            return Err(Error::InvalidConfig(format!("need at least 2 sub-intervals, got {l}")));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        if j_coarse == 0 || j_fine < j_coarse {
            return Err(Error::InvalidConfig(format!(
                "need j_fine >= j_coarse >= 1, got {j_fine} and {j_coarse}"
            )));
        }
        Ok(Self {
            l,
            dt: horizon / l as f64,
            l_hat: objective.l_hat(l),
            j_fine,
            j_coarse,
            objective,
        })
    }

    /// Decomposition for `problem` with `l` sub-intervals.
    pub fn for_problem(
        problem: &LinearControlProblem,
        l: usize,
        j_fine: usize,
        j_coarse: usize,
    ) -> Result<Self> {
        Self::new(problem.objective(), problem.horizon(), l, j_fine, j_coarse)
    }

    /// Decomposition with a prescribed number of unknown blocks.
    pub fn with_l_hat(
        objective: ObjectiveKind,
        horizon: f64,
        l_hat: usize,
        j_fine: usize,
        j_coarse: usize,
    ) -> Result<Self> {
        let l = match objective {
            ObjectiveKind::Tracking => l_hat + 1,
            ObjectiveKind::TerminalCost => l_hat,
        };
        Self::new(objective, horizon, l, j_fine, j_coarse)
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn l_hat(&self) -> usize {
        self.l_hat
    }

    pub fn j_fine(&self) -> usize {
        self.j_fine
    }

    pub fn j_coarse(&self) -> usize {
        self.j_coarse
    }

    pub fn objective(&self) -> ObjectiveKind {
        self.objective
    }

    /// Start time of sub-interval `l` (1-based), i.e. `T_{l−1}`.
    pub fn interval_start(&self, l: usize) -> f64 {
        (l - 1) as f64 * self.dt
    }
}

/// Rescaled eigenvalue and regularization for one step length.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HattedScalings {
    pub sigma_hat: f64,
    pub gamma_hat: f64,
    pub tau: f64,
}

impl HattedScalings {
    pub fn new(objective: ObjectiveKind, sigma: f64, gamma: f64, tau: f64) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::InvalidConfig(format!("time step must be positive, got {tau}")));
        }
        if !(gamma > 0.0) {
            return Err(Error::InvalidConfig(format!("gamma must be positive, got {gamma}")));
        }
        Ok(Self {
            sigma_hat: tau * sigma,
            gamma_hat: objective.gamma_hat(gamma, tau),
            tau,
        })
    }

    /// `(σ, γ)` with these scalings; inverse of [`HattedScalings::new`].
    pub fn to_raw(&self, objective: ObjectiveKind) -> Result<(f64, f64)> {
        if !(self.tau > 0.0 && self.gamma_hat > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "need positive tau and gamma_hat, got {} and {}",
                self.tau, self.gamma_hat
            )));
        }
        let gamma = match objective {
            ObjectiveKind::Tracking => (self.tau / self.gamma_hat).powi(2),
            ObjectiveKind::TerminalCost => self.tau / self.gamma_hat,
        };
        Ok((self.sigma_hat / self.tau, gamma))
    }
}

/// Scalings of a scalar problem (`K = [σ]`) for step `tau`.
pub fn hatted(problem: &LinearControlProblem, tau: f64) -> Result<HattedScalings> {
    if problem.dim() != 1 {
        return Err(Error::Dimension(format!(
            "hatted needs a scalar problem, use hatted_at for M = {}",
            problem.dim()
        )));
    }
    hatted_at(problem, problem.k()[(0, 0)], tau)
}

/// Scalings of `problem` at eigenvalue `sigma` for step `tau`.
pub fn hatted_at(problem: &LinearControlProblem, sigma: f64, tau: f64) -> Result<HattedScalings> {
    HattedScalings::new(problem.objective(), sigma, problem.gamma(), tau)
}

/// Scalar problem `y' = −σ y + u`.
pub fn make_scalar_problem(
    sigma: f64,
    gamma: f64,
    horizon: f64,
    y_init: f64,
    data: ObjectiveData,
) -> Result<LinearControlProblem> {
    LinearControlProblem::new(
        RealMatrix::from_element(1, 1, sigma),
        gamma,
        horizon,
        RealVector::from_element(1, y_init),
        data,
    )
}

/// Scalar problem with constant data `y_d ≡ c` (tracking) or `y_target = c`.
pub fn make_scalar_constant(
    sigma: f64,
    gamma: f64,
    horizon: f64,
    objective: ObjectiveKind,
    y_init: f64,
    c: f64,
) -> Result<LinearControlProblem> {
    let v = RealVector::from_element(1, c);
    let data = match objective {
        ObjectiveKind::Tracking => ObjectiveData::constant_tracking(v),
        ObjectiveKind::TerminalCost => ObjectiveData::TerminalCost { y_target: v },
    };
    make_scalar_problem(sigma, gamma, horizon, y_init, data)
}

/// Grid index of node `(i1, i2)` on an `n × n` periodic grid.
fn node(n: usize, i1: usize, i2: usize) -> usize {
    i2 * n + i1
}

/// Negative periodic five-point Laplacian on `[0,1)²` with `n` nodes per axis.
pub fn periodic_neg_laplacian(n: usize) -> RealMatrix {
    let h2 = (n * n) as f64;
    let mut k = RealMatrix::zeros(n * n, n * n);
    for i2 in 0..n {
        for i1 in 0..n {
            let row = node(n, i1, i2);
            k[(row, row)] += 4.0 * h2;
            for (j1, j2) in [
                ((i1 + 1) % n, i2),
                ((i1 + n - 1) % n, i2),
                (i1, (i2 + 1) % n),
                (i1, (i2 + n - 1) % n),
            ] {
                k[(row, node(n, j1, j2))] -= h2;
            }
        }
    }
    k
}

/// Periodic central difference `∂_{x1} + ∂_{x2}`.
pub fn periodic_central_gradient_sum(n: usize) -> RealMatrix {
    let inv_2h = n as f64 / 2.0;
    let mut d = RealMatrix::zeros(n * n, n * n);
    for i2 in 0..n {
        for i1 in 0..n {
            let row = node(n, i1, i2);
            d[(row, node(n, (i1 + 1) % n, i2))] += inv_2h;
            d[(row, node(n, (i1 + n - 1) % n, i2))] -= inv_2h;
            d[(row, node(n, i1, (i2 + 1) % n))] += inv_2h;
            d[(row, node(n, i1, (i2 + n - 1) % n))] -= inv_2h;
        }
    }
    d
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Evaluates `f(x1, x2)` at the nodes `x = (i1/n, i2/n)`.
fn grid_field(n: usize, f: impl Fn(f64, f64) -> f64) -> RealVector {
    let mut v = RealVector::zeros(n * n);
    for i2 in 0..n {
        for i1 in 0..n {
            v[node(n, i1, i2)] = f(i1 as f64 / n as f64, i2 as f64 / n as f64);
        }
    }
    v
}

/// Builds the grid problem with the shared initial value and targets.
fn grid_problem(
    k: RealMatrix,
    n: usize,
    gamma: f64,
    horizon: f64,
    objective: ObjectiveKind,
) -> Result<LinearControlProblem> {
    let c = 12.0 * PI * PI;
    // sin(2πx) vanishes exactly at the nodes x = 0 and 1/2; pin those to zero
    // so the sign factor is not decided by rounding.
    let sin2pi = |x: f64| {
        if (2.0 * x).fract() == 0.0 {
            0.0
        } else {
            (2.0 * PI * x).sin()
        }
    };
    let y_init = grid_field(n, |x1, x2| {
        (1.0 - horizon) / (c * gamma) * sign(sin2pi(x1)) * sin2pi(x2).powi(2)
    });
    let shape = grid_field(n, |x1, x2| sin2pi(x1) * sin2pi(x2));
    let data = match objective {
        ObjectiveKind::TerminalCost => ObjectiveData::TerminalCost { y_target: shape },
        ObjectiveKind::Tracking => {
            let slope = c + 1.0 / (c * gamma);
            let shift = 1.0 + 1.0 / (c * c * gamma);
            ObjectiveData::Tracking {
                y_d: Arc::new(move |t| &shape * (slope * (t - horizon) - shift)),
            }
        }
    };
    LinearControlProblem::new(k, gamma, horizon, y_init, data)
}

/// Heat equation `∂_t y = Δy + u` on the periodic unit square, `n × n` nodes.
pub fn make_heat_problem(
    n: usize,
    gamma: f64,
    horizon: f64,
    objective: ObjectiveKind,
) -> Result<LinearControlProblem> {
    if n < 2 {
        return Err(Error::InvalidConfig(format!("grid needs n >= 2, got {n}")));
    }
    grid_problem(periodic_neg_laplacian(n), n, gamma, horizon, objective)
}

/// Advection-diffusion `∂_t y = Δy/10 − ∂_{x1}y − ∂_{x2}y + u` on the periodic
/// unit square.
pub fn make_advection_diffusion_problem(
    n: usize,
    gamma: f64,
    horizon: f64,
    objective: ObjectiveKind,
) -> Result<LinearControlProblem> {
    if n < 2 {
        return Err(Error::InvalidConfig(format!("grid needs n >= 2, got {n}")));
    }
    let k = periodic_neg_laplacian(n) * 0.1 + periodic_central_gradient_sum(n);
    grid_problem(k, n, gamma, horizon, objective)
}
