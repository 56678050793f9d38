//! Run configuration: a JSON file whose fields can be overridden by flags.

use std::path::{Path, PathBuf};

use paraopt::propagators::build_propagator;
use paraopt::{
    make_advection_diffusion_problem, make_heat_problem, make_scalar_constant, AffinePropagator,
    GmresConfig, IeVariant, LinearControlProblem, NewtonConfig, ObjectiveKind,
    PreconditionerMethod, PreconditionerPlan, PropagatorKind, SmallSystemMethod,
    TimeDecomposition,
};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    Tracking,
    TerminalCost,
}

impl From<Objective> for ObjectiveKind {
    fn from(o: Objective) -> Self {
        match o {
            Objective::Tracking => ObjectiveKind::Tracking,
            Objective::TerminalCost => ObjectiveKind::TerminalCost,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemConfig {
    /// `y' = −σ y + u` with constant data.
    Scalar {
        sigma: f64,
        gamma: f64,
        horizon: f64,
        #[serde(default = "one")]
        y_init: f64,
        /// Constant `y_d` (tracking) or `y_target` (terminal cost).
        #[serde(default = "one")]
        target: f64,
    },
    Heat { n: usize, gamma: f64, horizon: f64 },
    AdvectionDiffusion { n: usize, gamma: f64, horizon: f64 },
}

fn one() -> f64 {
    1.0
}

impl Default for ProblemConfig {
    fn default() -> Self {
        ProblemConfig::Heat {
            n: 8,
            gamma: 0.05,
            horizon: 2.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Scalar,
    Heat,
    AdvectionDiffusion,
}

impl ProblemConfig {
    pub fn kind(&self) -> ProblemKind {
        match self {
            ProblemConfig::Scalar { .. } => ProblemKind::Scalar,
            ProblemConfig::Heat { .. } => ProblemKind::Heat,
            ProblemConfig::AdvectionDiffusion { .. } => ProblemKind::AdvectionDiffusion,
        }
    }

    fn gamma_horizon(&self) -> (f64, f64) {
        match *self {
            ProblemConfig::Scalar { gamma, horizon, .. }
            | ProblemConfig::Heat { gamma, horizon, .. }
            | ProblemConfig::AdvectionDiffusion { gamma, horizon, .. } => (gamma, horizon),
        }
    }

    fn gamma_horizon_mut(&mut self) -> (&mut f64, &mut f64) {
        match self {
            ProblemConfig::Scalar { gamma, horizon, .. }
            | ProblemConfig::Heat { gamma, horizon, .. }
            | ProblemConfig::AdvectionDiffusion { gamma, horizon, .. } => (gamma, horizon),
        }
    }

    pub fn build(&self, objective: ObjectiveKind) -> paraopt::Result<LinearControlProblem> {
        match *self {
            ProblemConfig::Scalar { sigma, gamma, horizon, y_init, target } => {
                make_scalar_constant(sigma, gamma, horizon, objective, y_init, target)
            }
            ProblemConfig::Heat { n, gamma, horizon } => {
                make_heat_problem(n, gamma, horizon, objective)
            }
            ProblemConfig::AdvectionDiffusion { n, gamma, horizon } => {
                make_advection_diffusion_problem(n, gamma, horizon, objective)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecompositionConfig {
    /// Number of sub-intervals `L`.
    pub intervals: usize,
    pub j_fine: usize,
    pub j_coarse: usize,
}

impl Default for DecompositionConfig {
    fn default() -> Self {
        Self {
            intervals: 10,
            j_fine: 10,
            j_coarse: 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum FineChoice {
    Ie,
    Exact,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum CoarseChoice {
    IeFotd,
    IeFdto,
}

impl CoarseChoice {
    pub fn variant(self) -> IeVariant {
        match self {
            CoarseChoice::IeFotd => IeVariant::Fotd,
            CoarseChoice::IeFdto => IeVariant::Fdto,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropagatorConfig {
    pub fine: FineChoice,
    pub coarse: CoarseChoice,
}

impl Default for PropagatorConfig {
    fn default() -> Self {
        Self {
            fine: FineChoice::Ie,
            coarse: CoarseChoice::IeFotd,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub outer_tol: f64,
    pub inner_tol: f64,
    pub max_outer: usize,
    pub max_inner: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            outer_tol: 1e-6,
            inner_tol: 1e-4,
            max_outer: 100,
            max_inner: 1000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum MethodChoice {
    /// General for tracking, triangular for terminal cost.
    Auto,
    General,
    Triangular,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SmallSystemChoice {
    Explicit,
    BlackBox,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreconditionerConfig {
    pub enabled: bool,
    pub method: MethodChoice,
    /// Defaults to −1 (general) or 0.01 (triangular).
    pub alpha: Option<f64>,
    pub small_system: SmallSystemChoice,
}

impl Default for PreconditionerConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            method: MethodChoice::Auto,
            alpha: None,
            small_system: SmallSystemChoice::Explicit,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            min: 1e-4,
            max: 1e4,
            points: 50,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundConfig {
    pub sigma_hat: GridConfig,
    pub gamma_hat: GridConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub objective: Objective,
    pub decomposition: DecompositionConfig,
    pub propagators: PropagatorConfig,
    pub solver: SolverConfig,
    pub preconditioner: PreconditionerConfig,
    pub bound: BoundConfig,
    pub output: PathBuf,
    /// Recorded for reproducibility; the solver paths are deterministic.
    pub seed: u64,
    /// Record wall-clock seconds; `false` writes zeros so logs are byte-stable.
    pub timing: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            problem: ProblemConfig::default(),
            objective: Objective::Tracking,
            decomposition: DecompositionConfig::default(),
            propagators: PropagatorConfig::default(),
            solver: SolverConfig::default(),
            preconditioner: PreconditionerConfig::default(),
            bound: BoundConfig::default(),
            output: PathBuf::from("paraopt-out"),
            seed: 0,
            timing: true,
        }
    }
}

/// Flag overrides shared by all subcommands.
#[derive(Clone, Debug, Default, clap::Args)]
pub struct Overrides {
    /// JSON run configuration; flags below override its fields.
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub objective: Option<Objective>,
    #[arg(long, value_enum)]
    pub problem: Option<ProblemKind>,
    /// Grid size per direction (heat, advection-diffusion).
    #[arg(long)]
    pub n: Option<usize>,
    /// Eigenvalue of the scalar problem.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Number of sub-intervals L.
    #[arg(long)]
    pub intervals: Option<usize>,
    #[arg(long)]
    pub j_fine: Option<usize>,
    #[arg(long)]
    pub j_coarse: Option<usize>,
    #[arg(long, value_enum)]
    pub fine: Option<FineChoice>,
    #[arg(long, value_enum)]
    pub coarse: Option<CoarseChoice>,
    #[arg(long)]
    pub outer_tol: Option<f64>,
    #[arg(long)]
    pub inner_tol: Option<f64>,
    #[arg(long)]
    pub max_outer: Option<usize>,
    #[arg(long)]
    pub max_inner: Option<usize>,
    /// Disable the alpha-circulant preconditioner.
    #[arg(long)]
    pub no_precond: bool,
    #[arg(long, value_enum)]
    pub method: Option<MethodChoice>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    #[arg(long, value_enum)]
    pub small_system: Option<SmallSystemChoice>,
    #[arg(long)]
    pub sigma_hat_min: Option<f64>,
    #[arg(long)]
    pub sigma_hat_max: Option<f64>,
    #[arg(long)]
    pub sigma_hat_points: Option<usize>,
    #[arg(long)]
    pub gamma_hat_min: Option<f64>,
    #[arg(long)]
    pub gamma_hat_max: Option<f64>,
    #[arg(long)]
    pub gamma_hat_points: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write zero seconds in logs (byte-reproducible output).
    #[arg(long)]
    pub no_timing: bool,
}

fn set<T: Copy>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))
    }

    /// File contents (or defaults) with the flag overrides applied, validated.
    pub fn resolve(o: &Overrides) -> Result<Self, CliError> {
        let mut c = match &o.config {
            Some(p) => Self::from_file(p)?,
            None => Self::default(),
        };
        c.apply(o)?;
        c.validate()?;
        Ok(c)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), CliError> {
        if let Some(p) = &o.output {
            self.output = p.clone();
        }
        set(&mut self.objective, o.objective);
        if let Some(kind) = o.problem {
            if kind != self.problem.kind() {
                let (gamma, horizon) = self.problem.gamma_horizon();
                self.problem = match kind {
                    ProblemKind::Scalar => ProblemConfig::Scalar {
                        sigma: 1.0,
                        gamma,
                        horizon,
                        y_init: 1.0,
                        target: 1.0,
                    },
                    ProblemKind::Heat => ProblemConfig::Heat { n: 8, gamma, horizon },
                    ProblemKind::AdvectionDiffusion => {
                        ProblemConfig::AdvectionDiffusion { n: 8, gamma, horizon }
                    }
                };
            }
        }
        match &mut self.problem {
            ProblemConfig::Scalar { sigma, .. } => {
                set(sigma, o.sigma);
                if o.n.is_some() {
                    return Err(CliError::Config("--n does not apply to the scalar problem".into()));
                }
            }
            ProblemConfig::Heat { n, .. } | ProblemConfig::AdvectionDiffusion { n, .. } => {
                set(n, o.n);
                if o.sigma.is_some() {
                    return Err(CliError::Config("--sigma applies only to the scalar problem".into()));
                }
            }
        }
        let (gamma, horizon) = self.problem.gamma_horizon_mut();
        set(gamma, o.gamma);
        set(horizon, o.horizon);
        set(&mut self.decomposition.intervals, o.intervals);
        set(&mut self.decomposition.j_fine, o.j_fine);
        set(&mut self.decomposition.j_coarse, o.j_coarse);
        set(&mut self.propagators.fine, o.fine);
        set(&mut self.propagators.coarse, o.coarse);
        set(&mut self.solver.outer_tol, o.outer_tol);
        set(&mut self.solver.inner_tol, o.inner_tol);
        set(&mut self.solver.max_outer, o.max_outer);
        set(&mut self.solver.max_inner, o.max_inner);
        if o.no_precond {
            self.preconditioner.enabled = false;
        }
        set(&mut self.preconditioner.method, o.method);
        if o.alpha.is_some() {
            self.preconditioner.alpha = o.alpha;
        }
        set(&mut self.preconditioner.small_system, o.small_system);
        set(&mut self.bound.sigma_hat.min, o.sigma_hat_min);
        set(&mut self.bound.sigma_hat.max, o.sigma_hat_max);
        set(&mut self.bound.sigma_hat.points, o.sigma_hat_points);
        set(&mut self.bound.gamma_hat.min, o.gamma_hat_min);
        set(&mut self.bound.gamma_hat.max, o.gamma_hat_max);
        set(&mut self.bound.gamma_hat.points, o.gamma_hat_points);
        set(&mut self.seed, o.seed);
        if o.no_timing {
            self.timing = false;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        for (name, t) in [("outer_tol", self.solver.outer_tol), ("inner_tol", self.solver.inner_tol)] {
            if !(t > 0.0 && t < 1.0) {
                return bad(format!("{name} must lie in (0, 1), got {t}"));
            }
        }
        if self.solver.max_outer == 0 || self.solver.max_inner == 0 {
            return bad("iteration limits must be positive".into());
        }
        if self.objective == Objective::Tracking && self.propagators.coarse == CoarseChoice::IeFdto {
            return bad("tracking propagators exist only in the FOTD variant (use ie_fotd)".into());
        }
        let d = &self.decomposition;
        if d.j_fine == 0 || d.j_coarse == 0 || d.j_coarse > d.j_fine {
            return bad(format!(
                "need 1 <= j_coarse <= j_fine, got j_coarse = {}, j_fine = {}",
                d.j_coarse, d.j_fine
            ));
        }
        for (name, g) in [("sigma_hat", &self.bound.sigma_hat), ("gamma_hat", &self.bound.gamma_hat)] {
            if !(g.min > 0.0 && g.max >= g.min && g.max.is_finite()) || g.points == 0 {
                return bad(format!("{name} grid needs 0 < min <= max and points >= 1"));
            }
        }
        if let Some(a) = self.preconditioner.alpha {
            if !(a != 0.0 && a.is_finite()) {
                return bad(format!("alpha must be nonzero, got {a}"));
            }
        }
        let (gamma, horizon) = self.problem.gamma_horizon();
        if !(gamma > 0.0 && horizon > 0.0) {
            return bad(format!("gamma and horizon must be positive, got {gamma} and {horizon}"));
        }
        Ok(())
    }

    pub fn objective_kind(&self) -> ObjectiveKind {
        self.objective.into()
    }

    pub fn fine_kind(&self) -> PropagatorKind {
        match self.propagators.fine {
            FineChoice::Exact => PropagatorKind::Exact,
            FineChoice::Ie => PropagatorKind::ImplicitEuler {
                steps: self.decomposition.j_fine,
                variant: self.propagators.coarse.variant(),
            },
        }
    }

    pub fn coarse_kind(&self) -> PropagatorKind {
        PropagatorKind::ImplicitEuler {
            steps: self.decomposition.j_coarse,
            variant: self.propagators.coarse.variant(),
        }
    }

    pub fn newton(&self) -> NewtonConfig {
        NewtonConfig {
            outer_tolerance: self.solver.outer_tol,
            max_outer: self.solver.max_outer,
            inner: GmresConfig::new(self.solver.inner_tol, self.solver.max_inner),
            keep_iterates: false,
            record_time: self.timing,
        }
    }

    pub fn method(&self) -> PreconditionerMethod {
        match (self.preconditioner.method, self.objective) {
            (MethodChoice::General, _) | (MethodChoice::Auto, Objective::Tracking) => {
                PreconditionerMethod::General
            }
            (MethodChoice::Triangular, _) | (MethodChoice::Auto, Objective::TerminalCost) => {
                PreconditionerMethod::Triangular
            }
        }
    }

    pub fn small_system(&self) -> SmallSystemMethod {
        match self.preconditioner.small_system {
            SmallSystemChoice::Explicit => SmallSystemMethod::ExplicitDirect,
            SmallSystemChoice::BlackBox => SmallSystemMethod::BlackBoxIterative,
        }
    }
}

/// Everything needed for one solve.
pub struct SolveSetup {
    pub problem: LinearControlProblem,
    pub decomp: TimeDecomposition,
    pub fine: AffinePropagator,
    pub coarse: AffinePropagator,
    pub plan: Option<PreconditionerPlan>,
}

impl SolveSetup {
    pub fn build(c: &RunConfig) -> Result<Self, CliError> {
        let cfg = |e: paraopt::Error| CliError::Config(e.to_string());
        let obj = c.objective_kind();
        let problem = c.problem.build(obj).map_err(cfg)?;
        let d = &c.decomposition;
        let decomp =
            TimeDecomposition::for_problem(&problem, d.intervals, d.j_fine, d.j_coarse).map_err(cfg)?;
        let fine = build_propagator(&problem, &decomp, c.fine_kind()).map_err(CliError::solver)?;
        let coarse = build_propagator(&problem, &decomp, c.coarse_kind()).map_err(CliError::solver)?;
        let plan = if c.preconditioner.enabled {
            let method = c.method();
            let alpha = c.preconditioner.alpha.unwrap_or(method.default_alpha());
            Some(
                PreconditionerPlan::build(&coarse, &decomp, alpha, method, c.small_system())
                    .map_err(cfg)?,
            )
        } else {
            None
        };
        Ok(Self {
            problem,
            decomp,
            fine,
            coarse,
            plan,
        })
    }
}
