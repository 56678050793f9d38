//! Fine and coarse sub-interval propagators for the coupled state/adjoint
//! system, in explicit affine form:
//!
//! `P_l(y, λ̂) = Φ_P y − Ψ_P λ̂ + b_{P,l}`, `Q_l(y, λ̂) = Ψ_Q y + Φ_Q λ̂ + b_{Q,l}`.

use nalgebra::{DMatrix, Matrix2, Vector2};

use crate::analysis::coefficients::{tc_exact_hat, tracking_exact_hat};
use crate::error::{Error, Result};
use crate::numerics::{symmetric_eigen, DenseLu, RealMatrix, RealVector};
use crate::problem::{LinearControlProblem, ObjectiveKind, TimeDecomposition};

/// Route from the continuous optimality system to the implicit-Euler scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum IeVariant {
    /// Optimize, then discretize state and adjoint equations separately.
    Fotd,
    /// Discretize the state equation, then take the discrete adjoint.
    Fdto,
}

/// Propagator family, independent of any particular problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PropagatorKind {
    Exact,
    ImplicitEuler { steps: usize, variant: IeVariant },
}

impl PropagatorKind {
    pub fn ie(steps: usize) -> Self {
        PropagatorKind::ImplicitEuler {
            steps,
            variant: IeVariant::Fotd,
        }
    }
}

/// Data of the one-step FOTD implicit-Euler propagator:
/// `Φ_P = Z⁻¹`, `Ψ_P = c_P Z⁻¹`, `Φ_Q = Z⁻ᵀ`, `Ψ_Q = c_Q Z⁻ᵀ` with `Z = I + ΔT K`.
#[derive(Clone, Debug)]
pub struct ZForm {
    pub z: RealMatrix,
    pub coupling_p: f64,
    pub coupling_q: f64,
}

/// Affine sub-interval maps with per-interval offsets (`b_p[l − 1]` for interval `l`).
#[derive(Clone, Debug)]
pub struct AffinePropagator {
    objective: ObjectiveKind,
    kind: Option<PropagatorKind>,
    phi_p: RealMatrix,
    psi_p: RealMatrix,
    phi_q: RealMatrix,
    psi_q: RealMatrix,
    b_p: Vec<RealVector>,
    b_q: Vec<RealVector>,
    z_form: Option<ZForm>,
}

impl AffinePropagator {
    /// Assembles a propagator from its blocks; `b_p`/`b_q` hold one offset per sub-interval.
    pub fn from_parts(
        objective: ObjectiveKind,
        phi_p: RealMatrix,
        psi_p: RealMatrix,
        phi_q: RealMatrix,
        psi_q: RealMatrix,
        b_p: Vec<RealVector>,
        b_q: Vec<RealVector>,
    ) -> Result<Self> {
        let m = phi_p.nrows();
        for (name, a) in [
            ("phi_p", &phi_p),
            ("psi_p", &psi_p),
            ("phi_q", &phi_q),
            ("psi_q", &psi_q),
        ] {
            if a.nrows() != m || a.ncols() != m {
                return Err(Error::Dimension(format!(
                    "{name} is {}x{}, expected {m}x{m}",
                    a.nrows(),
                    a.ncols()
                )));
            }
            if a.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("propagator block"));
            }
        }
        if b_p.len() != b_q.len() {
            return Err(Error::Dimension("offset lists differ in length".into()));
        }
        for b in b_p.iter().chain(&b_q) {
            if b.len() != m {
                return Err(Error::Dimension(format!(
                    "offset has length {}, expected {m}",
                    b.len()
                )));
            }
            if b.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("propagator offset"));
            }
        }
        Ok(Self {
            objective,
            kind: None,
            phi_p,
            psi_p,
            phi_q,
            psi_q,
            b_p,
            b_q,
            z_form: None,
        })
    }

    pub fn objective(&self) -> ObjectiveKind {
        self.objective
    }

    /// Family the propagator was built from; `None` for [`Self::from_parts`].
    pub fn kind(&self) -> Option<PropagatorKind> {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.phi_p.nrows()
    }

    /// Number of sub-intervals with stored offsets.
    pub fn intervals(&self) -> usize {
        self.b_p.len()
    }

    pub fn phi_p(&self) -> &RealMatrix {
        &self.phi_p
    }

    pub fn psi_p(&self) -> &RealMatrix {
        &self.psi_p
    }

    pub fn phi_q(&self) -> &RealMatrix {
        &self.phi_q
    }

    pub fn psi_q(&self) -> &RealMatrix {
        &self.psi_q
    }

    /// Offset of `P` on sub-interval `l` (1-based).
    pub fn b_p(&self, l: usize) -> &RealVector {
        &self.b_p[l - 1]
    }

    /// Offset of `Q` on sub-interval `l` (1-based).
    pub fn b_q(&self, l: usize) -> &RealVector {
        &self.b_q[l - 1]
    }

    pub fn z_form(&self) -> Option<&ZForm> {
        self.z_form.as_ref()
    }

    /// `Ψ_Q` is exactly zero.
    pub fn psi_q_is_zero(&self) -> bool {
        self.psi_q.iter().all(|x| *x == 0.0)
    }

    /// Applies the linear part of `P`: `Φ_P y − Ψ_P λ̂`.
    pub fn p_linear(&self, y: &RealVector, lam: &RealVector) -> RealVector {
        &self.phi_p * y - &self.psi_p * lam
    }

    /// Applies the linear part of `Q`: `Ψ_Q y + Φ_Q λ̂`.
    pub fn q_linear(&self, y: &RealVector, lam: &RealVector) -> RealVector {
        &self.psi_q * y + &self.phi_q * lam
    }

    /// `(P_l(y_prev, lam_next), Q_l(y_prev, lam_next))`.
    pub fn propagate(
        &self,
        l: usize,
        y_prev: &RealVector,
        lam_next: &RealVector,
    ) -> Result<(RealVector, RealVector)> {
        if l == 0 || l > self.intervals() {
            return Err(Error::Dimension(format!(
                "interval {l} outside 1..={}",
                self.intervals()
            )));
        }
        if y_prev.len() != self.dim() || lam_next.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "propagate expects vectors of length {}",
                self.dim()
            )));
        }
        Ok((
            self.p_linear(y_prev, lam_next) + self.b_p(l),
            self.q_linear(y_prev, lam_next) + self.b_q(l),
        ))
    }

    /// Black-box access to the maps with the zero probes cached.
    pub fn black_box(&self) -> BlackBoxView<'_> {
        let zero = RealVector::zeros(self.dim());
        let (p_zero, q_zero) = if self.intervals() > 0 {
            self.propagate(1, &zero, &zero).expect("valid probe")
        } else {
            (zero.clone(), zero)
        };
        BlackBoxView {
            prop: self,
            p_zero,
            q_zero,
        }
    }
}

/// The propagator seen only through evaluations of `P` and `Q` on interval 1.
#[derive(Clone, Debug)]
pub struct BlackBoxView<'a> {
    prop: &'a AffinePropagator,
    p_zero: RealVector,
    q_zero: RealVector,
}

impl BlackBoxView<'_> {
    pub fn dim(&self) -> usize {
        self.prop.dim()
    }

    pub fn p(&self, y: &RealVector, lam: &RealVector) -> RealVector {
        self.prop.p_linear(y, lam) + &self.p_zero
    }

    pub fn q(&self, y: &RealVector, lam: &RealVector) -> RealVector {
        self.prop.q_linear(y, lam) + &self.q_zero
    }

    /// Cached `P(0, 0)`.
    pub fn p_zero(&self) -> &RealVector {
        &self.p_zero
    }

    /// Cached `Q(0, 0)`.
    pub fn q_zero(&self) -> &RealVector {
        &self.q_zero
    }
}

/// `J` implicit-Euler steps of the coupled state/adjoint boundary-value
/// problem on one sub-interval, assembled as a single linear system in
/// `(y_1, …, y_J, μ_1, …, μ_J)` where `μ_j` approximates λ̂ at `t_{j−1}`.
///
/// Boundary data are `y_0` and `λ̂(t_J)`; the outputs are `P = y_J` and `Q = μ_1`.
#[derive(Clone, Debug)]
pub struct SubintervalSystem {
    m: usize,
    j: usize,
    tau: f64,
    coupling_p: f64,
    coupling_q: f64,
    variant: IeVariant,
    lu: DenseLu<f64>,
}

impl SubintervalSystem {
    pub fn new(
        k: &RealMatrix,
        gamma: f64,
        objective: ObjectiveKind,
        dt: f64,
        j: usize,
        variant: IeVariant,
    ) -> Result<Self> {
        if j == 0 {
            return Err(Error::InvalidConfig("implicit Euler needs J >= 1".into()));
        }
        if objective == ObjectiveKind::Tracking && variant == IeVariant::Fdto {
            return Err(Error::InvalidConfig(
                "tracking propagators are only available in the FOTD variant".into(),
            ));
        }
        if !(dt > 0.0) || !(gamma > 0.0) {
            return Err(Error::InvalidConfig("dt and gamma must be positive".into()));
        }
        let m = k.nrows();
        let tau = dt / j as f64;
        let coupling_p = objective.gamma_hat(gamma, tau);
        let coupling_q = match objective {
            ObjectiveKind::Tracking => coupling_p,
            ObjectiveKind::TerminalCost => 0.0,
        };
        let zeta = RealMatrix::identity(m, m) + k * tau;
        let zeta_t = zeta.transpose();
        let n = 2 * m * j;
        let mut a = RealMatrix::zeros(n, n);
        let y_blk = |i: usize| i * m;
        let mu_blk = |i: usize| (j + i) * m;
        let eye = RealMatrix::identity(m, m);
        for s in 0..j {
            // State row s: ζ y_{s+1} − y_s + c_P λ̂_{s+1} = 0.
            let r = y_blk(s);
            a.view_mut((r, y_blk(s)), (m, m)).copy_from(&zeta);
            if s > 0 {
                a.view_mut((r, y_blk(s - 1)), (m, m)).copy_from(&(-&eye));
            }
            let lam_col = match variant {
                IeVariant::Fotd => (s + 1 < j).then(|| mu_blk(s + 1)),
                IeVariant::Fdto => Some(mu_blk(s)),
            };
            if let Some(c) = lam_col {
                a.view_mut((r, c), (m, m)).copy_from(&(&eye * coupling_p));
            }
            // Adjoint row s: ζᵀ μ_{s+1} − μ_{s+2} − c_Q y_s = −c_Q y_d(t_s).
            let r = mu_blk(s);
            a.view_mut((r, mu_blk(s)), (m, m)).copy_from(&zeta_t);
            if s + 1 < j {
                a.view_mut((r, mu_blk(s + 1)), (m, m)).copy_from(&(-&eye));
            }
            if s > 0 && coupling_q != 0.0 {
                a.view_mut((r, y_blk(s - 1)), (m, m))
                    .copy_from(&(&eye * -coupling_q));
            }
        }
        let lu = DenseLu::new(a)?;
        Ok(Self {
            m,
            j,
            tau,
            coupling_p,
            coupling_q,
            variant,
            lu,
        })
    }

    /// Dimension of the assembled system, `2 M J`.
    pub fn size(&self) -> usize {
        2 * self.m * self.j
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Right-hand side for boundary data and the samples `y_d(t_0 + sτ)`.
    fn rhs(
        &self,
        y0: &RealVector,
        lam_b: &RealVector,
        y_d: Option<&dyn Fn(usize) -> RealVector>,
    ) -> RealVector {
        let (m, j) = (self.m, self.j);
        let mut rhs = RealVector::zeros(self.size());
        rhs.rows_mut(0, m).copy_from(y0);
        if self.variant == IeVariant::Fotd {
            let mut last = rhs.rows_mut((j - 1) * m, m);
            last -= lam_b * self.coupling_p;
        }
        let mut mu_last = rhs.rows_mut((2 * j - 1) * m, m);
        mu_last += lam_b;
        if self.coupling_q != 0.0 {
            let mut first = rhs.rows_mut(j * m, m);
            first += y0 * self.coupling_q;
            if let Some(f) = y_d {
                for s in 0..j {
                    let mut blk = rhs.rows_mut((j + s) * m, m);
                    blk -= f(s) * self.coupling_q;
                }
            }
        }
        rhs
    }

    /// Solves the sub-interval problem; returns `(y_J, μ_1)`.
    pub fn solve(
        &self,
        y0: &RealVector,
        lam_b: &RealVector,
        y_d: Option<&dyn Fn(usize) -> RealVector>,
    ) -> Result<(RealVector, RealVector)> {
        let x = self.lu.solve_vec(&self.rhs(y0, lam_b, y_d))?;
        Ok(self.outputs(&x))
    }

    /// Full solution `(y_1..y_J, μ_1..μ_J)` stacked.
    pub fn solve_full(
        &self,
        y0: &RealVector,
        lam_b: &RealVector,
        y_d: Option<&dyn Fn(usize) -> RealVector>,
    ) -> Result<RealVector> {
        self.lu.solve_vec(&self.rhs(y0, lam_b, y_d))
    }

    fn outputs(&self, x: &RealVector) -> (RealVector, RealVector) {
        let (m, j) = (self.m, self.j);
        (
            x.rows((j - 1) * m, m).into_owned(),
            x.rows(j * m, m).into_owned(),
        )
    }

    /// `(Φ_P, Ψ_P, Φ_Q, Ψ_Q)` read off from solves with unit boundary data.
    pub fn coefficient_blocks(&self) -> Result<[RealMatrix; 4]> {
        let (m, j) = (self.m, self.j);
        let n = self.size();
        let mut g = DMatrix::zeros(n, 2 * m);
        for i in 0..m {
            let mut e = RealVector::zeros(m);
            e[i] = 1.0;
            let zero = RealVector::zeros(m);
            g.set_column(i, &self.rhs(&e, &zero, None));
            g.set_column(m + i, &self.rhs(&zero, &e, None));
        }
        let x = self.lu.solve(&g)?;
        let y_j = x.view(((j - 1) * m, 0), (m, 2 * m));
        let mu_1 = x.view((j * m, 0), (m, 2 * m));
        let phi_p = y_j.columns(0, m).into_owned();
        let psi_p = -y_j.columns(m, m).into_owned();
        let psi_q = mu_1.columns(0, m).into_owned();
        let phi_q = mu_1.columns(m, m).into_owned();
        Ok([phi_p, psi_p, phi_q, psi_q])
    }
}

/// Builds the propagator of `kind` for `problem` on the sub-intervals of `decomp`.
pub fn build_propagator(
    problem: &LinearControlProblem,
    decomp: &TimeDecomposition,
    kind: PropagatorKind,
) -> Result<AffinePropagator> {
    match kind {
        PropagatorKind::Exact => build_exact_propagator(problem, decomp),
        PropagatorKind::ImplicitEuler { steps, variant } => {
            build_implicit_euler_propagator(problem, decomp, steps, variant)
        }
    }
}

fn check_consistent(problem: &LinearControlProblem, decomp: &TimeDecomposition) -> Result<()> {
    if problem.objective() != decomp.objective() {
        return Err(Error::InvalidConfig(format!(
            "problem objective {} differs from decomposition objective {}",
            problem.objective(),
            decomp.objective()
        )));
    }
    let t = decomp.dt() * decomp.l() as f64;
    if (t - problem.horizon()).abs() > 1e-12 * problem.horizon() {
        return Err(Error::InvalidConfig(format!(
            "decomposition covers [0, {t}], problem horizon is {}",
            problem.horizon()
        )));
    }
    Ok(())
}

/// `J` implicit-Euler steps per sub-interval, via direct factorization of the
/// assembled sub-interval system.
pub fn build_implicit_euler_propagator(
    problem: &LinearControlProblem,
    decomp: &TimeDecomposition,
    steps: usize,
    variant: IeVariant,
) -> Result<AffinePropagator> {
    check_consistent(problem, decomp)?;
    let objective = problem.objective();
    let sys = SubintervalSystem::new(
        problem.k(),
        problem.gamma(),
        objective,
        decomp.dt(),
        steps,
        variant,
    )?;
    let [phi_p, psi_p, phi_q, psi_q] = sys.coefficient_blocks()?;
    let m = problem.dim();
    let zero = RealVector::zeros(m);
    let (b_p, b_q): (Vec<_>, Vec<_>) = match objective {
        ObjectiveKind::TerminalCost => (vec![zero.clone(); decomp.l()], vec![zero; decomp.l()]),
        ObjectiveKind::Tracking => {
            let tau = sys.tau();
            (1..=decomp.l())
                .map(|l| {
                    let t0 = decomp.interval_start(l);
                    let y_d = |s: usize| problem.y_d(t0 + s as f64 * tau);
                    sys.solve(&zero, &zero, Some(&y_d))
                })
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .unzip()
        }
    };
    let z_form = (steps == 1 && variant == IeVariant::Fotd).then(|| ZForm {
        z: RealMatrix::identity(m, m) + problem.k() * decomp.dt(),
        coupling_p: sys.coupling_p,
        coupling_q: sys.coupling_q,
    });
    let mut prop =
        AffinePropagator::from_parts(objective, phi_p, psi_p, phi_q, psi_q, b_p, b_q)?;
    prop.kind = Some(PropagatorKind::ImplicitEuler { steps, variant });
    prop.z_form = z_form;
    Ok(prop)
}

/// Coefficients of `p(t) = a + b t` solving `z' = M z + f(t)` for the
/// tracking mode with eigenvalue σ and `y_d(t) = p + q t`.
fn tracking_mode_particular(sigma: f64, gamma: f64, p: f64, q: f64) -> (Vector2<f64>, Vector2<f64>) {
    let g = 1.0 / gamma.sqrt();
    // det = −σ² − 1/γ < 0, so the inverse always exists.
    let m_inv = Matrix2::new(-sigma, -g, -g, sigma)
        .try_inverse()
        .expect("mode matrix is nonsingular");
    let f0 = Vector2::new(0.0, p * g);
    let f1 = Vector2::new(0.0, q * g);
    let b = -(m_inv * f1);
    let a = m_inv * (b - f0);
    (a, b)
}

/// Exact propagator via the eigendecomposition of a symmetric `K`.
///
/// Tracking offsets are exact when `y_d` is affine in time (the case for every
/// built-in problem); other trajectories are rejected.
pub fn build_exact_propagator(
    problem: &LinearControlProblem,
    decomp: &TimeDecomposition,
) -> Result<AffinePropagator> {
    check_consistent(problem, decomp)?;
    let objective = problem.objective();
    let (sigmas, v) = symmetric_eigen(problem.k())?;
    let dt = decomp.dt();
    let gamma = problem.gamma();
    let gh = objective.gamma_hat(gamma, dt);
    let m = problem.dim();
    let mut phi = RealVector::zeros(m);
    let mut psi = RealVector::zeros(m);
    for (i, &s) in sigmas.iter().enumerate() {
        let (f, p) = match objective {
            ObjectiveKind::Tracking => tracking_exact_hat(dt * s, gh)?,
            ObjectiveKind::TerminalCost => tc_exact_hat(dt * s, gh)?,
        };
        phi[i] = f;
        psi[i] = p;
    }
    let vt = v.transpose();
    let phi_m = &v * RealMatrix::from_diagonal(&phi) * &vt;
    let psi_m = &v * RealMatrix::from_diagonal(&psi) * &vt;
    let zero = RealVector::zeros(m);
    let (b_p, b_q, psi_q) = match objective {
        ObjectiveKind::TerminalCost => (
            vec![zero.clone(); decomp.l()],
            vec![zero; decomp.l()],
            RealMatrix::zeros(m, m),
        ),
        ObjectiveKind::Tracking => {
            let (p, q) = affine_fit(problem)?;
            let (pt, qt) = (&vt * p, &vt * q);
            let parts: Vec<_> = (0..m)
                .map(|i| tracking_mode_particular(sigmas[i], gamma, pt[i], qt[i]))
                .collect();
            let mut b_p = Vec::with_capacity(decomp.l());
            let mut b_q = Vec::with_capacity(decomp.l());
            for l in 1..=decomp.l() {
                let t0 = decomp.interval_start(l);
                let t1 = t0 + dt;
                let mut bp = RealVector::zeros(m);
                let mut bq = RealVector::zeros(m);
                for (i, (a, b)) in parts.iter().enumerate() {
                    let z0 = a + b * t0;
                    let z1 = a + b * t1;
                    bp[i] = z1[0] - phi[i] * z0[0] + psi[i] * z1[1];
                    bq[i] = z0[1] - psi[i] * z0[0] - phi[i] * z1[1];
                }
                b_p.push(&v * bp);
                b_q.push(&v * bq);
            }
            (b_p, b_q, psi_m.clone())
        }
    };
    let mut prop = AffinePropagator::from_parts(
        objective,
        phi_m.clone(),
        psi_m,
        phi_m,
        psi_q,
        b_p,
        b_q,
    )?;
    prop.kind = Some(PropagatorKind::Exact);
    Ok(prop)
}

/// `(p, q)` with `y_d(t) = p + q t`, or an error when `y_d` is not affine.
fn affine_fit(problem: &LinearControlProblem) -> Result<(RealVector, RealVector)> {
    let t = problem.horizon();
    let p = problem.y_d(0.0);
    let q = (problem.y_d(t) - &p) / t;
    let scale = p.norm() + q.norm() * t + f64::MIN_POSITIVE;
    for frac in [0.3183, 0.5, 0.7071] {
        let s = frac * t;
        let defect = (problem.y_d(s) - (&p + &q * s)).norm();
        if defect > 1e-10 * scale {
            return Err(Error::AssumptionViolated(format!(
                "exact tracking propagator needs y_d affine in t (defect {defect:e} at t = {s})"
            )));
        }
    }
    Ok((p, q))
}
