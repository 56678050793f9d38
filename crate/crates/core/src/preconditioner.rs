//! Alpha-circulant preconditioners `P(α)` for the coarse-grid-correction
//! matrix `Ã`, inverted by diagonalization in time.
//!
//! `P(α)` replaces the shift `B` of `Ã` by the alpha-circulant `C(α)` (and `Bᵀ`
//! by `C(α)*`) and drops the terminal-cost corner term. `C(α) = V D V⁻¹` with
//! `V = Γ_α⁻¹ F*`, so each application costs two FFTs per spatial index and
//! `L̂` independent `2M × 2M` (or `M × M`) block solves.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::{
    gmres, to_complex_matrix, Complex64, ComplexMatrix, ComplexVector, DenseLu, GmresConfig,
    RealVector, UnitaryDft,
};
use crate::paraopt::LinearPreconditioner;
use crate::problem::TimeDecomposition;
use crate::propagators::{AffinePropagator, BlackBoxView, ZForm};

/// Inversion procedure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PreconditionerMethod {
    /// Diagonalizes both halves at once; needs `|α| = 1`.
    General,
    /// Inverts the bottom then the top half; needs `Ψ̃_Q = O`, any `α ≠ 0`.
    Triangular,
}

impl PreconditionerMethod {
    /// Default α for the method.
    pub fn default_alpha(self) -> f64 {
        match self {
            PreconditionerMethod::General => -1.0,
            PreconditionerMethod::Triangular => 0.01,
        }
    }
}

/// How the per-frequency block systems are solved.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SmallSystemMethod {
    /// GMRES using only evaluations of the coarse propagators.
    BlackBoxIterative,
    /// Direct factorization of the explicit blocks, done once per plan.
    ExplicitDirect,
}

/// Relative imaginary part above which a preconditioner output is rejected.
pub const IMAGINARY_RESIDUE_LIMIT: f64 = 1e-9;

/// Tolerance of the GMRES solves inside the black-box block method.
pub const BLOCK_GMRES_TOLERANCE: f64 = 1e-12;

const ALPHA_MODULUS_TOL: f64 = 1e-12;

/// `diag(1, α^{1/L̂}, …, α^{(L̂−1)/L̂})` on the principal branch.
pub fn gamma_alpha(l_hat: usize, alpha: Complex64) -> Vec<Complex64> {
    let log = alpha.ln();
    (0..l_hat)
        .map(|k| (log * (k as f64 / l_hat as f64)).exp())
        .collect()
}

/// The alpha-circulant `C(α)`: `−1` on the first subdiagonal and `−α` in the
/// top-right corner.
pub fn alpha_circulant(l_hat: usize, alpha: Complex64) -> ComplexMatrix {
    let mut c = ComplexMatrix::zeros(l_hat, l_hat);
    for l in 1..l_hat {
        c[(l, l - 1)] = Complex64::new(-1.0, 0.0);
    }
    if l_hat > 0 {
        c[(0, l_hat - 1)] -= alpha;
    }
    c
}

/// Eigenvalues `d = √L̂ F Γ_α c₁` of `C(α)`, in the order matching `V = Γ_α⁻¹ F*`.
pub fn alpha_circulant_eigenvalues(l_hat: usize, alpha: Complex64) -> Result<Vec<Complex64>> {
    if l_hat == 0 {
        return Err(Error::InvalidConfig("need at least one time block".into()));
    }
    if alpha.norm() == 0.0 || !alpha.norm().is_finite() {
        return Err(Error::InvalidConfig(format!("alpha must be nonzero and finite, got {alpha}")));
    }
    let c = alpha_circulant(l_hat, alpha);
    let g = gamma_alpha(l_hat, alpha);
    let mut v: Vec<Complex64> = (0..l_hat).map(|k| g[k] * c[(k, 0)]).collect();
    UnitaryDft::new(l_hat).forward_in_place(&mut v);
    let scale = (l_hat as f64).sqrt();
    Ok(v.into_iter().map(|x| x * scale).collect())
}

#[derive(Debug)]
enum BlockSolvers {
    /// LU of `H_l` (or of its Z-form) per frequency.
    General { lu: Vec<DenseLu<Complex64>>, z_form: Option<ZForm> },
    /// LU of `I + d_l Φ̃_P` and `I + d̄_l Φ̃_Q` per frequency.
    Triangular {
        top: Vec<DenseLu<Complex64>>,
        bottom: Vec<DenseLu<Complex64>>,
    },
    BlackBox,
}

/// A prepared `P(α)⁻¹`, reusable for every outer iteration.
#[derive(Debug)]
pub struct PreconditionerPlan {
    alpha: f64,
    method: PreconditionerMethod,
    small: SmallSystemMethod,
    l_hat: usize,
    m: usize,
    d: Vec<Complex64>,
    gamma: Vec<Complex64>,
    dft: UnitaryDft,
    coarse: AffinePropagator,
    solvers: BlockSolvers,
}

fn eye(m: usize) -> ComplexMatrix {
    ComplexMatrix::identity(m, m)
}

impl PreconditionerPlan {
    /// Validates the method's preconditions and factorizes the blocks when
    /// `small` is [`SmallSystemMethod::ExplicitDirect`].
    pub fn build(
        coarse: &AffinePropagator,
        decomp: &TimeDecomposition,
        alpha: f64,
        method: PreconditionerMethod,
        small: SmallSystemMethod,
    ) -> Result<Self> {
        let l_hat = decomp.l_hat();
        let m = coarse.dim();
        if coarse.objective() != decomp.objective() {
            return Err(Error::InvalidConfig(
                "coarse propagator and decomposition have different objectives".into(),
            ));
        }
        if !(alpha != 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidConfig(format!("alpha must be nonzero, got {alpha}")));
        }
        match method {
            PreconditionerMethod::General if (alpha.abs() - 1.0).abs() > ALPHA_MODULUS_TOL => {
                return Err(Error::InvalidConfig(format!(
                    "the general method needs |alpha| = 1, got {alpha}"
                )));
            }
            PreconditionerMethod::Triangular if !coarse.psi_q_is_zero() => {
                return Err(Error::InvalidConfig(
                    "the triangular method needs a coarse propagator with Psi_Q = 0".into(),
                ));
            }
            _ => {}
        }
        let a = Complex64::new(alpha, 0.0);
        let d = alpha_circulant_eigenvalues(l_hat, a)?;
        let gamma = gamma_alpha(l_hat, a);
        let phi_p = to_complex_matrix(coarse.phi_p());
        let psi_p = to_complex_matrix(coarse.psi_p());
        let phi_q = to_complex_matrix(coarse.phi_q());
        let psi_q = to_complex_matrix(coarse.psi_q());
        let solvers = match (small, method) {
            (SmallSystemMethod::BlackBoxIterative, _) => BlockSolvers::BlackBox,
            (SmallSystemMethod::ExplicitDirect, PreconditionerMethod::General) => {
                let z_form = coarse.z_form().cloned();
                let lu = d
                    .par_iter()
                    .map(|&dl| {
                        let h = match &z_form {
                            Some(zf) => z_form_matrix(zf, dl),
                            None => h_matrix(&phi_p, &psi_p, &phi_q, &psi_q, dl),
                        };
                        DenseLu::new(h)
                    })
                    .collect::<Result<Vec<_>>>()?;
                BlockSolvers::General { lu, z_form }
            }
            (SmallSystemMethod::ExplicitDirect, PreconditionerMethod::Triangular) => {
                let top = d
                    .par_iter()
                    .map(|&dl| DenseLu::new(eye(m) + &phi_p * dl))
                    .collect::<Result<Vec<_>>>()?;
                let bottom = d
                    .par_iter()
                    .map(|&dl| DenseLu::new(eye(m) + &phi_q * dl.conj()))
                    .collect::<Result<Vec<_>>>()?;
                BlockSolvers::Triangular { top, bottom }
            }
        };
        Ok(Self {
            alpha,
            method,
            small,
            l_hat,
            m,
            d,
            gamma,
            dft: UnitaryDft::new(l_hat),
            coarse: coarse.clone(),
            solvers,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn method(&self) -> PreconditionerMethod {
        self.method
    }

    pub fn small_system_method(&self) -> SmallSystemMethod {
        self.small
    }

    /// Diagonal of `D(α)`.
    pub fn d(&self) -> &[Complex64] {
        &self.d
    }

    /// `P(α)⁻¹ v` for `v = [v_y; v_λ]`.
    pub fn apply_inverse(&self, v: &RealVector) -> Result<RealVector> {
        match self.method {
            PreconditionerMethod::General => self.apply_inverse_general(v),
            PreconditionerMethod::Triangular => self.apply_inverse_triangular(v),
        }
    }

    fn check_len(&self, v: &RealVector) -> Result<()> {
        if v.len() != 2 * self.l_hat * self.m {
            return Err(Error::Dimension(format!(
                "preconditioner input has length {}, expected {}",
                v.len(),
                2 * self.l_hat * self.m
            )));
        }
        Ok(())
    }

    /// Applies `(F diag(pre) ⊗ I)` (forward) or `(diag(post) F* ⊗ I)` to a
    /// half vector stored block-wise by time index.
    fn transform(&self, x: &mut [Complex64], scale: &[Complex64], forward: bool) {
        let (l_hat, m) = (self.l_hat, self.m);
        let mut cols = vec![Complex64::new(0.0, 0.0); l_hat * m];
        for l in 0..l_hat {
            for i in 0..m {
                cols[i * l_hat + l] = x[l * m + i];
            }
        }
        let work = |col: &mut [Complex64]| {
            if forward {
                for (c, s) in col.iter_mut().zip(scale) {
                    *c *= s;
                }
                self.dft.forward_in_place(col);
            } else {
                self.dft.inverse_in_place(col);
                for (c, s) in col.iter_mut().zip(scale) {
                    *c *= s;
                }
            }
        };
        if l_hat * m >= 4096 {
            cols.par_chunks_mut(l_hat).for_each(work);
        } else {
            cols.chunks_mut(l_hat).for_each(work);
        }
        for l in 0..l_hat {
            for i in 0..m {
                x[l * m + i] = cols[i * l_hat + l];
            }
        }
    }

    fn gamma_inv(&self) -> Vec<Complex64> {
        self.gamma.iter().map(|g| g.inv()).collect()
    }

    fn gamma_conj(&self) -> Vec<Complex64> {
        self.gamma.iter().map(|g| g.conj()).collect()
    }

    fn gamma_inv_conj(&self) -> Vec<Complex64> {
        self.gamma.iter().map(|g| g.conj().inv()).collect()
    }

    fn half(&self, v: &RealVector, which: usize) -> Vec<Complex64> {
        let n = self.l_hat * self.m;
        v.rows(which * n, n)
            .iter()
            .map(|&x| Complex64::new(x, 0.0))
            .collect()
    }

    /// Runs `solve(l, block)` for every frequency in parallel, in place.
    fn per_block<F>(&self, x: &mut [Complex64], width: usize, solve: F) -> Result<()>
    where
        F: Fn(usize, ComplexVector) -> Result<ComplexVector> + Sync,
    {
        let out = x
            .par_chunks(width)
            .enumerate()
            .map(|(l, c)| solve(l, ComplexVector::from_column_slice(c)))
            .collect::<Result<Vec<_>>>()?;
        for (chunk, o) in x.chunks_mut(width).zip(out) {
            chunk.copy_from_slice(o.as_slice());
        }
        Ok(())
    }

    /// Algorithm for `|α| = 1`: both halves transformed with `F Γ_α`, one
    /// `2M × 2M` solve per frequency, transformed back with `Γ_α⁻¹ F*`.
    pub fn apply_inverse_general(&self, v: &RealVector) -> Result<RealVector> {
        if self.method != PreconditionerMethod::General {
            return Err(Error::InvalidConfig("plan was built for the triangular method".into()));
        }
        self.check_len(v)?;
        let (l_hat, m) = (self.l_hat, self.m);
        let mut r = self.half(v, 0);
        let mut s = self.half(v, 1);
        self.transform(&mut r, &self.gamma, true);
        self.transform(&mut s, &self.gamma, true);
        // Interleave per frequency: [r_l; s_l].
        let mut joint = vec![Complex64::new(0.0, 0.0); 2 * l_hat * m];
        for l in 0..l_hat {
            joint[2 * l * m..(2 * l + 1) * m].copy_from_slice(&r[l * m..(l + 1) * m]);
            joint[(2 * l + 1) * m..(2 * l + 2) * m].copy_from_slice(&s[l * m..(l + 1) * m]);
        }
        let bb = self.coarse.black_box();
        self.per_block(&mut joint, 2 * m, |l, rhs| match &self.solvers {
            BlockSolvers::General { lu, z_form } => {
                let rhs = match z_form {
                    Some(zf) => z_form_rhs(zf, &rhs),
                    None => rhs,
                };
                lu[l].solve_vec(&rhs)
            }
            BlockSolvers::BlackBox => solve_block_blackbox(&bb, self.d[l], &rhs),
            BlockSolvers::Triangular { .. } => unreachable!("method checked above"),
        })?;
        for l in 0..l_hat {
            r[l * m..(l + 1) * m].copy_from_slice(&joint[2 * l * m..(2 * l + 1) * m]);
            s[l * m..(l + 1) * m].copy_from_slice(&joint[(2 * l + 1) * m..(2 * l + 2) * m]);
        }
        let back = self.gamma_inv();
        self.transform(&mut r, &back, false);
        self.transform(&mut s, &back, false);
        real_part_checked(r.into_iter().chain(s))
    }

    /// Algorithm for `Ψ̃_Q = O`: solve the bottom half with `C(α)*`, then the
    /// top half with `C(α)` after moving `Ψ̃_P z` to the right-hand side.
    pub fn apply_inverse_triangular(&self, v: &RealVector) -> Result<RealVector> {
        if self.method != PreconditionerMethod::Triangular {
            return Err(Error::InvalidConfig("plan was built for the general method".into()));
        }
        self.check_len(v)?;
        let (l_hat, m) = (self.l_hat, self.m);
        let bb = self.coarse.black_box();

        let mut s = self.half(v, 1);
        self.transform(&mut s, &self.gamma_inv_conj(), true);
        self.per_block(&mut s, m, |l, rhs| match &self.solvers {
            BlockSolvers::Triangular { bottom, .. } => bottom[l].solve_vec(&rhs),
            BlockSolvers::BlackBox => solve_diag_blackbox(&bb, self.d[l].conj(), &rhs, Half::Q),
            BlockSolvers::General { .. } => unreachable!("method checked above"),
        })?;
        self.transform(&mut s, &self.gamma_conj(), false);
        let z = real_part_checked(s)?;

        let n = l_hat * m;
        let mut r1 = v.rows(0, n).into_owned();
        for l in 0..l_hat {
            let zl = z.rows(l * m, m);
            let mut blk = r1.rows_mut(l * m, m);
            blk -= self.coarse.psi_p() * zl;
        }
        let mut r: Vec<Complex64> = r1.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.transform(&mut r, &self.gamma, true);
        self.per_block(&mut r, m, |l, rhs| match &self.solvers {
            BlockSolvers::Triangular { top, .. } => top[l].solve_vec(&rhs),
            BlockSolvers::BlackBox => solve_diag_blackbox(&bb, self.d[l], &rhs, Half::P),
            BlockSolvers::General { .. } => unreachable!("method checked above"),
        })?;
        self.transform(&mut r, &self.gamma_inv(), false);
        let x = real_part_checked(r)?;
        let mut out = RealVector::zeros(2 * n);
        out.rows_mut(0, n).copy_from(&x);
        out.rows_mut(n, n).copy_from(&z);
        Ok(out)
    }
}

impl LinearPreconditioner for PreconditionerPlan {
    fn apply(&self, v: &RealVector) -> Result<RealVector> {
        self.apply_inverse(v)
    }
}

/// Real part of `x` after checking its imaginary part is round-off.
fn real_part_checked(x: impl IntoIterator<Item = Complex64>) -> Result<RealVector> {
    let x: Vec<Complex64> = x.into_iter().collect();
    let total: f64 = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let imag: f64 = x.iter().map(|z| z.im * z.im).sum::<f64>().sqrt();
    if total > 0.0 && imag > IMAGINARY_RESIDUE_LIMIT * total {
        return Err(Error::ImaginaryResidue {
            residue: imag / total,
        });
    }
    Ok(RealVector::from_iterator(x.len(), x.iter().map(|z| z.re)))
}

/// `H_l = [[I + d Φ̃_P, Ψ̃_P], [−Ψ̃_Q, I + d̄ Φ̃_Q]]`.
pub fn h_matrix(
    phi_p: &ComplexMatrix,
    psi_p: &ComplexMatrix,
    phi_q: &ComplexMatrix,
    psi_q: &ComplexMatrix,
    d: Complex64,
) -> ComplexMatrix {
    let m = phi_p.nrows();
    let mut h = DMatrix::zeros(2 * m, 2 * m);
    h.view_mut((0, 0), (m, m)).copy_from(&(eye(m) + phi_p * d));
    h.view_mut((0, m), (m, m)).copy_from(psi_p);
    h.view_mut((m, 0), (m, m)).copy_from(&(-psi_q));
    h.view_mut((m, m), (m, m)).copy_from(&(eye(m) + phi_q * d.conj()));
    h
}

/// `[[Z + d I, c_P I], [−c_Q I, Zᵀ + d̄ I]]`, equivalent to `H_l` after scaling
/// its rows by `Z` and `Zᵀ`.
fn z_form_matrix(zf: &ZForm, d: Complex64) -> ComplexMatrix {
    let m = zf.z.nrows();
    let z = to_complex_matrix(&zf.z);
    let mut h = DMatrix::zeros(2 * m, 2 * m);
    h.view_mut((0, 0), (m, m)).copy_from(&(&z + eye(m) * d));
    h.view_mut((0, m), (m, m))
        .copy_from(&(eye(m) * Complex64::new(zf.coupling_p, 0.0)));
    h.view_mut((m, 0), (m, m))
        .copy_from(&(eye(m) * Complex64::new(-zf.coupling_q, 0.0)));
    h.view_mut((m, m), (m, m))
        .copy_from(&(z.transpose() + eye(m) * d.conj()));
    h
}

fn z_form_rhs(zf: &ZForm, rhs: &ComplexVector) -> ComplexVector {
    let m = zf.z.nrows();
    let z = to_complex_matrix(&zf.z);
    let mut out = ComplexVector::zeros(2 * m);
    out.rows_mut(0, m).copy_from(&(&z * rhs.rows(0, m)));
    out.rows_mut(m, m).copy_from(&(z.transpose() * rhs.rows(m, m)));
    out
}

/// Solves the Z-form of `H_l` directly.
pub fn solve_block_explicit(zf: &ZForm, d: Complex64, rhs: &ComplexVector) -> Result<ComplexVector> {
    DenseLu::new(z_form_matrix(zf, d))?.solve_vec(&z_form_rhs(zf, rhs))
}

fn split(v: &ComplexVector) -> (RealVector, RealVector) {
    (v.map(|z| z.re), v.map(|z| z.im))
}

fn join(re: RealVector, im: RealVector) -> ComplexVector {
    ComplexVector::from_iterator(re.len(), re.iter().zip(im.iter()).map(|(&a, &b)| Complex64::new(a, b)))
}

/// Linear part of `P̃` on complex arguments, from real black-box evaluations.
fn p_lin(bb: &BlackBoxView<'_>, y: &ComplexVector, lam: &ComplexVector) -> ComplexVector {
    let (yr, yi) = split(y);
    let (lr, li) = split(lam);
    join(bb.p(&yr, &lr) - bb.p_zero(), bb.p(&yi, &li) - bb.p_zero())
}

/// Linear part of `Q̃` on complex arguments, from real black-box evaluations.
fn q_lin(bb: &BlackBoxView<'_>, y: &ComplexVector, lam: &ComplexVector) -> ComplexVector {
    let (yr, yi) = split(y);
    let (lr, li) = split(lam);
    join(bb.q(&yr, &lr) - bb.q_zero(), bb.q(&yi, &li) - bb.q_zero())
}

/// `H_l [x; z]` evaluated through the coarse propagators only.
pub fn h_apply_blackbox(bb: &BlackBoxView<'_>, d: Complex64, v: &ComplexVector) -> ComplexVector {
    let m = bb.dim();
    let x = v.rows(0, m).into_owned();
    let z = v.rows(m, m).into_owned();
    let top = &x + p_lin(bb, &(&x * d), &(-&z));
    let bottom = &z + q_lin(bb, &(-&x), &(&z * d.conj()));
    let mut out = ComplexVector::zeros(2 * m);
    out.rows_mut(0, m).copy_from(&top);
    out.rows_mut(m, m).copy_from(&bottom);
    out
}

fn block_gmres<F>(apply: F, rhs: &ComplexVector) -> Result<ComplexVector>
where
    F: FnMut(&ComplexVector) -> Result<ComplexVector>,
{
    let n = rhs.len();
    let cfg = GmresConfig::new(BLOCK_GMRES_TOLERANCE, 2 * n + 20);
    let (x, rep) = gmres(apply, rhs, &ComplexVector::zeros(n), None, &cfg)?;
    if !rep.converged {
        return Err(Error::InnerNoConvergence(format!(
            "block GMRES reached {:e} after {} iterations",
            rep.final_relative_residual, rep.iterations
        )));
    }
    Ok(x)
}

/// Solves `H_l [x; z] = rhs` with GMRES on the black-box product.
pub fn solve_block_blackbox(
    bb: &BlackBoxView<'_>,
    d: Complex64,
    rhs: &ComplexVector,
) -> Result<ComplexVector> {
    block_gmres(|v| Ok(h_apply_blackbox(bb, d, v)), rhs)
}

#[derive(Clone, Copy)]
enum Half {
    P,
    Q,
}

/// Solves `(I + c Φ̃_P) x = rhs` or `(I + c Φ̃_Q) z = rhs` through the black box.
fn solve_diag_blackbox(
    bb: &BlackBoxView<'_>,
    c: Complex64,
    rhs: &ComplexVector,
    half: Half,
) -> Result<ComplexVector> {
    let zero = ComplexVector::zeros(bb.dim());
    block_gmres(
        |v| {
            Ok(match half {
                Half::P => v + p_lin(bb, &(v * c), &zero),
                Half::Q => v + q_lin(bb, &zero, &(v * c)),
            })
        },
        rhs,
    )
}
