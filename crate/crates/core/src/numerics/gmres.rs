use nalgebra::DVector;

use super::{all_finite, Scalar};
use crate::error::{Error, Result};

/// Settings for [`gmres`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GmresConfig {
    /// Target for `‖b − A x‖ / ‖b‖`.
    pub rel_tolerance: f64,
    /// Cap on the total number of Arnoldi steps over all cycles.
    pub max_iterations: usize,
    /// Krylov dimension per cycle; `None` runs full GMRES.
    pub restart: Option<usize>,
}

impl GmresConfig {
    pub fn new(rel_tolerance: f64, max_iterations: usize) -> Self {
        Self {
            rel_tolerance,
            max_iterations,
            restart: None,
        }
    }

    pub fn with_restart(mut self, restart: usize) -> Self {
        self.restart = Some(restart);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tolerance > 0.0 && self.rel_tolerance < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "GMRES tolerance {} must lie in (0, 1)",
                self.rel_tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("GMRES needs max_iterations >= 1".into()));
        }
        if self.restart == Some(0) {
            return Err(Error::InvalidConfig("GMRES restart must be positive".into()));
        }
        Ok(())
    }
}

impl Default for GmresConfig {
    fn default() -> Self {
        Self::new(1e-4, 1000)
    }
}

/// Outcome of a [`gmres`] call.
#[derive(Clone, Debug, PartialEq)]
pub struct GmresReport {
    /// Arnoldi steps performed.
    pub iterations: usize,
    /// True relative residual of the returned iterate.
    pub final_relative_residual: f64,
    pub converged: bool,
    /// Initial relative residual followed by the per-step estimates.
    pub residual_history: Vec<f64>,
}

type Operator<'a, T> = dyn FnMut(&DVector<T>) -> Result<DVector<T>> + 'a;

/// Right-preconditioned GMRES for `A x = b`.
///
/// With a preconditioner `M⁻¹` the iteration works on `A M⁻¹ u = b`, so the
/// residual it monitors is the residual of the original system. Non-convergence
/// is reported through [`GmresReport::converged`]; only non-finite operator
/// output is an error.
pub fn gmres<T, A>(
    mut apply_a: A,
    b: &DVector<T>,
    x0: &DVector<T>,
    mut precond: Option<&mut Operator<'_, T>>,
    cfg: &GmresConfig,
) -> Result<(DVector<T>, GmresReport)>
where
    T: Scalar,
    A: FnMut(&DVector<T>) -> Result<DVector<T>>,
{
    cfg.validate()?;
    let n = b.len();
    if x0.len() != n {
        return Err(Error::Dimension(format!(
            "initial guess has length {}, right-hand side {}",
            x0.len(),
            n
        )));
    }
    let b_norm = b.norm();
    if b_norm == 0.0 {
        return Ok((
            DVector::zeros(n),
            GmresReport {
                iterations: 0,
                final_relative_residual: 0.0,
                converged: true,
                residual_history: vec![0.0],
            },
        ));
    }

    let mut apply = |v: &DVector<T>, what: &'static str| -> Result<DVector<T>> {
        let out = apply_a(v)?;
        if out.len() != n {
            return Err(Error::Dimension(format!(
                "operator returned length {}, expected {n}",
                out.len()
            )));
        }
        if !all_finite(&out) {
            return Err(Error::NonFinite(what));
        }
        Ok(out)
    };
    let mut apply_m = |v: &DVector<T>| -> Result<DVector<T>> {
        match precond.as_mut() {
            Some(m) => {
                let out = m(v)?;
                if out.len() != n {
                    return Err(Error::Dimension(format!(
                        "preconditioner returned length {}, expected {n}",
                        out.len()
                    )));
                }
                if !all_finite(&out) {
                    return Err(Error::NonFinite("GMRES preconditioner"));
                }
                Ok(out)
            }
            None => Ok(v.clone()),
        }
    };

    let tol = cfg.rel_tolerance;
    let mut x = x0.clone();
    let mut total = 0usize;
    let mut history = Vec::new();
    let mut rel;
    let mut converged = false;

    loop {
        let r = b - apply(&x, "GMRES operator")?;
        let beta = r.norm();
        rel = beta / b_norm;
        if history.is_empty() {
            history.push(rel);
        }
        if rel <= tol {
            converged = true;
            break;
        }
        if total >= cfg.max_iterations {
            break;
        }

        let budget = cfg.max_iterations - total;
        let m = cfg.restart.unwrap_or(budget).min(budget).min(n);
        let mut basis: Vec<DVector<T>> = Vec::with_capacity(m + 1);
        basis.push(r.unscale(beta));
        // Column j of the Hessenberg matrix, already rotated.
        let mut h: Vec<Vec<T>> = Vec::with_capacity(m);
        let mut cs: Vec<f64> = Vec::with_capacity(m);
        let mut sn: Vec<T> = Vec::with_capacity(m);
        let mut g: Vec<T> = vec![T::zero(); m + 1];
        g[0] = T::from_real(beta);
        let mut k = 0;

        for j in 0..m {
            let z = apply_m(&basis[j])?;
            let mut w = apply(&z, "GMRES operator")?;
            let mut col = vec![T::zero(); j + 2];
            for (i, v) in basis.iter().enumerate() {
                let hij = v.dotc(&w);
                w.axpy(-hij, v, T::one());
                col[i] = hij;
            }
            let h_next = w.norm();
            col[j + 1] = T::from_real(h_next);

            for i in 0..j {
                let a = col[i];
                let bb = col[i + 1];
                col[i] = a.scale(cs[i]) + sn[i] * bb;
                col[i + 1] = -(sn[i].conjugate() * a) + bb.scale(cs[i]);
            }
            let (c, s, r) = givens(col[j], col[j + 1]);
            col[j] = r;
            col[j + 1] = T::zero();
            cs.push(c);
            sn.push(s);
            g[j + 1] = -(s.conjugate() * g[j]);
            g[j] = g[j].scale(c);
            h.push(col);

            total += 1;
            k = j + 1;
            let estimate = g[j + 1].modulus() / b_norm;
            history.push(estimate);

            let breakdown = h_next <= 1e-14 * beta;
            if estimate <= tol || breakdown || j + 1 == m {
                break;
            }
            basis.push(w.unscale(h_next));
        }

        // Back substitution on the rotated (upper triangular) Hessenberg matrix.
        let mut y = vec![T::zero(); k];
        for i in (0..k).rev() {
            let mut acc = g[i];
            for (jj, yj) in y.iter().enumerate().skip(i + 1) {
                acc -= h[jj][i] * *yj;
            }
            y[i] = acc / h[i][i];
        }
        let mut update = DVector::<T>::zeros(n);
        for (v, yi) in basis.iter().zip(&y) {
            update.axpy(*yi, v, T::one());
        }
        x += apply_m(&update)?;
    }

    Ok((
        x,
        GmresReport {
            iterations: total,
            final_relative_residual: rel,
            converged,
            residual_history: history,
        },
    ))
}

/// Complex Givens rotation `[c s; -s̄ c]` mapping `(a, b)` to `(r, 0)`.
fn givens<T: Scalar>(a: T, b: T) -> (f64, T, T) {
    let abs_a = a.modulus();
    let abs_b = b.modulus();
    if abs_b == 0.0 {
        return (1.0, T::zero(), a);
    }
    if abs_a == 0.0 {
        // Rotate b into the first slot: c = 0, s = b̄/|b|.
        return (0.0, b.conjugate().unscale(abs_b), T::from_real(abs_b));
    }
    let r = abs_a.hypot(abs_b);
    let phase = a.unscale(abs_a);
    let c = abs_a / r;
    let s = phase * b.conjugate().unscale(r);
    (c, s, phase.scale(r))
}
