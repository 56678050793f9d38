use nalgebra::{DMatrix, DVector};

use super::{Complex64, RealMatrix};
use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-12;

/// `‖K − Kᵀ‖_F`.
pub fn symmetry_defect(k: &RealMatrix) -> f64 {
    (k - k.transpose()).norm()
}

fn check_symmetric(k: &RealMatrix) -> Result<()> {
    if !k.is_square() {
        return Err(Error::Dimension(format!(
            "eigenvalues of a {}x{} matrix",
            k.nrows(),
            k.ncols()
        )));
    }
    if k.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("matrix handed to eigensolver"));
    }
    let defect = symmetry_defect(k);
    let allowed = SYMMETRY_TOL * k.norm();
    if defect > allowed {
        return Err(Error::NotSymmetric { defect, allowed });
    }
    Ok(())
}

/// Eigenvalues of a symmetric matrix in ascending order.
pub fn eigenvalues_symmetric(k: &RealMatrix) -> Result<Vec<f64>> {
    Ok(symmetric_eigen(k)?.0.iter().copied().collect())
}

/// Ascending eigenvalues and the matching orthonormal eigenvectors (as columns).
pub fn symmetric_eigen(k: &RealMatrix) -> Result<(DVector<f64>, RealMatrix)> {
    check_symmetric(k)?;
    let n = k.nrows();
    if n == 0 {
        return Ok((DVector::zeros(0), DMatrix::zeros(0, 0)));
    }
    let sym = (k + k.transpose()) * 0.5;
    let eig = sym
        .try_symmetric_eigen(f64::EPSILON, 0)
        .ok_or(Error::EigenNoConvergence)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// Iteration cap for the Schur decomposition, per matrix row.
const SCHUR_MAX_SWEEPS_PER_ROW: usize = 200;

fn sort_complex(v: &mut [Complex64]) {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

/// Eigenvalues of a general real matrix, ordered by real then imaginary part.
pub fn eigenvalues_general(k: &RealMatrix) -> Result<Vec<Complex64>> {
    if !k.is_square() {
        return Err(Error::Dimension(format!(
            "eigenvalues of a {}x{} matrix",
            k.nrows(),
            k.ncols()
        )));
    }
    if k.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("matrix handed to eigensolver"));
    }
    if k.nrows() == 0 {
        return Ok(Vec::new());
    }
    let n = k.nrows();
    let cap = SCHUR_MAX_SWEEPS_PER_ROW * n;
    let mut v: Vec<Complex64> = match k.clone().try_schur(f64::EPSILON, cap) {
        Some(schur) => schur.complex_eigenvalues().iter().copied().collect(),
        None => {
            // QR iterations can stall on matrices with large exactly structured
            // blocks (e.g. identity plus low rank). An orthogonal similarity
            // with a dense reflector removes that structure.
            let u = DVector::from_fn(n, |i, _| (1.0 + i as f64).sin() + 1.5);
            let u = &u / u.norm();
            let h = RealMatrix::identity(n, n) - &u * u.transpose() * 2.0;
            let similar = &h * k * &h;
            // Deflation thresholds are relative to neighbouring diagonal
            // entries, which is too strict for strongly non-normal input.
            [64.0, 4096.0]
                .iter()
                .find_map(|f| similar.clone().try_schur(f * f64::EPSILON, cap))
                .ok_or(Error::EigenNoConvergence)?
                .complex_eigenvalues()
                .iter()
                .copied()
                .collect()
        }
    };
    sort_complex(&mut v);
    Ok(v)
}

/// Eigenvalues of a general complex matrix, ordered by real then imaginary part.
pub fn eigenvalues_general_complex(k: &DMatrix<Complex64>) -> Result<Vec<Complex64>> {
    if !k.is_square() {
        return Err(Error::Dimension(format!(
            "eigenvalues of a {}x{} matrix",
            k.nrows(),
            k.ncols()
        )));
    }
    if k.iter().any(|x| !(x.re.is_finite() && x.im.is_finite())) {
        return Err(Error::NonFinite("matrix handed to eigensolver"));
    }
    if k.nrows() == 0 {
        return Ok(Vec::new());
    }
    let schur = k
        .clone()
        .try_schur(f64::EPSILON, SCHUR_MAX_SWEEPS_PER_ROW * k.nrows())
        .ok_or(Error::EigenNoConvergence)?;
    let mut v: Vec<Complex64> = schur.eigenvalues().map(|e| e.iter().copied().collect()).unwrap_or_default();
    sort_complex(&mut v);
    Ok(v)
}

/// Largest eigenvalue modulus of a general real matrix.
pub fn spectral_radius(k: &RealMatrix) -> Result<f64> {
    Ok(eigenvalues_general(k)?
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max))
}
