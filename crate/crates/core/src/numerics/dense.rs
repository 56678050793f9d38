use nalgebra::{DMatrix, DVector, Dyn, LU};

use super::Scalar;
use crate::error::{Error, Result};

/// LU factorization that is computed once and reused for many right-hand sides.
#[derive(Clone, Debug)]
pub struct DenseLu<T: Scalar> {
    lu: LU<T, Dyn, Dyn>,
    dim: usize,
}

impl<T: Scalar> DenseLu<T> {
    /// Factorizes `a`. Fails when a pivot is negligible relative to the largest one.
    pub fn new(a: DMatrix<T>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Dimension(format!(
                "cannot factorize a {}x{} matrix",
                a.nrows(),
                a.ncols()
            )));
        }
        let dim = a.nrows();
        if a.iter().any(|x| !x.modulus().is_finite()) {
            return Err(Error::NonFinite("matrix handed to LU"));
        }
        let lu = a.lu();
        if dim > 0 {
            let u = lu.u();
            let pivots = u.diagonal().map(|x| x.modulus());
            let largest = pivots.max();
            let smallest = pivots.min();
            if !(smallest > largest * (dim as f64) * f64::EPSILON) {
                return Err(Error::Singular(format!(
                    "pivot ratio {:e} at dimension {dim}",
                    smallest / largest
                )));
            }
        }
        Ok(Self { lu, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn solve(&self, b: &DMatrix<T>) -> Result<DMatrix<T>> {
        if b.nrows() != self.dim {
            return Err(Error::Dimension(format!(
                "right-hand side has {} rows, system has {}",
                b.nrows(),
                self.dim
            )));
        }
        self.lu
            .solve(b)
            .ok_or_else(|| Error::Singular("LU solve".into()))
    }

    pub fn solve_vec(&self, b: &DVector<T>) -> Result<DVector<T>> {
        if b.len() != self.dim {
            return Err(Error::Dimension(format!(
                "right-hand side has length {}, system has {}",
                b.len(),
                self.dim
            )));
        }
        self.lu
            .solve(b)
            .ok_or_else(|| Error::Singular("LU solve".into()))
    }
}

/// Solves `A X = B` by LU factorization.
pub fn dense_solve<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> Result<DMatrix<T>> {
    DenseLu::new(a.clone())?.solve(b)
}
