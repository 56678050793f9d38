//! Dense linear algebra, unitary DFT, GMRES and eigenvalue kernels shared by
//! every other module.
//!
//! Real problems use [`RealMatrix`]; the diagonalized preconditioner blocks are
//! complex and use [`ComplexMatrix`]. All reductions run sequentially so that
//! results are reproducible bit for bit.

mod dense;
mod eigen;
mod fft;
mod gmres;

pub use dense::{dense_solve, DenseLu};
pub use eigen::{
    eigenvalues_general, eigenvalues_general_complex, eigenvalues_symmetric, spectral_radius,
    symmetric_eigen, symmetry_defect,
};
pub use fft::{fft_forward, fft_inverse, UnitaryDft};
pub use gmres::{gmres, GmresConfig, GmresReport};

pub use num_complex::Complex64;

/// Real dense matrix.
pub type RealMatrix = nalgebra::DMatrix<f64>;
/// Complex dense matrix.
pub type ComplexMatrix = nalgebra::DMatrix<Complex64>;
/// Real dense vector.
pub type RealVector = nalgebra::DVector<f64>;
/// Complex dense vector.
pub type ComplexVector = nalgebra::DVector<Complex64>;

/// Scalar types the kernels operate on (`f64` and [`Complex64`]).
pub trait Scalar: nalgebra::ComplexField<RealField = f64> + Copy {}
impl<T: nalgebra::ComplexField<RealField = f64> + Copy> Scalar for T {}

pub(crate) fn all_finite<T: Scalar>(v: &nalgebra::DVector<T>) -> bool {
    v.iter().all(|x| x.modulus().is_finite())
}

/// Promotes a real vector to a complex one.
pub fn to_complex(v: &RealVector) -> ComplexVector {
    v.map(|x| Complex64::new(x, 0.0))
}

/// Promotes a real matrix to a complex one.
pub fn to_complex_matrix(a: &RealMatrix) -> ComplexMatrix {
    a.map(|x| Complex64::new(x, 0.0))
}
