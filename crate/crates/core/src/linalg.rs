//! Small dense complex linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{CsiError, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// Eigenvalues below this are treated as zero when forming square roots.
pub const EIGEN_CLAMP: f64 = 1e-10;

/// Hermitian eigendecomposition sorted by descending eigenvalue
/// (ties broken by ascending original index).
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

impl HermitianEigen {
    pub fn new(a: &CMat) -> Result<Self> {
        if !a.is_square() {
            return Err(CsiError::DimensionMismatch(format!(
                "eigendecomposition of a {}x{} matrix",
                a.nrows(),
                a.ncols()
            )));
        }
        let dev = hermitian_defect(a);
        let scale = a.norm().max(1.0);
        if dev > 1e-8 * scale {
            return Err(CsiError::InvalidParameter(format!(
                "matrix is not Hermitian (|A - A^H|_F = {dev:e})"
            )));
        }
        let eig = SymmetricEigen::try_new(hermitianize(a), 1e-15, 0).ok_or_else(|| {
            CsiError::InvalidParameter("Hermitian eigensolver did not converge".into())
        })?;
        let n = a.nrows();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| {
            eig.eigenvalues[j]
                .partial_cmp(&eig.eigenvalues[i])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(i.cmp(&j))
        });
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = CMat::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
        Ok(Self { values, vectors })
    }

    /// `V f(Λ) V^H` for a real spectral function `f`.
    pub fn spectral_map(&self, f: impl Fn(f64) -> f64) -> CMat {
        let n = self.vectors.nrows();
        let mut scaled = self.vectors.clone();
        for (c, &lambda) in self.values.iter().enumerate() {
            let s = f(lambda);
            scaled.column_mut(c).scale_mut(s);
        }
        let out = &scaled * self.vectors.adjoint();
        debug_assert_eq!(out.nrows(), n);
        out
    }

    /// `V f(Λ) V^H x` without forming the matrix.
    pub fn spectral_apply(&self, f: impl Fn(f64) -> f64, x: &CVec) -> CVec {
        let mut coeffs = self.vectors.ad_mul(x);
        for (c, &lambda) in coeffs.iter_mut().zip(self.values.iter()) {
            *c *= f(lambda);
        }
        &self.vectors * coeffs
    }
}

/// `(A + A^H) / 2`.
pub fn hermitianize(a: &CMat) -> CMat {
    (a + a.adjoint()).scale(0.5)
}

/// `||A - A^H||_F`.
pub fn hermitian_defect(a: &CMat) -> f64 {
    (a - a.adjoint()).norm()
}

/// Unit-modulus complex exponential `exp(j * theta)`.
#[inline]
pub fn cis(theta: f64) -> Complex64 {
    let (s, c) = theta.sin_cos();
    Complex64::new(c, s)
}

/// `x^H y`.
pub fn inner(x: &CVec, y: &CVec) -> Complex64 {
    x.dotc(y)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Real-valued matrix lifted to complex.
pub fn complexify(a: &DMatrix<f64>) -> CMat {
    a.map(|x| Complex64::new(x, 0.0))
}
