//! Dense linear algebra at desk scale.
//!
//! Systems stay small (a few hundred to a few thousand unknowns), so every
//! solve goes through a dense LU with partial pivoting. A [`DenseFactor`]
//! also keeps the factorization of the transpose, which the adjoint reverse
//! rules need.

use nalgebra::{DMatrix, DVector};

use crate::ad::AdError;

/// LU factorization of a square matrix and of its transpose.
pub struct DenseFactor {
    n: usize,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    lu_t: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl DenseFactor {
    /// Factor a row-major `n x n` matrix. Fails on (numerically) singular input.
    pub fn from_row_major(n: usize, a: &[f64]) -> Result<Self, AdError> {
        assert_eq!(a.len(), n * n, "matrix size mismatch");
        let m = DMatrix::from_row_slice(n, n, a);
        Self::from_matrix(m)
    }

    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self, AdError> {
        let n = m.nrows();
        assert_eq!(n, m.ncols(), "square matrix required");
        let mt = m.transpose();
        let lu = nalgebra::LU::new(m);
        let lu_t = nalgebra::LU::new(mt);
        let factor = DenseFactor { n, lu, lu_t };
        if n > 0 {
            // Cheap singularity probe: a pivot at exact zero breaks solve().
            let diag_min = (0..n)
                .map(|i| factor.lu.u()[(i, i)].abs())
                .fold(f64::INFINITY, f64::min);
            if diag_min == 0.0 || !diag_min.is_finite() {
                return Err(AdError::Singular {
                    context: "dense LU factorization".into(),
                });
            }
        }
        Ok(factor)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, AdError> {
        assert_eq!(b.len(), self.n, "rhs size mismatch");
        let rhs = DVector::from_column_slice(b);
        let x = self.lu.solve(&rhs).ok_or(AdError::Singular {
            context: "dense solve".into(),
        })?;
        Ok(x.as_slice().to_vec())
    }

    pub fn solve_transpose(&self, b: &[f64]) -> Result<Vec<f64>, AdError> {
        assert_eq!(b.len(), self.n, "rhs size mismatch");
        let rhs = DVector::from_column_slice(b);
        let x = self.lu_t.solve(&rhs).ok_or(AdError::Singular {
            context: "dense transpose solve".into(),
        })?;
        Ok(x.as_slice().to_vec())
    }
}

/// 2-norm of a slice.
pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Infinity norm of a slice.
pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `y += k * x`
pub fn axpy(k: f64, x: &[f64], y: &mut [f64]) {
    assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += k * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factor_solves_both_directions() {
        let a = [4.0, 1.0, 2.0, 0.5, 3.0, -1.0, 1.0, -2.0, 5.0];
        let f = DenseFactor::from_row_major(3, &a).unwrap();
        let x = f.solve(&[1.0, 2.0, 3.0]).unwrap();
        // residual check
        for i in 0..3 {
            let r: f64 = (0..3).map(|j| a[3 * i + j] * x[j]).sum();
            assert!((r - [1.0, 2.0, 3.0][i]).abs() < 1e-12);
        }
        let y = f.solve_transpose(&[1.0, 0.0, -1.0]).unwrap();
        for j in 0..3 {
            let r: f64 = (0..3).map(|i| a[3 * i + j] * y[i]).sum();
            assert!((r - [1.0, 0.0, -1.0][j]).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_matrix_rejected() {
        let a = [1.0, 2.0, 2.0, 4.0];
        assert!(DenseFactor::from_row_major(2, &a).is_err());
    }
}
