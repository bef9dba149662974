//! Scalar abstraction for the numerical kernels.
//!
//! Everything that has to run both in plain floating point and under tape
//! recording is written against [`Real`]. `f32`/`f64` get the trivial
//! implementation; [`crate::ad::Active`] records every operation.

use std::sync::Arc;

use crate::ad::AdError;
use crate::linalg::DenseFactor;

/// Field the kernels compute in: `num_traits::Float` plus the two dense
/// solves the disciplines need. `value()` exposes the primal value so
/// tolerance checks and branch selection behave identically under recording.
pub trait Real:
    num_traits::Float + num_traits::FromPrimitive + core::fmt::Debug + Copy + 'static
{
    /// Primal (point) value of the scalar.
    fn value(self) -> f64;

    /// Lift an `f64` constant into the scalar type.
    fn of(x: f64) -> Self {
        <Self as num_traits::FromPrimitive>::from_f64(x).expect("constant conversion")
    }

    /// Solve the dense system `A x = b` where `A` (row-major, n x n) is part
    /// of the computation. Under recording this contributes the exact
    /// reverse rule of the solve.
    fn solve_dense(n: usize, a: &[Self], b: &[Self]) -> Result<Vec<Self>, AdError>;

    /// Solve with a matrix that is held constant (prefactored outside the
    /// computation). Only `b` participates in derivatives.
    fn solve_factored(factor: &Arc<DenseFactor>, b: &[Self]) -> Result<Vec<Self>, AdError>;
}

impl Real for f64 {
    #[inline]
    fn value(self) -> f64 {
        self
    }

    fn solve_dense(n: usize, a: &[Self], b: &[Self]) -> Result<Vec<Self>, AdError> {
        let factor = DenseFactor::from_row_major(n, a)?;
        factor.solve(b)
    }

    fn solve_factored(factor: &Arc<DenseFactor>, b: &[Self]) -> Result<Vec<Self>, AdError> {
        factor.solve(b)
    }
}

impl Real for f32 {
    #[inline]
    fn value(self) -> f64 {
        self as f64
    }

    fn solve_dense(n: usize, a: &[Self], b: &[Self]) -> Result<Vec<Self>, AdError> {
        let a64: Vec<f64> = a.iter().map(|&x| x as f64).collect();
        let b64: Vec<f64> = b.iter().map(|&x| x as f64).collect();
        let factor = DenseFactor::from_row_major(n, &a64)?;
        Ok(factor.solve(&b64)?.into_iter().map(|x| x as f32).collect())
    }

    fn solve_factored(factor: &Arc<DenseFactor>, b: &[Self]) -> Result<Vec<Self>, AdError> {
        let b64: Vec<f64> = b.iter().map(|&x| x as f64).collect();
        Ok(factor.solve(&b64)?.into_iter().map(|x| x as f32).collect())
    }
}

/// 3-vector helpers over any scalar.
pub mod v3 {
    use super::Real;

    pub type V3<S> = [S; 3];

    #[inline]
    pub fn add<S: Real>(a: V3<S>, b: V3<S>) -> V3<S> {
        [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
    }

    #[inline]
    pub fn sub<S: Real>(a: V3<S>, b: V3<S>) -> V3<S> {
        [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
    }

    #[inline]
    pub fn scale<S: Real>(k: S, a: V3<S>) -> V3<S> {
        [k * a[0], k * a[1], k * a[2]]
    }

    #[inline]
    pub fn dot<S: Real>(a: V3<S>, b: V3<S>) -> S {
        a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
    }

    #[inline]
    pub fn cross<S: Real>(a: V3<S>, b: V3<S>) -> V3<S> {
        [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ]
    }

    #[inline]
    pub fn norm<S: Real>(a: V3<S>) -> S {
        dot(a, a).sqrt()
    }

    #[inline]
    pub fn normalize<S: Real>(a: V3<S>) -> V3<S> {
        let n = norm(a);
        [a[0] / n, a[1] / n, a[2] / n]
    }

    #[inline]
    pub fn lift<S: Real>(a: [f64; 3]) -> V3<S> {
        [S::of(a[0]), S::of(a[1]), S::of(a[2])]
    }
}

/// Row-major 3x3 matrix helpers over any scalar.
pub mod m3 {
    use super::v3::V3;
    use super::Real;

    pub type M3<S> = [[S; 3]; 3];

    pub fn identity<S: Real>() -> M3<S> {
        let (o, z) = (S::one(), S::zero());
        [[o, z, z], [z, o, z], [z, z, o]]
    }

    pub fn lift<S: Real>(a: [[f64; 3]; 3]) -> M3<S> {
        [
            super::v3::lift(a[0]),
            super::v3::lift(a[1]),
            super::v3::lift(a[2]),
        ]
    }

    pub fn transpose<S: Real>(a: M3<S>) -> M3<S> {
        [
            [a[0][0], a[1][0], a[2][0]],
            [a[0][1], a[1][1], a[2][1]],
            [a[0][2], a[1][2], a[2][2]],
        ]
    }

    pub fn matmul<S: Real>(a: M3<S>, b: M3<S>) -> M3<S> {
        let mut out = [[S::zero(); 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
            }
        }
        out
    }

    pub fn matvec<S: Real>(a: M3<S>, v: V3<S>) -> V3<S> {
        [
            a[0][0] * v[0] + a[0][1] * v[1] + a[0][2] * v[2],
            a[1][0] * v[0] + a[1][1] * v[1] + a[1][2] * v[2],
            a[2][0] * v[0] + a[2][1] * v[1] + a[2][2] * v[2],
        ]
    }

    /// Matrix with the given columns.
    pub fn from_columns<S: Real>(c0: V3<S>, c1: V3<S>, c2: V3<S>) -> M3<S> {
        [
            [c0[0], c1[0], c2[0]],
            [c0[1], c1[1], c2[1]],
            [c0[2], c1[2], c2[2]],
        ]
    }
}
