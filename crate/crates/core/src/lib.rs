//! Aerostructural wing analysis and gradient-based shape optimization.
//!
//! The crate couples a vortex-lattice aerodynamic model, a geometrically
//! nonlinear corotational beam solver and a pseudo-elastic lattice
//! deformation operator through a moving-least-squares interface spline.
//! The coupled system is solved with a relaxed block Gauss-Seidel sweep;
//! design gradients come from a lagged coupled adjoint built on the
//! tape-based reverse-mode AD engine in [`ad`].
//!
//! Numerical kernels are generic over the scalar type (see [`scalar::Real`])
//! so the same code path evaluates in plain `f64` and records on the AD tape.

pub mod ad;
pub mod beam;
pub mod coupler;
pub mod desk;
pub mod fd;
pub mod ffd;
pub mod io;
pub mod linalg;
pub mod meshdef;
pub mod mls;
pub mod opt;
pub mod scalar;
pub mod vlm;

/// Scalar type used by the shipped solvers.
pub type Scalar = f64;
/// Tape-recording scalar, the second instantiation of the generic kernels.
pub type Recorded = ad::Active;
