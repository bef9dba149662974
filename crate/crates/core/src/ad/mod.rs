//! Reverse-mode algorithmic differentiation on a statement-level tape.
//!
//! [`record`] evaluates a computation with [`Active`] scalars, storing one
//! node per elementary operation together with its local partial
//! derivatives. [`Tape::vjp`] then propagates an output adjoint backwards,
//! yielding the vector-Jacobian product without ever forming a Jacobian.
//! Dense linear solves enter the tape as a single composite node carrying
//! the factorization of the system and of its transpose, so the reverse
//! sweep pays one transpose solve instead of replaying the elimination.
//!
//! A tape is confined to one thread while recording. Afterwards it is
//! immutable; concurrent `vjp` evaluations each own their accumulation
//! buffer.

mod active;
mod tape;
#[cfg(test)]
mod tests;

pub use active::Active;
pub use tape::{
    record, record_multi, taped_solve_dense, taped_solve_factored, InputSlices, Tape,
    VjpWorkspace,
};

/// Errors from recording or evaluating tapes.
#[derive(Debug, Clone, thiserror::Error)]
pub enum AdError {
    #[error("domain error in '{op}' at tape operation {index}")]
    Domain { op: &'static str, index: usize },
    #[error("a tape is already being recorded on this thread")]
    AlreadyRecording,
    #[error("dimension mismatch: expected {expected}, got {got} ({what})")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("singular system: {context}")]
    Singular { context: String },
}
