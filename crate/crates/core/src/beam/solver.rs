//! Tangent assembly, Newton solves and the recorded fixed-point operator.

use std::sync::Arc;

use nalgebra::DMatrix;

use super::{element, residual, BeamError, BeamModel, SolveSettings};
use crate::ad::{self, Active, Tape, VjpWorkspace};
use crate::linalg::{norm2, DenseFactor};
use crate::scalar::Real;

/// Consistent tangent `K = d(f_int + f_rig)/du` with constrained rows and
/// columns replaced by identity. Each element block is the exact derivative
/// of its force kernel, obtained from a per-element tape.
pub fn tangent(model: &BeamModel, u: &[f64]) -> Result<DMatrix<f64>, BeamError> {
    let n = model.num_dof();
    if u.len() != n {
        return Err(BeamError::Dimension {
            expected: n,
            got: u.len(),
        });
    }
    let mut k = DMatrix::<f64>::zeros(n, n);
    let mut ws = VjpWorkspace::default();
    let mut seed = vec![0.0; 12];

    let mut scatter = |tape: &Tape,
                       dofs: &[usize; 12],
                       k: &mut DMatrix<f64>,
                       ws: &mut VjpWorkspace,
                       seed: &mut Vec<f64>|
     -> Result<(), BeamError> {
        for i in 0..12 {
            seed[i] = 1.0;
            let row = tape.vjp_with(seed, ws)?;
            seed[i] = 0.0;
            for j in 0..12 {
                if row[j] != 0.0 {
                    k[(dofs[i], dofs[j])] += row[j];
                }
            }
        }
        Ok(())
    };

    for (e, beam) in model.beams.iter().enumerate() {
        let dofs = element::beam_dofs(beam);
        let mut ue = [0.0; 12];
        for (idx, &d) in dofs.iter().enumerate() {
            ue[idx] = u[d];
        }
        // Validate geometry on the plain path first so the recording below
        // cannot hit the error branches.
        let mut ue_s = [0.0f64; 12];
        ue_s.copy_from_slice(&ue);
        element::beam_internal_force::<f64>(model, e, &ue_s)?;
        let (tape, _) = ad::record(&ue, |v| {
            let mut va = [Active::constant(0.0); 12];
            va.copy_from_slice(v);
            element::beam_internal_force::<Active>(model, e, &va)
                .expect("geometry validated")
                .to_vec()
        })?;
        scatter(&tape, &dofs, &mut k, &mut ws, &mut seed)?;
    }
    for (e, rigid) in model.rigids.iter().enumerate() {
        let dofs = element::rigid_dofs(rigid);
        let mut ue = [0.0; 12];
        for (idx, &d) in dofs.iter().enumerate() {
            ue[idx] = u[d];
        }
        let (tape, _) = ad::record(&ue, |v| {
            let mut va = [Active::constant(0.0); 12];
            va.copy_from_slice(v);
            element::rigid_internal_force::<Active>(model, e, &va).to_vec()
        })?;
        scatter(&tape, &dofs, &mut k, &mut ws, &mut seed)?;
    }

    for d in 0..n {
        if model.is_fixed(d) {
            for j in 0..n {
                k[(d, j)] = 0.0;
                k[(j, d)] = 0.0;
            }
            k[(d, d)] = 1.0;
        }
    }
    Ok(k)
}

/// Norm used for Newton convergence: plain 2-norm over the mixed
/// force/moment residual.
pub fn residual_norm(r: &[f64]) -> f64 {
    norm2(r)
}

/// Newton solve with progressive load application from the unloaded state.
pub fn solve(model: &BeamModel, f_ext: &[f64], settings: &SolveSettings) -> Result<Vec<f64>, BeamError> {
    solve_warm(model, f_ext, settings, None)
}

/// Newton solve warm-started from a previous equilibrium. With a warm start
/// the full load is applied in one step.
pub fn solve_warm(
    model: &BeamModel,
    f_ext: &[f64],
    settings: &SolveSettings,
    warm: Option<&[f64]>,
) -> Result<Vec<f64>, BeamError> {
    let n = model.num_dof();
    if f_ext.len() != n {
        return Err(BeamError::Dimension {
            expected: n,
            got: f_ext.len(),
        });
    }
    if f_ext.iter().any(|v| !v.is_finite()) {
        return Err(BeamError::Dimension {
            expected: n,
            got: usize::MAX,
        });
    }
    let mut u = match warm {
        Some(w) => w.to_vec(),
        None => vec![0.0; n],
    };
    let steps = if warm.is_some() {
        1
    } else {
        settings.load_steps.max(1)
    };
    let load_norm = norm2(f_ext);
    for step in 1..=steps {
        let lam = step as f64 / steps as f64;
        let f_step: Vec<f64> = f_ext.iter().map(|v| lam * v).collect();
        let tol = (settings.newton_tol * lam * load_norm).max(1e-12);
        let mut converged = false;
        for iter in 0..settings.max_newton_iters {
            let r = residual(model, &u, &f_step)?;
            let rn = residual_norm(&r);
            if rn <= tol {
                converged = true;
                break;
            }
            let _ = iter;
            let k = tangent(model, &u)?;
            let factor = DenseFactor::from_matrix(k)?;
            let delta = factor.solve(&r)?;
            for (ui, di) in u.iter_mut().zip(&delta) {
                *ui += di;
            }
        }
        if !converged {
            let r = residual(model, &u, &f_step)?;
            return Err(BeamError::NonConvergence {
                iters: settings.max_newton_iters,
                residual: residual_norm(&r),
                last_iterate: u,
            });
        }
    }
    Ok(u)
}

/// One Newton update `u' = u + K^-1 S(u, f)`; the recorded operator of the
/// structural discipline. At a converged state `u' = u`.
pub fn fixed_point_step(model: &BeamModel, u: &[f64], f_ext: &[f64]) -> Result<Vec<f64>, BeamError> {
    let r = residual(model, u, f_ext)?;
    let k = tangent(model, u)?;
    let factor = DenseFactor::from_matrix(k)?;
    let delta = factor.solve(&r)?;
    Ok(u.iter().zip(&delta).map(|(ui, di)| ui + di).collect())
}

/// Recorded structural fixed-point operator at a converged state, with the
/// tangent frozen at that state. Inputs are `[u, f]`, output is the Newton
/// update; repeated adjoint sweeps over it converge the structural
/// multipliers.
pub struct StructuralTape {
    tape: Tape,
    n: usize,
}

pub fn record_fixed_point(
    model: &BeamModel,
    u_star: &[f64],
    f_star: &[f64],
) -> Result<StructuralTape, BeamError> {
    let n = model.num_dof();
    // Validate on the plain path, then freeze the tangent.
    residual::<f64>(model, u_star, f_star)?;
    let k = tangent(model, u_star)?;
    let factor = Arc::new(DenseFactor::from_matrix(k)?);
    let (tape, _, _) = ad::record_multi(&[u_star, f_star], |groups| {
        let u = groups[0];
        let f = groups[1];
        let r = residual::<Active>(model, u, f).expect("validated state");
        let delta = ad::taped_solve_factored(&factor, &r).expect("dimensions fixed");
        u.iter().zip(&delta).map(|(ui, di)| *ui + *di).collect()
    })?;
    Ok(StructuralTape { tape, n })
}

impl StructuralTape {
    pub fn num_dof(&self) -> usize {
        self.n
    }
}

/// One lagged structural adjoint sweep: given the current multiplier
/// `ubar` and the source term (interface pull-back plus any direct
/// objective seed), returns the next multiplier iterate and the load
/// adjoint extracted at the same point.
pub fn adjoint_step(
    st: &StructuralTape,
    ubar: &[f64],
    source: &[f64],
) -> Result<(Vec<f64>, Vec<f64>), BeamError> {
    if ubar.len() != st.n || source.len() != st.n {
        return Err(BeamError::Dimension {
            expected: st.n,
            got: ubar.len().max(source.len()),
        });
    }
    let xbar = st.tape.vjp(ubar)?;
    let mut next = xbar[..st.n].to_vec();
    for (ni, si) in next.iter_mut().zip(source) {
        *ni += si;
    }
    let fbar = xbar[st.n..].to_vec();
    Ok((next, fbar))
}
