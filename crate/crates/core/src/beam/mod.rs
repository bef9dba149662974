//! Geometrically nonlinear 6-DOF beam solver.
//!
//! Euler-Bernoulli elements with an updated-Lagrangian corotational frame:
//! the elastic measures (axial stretch and local end rotations) are
//! extracted in a frame that follows the element, so large rotations carry
//! no spurious strain. Rigid master-slave links enter through a penalty
//! force that is exactly self-equilibrated. The residual is
//! `S(u) = f_ext - f_int(u) - f_rig(u)` with constrained DOFs zeroed, and
//! the consistent tangent is obtained by differentiating the element force
//! kernels on the tape, element by element.

mod element;
pub mod rotation;
mod solver;
#[cfg(test)]
mod tests;

pub use solver::{
    adjoint_step, fixed_point_step, record_fixed_point, residual_norm, solve, solve_warm,
    tangent, StructuralTape,
};

use crate::scalar::m3::M3;

/// Section and material data of one beam element.
#[derive(Debug, Clone, Copy)]
pub struct BeamSection {
    pub e: f64,
    pub g: f64,
    pub area: f64,
    pub iy: f64,
    pub iz: f64,
    pub j: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct BeamElement {
    pub nodes: [usize; 2],
    pub section: BeamSection,
}

/// Penalty rigid link: the slave node follows the master node rigidly, with
/// stiffness `factor * k_scale` where `k_scale` is the largest diagonal of
/// the model's linear stiffness.
#[derive(Debug, Clone, Copy)]
pub struct RigidElement {
    pub master: usize,
    pub slave: usize,
    pub factor: f64,
}

pub const DEFAULT_RIGID_FACTOR: f64 = 1e6;

/// Immutable structural model. Six DOFs per node: three translations and a
/// total rotation vector.
#[derive(Debug, Clone)]
pub struct BeamModel {
    pub nodes: Vec<[f64; 3]>,
    pub beams: Vec<BeamElement>,
    pub rigids: Vec<RigidElement>,
    /// Per-node fixed flags, one per DOF.
    pub fixed: Vec<[bool; 6]>,
    /// Reference triad per beam element (columns: axis, section y, section z).
    pub(crate) triads: Vec<M3<f64>>,
    pub(crate) ref_lengths: Vec<f64>,
    /// Reference master-to-slave offsets of the rigid elements.
    pub(crate) offsets: Vec<[f64; 3]>,
    /// Largest diagonal of the linear stiffness; scales rigid penalties.
    pub(crate) k_scale: f64,
    /// Length scale for the rotational part of rigid penalties.
    pub(crate) rot_arm: f64,
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum BeamError {
    #[error("element {element} references missing node {node}")]
    MissingNode { element: usize, node: usize },
    #[error("beam element {0} has coincident end nodes")]
    DegenerateElement(usize),
    #[error("invalid section property '{name}' on beam element {element}: must be > 0")]
    InvalidSection { element: usize, name: &'static str },
    #[error("rigid element {0} has non-positive penalty factor")]
    InvalidPenalty(usize),
    #[error("beam element {0} collapsed in the deformed state")]
    SingularGeometry(usize),
    #[error("local rotation of beam element {0} exceeds the corotational trust region")]
    ExcessiveRotation(usize),
    #[error("dimension mismatch: expected {expected} entries, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("Newton did not converge within {iters} iterations (residual {residual:.3e})")]
    NonConvergence {
        iters: usize,
        residual: f64,
        last_iterate: Vec<f64>,
    },
    #[error("ad engine: {0}")]
    Ad(#[from] crate::ad::AdError),
}

impl BeamModel {
    pub fn new(
        nodes: Vec<[f64; 3]>,
        beams: Vec<BeamElement>,
        rigids: Vec<RigidElement>,
        fixed: Vec<[bool; 6]>,
    ) -> Result<Self, BeamError> {
        assert_eq!(nodes.len(), fixed.len(), "one constraint row per node");
        let mut triads = Vec::with_capacity(beams.len());
        let mut ref_lengths = Vec::with_capacity(beams.len());
        for (e, b) in beams.iter().enumerate() {
            for &n in &b.nodes {
                if n >= nodes.len() {
                    return Err(BeamError::MissingNode {
                        element: e,
                        node: n,
                    });
                }
            }
            let d = [
                nodes[b.nodes[1]][0] - nodes[b.nodes[0]][0],
                nodes[b.nodes[1]][1] - nodes[b.nodes[0]][1],
                nodes[b.nodes[1]][2] - nodes[b.nodes[0]][2],
            ];
            let len = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            if len <= 0.0 {
                return Err(BeamError::DegenerateElement(e));
            }
            let s = b.section;
            for (v, name) in [
                (s.e, "E"),
                (s.g, "G"),
                (s.area, "A"),
                (s.iy, "Iy"),
                (s.iz, "Iz"),
                (s.j, "J"),
            ] {
                if !(v > 0.0) {
                    return Err(BeamError::InvalidSection { element: e, name });
                }
            }
            triads.push(rotation::reference_triad(d));
            ref_lengths.push(len);
        }
        let mut offsets = Vec::with_capacity(rigids.len());
        for (e, r) in rigids.iter().enumerate() {
            for &n in [r.master, r.slave].iter() {
                if n >= nodes.len() {
                    return Err(BeamError::MissingNode {
                        element: e,
                        node: n,
                    });
                }
            }
            if !(r.factor > 0.0) {
                return Err(BeamError::InvalidPenalty(e));
            }
            offsets.push([
                nodes[r.slave][0] - nodes[r.master][0],
                nodes[r.slave][1] - nodes[r.master][1],
                nodes[r.slave][2] - nodes[r.master][2],
            ]);
        }
        let k_scale = element::linear_stiffness_scale(&beams, &ref_lengths);
        let mean_len = if ref_lengths.is_empty() {
            1.0
        } else {
            ref_lengths.iter().sum::<f64>() / ref_lengths.len() as f64
        };
        let rot_arm = offsets
            .iter()
            .map(|o| (o[0] * o[0] + o[1] * o[1] + o[2] * o[2]).sqrt())
            .fold(mean_len, f64::max);
        Ok(BeamModel {
            nodes,
            beams,
            rigids,
            fixed,
            triads,
            ref_lengths,
            offsets,
            k_scale,
            rot_arm,
        })
    }

    pub fn num_dof(&self) -> usize {
        6 * self.nodes.len()
    }

    pub fn is_fixed(&self, dof: usize) -> bool {
        self.fixed[dof / 6][dof % 6]
    }

    /// Scale the elastic moduli of every section (quasi-rigid studies).
    pub fn scale_stiffness(&self, factor: f64) -> BeamModel {
        let mut m = self.clone();
        for b in &mut m.beams {
            b.section.e *= factor;
            b.section.g *= factor;
        }
        m.k_scale *= factor;
        m
    }

    /// Structural trace points for interface splines: beam nodes and rigid
    /// slave nodes all carry displacement DOFs, so the donor set is simply
    /// every node of the model.
    pub fn trace_points(&self) -> Vec<[f64; 3]> {
        self.nodes.clone()
    }
}

/// Residual `S(u) = f_ext - f_int(u) - f_rig(u)` with constrained DOFs
/// zeroed. Generic over the scalar so the same kernel records on tape.
pub fn residual<S: crate::scalar::Real>(
    model: &BeamModel,
    u: &[S],
    f_ext: &[S],
) -> Result<Vec<S>, BeamError> {
    let n = model.num_dof();
    if u.len() != n {
        return Err(BeamError::Dimension {
            expected: n,
            got: u.len(),
        });
    }
    if f_ext.len() != n {
        return Err(BeamError::Dimension {
            expected: n,
            got: f_ext.len(),
        });
    }
    let mut r: Vec<S> = f_ext.to_vec();
    for (e, beam) in model.beams.iter().enumerate() {
        let dofs = element::beam_dofs(beam);
        let mut ue = [S::zero(); 12];
        for (k, &d) in dofs.iter().enumerate() {
            ue[k] = u[d];
        }
        let fe = element::beam_internal_force(model, e, &ue)?;
        for (k, &d) in dofs.iter().enumerate() {
            r[d] = r[d] - fe[k];
        }
    }
    for (e, rigid) in model.rigids.iter().enumerate() {
        let dofs = element::rigid_dofs(rigid);
        let mut ue = [S::zero(); 12];
        for (k, &d) in dofs.iter().enumerate() {
            ue[k] = u[d];
        }
        let fe = element::rigid_internal_force(model, e, &ue);
        for (k, &d) in dofs.iter().enumerate() {
            r[d] = r[d] - fe[k];
        }
    }
    for d in 0..n {
        if model.is_fixed(d) {
            r[d] = S::zero();
        }
    }
    Ok(r)
}

/// Solver settings: progressive load application plus a Newton loop per step.
#[derive(Debug, Clone, Copy)]
pub struct SolveSettings {
    pub load_steps: usize,
    pub newton_tol: f64,
    pub max_newton_iters: usize,
}

impl Default for SolveSettings {
    fn default() -> Self {
        SolveSettings {
            load_steps: 10,
            newton_tol: 1e-9,
            max_newton_iters: 50,
        }
    }
}
