//! Tape storage, recording context and the reverse sweep.

use std::cell::RefCell;
use std::sync::Arc;

use super::active::Active;
use super::AdError;
use crate::linalg::DenseFactor;

pub(crate) const NONE: u32 = u32::MAX;

/// One recorded elementary operation: up to two operands with the local
/// partial derivative of the result with respect to each.
#[derive(Clone, Copy)]
pub(crate) struct Node {
    pub lhs: u32,
    pub rhs: u32,
    pub dl: f64,
    pub dr: f64,
}

/// Composite node for `x = A^-1 b`. The reverse rule is
/// `bbar = A^-T xbar`, `Abar = -bbar x^T`, evaluated with the stored
/// factorization of the transpose.
pub(crate) struct SolveRecord {
    /// Tape indices of the row-major entries of `A`; empty when the matrix
    /// is constant and does not carry derivatives.
    pub a_idx: Vec<u32>,
    /// Tape indices of the entries of `b` (`NONE` marks constants).
    pub b_idx: Vec<u32>,
    /// Recorded solution.
    pub x: Vec<f64>,
    /// First tape index of the solution block.
    pub out_base: u32,
    pub factor: Arc<DenseFactor>,
}

enum Step {
    /// `op` is kept for diagnostics only; the reverse sweep needs just the
    /// operand indices and partials.
    Elem(&'static str),
    /// `k`-th output of solve record `rec`. The whole record is processed
    /// when the sweep reaches the last output of the block.
    SolveOut { rec: u32, k: u32 },
}

/// Immutable record of a computation, ready for repeated vjp evaluation.
pub struct Tape {
    nodes: Vec<Node>,
    steps: Vec<Step>,
    solves: Vec<SolveRecord>,
    n_inputs: usize,
    outputs: Vec<u32>,
}

impl std::fmt::Debug for Tape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Tape")
            .field("nodes", &self.nodes.len())
            .field("inputs", &self.n_inputs)
            .field("outputs", &self.outputs.len())
            .field("solves", &self.solves.len())
            .finish()
    }
}

/// Reusable adjoint accumulation buffer for [`Tape::vjp_with`].
#[derive(Default)]
pub struct VjpWorkspace {
    adj: Vec<f64>,
}

impl Tape {
    pub fn num_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn num_outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Name of the operation that produced node `i` (diagnostics).
    pub fn op_name(&self, i: usize) -> &'static str {
        match self.steps[i] {
            Step::Elem(op) => op,
            Step::SolveOut { .. } => "solve",
        }
    }

    /// Clear all recorded operations and registrations.
    pub fn reset(&mut self) {
        self.nodes.clear();
        self.steps.clear();
        self.solves.clear();
        self.outputs.clear();
        self.n_inputs = 0;
    }

    /// Vector-Jacobian product `ybar^T (df/dx)` at the recorded point.
    pub fn vjp(&self, ybar: &[f64]) -> Result<Vec<f64>, AdError> {
        let mut ws = VjpWorkspace::default();
        self.vjp_with(ybar, &mut ws)
    }

    /// Like [`Tape::vjp`] but reusing an accumulation buffer.
    pub fn vjp_with(&self, ybar: &[f64], ws: &mut VjpWorkspace) -> Result<Vec<f64>, AdError> {
        if ybar.len() != self.outputs.len() {
            return Err(AdError::Dimension {
                what: "output adjoint",
                expected: self.outputs.len(),
                got: ybar.len(),
            });
        }
        let adj = &mut ws.adj;
        adj.clear();
        adj.resize(self.nodes.len(), 0.0);
        for (&o, &s) in self.outputs.iter().zip(ybar) {
            adj[o as usize] += s;
        }
        for i in (self.n_inputs..self.nodes.len()).rev() {
            match self.steps[i] {
                Step::Elem(_) => {
                    let a = adj[i];
                    if a == 0.0 {
                        continue;
                    }
                    let node = self.nodes[i];
                    if node.lhs != NONE {
                        adj[node.lhs as usize] += node.dl * a;
                    }
                    if node.rhs != NONE {
                        adj[node.rhs as usize] += node.dr * a;
                    }
                }
                Step::SolveOut { rec, k } => {
                    let rec = &self.solves[rec as usize];
                    let n = rec.x.len();
                    if k as usize != n - 1 {
                        continue; // handled at the last output of the block
                    }
                    let xbar: Vec<f64> = (0..n)
                        .map(|j| adj[rec.out_base as usize + j])
                        .collect();
                    if xbar.iter().all(|&v| v == 0.0) {
                        continue;
                    }
                    let lambda = rec.factor.solve_transpose(&xbar)?;
                    for (j, &bi) in rec.b_idx.iter().enumerate() {
                        if bi != NONE {
                            adj[bi as usize] += lambda[j];
                        }
                    }
                    if !rec.a_idx.is_empty() {
                        for r in 0..n {
                            let lr = lambda[r];
                            if lr == 0.0 {
                                continue;
                            }
                            for c in 0..n {
                                let ai = rec.a_idx[r * n + c];
                                if ai != NONE {
                                    adj[ai as usize] -= lr * rec.x[c];
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(adj[..self.n_inputs].to_vec())
    }
}

/// Mutable recording state, owned by thread-local storage during `record`.
pub(crate) struct TapeBuilder {
    nodes: Vec<Node>,
    steps: Vec<Step>,
    solves: Vec<SolveRecord>,
    n_inputs: usize,
    error: Option<AdError>,
}

thread_local! {
    static CURRENT: RefCell<Option<TapeBuilder>> = const { RefCell::new(None) };
}

impl TapeBuilder {
    pub(crate) fn push_unary(&mut self, op: &'static str, a: u32, dl: f64) -> u32 {
        let id = self.nodes.len() as u32;
        self.nodes.push(Node {
            lhs: a,
            rhs: NONE,
            dl,
            dr: 0.0,
        });
        self.steps.push(Step::Elem(op));
        id
    }

    pub(crate) fn push_binary(
        &mut self,
        op: &'static str,
        a: u32,
        b: u32,
        dl: f64,
        dr: f64,
    ) -> u32 {
        let id = self.nodes.len() as u32;
        self.nodes.push(Node {
            lhs: a,
            rhs: b,
            dl,
            dr,
        });
        self.steps.push(Step::Elem(op));
        id
    }

    pub(crate) fn push_constant(&mut self) -> u32 {
        self.push_unary("const", NONE, 0.0)
    }

    pub(crate) fn fail(&mut self, op: &'static str) {
        if self.error.is_none() {
            self.error = Some(AdError::Domain {
                op,
                index: self.nodes.len(),
            });
        }
    }
}

/// Run `f` against the thread's recording context. Panics outside recording:
/// an [`Active`] must not escape its tape.
pub(crate) fn with_builder<R>(f: impl FnOnce(&mut TapeBuilder) -> R) -> R {
    CURRENT.with(|c| {
        let mut borrow = c.borrow_mut();
        let builder = borrow
            .as_mut()
            .expect("active scalar used outside a tape recording");
        f(builder)
    })
}

fn finish(
    builder: TapeBuilder,
    outputs: Vec<Active>,
) -> Result<(Tape, Vec<f64>), AdError> {
    let mut builder = builder;
    if let Some(e) = builder.error.take() {
        return Err(e);
    }
    let y: Vec<f64> = outputs.iter().map(|a| a.value_raw()).collect();
    let mut out_idx = Vec::with_capacity(outputs.len());
    for a in &outputs {
        let idx = match a.index() {
            NONE => builder.push_constant(),
            i => i,
        };
        out_idx.push(idx);
    }
    Ok((
        Tape {
            nodes: builder.nodes,
            steps: builder.steps,
            solves: builder.solves,
            n_inputs: builder.n_inputs,
            outputs: out_idx,
        },
        y,
    ))
}

struct Guard;
impl Drop for Guard {
    fn drop(&mut self) {
        CURRENT.with(|c| {
            *c.borrow_mut() = None;
        });
    }
}

fn begin(n_inputs: usize, values: impl Iterator<Item = f64>) -> Result<Vec<Active>, AdError> {
    CURRENT.with(|c| {
        let mut borrow = c.borrow_mut();
        if borrow.is_some() {
            return Err(AdError::AlreadyRecording);
        }
        let mut builder = TapeBuilder {
            nodes: Vec::new(),
            steps: Vec::new(),
            solves: Vec::new(),
            n_inputs,
            error: None,
        };
        let mut actives = Vec::with_capacity(n_inputs);
        for (i, v) in values.enumerate() {
            builder.nodes.push(Node {
                lhs: NONE,
                rhs: NONE,
                dl: 0.0,
                dr: 0.0,
            });
            builder.steps.push(Step::Elem("input"));
            actives.push(Active::from_parts(v, i as u32));
        }
        *borrow = Some(builder);
        Ok(actives)
    })
}

/// Record `f` over the independent variables `x`, returning the tape and the
/// computed outputs. The returned values equal an un-taped evaluation of the
/// same code path.
pub fn record(
    x: &[f64],
    f: impl FnOnce(&[Active]) -> Vec<Active>,
) -> Result<(Tape, Vec<f64>), AdError> {
    let actives = begin(x.len(), x.iter().copied())?;
    let _guard = Guard;
    let outputs = f(&actives);
    let builder = CURRENT.with(|c| c.borrow_mut().take().expect("recording vanished"));
    finish(builder, outputs)
}

/// Offsets of named input groups inside a flattened recording.
pub struct InputSlices {
    offsets: Vec<(usize, usize)>,
}

impl InputSlices {
    pub fn group<'a>(&self, xbar: &'a [f64], k: usize) -> &'a [f64] {
        let (start, len) = self.offsets[k];
        &xbar[start..start + len]
    }
}

/// Record with several independent input groups (for example state, geometry
/// and a scalar parameter). The closure receives one active slice per group.
pub fn record_multi(
    groups: &[&[f64]],
    f: impl FnOnce(&[&[Active]]) -> Vec<Active>,
) -> Result<(Tape, Vec<f64>, InputSlices), AdError> {
    let total: usize = groups.iter().map(|g| g.len()).sum();
    let actives = begin(total, groups.iter().flat_map(|g| g.iter().copied()))?;
    let _guard = Guard;
    let mut offsets = Vec::with_capacity(groups.len());
    let mut views: Vec<&[Active]> = Vec::with_capacity(groups.len());
    let mut pos = 0;
    for g in groups {
        offsets.push((pos, g.len()));
        views.push(&actives[pos..pos + g.len()]);
        pos += g.len();
    }
    let outputs = f(&views);
    let builder = CURRENT.with(|c| c.borrow_mut().take().expect("recording vanished"));
    let (tape, y) = finish(builder, outputs)?;
    Ok((tape, y, InputSlices { offsets }))
}

/// Solve `A x = b` inside a recording. `a` is the row-major matrix; pass
/// `factor` when the matrix is constant (its derivative is then dropped,
/// which is exact whenever the matrix genuinely does not depend on the
/// inputs).
pub fn taped_solve_dense(n: usize, a: &[Active], b: &[Active]) -> Result<Vec<Active>, AdError> {
    if a.len() != n * n {
        return Err(AdError::Dimension {
            what: "taped solve matrix",
            expected: n * n,
            got: a.len(),
        });
    }
    let values: Vec<f64> = a.iter().map(|v| v.value_raw()).collect();
    let factor = Arc::new(DenseFactor::from_row_major(n, &values)?);
    let a_idx: Vec<u32> = a.iter().map(|v| v.index()).collect();
    taped_solve_common(factor, Some(a_idx), b)
}

/// Solve with a constant, prefactored matrix inside a recording.
pub fn taped_solve_factored(
    factor: &Arc<DenseFactor>,
    b: &[Active],
) -> Result<Vec<Active>, AdError> {
    taped_solve_common(factor.clone(), None, b)
}

fn taped_solve_common(
    factor: Arc<DenseFactor>,
    a_idx: Option<Vec<u32>>,
    b: &[Active],
) -> Result<Vec<Active>, AdError> {
    let n = factor.dim();
    if b.len() != n {
        return Err(AdError::Dimension {
            what: "taped solve rhs",
            expected: n,
            got: b.len(),
        });
    }
    let b_val: Vec<f64> = b.iter().map(|v| v.value_raw()).collect();
    let x = factor.solve(&b_val)?;
    let b_idx: Vec<u32> = b.iter().map(|v| v.index()).collect();
    let outs = with_builder(|builder| {
        let rec_id = builder.solves.len() as u32;
        let out_base = builder.nodes.len() as u32;
        let mut outs = Vec::with_capacity(n);
        for (k, &xv) in x.iter().enumerate() {
            let id = builder.nodes.len() as u32;
            builder.nodes.push(Node {
                lhs: NONE,
                rhs: NONE,
                dl: 0.0,
                dr: 0.0,
            });
            builder.steps.push(Step::SolveOut {
                rec: rec_id,
                k: k as u32,
            });
            outs.push(Active::from_parts(xv, id));
        }
        builder.solves.push(SolveRecord {
            a_idx: a_idx.unwrap_or_default(),
            b_idx,
            x,
            out_base,
            factor,
        });
        outs
    });
    Ok(outs)
}
