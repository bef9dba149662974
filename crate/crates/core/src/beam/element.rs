//! Element force kernels, generic over the scalar type.

use super::rotation::{rotation_matrix, small_rotation_vector};
use super::{BeamElement, BeamError, BeamModel, RigidElement};
use crate::scalar::m3;
use crate::scalar::v3;
use crate::scalar::Real;

/// Global DOF indices of a beam element, node a then node b.
pub fn beam_dofs(beam: &BeamElement) -> [usize; 12] {
    let mut out = [0; 12];
    for (k, &n) in beam.nodes.iter().enumerate() {
        for d in 0..6 {
            out[6 * k + d] = 6 * n + d;
        }
    }
    out
}

/// Global DOF indices of a rigid element, master then slave.
pub fn rigid_dofs(rigid: &RigidElement) -> [usize; 12] {
    let mut out = [0; 12];
    for (k, &n) in [rigid.master, rigid.slave].iter().enumerate() {
        for d in 0..6 {
            out[6 * k + d] = 6 * n + d;
        }
    }
    out
}

/// Local 12x12 Euler-Bernoulli stiffness (no shear deformation).
/// DOF order: [u_a, theta_a, u_b, theta_b] in element axes
/// (x axial, bending about y and z, torsion about x).
pub fn local_stiffness(section: &super::BeamSection, l: f64) -> [[f64; 12]; 12] {
    let mut k = [[0.0; 12]; 12];
    let ea = section.e * section.area / l;
    let gj = section.g * section.j / l;
    let eiz = section.e * section.iz;
    let eiy = section.e * section.iy;
    let (z1, z2, z3, z4) = (
        12.0 * eiz / (l * l * l),
        6.0 * eiz / (l * l),
        4.0 * eiz / l,
        2.0 * eiz / l,
    );
    let (y1, y2, y3, y4) = (
        12.0 * eiy / (l * l * l),
        6.0 * eiy / (l * l),
        4.0 * eiy / l,
        2.0 * eiy / l,
    );

    // axial
    k[0][0] = ea;
    k[0][6] = -ea;
    k[6][6] = ea;
    // torsion
    k[3][3] = gj;
    k[3][9] = -gj;
    k[9][9] = gj;
    // bending in the x-y plane (v, theta_z), inertia Iz
    k[1][1] = z1;
    k[1][5] = z2;
    k[1][7] = -z1;
    k[1][11] = z2;
    k[5][5] = z3;
    k[5][7] = -z2;
    k[5][11] = z4;
    k[7][7] = z1;
    k[7][11] = -z2;
    k[11][11] = z3;
    // bending in the x-z plane (w, theta_y), inertia Iy
    k[2][2] = y1;
    k[2][4] = -y2;
    k[2][8] = -y1;
    k[2][10] = -y2;
    k[4][4] = y3;
    k[4][8] = y2;
    k[4][10] = y4;
    k[8][8] = y1;
    k[8][10] = y2;
    k[10][10] = y3;
    // symmetric fill
    for i in 0..12 {
        for j in 0..i {
            k[i][j] = k[j][i];
        }
    }
    k
}

/// Largest diagonal entry over all element stiffness matrices; the rigid
/// penalty scale.
pub fn linear_stiffness_scale(beams: &[BeamElement], lengths: &[f64]) -> f64 {
    let mut scale: f64 = 1.0;
    for (b, &l) in beams.iter().zip(lengths) {
        let k = local_stiffness(&b.section, l);
        for (i, row) in k.iter().enumerate() {
            scale = scale.max(row[i]);
        }
    }
    scale
}

/// Corotational internal force of one beam element on its 12 DOFs.
///
/// The element frame takes its axis from the current end positions and its
/// roll from the mean of the two node triads; the elastic state reduces to
/// the axial stretch and the local end rotations. Forces are the local
/// linear response rotated back to global axes, which keeps the set exactly
/// self-equilibrated.
pub fn beam_internal_force<S: Real>(
    model: &BeamModel,
    e: usize,
    ue: &[S; 12],
) -> Result<[S; 12], BeamError> {
    let beam = &model.beams[e];
    let xa = v3::lift::<S>(model.nodes[beam.nodes[0]]);
    let xb = v3::lift::<S>(model.nodes[beam.nodes[1]]);
    let ua = [ue[0], ue[1], ue[2]];
    let ta = [ue[3], ue[4], ue[5]];
    let ub = [ue[6], ue[7], ue[8]];
    let tb = [ue[9], ue[10], ue[11]];
    let pa = v3::add(xa, ua);
    let pb = v3::add(xb, ub);

    let axis = v3::sub(pb, pa);
    let len2 = v3::dot(axis, axis);
    if len2.value() < 1e-24 {
        return Err(BeamError::SingularGeometry(e));
    }
    let len = len2.sqrt();
    let e1 = [axis[0] / len, axis[1] / len, axis[2] / len];

    let t0 = m3::lift::<S>(model.triads[e]);
    let ra = m3::matmul(rotation_matrix(ta), t0);
    let rb = m3::matmul(rotation_matrix(tb), t0);

    // roll direction: mean of the node section-y directions
    let half = S::of(0.5);
    let m2 = [
        half * (ra[0][1] + rb[0][1]),
        half * (ra[1][1] + rb[1][1]),
        half * (ra[2][1] + rb[2][1]),
    ];
    let e3_raw = v3::cross(e1, m2);
    if v3::dot(e3_raw, e3_raw).value() < 1e-12 {
        return Err(BeamError::ExcessiveRotation(e));
    }
    let e3 = v3::normalize(e3_raw);
    let e2 = v3::cross(e3, e1);
    let frame = m3::from_columns(e1, e2, e3);
    let frame_t = m3::transpose(frame);

    let loc_a =
        small_rotation_vector(m3::matmul(frame_t, ra)).ok_or(BeamError::ExcessiveRotation(e))?;
    let loc_b =
        small_rotation_vector(m3::matmul(frame_t, rb)).ok_or(BeamError::ExcessiveRotation(e))?;
    let stretch = len - S::of(model.ref_lengths[e]);

    let mut d = [S::zero(); 12];
    d[3] = loc_a[0];
    d[4] = loc_a[1];
    d[5] = loc_a[2];
    d[6] = stretch;
    d[9] = loc_b[0];
    d[10] = loc_b[1];
    d[11] = loc_b[2];

    let k = local_stiffness(&beam.section, model.ref_lengths[e]);
    let mut f_loc = [S::zero(); 12];
    for i in 0..12 {
        let mut acc = S::zero();
        for j in 0..12 {
            if k[i][j] != 0.0 {
                acc = acc + S::of(k[i][j]) * d[j];
            }
        }
        f_loc[i] = acc;
    }

    let mut out = [S::zero(); 12];
    for blk in 0..4 {
        let v = [f_loc[3 * blk], f_loc[3 * blk + 1], f_loc[3 * blk + 2]];
        let g = m3::matvec(frame, v);
        out[3 * blk] = g[0];
        out[3 * blk + 1] = g[1];
        out[3 * blk + 2] = g[2];
    }
    Ok(out)
}

/// Penalty force of a rigid master-slave link on [master 6, slave 6].
///
/// Translation: spring of stiffness `kappa_t` between the slave and its
/// rigidly convected position, with the transport moment on the master so
/// the pair is exactly self-equilibrated. Rotation: restoring couple
/// proportional to the skew part of `R_m^T R_s`.
pub fn rigid_internal_force<S: Real>(model: &BeamModel, e: usize, ue: &[S; 12]) -> [S; 12] {
    let rig = &model.rigids[e];
    let kappa_t = S::of(rig.factor * model.k_scale);
    let kappa_r = S::of(rig.factor * model.k_scale * model.rot_arm * model.rot_arm);

    let xm = v3::lift::<S>(model.nodes[rig.master]);
    let xs = v3::lift::<S>(model.nodes[rig.slave]);
    let um = [ue[0], ue[1], ue[2]];
    let tm = [ue[3], ue[4], ue[5]];
    let us = [ue[6], ue[7], ue[8]];
    let ts = [ue[9], ue[10], ue[11]];

    let rm = rotation_matrix(tm);
    let rs = rotation_matrix(ts);
    let arm = m3::matvec(rm, v3::lift::<S>(model.offsets[e]));
    let gap = v3::sub(v3::sub(v3::add(xs, us), v3::add(xm, um)), arm);

    // skew part of R_m^T R_s
    let rel = m3::matmul(m3::transpose(rm), rs);
    let half = S::of(0.5);
    let srel = [
        half * (rel[2][1] - rel[1][2]),
        half * (rel[0][2] - rel[2][0]),
        half * (rel[1][0] - rel[0][1]),
    ];
    let couple = v3::scale(kappa_r, m3::matvec(rm, srel));

    let ft = v3::scale(kappa_t, gap);
    let transport = v3::scale(kappa_t, v3::cross(arm, gap));

    let mut out = [S::zero(); 12];
    // master
    out[0] = -ft[0];
    out[1] = -ft[1];
    out[2] = -ft[2];
    out[3] = -transport[0] - couple[0];
    out[4] = -transport[1] - couple[1];
    out[5] = -transport[2] - couple[2];
    // slave
    out[6] = ft[0];
    out[7] = ft[1];
    out[8] = ft[2];
    out[9] = couple[0];
    out[10] = couple[1];
    out[11] = couple[2];
    out
}

