//! Rotation-vector maps, written to stay smooth through zero rotation.
//!
//! Small-angle ranges switch to even power series so no `sqrt` of a
//! vanishing norm ever enters the computation; the branch is selected on
//! plain values and is therefore identical under tape recording.

use crate::scalar::m3::M3;
use crate::scalar::v3::{cross, dot, V3};
use crate::scalar::Real;

/// Rodrigues map: rotation matrix of a total rotation vector.
pub fn rotation_matrix<S: Real>(theta: V3<S>) -> M3<S> {
    let t2 = dot(theta, theta);
    let (a, b) = if t2.value() < 1e-8 {
        // sin(t)/t and (1-cos(t))/t^2 as series in t^2
        let c1 = S::of(1.0 / 6.0);
        let c2 = S::of(1.0 / 120.0);
        let d0 = S::of(0.5);
        let d1 = S::of(1.0 / 24.0);
        let d2 = S::of(1.0 / 720.0);
        (
            S::one() - t2 * (c1 - t2 * c2),
            d0 - t2 * (d1 - t2 * d2),
        )
    } else {
        let t = t2.sqrt();
        ((t.sin()) / t, (S::one() - t.cos()) / t2)
    };
    let (x, y, z) = (theta[0], theta[1], theta[2]);
    let one = S::one();
    // I + a*skew + b*skew^2
    [
        [
            one - b * (y * y + z * z),
            b * x * y - a * z,
            b * x * z + a * y,
        ],
        [
            b * x * y + a * z,
            one - b * (x * x + z * z),
            b * y * z - a * x,
        ],
        [
            b * x * z - a * y,
            b * y * z + a * x,
            one - b * (x * x + y * y),
        ],
    ]
}

/// Rotation vector of a rotation matrix that is close to identity.
///
/// Returns `None` when the rotation exceeds the small-angle trust region
/// (cos <= 0, i.e. beyond 90 degrees); corotational local rotations must
/// stay well inside it.
pub fn small_rotation_vector<S: Real>(r: M3<S>) -> Option<V3<S>> {
    let half = S::of(0.5);
    // axial(skew part) = sin(t) * axis
    let s = [
        half * (r[2][1] - r[1][2]),
        half * (r[0][2] - r[2][0]),
        half * (r[1][0] - r[0][1]),
    ];
    let c = half * (r[0][0] + r[1][1] + r[2][2] - S::one());
    if c.value() <= 0.0 {
        return None;
    }
    let u = dot(s, s); // sin^2(t)
    let f = if u.value() < 0.09 {
        // t/sin(t) = 1 + u/6 + 3u^2/40 + 15u^3/336, u = sin^2(t)
        let c1 = S::of(1.0 / 6.0);
        let c2 = S::of(3.0 / 40.0);
        let c3 = S::of(15.0 / 336.0);
        S::one() + u * (c1 + u * (c2 + u * c3))
    } else {
        let sn = u.sqrt();
        sn.atan2(c) / sn
    };
    Some([s[0] * f, s[1] * f, s[2] * f])
}

/// Compose two rotation vectors: `result = log(R(a) R(b))`, via matrices.
/// Intended for test construction of rigidly moved states; assumes the
/// composition stays below 90 degrees or falls back to the matrix log
/// through the quaternion-free large-angle branch.
pub fn compose(a: V3<f64>, b: V3<f64>) -> V3<f64> {
    let r = crate::scalar::m3::matmul(rotation_matrix(a), rotation_matrix(b));
    rotation_vector(r)
}

/// Rotation vector of an arbitrary rotation matrix (f64 only, used by test
/// scaffolding and model setup, not on hot differentiated paths).
pub fn rotation_vector(r: M3<f64>) -> V3<f64> {
    let s = [
        0.5 * (r[2][1] - r[1][2]),
        0.5 * (r[0][2] - r[2][0]),
        0.5 * (r[1][0] - r[0][1]),
    ];
    let c = 0.5 * (r[0][0] + r[1][1] + r[2][2] - 1.0);
    let sn = dot(s, s).sqrt();
    let t = sn.atan2(c);
    if sn < 1e-12 {
        if c > 0.0 {
            return s; // t ~ sin t
        }
        // near pi: extract axis from the symmetric part
        let mut axis = [0.0; 3];
        let d = [r[0][0], r[1][1], r[2][2]];
        let k = if d[0] >= d[1] && d[0] >= d[2] {
            0
        } else if d[1] >= d[2] {
            1
        } else {
            2
        };
        axis[k] = ((d[k] + 1.0) / 2.0).sqrt().max(1e-12);
        let (i, j) = ((k + 1) % 3, (k + 2) % 3);
        axis[i] = (r[i][k] + r[k][i]) / (4.0 * axis[k]);
        axis[j] = (r[j][k] + r[k][j]) / (4.0 * axis[k]);
        let n = dot(axis, axis).sqrt();
        return [axis[0] / n * t, axis[1] / n * t, axis[2] / n * t];
    }
    [s[0] / sn * t, s[1] / sn * t, s[2] / sn * t]
}

/// Orthonormal reference triad for an element axis: first column along the
/// axis, the remaining two fixed by the global-Z (or global-Y) convention.
pub fn reference_triad(axis: V3<f64>) -> M3<f64> {
    let n = dot(axis, axis).sqrt();
    let e1 = [axis[0] / n, axis[1] / n, axis[2] / n];
    let helper = if e1[2].abs() > 0.9 {
        [0.0, 1.0, 0.0]
    } else {
        [0.0, 0.0, 1.0]
    };
    let mut e2 = cross(helper, e1);
    let n2 = dot(e2, e2).sqrt();
    e2 = [e2[0] / n2, e2[1] / n2, e2[2] / n2];
    let e3 = cross(e1, e2);
    crate::scalar::m3::from_columns(e1, e2, e3)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::m3;

    #[test]
    fn rodrigues_round_trip() {
        let theta = [0.3, -0.7, 0.2];
        let r = rotation_matrix(theta);
        let back = small_rotation_vector(r).unwrap();
        for i in 0..3 {
            assert!((back[i] - theta[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn series_branch_matches_exact_branch() {
        // straddle the 1e-8 threshold on |theta|^2
        for mag in [5e-5, 2e-4] {
            let theta = [mag, 0.5 * mag, -0.3 * mag];
            let r = rotation_matrix(theta);
            let back = small_rotation_vector(r).unwrap();
            for i in 0..3 {
                assert!((back[i] - theta[i]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn reference_triad_is_orthonormal() {
        for axis in [[1.0, 0.0, 0.0], [0.1, 0.2, 0.97], [0.0, 0.0, 2.0]] {
            let t = reference_triad(axis);
            let tt = m3::matmul(m3::transpose(t), t);
            for i in 0..3 {
                for j in 0..3 {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((tt[i][j] - expect).abs() < 1e-14);
                }
            }
        }
    }
}
