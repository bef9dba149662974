//! Central finite differences with step sweeps.
//!
//! Used by the gradient-validation mode and by tests as the independent
//! check on adjoint sensitivities.

/// One row of a step sweep: step size and the central-difference estimate.
#[derive(Debug, Clone, Copy)]
pub struct FdSample {
    pub h: f64,
    pub derivative: f64,
}

/// Central differences of `f` along component `i` over a halving step sweep.
pub fn fd_sweep(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], i: usize, h0: f64) -> Vec<FdSample> {
    let mut out = Vec::new();
    for k in 0..9 {
        let h = h0 / 2f64.powi(k);
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[i] += h;
        xm[i] -= h;
        let derivative = (f(&xp) - f(&xm)) / (2.0 * h);
        out.push(FdSample { h, derivative });
    }
    out
}

/// Best derivative estimate from a sweep: Richardson-extrapolate successive
/// halvings and pick the pair with the smallest spread.
pub fn best_estimate(sweep: &[FdSample]) -> f64 {
    let rich: Vec<f64> = sweep
        .windows(2)
        .map(|w| (4.0 * w[1].derivative - w[0].derivative) / 3.0)
        .collect();
    let mut best = rich[0];
    let mut best_spread = f64::INFINITY;
    for w in rich.windows(2) {
        let spread = (w[1] - w[0]).abs();
        if spread <= best_spread {
            best_spread = spread;
            best = w[1];
        }
    }
    best
}

/// Central finite difference of a scalar function along component `i`.
pub fn central_fd(f: impl Fn(&[f64]) -> f64, x: &[f64], i: usize) -> f64 {
    let scale = x[i].abs().max(1.0);
    let sweep = fd_sweep(f, x, i, scale * 1e-3);
    best_estimate(&sweep)
}

/// Central finite difference along an arbitrary direction.
pub fn directional_fd(f: impl Fn(&[f64]) -> f64, x: &[f64], dir: &[f64], h0: f64) -> f64 {
    assert_eq!(x.len(), dir.len());
    let eval = |t: &[f64]| {
        let xt: Vec<f64> = x.iter().zip(dir).map(|(xi, di)| xi + t[0] * di).collect();
        f(&xt)
    };
    let sweep = fd_sweep(eval, &[0.0], 0, h0);
    best_estimate(&sweep)
}
