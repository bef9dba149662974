//! Tape and vjp checks against direct evaluation and central differences.

use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::ad::tape::taped_solve_dense;
use crate::scalar::Real;

use crate::fd::central_fd;

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

#[test]
fn square_records_single_multiply() {
    let (tape, y) = record(&[3.0], |x| vec![x[0] * x[0]]).unwrap();
    assert_eq!(y, vec![9.0]);
    assert_eq!(tape.num_nodes(), 2); // input + multiply
    let g = tape.vjp(&[1.0]).unwrap();
    assert_eq!(g, vec![6.0]);
}

#[test]
fn addition_of_two_inputs() {
    let (tape, y) = record(&[1.0, 2.0], |x| vec![x[0] + x[1]]).unwrap();
    assert_eq!(y, vec![3.0]);
    let g = tape.vjp(&[1.0]).unwrap();
    assert_eq!(g, vec![1.0, 1.0]);
}

#[test]
fn recorded_value_matches_direct_evaluation() {
    // f(x) = sin(x) * exp(x) at x = 0.5, bit-for-bit against the same
    // expression evaluated without the tape.
    let f = |x: f64| x.sin() * x.exp();
    let (_, y) = record(&[0.5], |x| vec![x[0].sin() * x[0].exp()]).unwrap();
    assert_eq!(y[0], f(0.5));
}

#[test]
fn vjp_matches_central_fd_on_composite() {
    // f(x) = sin(x) * exp(-x^2) at x = 0.7
    let f = |x: &[f64]| x[0].sin() * (-x[0] * x[0]).exp();
    let (tape, _) = record(&[0.7], |x| {
        vec![x[0].sin() * (-x[0] * x[0]).exp()]
    })
    .unwrap();
    let g = tape.vjp(&[1.0]).unwrap();
    let fd = central_fd(f, &[0.7], 0);
    assert!(rel_err(g[0], fd) <= 1e-8, "ad {} vs fd {}", g[0], fd);
}

#[test]
fn vjp_is_linear_in_the_seed() {
    let x = [0.3, -1.2, 2.5];
    let (tape, _) = record(&x, |v| {
        let p = v[0] * v[1] + v[2].sin();
        let q = (v[2] * v[0]).exp() - v[1];
        vec![p, q]
    })
    .unwrap();
    let g1 = tape.vjp(&[1.0, 0.0]).unwrap();
    let g2 = tape.vjp(&[0.0, 1.0]).unwrap();
    let (a, b) = (0.37, -2.11);
    let gc = tape.vjp(&[a, b]).unwrap();
    for i in 0..3 {
        let lin = a * g1[i] + b * g2[i];
        assert!(rel_err(gc[i], lin) <= 1e-14, "{} vs {}", gc[i], lin);
    }
}

#[test]
fn chain_rule_composition_consistency() {
    // g(f(x)) recorded in one tape equals the product of separately
    // recorded vjps of g and f.
    let x = [1.3, 0.4];
    let f = |v: &[Active]| -> Vec<Active> { vec![v[0] * v[1], v[0].sin() + v[1]] };
    let g = |v: &[Active]| -> Vec<Active> { vec![v[0].exp() / (v[1] * v[1] + Active::constant(1.0))] };

    let (tape_full, _) = record(&x, |v| {
        let mid = f(v);
        g(&mid)
    })
    .unwrap();
    let grad_full = tape_full.vjp(&[1.0]).unwrap();

    let (tape_f, y_mid) = record(&x, |v| f(v)).unwrap();
    let (tape_g, _) = record(&y_mid, |v| g(v)).unwrap();
    let gbar = tape_g.vjp(&[1.0]).unwrap();
    let grad_chained = tape_f.vjp(&gbar).unwrap();

    for i in 0..2 {
        assert!(
            rel_err(grad_full[i], grad_chained[i]) <= 1e-13,
            "{} vs {}",
            grad_full[i],
            grad_chained[i]
        );
    }
}

#[test]
fn every_elementary_op_matches_fd() {
    // Unary and binary primitives probed at random smooth points.
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    type UF = (&'static str, fn(Active) -> Active, fn(f64) -> f64, fn(&mut ChaCha8Rng) -> f64);
    let unary: Vec<UF> = vec![
        ("sqrt", |a| a.sqrt(), |x| x.sqrt(), |r| r.gen_range(0.1..4.0)),
        ("sin", |a| a.sin(), |x| x.sin(), |r| r.gen_range(-3.0..3.0)),
        ("cos", |a| a.cos(), |x| x.cos(), |r| r.gen_range(-3.0..3.0)),
        ("tan", |a| a.tan(), |x| x.tan(), |r| r.gen_range(-1.2..1.2)),
        ("exp", |a| a.exp(), |x| x.exp(), |r| r.gen_range(-2.0..2.0)),
        ("ln", |a| a.ln(), |x| x.ln(), |r| r.gen_range(0.1..5.0)),
        ("abs", |a| a.abs(), |x| x.abs(), |r| {
            let x: f64 = r.gen_range(0.5..2.0);
            if r.gen_bool(0.5) {
                -x
            } else {
                x
            }
        }),
        ("recip", |a| a.recip(), |x| x.recip(), |r| r.gen_range(0.3..3.0)),
        ("tanh", |a| a.tanh(), |x| x.tanh(), |r| r.gen_range(-2.0..2.0)),
        ("cbrt", |a| a.cbrt(), |x| x.cbrt(), |r| r.gen_range(0.2..3.0)),
        ("asin", |a| a.asin(), |x| x.asin(), |r| r.gen_range(-0.8..0.8)),
        ("atan", |a| a.atan(), |x| x.atan(), |r| r.gen_range(-3.0..3.0)),
    ];
    for (name, op_a, op_f, sample) in unary {
        for _ in 0..5 {
            let x0 = sample(&mut rng);
            let (tape, _) = record(&[x0], |v| vec![op_a(v[0])]).unwrap();
            let g = tape.vjp(&[1.0]).unwrap()[0];
            let fd = central_fd(|x| op_f(x[0]), &[x0], 0);
            assert!(rel_err(g, fd) <= 1e-7, "{name} at {x0}: ad {g} fd {fd}");
        }
    }

    type BF = (&'static str, fn(Active, Active) -> Active, fn(f64, f64) -> f64);
    let binary: Vec<BF> = vec![
        ("add", |a, b| a + b, |x, y| x + y),
        ("sub", |a, b| a - b, |x, y| x - y),
        ("mul", |a, b| a * b, |x, y| x * y),
        ("div", |a, b| a / b, |x, y| x / y),
        ("atan2", |a, b| a.atan2(b), |x, y| x.atan2(y)),
        ("hypot", |a, b| a.hypot(b), |x, y| x.hypot(y)),
        ("powf", |a, b| a.powf(b), |x, y| x.powf(y)),
        ("max", |a, b| a.max(b), |x, y| x.max(y)),
        ("min", |a, b| a.min(b), |x, y| x.min(y)),
    ];
    for (name, op_a, op_f) in binary {
        for _ in 0..5 {
            let x0 = rng.gen_range(0.4..2.0);
            let y0 = rng.gen_range(0.4..2.0) + 0.1; // keep away from ties and kinks
            let (tape, _) = record(&[x0, y0], |v| vec![op_a(v[0], v[1])]).unwrap();
            let g = tape.vjp(&[1.0]).unwrap();
            for i in 0..2 {
                let fd = central_fd(|x| op_f(x[0], x[1]), &[x0, y0], i);
                assert!(
                    rel_err(g[i], fd) <= 1e-7,
                    "{name} d{i} at ({x0},{y0}): ad {} fd {fd}",
                    g[i]
                );
            }
        }
    }
}

#[test]
fn abs_subgradient_zero_at_kink() {
    let (tape, _) = record(&[0.0], |v| vec![v[0].abs()]).unwrap();
    assert_eq!(tape.vjp(&[1.0]).unwrap()[0], 0.0);
}

#[test]
fn min_max_left_branch_tie_break() {
    let (tape, _) = record(&[1.5, 1.5], |v| vec![v[0].max(v[1]), v[0].min(v[1])]).unwrap();
    assert_eq!(tape.vjp(&[1.0, 0.0]).unwrap(), vec![1.0, 0.0]);
    assert_eq!(tape.vjp(&[0.0, 1.0]).unwrap(), vec![1.0, 0.0]);
}

#[test]
fn domain_errors_carry_operation_index() {
    let err = record(&[-2.0], |v| vec![v[0].sqrt()]).unwrap_err();
    match err {
        AdError::Domain { op, .. } => assert_eq!(op, "sqrt"),
        other => panic!("unexpected error {other:?}"),
    }
    let err = record(&[3.0], |v| vec![v[0] / Active::constant(0.0)]).unwrap_err();
    assert!(matches!(err, AdError::Domain { op: "div", .. }));
    let err = record(&[-1.0], |v| vec![v[0].ln()]).unwrap_err();
    assert!(matches!(err, AdError::Domain { op: "ln", .. }));
}

#[test]
fn seed_dimension_mismatch_rejected() {
    let (tape, _) = record(&[1.0], |v| vec![v[0] * v[0]]).unwrap();
    assert!(matches!(
        tape.vjp(&[1.0, 2.0]),
        Err(AdError::Dimension { .. })
    ));
}

#[test]
fn tape_reuse_across_seeds() {
    let (tape, _) = record(&[2.0, 5.0], |v| vec![v[0] * v[1], v[0] - v[1]]).unwrap();
    assert_eq!(tape.vjp(&[1.0, 0.0]).unwrap(), vec![5.0, 2.0]);
    assert_eq!(tape.vjp(&[0.0, 1.0]).unwrap(), vec![1.0, -1.0]);
    assert_eq!(tape.vjp(&[1.0, 0.0]).unwrap(), vec![5.0, 2.0]);
}

#[test]
fn reset_clears_everything() {
    let (mut tape, _) = record(&[1.0], |v| vec![v[0].sin()]).unwrap();
    tape.reset();
    assert_eq!(tape.num_nodes(), 0);
    assert_eq!(tape.num_inputs(), 0);
    assert_eq!(tape.num_outputs(), 0);
}

#[test]
fn taped_dense_solve_reverse_rule() {
    // x = A(t)^-1 b(t) with A, b both functions of the inputs; compare the
    // vjp against a dense central-difference oracle of x . seed.
    let t0 = [1.7, -0.6, 0.9];
    let n = 3;
    let assemble = |t: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let a = vec![
            4.0 + t[0],
            t[1],
            0.3,
            t[1] * t[0],
            3.0 - t[2],
            0.1,
            0.0,
            t[2],
            2.0 + t[0] * t[0],
        ];
        let b = vec![t[0], t[1] + t[2], 1.0];
        (a, b)
    };
    let seed = [0.7, -1.3, 0.25];
    let scalar_out = |t: &[f64]| -> f64 {
        let (a, b) = assemble(t);
        let x = f64::solve_dense(n, &a, &b).unwrap();
        x.iter().zip(&seed).map(|(xi, si)| xi * si).sum()
    };

    let (tape, _) = record(&t0, |v| {
        let a = vec![
            Active::constant(4.0) + v[0],
            v[1],
            Active::constant(0.3),
            v[1] * v[0],
            Active::constant(3.0) - v[2],
            Active::constant(0.1),
            Active::constant(0.0),
            v[2],
            Active::constant(2.0) + v[0] * v[0],
        ];
        let b = vec![v[0], v[1] + v[2], Active::constant(1.0)];
        taped_solve_dense(n, &a, &b).unwrap()
    })
    .unwrap();
    let g = tape.vjp(&seed).unwrap();
    for i in 0..3 {
        let fd = central_fd(scalar_out, &t0, i);
        assert!(
            rel_err(g[i], fd) <= 1e-8,
            "solve vjp d{i}: ad {} fd {fd}",
            g[i]
        );
    }
}

#[test]
fn record_multi_groups_slice_correctly() {
    let w = [1.0, 2.0];
    let z = [3.0];
    let (tape, y, slices) = record_multi(&[&w, &z], |g| {
        vec![g[0][0] * g[0][1] + g[1][0], g[1][0] * g[0][0]]
    })
    .unwrap();
    assert_eq!(y, vec![5.0, 3.0]);
    let xbar = tape.vjp(&[1.0, 0.0]).unwrap();
    assert_eq!(slices.group(&xbar, 0), &[2.0, 1.0]);
    assert_eq!(slices.group(&xbar, 1), &[1.0]);
}

#[test]
fn nested_recording_rejected() {
    let err = record(&[1.0], |_| {
        let inner = record(&[2.0], |v| vec![v[0]]);
        assert!(matches!(inner, Err(AdError::AlreadyRecording)));
        vec![Active::constant(0.0)]
    });
    assert!(err.is_ok());
}
