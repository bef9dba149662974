//! Tape-recording scalar.
//!
//! `Active` carries a value and the index of the tape node that produced it
//! (or a sentinel for constants). Arithmetic records exactly one node per
//! elementary operation with the local partials evaluated at the current
//! point. Comparisons and branch selection read the plain value, freezing
//! the taken branch into the tape.

use std::cmp::Ordering;
use std::fmt;
use std::num::FpCategory;
use std::ops::{Add, Div, Mul, Neg, Rem, Sub};
use std::sync::Arc;

use num_traits::{Float, FromPrimitive, Num, NumCast, One, ToPrimitive, Zero};

use super::tape::{with_builder, NONE};
use super::AdError;
use crate::linalg::DenseFactor;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug)]
pub struct Active {
    v: f64,
    i: u32,
}

impl Active {
    /// Constant (inactive) scalar; records nothing.
    pub fn constant(v: f64) -> Self {
        Active { v, i: NONE }
    }

    pub(crate) fn from_parts(v: f64, i: u32) -> Self {
        Active { v, i }
    }

    pub(crate) fn value_raw(self) -> f64 {
        self.v
    }

    pub(crate) fn index(self) -> u32 {
        self.i
    }

    pub fn is_active(self) -> bool {
        self.i != NONE
    }

    #[inline]
    fn unary(self, op: &'static str, v: f64, d: f64) -> Active {
        if self.i == NONE {
            return Active::constant(v);
        }
        let idx = with_builder(|b| b.push_unary(op, self.i, d));
        Active { v, i: idx }
    }

    /// Unary op with a domain precondition. A violation on an active operand
    /// is stored in the builder and surfaces from `record`.
    #[inline]
    fn unary_dom(self, op: &'static str, ok: bool, v: f64, d: f64) -> Active {
        if self.i != NONE && !ok {
            with_builder(|b| b.fail(op));
        }
        self.unary(op, v, d)
    }

    #[inline]
    fn binary(self, other: Active, op: &'static str, v: f64, dl: f64, dr: f64) -> Active {
        if self.i == NONE && other.i == NONE {
            return Active::constant(v);
        }
        let idx = with_builder(|b| b.push_binary(op, self.i, other.i, dl, dr));
        Active { v, i: idx }
    }
}

impl fmt::Display for Active {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.v)
    }
}

impl PartialEq for Active {
    fn eq(&self, other: &Self) -> bool {
        self.v == other.v
    }
}

impl PartialOrd for Active {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.v.partial_cmp(&other.v)
    }
}

impl Add for Active {
    type Output = Active;
    fn add(self, rhs: Active) -> Active {
        self.binary(rhs, "add", self.v + rhs.v, 1.0, 1.0)
    }
}

impl Sub for Active {
    type Output = Active;
    fn sub(self, rhs: Active) -> Active {
        self.binary(rhs, "sub", self.v - rhs.v, 1.0, -1.0)
    }
}

impl Mul for Active {
    type Output = Active;
    fn mul(self, rhs: Active) -> Active {
        self.binary(rhs, "mul", self.v * rhs.v, rhs.v, self.v)
    }
}

impl Div for Active {
    type Output = Active;
    fn div(self, rhs: Active) -> Active {
        if rhs.v == 0.0 && (self.i != NONE || rhs.i != NONE) {
            with_builder(|b| b.fail("div"));
        }
        let inv = 1.0 / rhs.v;
        self.binary(rhs, "div", self.v * inv, inv, -self.v * inv * inv)
    }
}

impl Rem for Active {
    type Output = Active;
    fn rem(self, rhs: Active) -> Active {
        let q = (self.v / rhs.v).trunc();
        self.binary(rhs, "rem", self.v % rhs.v, 1.0, -q)
    }
}

impl Neg for Active {
    type Output = Active;
    fn neg(self) -> Active {
        self.unary("neg", -self.v, -1.0)
    }
}

impl Zero for Active {
    fn zero() -> Self {
        Active::constant(0.0)
    }
    fn is_zero(&self) -> bool {
        self.v == 0.0
    }
}

impl One for Active {
    fn one() -> Self {
        Active::constant(1.0)
    }
}

impl Num for Active {
    type FromStrRadixErr = <f64 as Num>::FromStrRadixErr;
    fn from_str_radix(str: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        f64::from_str_radix(str, radix).map(Active::constant)
    }
}

impl ToPrimitive for Active {
    fn to_i64(&self) -> Option<i64> {
        self.v.to_i64()
    }
    fn to_u64(&self) -> Option<u64> {
        self.v.to_u64()
    }
    fn to_f64(&self) -> Option<f64> {
        Some(self.v)
    }
}

impl NumCast for Active {
    fn from<T: ToPrimitive>(n: T) -> Option<Self> {
        n.to_f64().map(Active::constant)
    }
}

impl FromPrimitive for Active {
    fn from_i64(n: i64) -> Option<Self> {
        Some(Active::constant(n as f64))
    }
    fn from_u64(n: u64) -> Option<Self> {
        Some(Active::constant(n as f64))
    }
    fn from_f64(n: f64) -> Option<Self> {
        Some(Active::constant(n))
    }
}

impl Float for Active {
    fn nan() -> Self {
        Active::constant(f64::NAN)
    }
    fn infinity() -> Self {
        Active::constant(f64::INFINITY)
    }
    fn neg_infinity() -> Self {
        Active::constant(f64::NEG_INFINITY)
    }
    fn neg_zero() -> Self {
        Active::constant(-0.0)
    }
    fn min_value() -> Self {
        Active::constant(f64::MIN)
    }
    fn min_positive_value() -> Self {
        Active::constant(f64::MIN_POSITIVE)
    }
    fn max_value() -> Self {
        Active::constant(f64::MAX)
    }
    fn epsilon() -> Self {
        Active::constant(f64::EPSILON)
    }

    fn is_nan(self) -> bool {
        self.v.is_nan()
    }
    fn is_infinite(self) -> bool {
        self.v.is_infinite()
    }
    fn is_finite(self) -> bool {
        self.v.is_finite()
    }
    fn is_normal(self) -> bool {
        self.v.is_normal()
    }
    fn classify(self) -> FpCategory {
        self.v.classify()
    }

    // Piecewise-constant maps carry zero partials.
    fn floor(self) -> Self {
        self.unary("floor", self.v.floor(), 0.0)
    }
    fn ceil(self) -> Self {
        self.unary("ceil", self.v.ceil(), 0.0)
    }
    fn round(self) -> Self {
        self.unary("round", self.v.round(), 0.0)
    }
    fn trunc(self) -> Self {
        self.unary("trunc", self.v.trunc(), 0.0)
    }
    fn fract(self) -> Self {
        self.unary("fract", self.v.fract(), 1.0)
    }

    /// Subgradient 0 at the kink, by convention.
    fn abs(self) -> Self {
        let d = if self.v > 0.0 {
            1.0
        } else if self.v < 0.0 {
            -1.0
        } else {
            0.0
        };
        self.unary("abs", self.v.abs(), d)
    }

    fn signum(self) -> Self {
        self.unary("signum", self.v.signum(), 0.0)
    }
    fn is_sign_positive(self) -> bool {
        self.v.is_sign_positive()
    }
    fn is_sign_negative(self) -> bool {
        self.v.is_sign_negative()
    }

    fn mul_add(self, a: Self, b: Self) -> Self {
        self * a + b
    }

    fn recip(self) -> Self {
        if self.v == 0.0 && self.i != NONE {
            with_builder(|b| b.fail("recip"));
        }
        let inv = 1.0 / self.v;
        self.unary("recip", inv, -inv * inv)
    }

    fn powi(self, n: i32) -> Self {
        if n == 0 {
            return self.unary("powi", 1.0, 0.0);
        }
        self.unary("powi", self.v.powi(n), n as f64 * self.v.powi(n - 1))
    }

    fn powf(self, e: Self) -> Self {
        if e.i == NONE {
            let v = self.v.powf(e.v);
            let ok = !(v.is_nan() && !self.v.is_nan() && !e.v.is_nan());
            return self.unary_dom("powf", ok, v, e.v * self.v.powf(e.v - 1.0));
        }
        if self.v <= 0.0 {
            with_builder(|b| b.fail("powf"));
        }
        let v = self.v.powf(e.v);
        self.binary(e, "powf", v, e.v * self.v.powf(e.v - 1.0), v * self.v.ln())
    }

    fn sqrt(self) -> Self {
        self.unary_dom("sqrt", self.v >= 0.0, self.v.sqrt(), 0.5 / self.v.sqrt())
    }

    fn exp(self) -> Self {
        let v = self.v.exp();
        self.unary("exp", v, v)
    }
    fn exp2(self) -> Self {
        let v = self.v.exp2();
        self.unary("exp2", v, v * std::f64::consts::LN_2)
    }
    fn ln(self) -> Self {
        self.unary_dom("ln", self.v >= 0.0, self.v.ln(), 1.0 / self.v)
    }
    fn log(self, base: Self) -> Self {
        self.ln() / base.ln()
    }
    fn log2(self) -> Self {
        self.unary_dom(
            "log2",
            self.v >= 0.0,
            self.v.log2(),
            1.0 / (self.v * std::f64::consts::LN_2),
        )
    }
    fn log10(self) -> Self {
        self.unary_dom(
            "log10",
            self.v >= 0.0,
            self.v.log10(),
            1.0 / (self.v * std::f64::consts::LN_10),
        )
    }

    /// Left-branch tie-break: `self` wins on equality.
    fn max(self, other: Self) -> Self {
        if self.v >= other.v {
            self.binary(other, "max", self.v, 1.0, 0.0)
        } else {
            self.binary(other, "max", other.v, 0.0, 1.0)
        }
    }

    /// Left-branch tie-break: `self` wins on equality.
    fn min(self, other: Self) -> Self {
        if self.v <= other.v {
            self.binary(other, "min", self.v, 1.0, 0.0)
        } else {
            self.binary(other, "min", other.v, 0.0, 1.0)
        }
    }

    fn abs_sub(self, other: Self) -> Self {
        (self - other).max(Active::constant(0.0))
    }

    fn cbrt(self) -> Self {
        let v = self.v.cbrt();
        self.unary("cbrt", v, 1.0 / (3.0 * v * v))
    }

    fn hypot(self, other: Self) -> Self {
        let h = self.v.hypot(other.v);
        let (dl, dr) = if h == 0.0 {
            (0.0, 0.0)
        } else {
            (self.v / h, other.v / h)
        };
        self.binary(other, "hypot", h, dl, dr)
    }

    fn sin(self) -> Self {
        self.unary("sin", self.v.sin(), self.v.cos())
    }
    fn cos(self) -> Self {
        self.unary("cos", self.v.cos(), -self.v.sin())
    }
    fn tan(self) -> Self {
        let c = self.v.cos();
        self.unary("tan", self.v.tan(), 1.0 / (c * c))
    }
    fn asin(self) -> Self {
        self.unary_dom(
            "asin",
            self.v.abs() <= 1.0,
            self.v.asin(),
            1.0 / (1.0 - self.v * self.v).sqrt(),
        )
    }
    fn acos(self) -> Self {
        self.unary_dom(
            "acos",
            self.v.abs() <= 1.0,
            self.v.acos(),
            -1.0 / (1.0 - self.v * self.v).sqrt(),
        )
    }
    fn atan(self) -> Self {
        self.unary("atan", self.v.atan(), 1.0 / (1.0 + self.v * self.v))
    }

    fn atan2(self, other: Self) -> Self {
        let r2 = self.v * self.v + other.v * other.v;
        let (dl, dr) = if r2 == 0.0 {
            (0.0, 0.0)
        } else {
            (other.v / r2, -self.v / r2)
        };
        self.binary(other, "atan2", self.v.atan2(other.v), dl, dr)
    }

    fn sin_cos(self) -> (Self, Self) {
        (self.sin(), self.cos())
    }

    fn exp_m1(self) -> Self {
        self.unary("exp_m1", self.v.exp_m1(), self.v.exp())
    }
    fn ln_1p(self) -> Self {
        self.unary_dom(
            "ln_1p",
            self.v >= -1.0,
            self.v.ln_1p(),
            1.0 / (1.0 + self.v),
        )
    }

    fn sinh(self) -> Self {
        self.unary("sinh", self.v.sinh(), self.v.cosh())
    }
    fn cosh(self) -> Self {
        self.unary("cosh", self.v.cosh(), self.v.sinh())
    }
    fn tanh(self) -> Self {
        let t = self.v.tanh();
        self.unary("tanh", t, 1.0 - t * t)
    }
    fn asinh(self) -> Self {
        self.unary(
            "asinh",
            self.v.asinh(),
            1.0 / (self.v * self.v + 1.0).sqrt(),
        )
    }
    fn acosh(self) -> Self {
        self.unary_dom(
            "acosh",
            self.v >= 1.0,
            self.v.acosh(),
            1.0 / (self.v * self.v - 1.0).sqrt(),
        )
    }
    fn atanh(self) -> Self {
        self.unary_dom(
            "atanh",
            self.v.abs() < 1.0,
            self.v.atanh(),
            1.0 / (1.0 - self.v * self.v),
        )
    }

    fn integer_decode(self) -> (u64, i16, i8) {
        self.v.integer_decode()
    }

    fn to_degrees(self) -> Self {
        self.unary("to_degrees", self.v.to_degrees(), 180.0 / std::f64::consts::PI)
    }
    fn to_radians(self) -> Self {
        self.unary("to_radians", self.v.to_radians(), std::f64::consts::PI / 180.0)
    }
}

impl Real for Active {
    #[inline]
    fn value(self) -> f64 {
        self.v
    }

    fn solve_dense(n: usize, a: &[Self], b: &[Self]) -> Result<Vec<Self>, AdError> {
        super::tape::taped_solve_dense(n, a, b)
    }

    fn solve_factored(factor: &Arc<DenseFactor>, b: &[Self]) -> Result<Vec<Self>, AdError> {
        super::tape::taped_solve_factored(factor, b)
    }
}
