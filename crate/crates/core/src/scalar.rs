//! Scalar abstraction shared by the exact, floating-point and symbolic
//! linear-algebra paths.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational number used for every structure constant and exact sample point.
pub type Rational = BigRational;

/// Field element usable by [`crate::linalg::Matrix`].
///
/// `is_negligible` is exact for rationals and symbolic expressions and
/// threshold-based for floats.
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn is_negligible(&self) -> bool;

    /// Preference used when choosing elimination pivots; larger wins.
    fn pivot_weight(&self) -> f64;

    fn from_rational(q: &Rational) -> Self;

    fn from_i64(v: i64) -> Self {
        Self::from_rational(&Rational::from_integer(BigInt::from(v)))
    }

    /// Approximate float value, when meaningful.
    fn to_f64(&self) -> Option<f64>;
}

/// Absolute threshold below which a float is considered zero during elimination.
pub const FLOAT_EPS: f64 = 1e-12;

impl Scalar for Rational {
    fn is_negligible(&self) -> bool {
        self.is_zero()
    }

    fn pivot_weight(&self) -> f64 {
        // Prefer small-height pivots to limit coefficient growth.
        let bits = self.numer().bits() + self.denom().bits();
        -(bits as f64)
    }

    fn from_rational(q: &Rational) -> Self {
        q.clone()
    }

    fn to_f64(&self) -> Option<f64> {
        rational_to_f64(self)
    }
}

impl Scalar for f64 {
    fn is_negligible(&self) -> bool {
        self.abs() <= FLOAT_EPS
    }

    fn pivot_weight(&self) -> f64 {
        self.abs()
    }

    fn from_rational(q: &Rational) -> Self {
        rational_to_f64(q).unwrap_or(f64::NAN)
    }

    fn to_f64(&self) -> Option<f64> {
        Some(*self)
    }
}

/// Converts a rational to the nearest double, tolerating huge numerators and denominators.
pub fn rational_to_f64(q: &Rational) -> Option<f64> {
    if let (Some(n), Some(d)) = (q.numer().to_f64(), q.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return Some(n / d);
        }
    }
    // Scale both sides down before dividing.
    let shift = q.numer().bits().max(q.denom().bits()).saturating_sub(900);
    let n = (q.numer() >> shift).to_f64()?;
    let d = (q.denom() >> shift).to_f64()?;
    if d == 0.0 {
        return None;
    }
    Some(n / d)
}

/// Best rational approximation of `x` with denominator at most `max_den`
/// (continued fractions).
pub fn rational_approx(x: f64, max_den: i64) -> Option<Rational> {
    if !x.is_finite() {
        return None;
    }
    let sign = if x < 0.0 { -1 } else { 1 };
    let mut v = x.abs();
    let (mut p0, mut q0, mut p1, mut q1) = (0i64, 1i64, 1i64, 0i64);
    for _ in 0..64 {
        let a = v.floor();
        if a > 1e15 {
            break;
        }
        let a = a as i64;
        let p2 = a.checked_mul(p1)?.checked_add(p0)?;
        let q2 = a.checked_mul(q1)?.checked_add(q0)?;
        if q2 > max_den {
            break;
        }
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        let frac = v - a as f64;
        if frac < 1e-15 {
            break;
        }
        v = 1.0 / frac;
    }
    if q1 == 0 {
        return None;
    }
    Some(Rational::new(BigInt::from(sign * p1), BigInt::from(q1)))
}

/// Exact square root of a non-negative rational, when it is a perfect square.
pub fn rational_sqrt(q: &Rational) -> Option<Rational> {
    if q.is_negative() {
        return None;
    }
    let n = q.numer().sqrt();
    let d = q.denom().sqrt();
    if &(&n * &n) == q.numer() && &(&d * &d) == q.denom() {
        Some(Rational::new(n, d))
    } else {
        None
    }
}

/// Parses `p`, `-p` or `p/q` into an exact rational.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let text = text.trim();
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (text, "1"),
    };
    let n: BigInt = num.parse().ok()?;
    let d: BigInt = den.parse().ok()?;
    if d.is_zero() {
        return None;
    }
    Some(Rational::new(n, d))
}

/// Integer-valued rational.
pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// `p/q` as an exact rational.
pub fn frac(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}
