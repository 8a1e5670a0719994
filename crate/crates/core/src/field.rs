//! Scalar fields: exact rationals and double-double floats, plus a tagged
//! scalar for mode-checked arithmetic at API boundaries.

use std::fmt::{self, Debug};
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};
use twofloat::TwoFloat;

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Double-double float. Division is corrected with a fused multiply-add,
/// which the underlying two-word quotient omits.
#[derive(Clone, Copy, Debug, Default, PartialEq, PartialOrd)]
pub struct Float(TwoFloat);

impl Float {
    pub fn new_add(a: f64, b: f64) -> Self {
        Float(TwoFloat::new_add(a, b))
    }
    pub fn hi(&self) -> f64 {
        self.0.hi()
    }
    pub fn lo(&self) -> f64 {
        self.0.lo()
    }
    pub fn abs(&self) -> Self {
        Float(self.0.abs())
    }
    pub fn sqrt(&self) -> Self {
        Float(self.0.sqrt())
    }
}

impl From<f64> for Float {
    fn from(x: f64) -> Self {
        Float(TwoFloat::from(x))
    }
}

impl fmt::Display for Float {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e}", self.hi() + self.lo())
    }
}

impl Add for Float {
    type Output = Float;
    fn add(self, rhs: Float) -> Float {
        Float(self.0 + rhs.0)
    }
}

impl Sub for Float {
    type Output = Float;
    fn sub(self, rhs: Float) -> Float {
        Float(self.0 - rhs.0)
    }
}

impl Mul for Float {
    type Output = Float;
    fn mul(self, rhs: Float) -> Float {
        Float(self.0 * rhs.0)
    }
}

impl Neg for Float {
    type Output = Float;
    fn neg(self) -> Float {
        Float(-self.0)
    }
}

impl Div for Float {
    type Output = Float;
    fn div(self, rhs: Float) -> Float {
        let bh = rhs.hi();
        let q1 = self.hi() / bh;
        // r = a − q1·b in double-double, then two refinement steps.
        let r = self - rhs * Float::from(q1);
        let q2 = r.hi() / bh;
        let r = r - rhs * Float::from(q2);
        let q3 = r.hi() / bh;
        Float::new_add(q1, q2) + Float::from(q3)
    }
}

/// Relative magnitude at or below which a floating quantity is treated as zero.
pub const ZERO_TOLERANCE: f64 = 1e-9;
/// Relative magnitude at or above which a floating quantity is treated as nonzero.
/// Values strictly between the two thresholds are reported as ambiguous.
pub const NONZERO_TOLERANCE: f64 = 1e-6;

pub trait Field:
    Clone
    + Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    const EXACT: bool;
    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(n: i64) -> Self;
    fn from_rational(r: &Rational) -> Self;
    fn to_rational(&self) -> Option<Rational>;
    fn to_f64(&self) -> f64;
    /// Literal zero test (no tolerance).
    fn is_zero(&self) -> bool;
    /// Square root of a nonnegative rational when representable in this field.
    fn sqrt_rational(r: &Rational) -> Option<Self>;
    fn render(&self) -> String;
    /// Rank of a matrix decided by singular values, or `None` when elimination
    /// can decide rank exactly.
    fn numeric_rank(rows: usize, cols: usize, entries: &[Self]) -> Result<Option<usize>>;

    fn magnitude(&self) -> f64 {
        self.to_f64().abs()
    }
}

pub fn rational(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn rat_int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Square root of a nonnegative rational if it is a perfect square.
pub fn rational_sqrt(r: &Rational) -> Option<Rational> {
    if r.is_negative() {
        return None;
    }
    let n = r.numer().sqrt();
    let d = r.denom().sqrt();
    if &(&n * &n) == r.numer() && &(&d * &d) == r.denom() {
        Some(Rational::new(n, d))
    } else {
        None
    }
}

/// Decides whether `x` vanishes relative to `scale`. Exact values are tested
/// literally; floating values use the tolerance band.
pub fn vanishes<T: Field>(x: &T, scale: f64, what: &str) -> Result<bool> {
    if T::EXACT {
        return Ok(x.is_zero());
    }
    magnitude_vanishes(x.magnitude(), scale, what)
}

/// Decides whether every entry vanishes relative to `scale`.
pub fn all_vanish<T: Field>(xs: &[T], scale: f64, what: &str) -> Result<bool> {
    if T::EXACT {
        return Ok(xs.iter().all(|x| x.is_zero()));
    }
    let m = xs.iter().map(|x| x.magnitude()).fold(0.0, f64::max);
    magnitude_vanishes(m, scale, what)
}

/// Tolerance-band decision on a floating magnitude.
pub fn magnitude_vanishes(m: f64, scale: f64, what: &str) -> Result<bool> {
    let reference = scale.max(1.0);
    if m <= ZERO_TOLERANCE * reference {
        Ok(true)
    } else if m >= NONZERO_TOLERANCE * reference {
        Ok(false)
    } else {
        Err(Error::FloatingAmbiguous(format!(
            "{what}: magnitude {m:e} at scale {reference:e}"
        )))
    }
}

fn bigint_to_float(n: &BigInt) -> Float {
    let hi = n.to_f64().unwrap_or(f64::NAN);
    if !hi.is_finite() {
        return Float::from(hi);
    }
    let rest = n - BigInt::from_f64(hi).unwrap_or_default();
    let lo = rest.to_f64().unwrap_or(0.0);
    Float::new_add(hi, lo)
}

impl Field for Rational {
    const EXACT: bool = true;
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_i64(n: i64) -> Self {
        rat_int(n)
    }
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
    fn to_rational(&self) -> Option<Rational> {
        Some(self.clone())
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn sqrt_rational(r: &Rational) -> Option<Self> {
        rational_sqrt(r)
    }
    fn render(&self) -> String {
        self.to_string()
    }
    fn numeric_rank(_: usize, _: usize, _: &[Self]) -> Result<Option<usize>> {
        Ok(None)
    }
}

impl Field for Float {
    const EXACT: bool = false;
    fn zero() -> Self {
        Float::from(0.0)
    }
    fn one() -> Self {
        Float::from(1.0)
    }
    fn from_i64(n: i64) -> Self {
        bigint_to_float(&BigInt::from(n))
    }
    fn from_rational(r: &Rational) -> Self {
        // Keep 110 leading bits of each part so huge operands stay finite.
        let trim = |n: &BigInt| {
            let shift = n.bits().saturating_sub(110);
            (bigint_to_float(&(n >> shift)), shift as i64)
        };
        let (num, sn) = trim(r.numer());
        let (den, sd) = trim(r.denom());
        let mut q = num / den;
        let mut e = sn - sd;
        while e != 0 {
            let step = e.clamp(-1000, 1000);
            q = q * Float::from(2f64.powi(step as i32));
            e -= step;
        }
        q
    }
    fn to_rational(&self) -> Option<Rational> {
        None
    }
    fn to_f64(&self) -> f64 {
        self.hi() + self.lo()
    }
    fn is_zero(&self) -> bool {
        self.hi() == 0.0
    }
    fn sqrt_rational(r: &Rational) -> Option<Self> {
        if r.is_negative() {
            None
        } else {
            Some(Self::from_rational(r).sqrt())
        }
    }
    fn render(&self) -> String {
        format!("{:e}", Field::to_f64(self))
    }
    fn numeric_rank(rows: usize, cols: usize, entries: &[Self]) -> Result<Option<usize>> {
        if rows == 0 || cols == 0 {
            return Ok(Some(0));
        }
        let m = nalgebra::DMatrix::from_fn(rows, cols, |i, j| Field::to_f64(&entries[i * cols + j]));
        let sv = m.svd(false, false).singular_values;
        let largest = sv.iter().cloned().fold(0.0, f64::max);
        let reference = largest.max(1.0);
        let mut rank = 0;
        for &s in sv.iter() {
            if s > NONZERO_TOLERANCE * reference {
                rank += 1;
            } else if s > ZERO_TOLERANCE * reference {
                return Err(Error::FloatingAmbiguous(format!(
                    "singular value {s:e} against largest {largest:e}"
                )));
            }
        }
        Ok(Some(rank))
    }
}

/// Mode of a tagged scalar.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Exact,
    Floating,
}

/// A scalar tagged with the arithmetic mode that produced it.
#[derive(Clone, PartialEq)]
pub enum Scalar {
    Exact(Rational),
    Float(f64),
}

impl Scalar {
    pub fn mode(&self) -> Mode {
        match self {
            Scalar::Exact(_) => Mode::Exact,
            Scalar::Float(_) => Mode::Floating,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Exact(r) => Field::to_f64(r),
            Scalar::Float(x) => *x,
        }
    }

    fn combine(
        &self,
        other: &Scalar,
        exact: impl FnOnce(&Rational, &Rational) -> Result<Rational>,
        float: impl FnOnce(f64, f64) -> f64,
    ) -> Result<Scalar> {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => exact(a, b).map(Scalar::Exact),
            (Scalar::Float(a), Scalar::Float(b)) => Ok(Scalar::Float(float(*a, *b))),
            _ => Err(Error::MixedModes),
        }
    }

    pub fn checked_add(&self, other: &Scalar) -> Result<Scalar> {
        self.combine(other, |a, b| Ok(a + b), |a, b| a + b)
    }

    pub fn checked_sub(&self, other: &Scalar) -> Result<Scalar> {
        self.combine(other, |a, b| Ok(a - b), |a, b| a - b)
    }

    pub fn checked_mul(&self, other: &Scalar) -> Result<Scalar> {
        self.combine(other, |a, b| Ok(a * b), |a, b| a * b)
    }

    pub fn checked_div(&self, other: &Scalar) -> Result<Scalar> {
        self.combine(
            other,
            |a, b| {
                if Zero::is_zero(b) {
                    Err(Error::DomainError("division by zero".into()))
                } else {
                    Ok(a / b)
                }
            },
            |a, b| a / b,
        )
    }

    pub fn parse(text: &str) -> Result<Scalar> {
        parse_rational(text).map(Scalar::Exact)
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(r) => write!(f, "{r}"),
            Scalar::Float(x) => write!(f, "{x:e}"),
        }
    }
}

/// Parses "p", "p/q", or a terminating decimal into an exact rational.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let t = text.trim();
    let bad = || Error::Parse(format!("invalid rational {text:?}"));
    if let Some((p, q)) = t.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if Zero::is_zero(&q) {
            return Err(bad());
        }
        return Ok(Rational::new(p, q));
    }
    if let Some((int, frac)) = t.split_once('.') {
        let negative = int.starts_with('-');
        let digits = format!("{}{}", int.trim_start_matches(['-', '+']), frac);
        let n: BigInt = digits.parse().map_err(|_| bad())?;
        let d = num_traits::pow(BigInt::from(10), frac.len());
        let r = Rational::new(n, d);
        return Ok(if negative { -r } else { r });
    }
    let n: BigInt = t.parse().map_err(|_| bad())?;
    Ok(Rational::from_integer(n))
}
