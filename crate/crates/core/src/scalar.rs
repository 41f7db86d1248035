//! Numeric modes.
//!
//! Every algorithm in the crate is generic over [`Scalar`], which is
//! implemented for `f64` (float mode) and [`Rational`] (exact mode).
//! Costs may additionally take the value `+∞`, modelled by [`Extended`].

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::OtError;

/// Arbitrary-precision rational used by the exact mode.
pub type Rational = num_rational::BigRational;

/// Default float-mode tolerance.
pub const FLOAT_TOL: f64 = 1e-9;

/// Float-mode tolerance on the total mass of a probability vector.
pub const FLOAT_MASS_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NumericMode {
    Rational,
    Float,
}

impl fmt::Display for NumericMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NumericMode::Rational => f.write_str("rational"),
            NumericMode::Float => f.write_str("float"),
        }
    }
}

impl FromStr for NumericMode {
    type Err = OtError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rational" | "exact" => Ok(NumericMode::Rational),
            "float" | "f64" => Ok(NumericMode::Float),
            other => Err(OtError::Parameter(format!("unknown numeric mode `{other}`"))),
        }
    }
}

/// Ordered field used for weights, distances and costs.
pub trait Scalar:
    Clone
    + fmt::Debug
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + Sum
{
    const MODE: NumericMode;

    fn from_int(v: i64) -> Self;

    /// `num / den`; `den` must be nonzero.
    fn ratio(num: i64, den: i64) -> Self;

    /// Converts a finite float. Rationals take the exact binary value.
    fn from_f64(v: f64) -> Option<Self>;

    fn to_f64(&self) -> f64;

    /// Parses `"p/q"`, integers and decimal/scientific literals.
    /// Rational mode reads decimals exactly (`"0.1"` is `1/10`).
    fn parse_literal(s: &str) -> Option<Self>;

    /// Lossless text form: 17 significant digits or `"p/q"`.
    fn render(&self) -> String;

    /// False only for float NaN or infinities.
    fn is_finite_value(&self) -> bool;

    /// `self^p`. Exact in rational mode when `p` is a nonnegative integer.
    fn pow_real(&self, p: f64) -> Self;

    /// `self^(1/p)` for `self ≥ 0`. Exact in rational mode when the root is rational.
    fn root_real(&self, p: f64) -> Self;

    /// Tolerance used when the caller does not supply one: zero for rationals.
    fn default_tol() -> Self;

    fn abs_val(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    fn is_negative_val(&self) -> bool {
        *self < Self::zero()
    }

    /// `self ≤ other + tol`.
    fn le_tol(&self, other: &Self, tol: &Self) -> bool {
        *self <= other.clone() + tol.clone()
    }

    /// `|self − other| ≤ tol`.
    fn eq_tol(&self, other: &Self, tol: &Self) -> bool {
        (self.clone() - other.clone()).abs_val() <= *tol
    }

    fn min_val(a: Self, b: Self) -> Self {
        if b < a {
            b
        } else {
            a
        }
    }

    fn max_val(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }
}

fn integer_exponent(p: f64) -> Option<u32> {
    (p >= 0.0 && p.fract() == 0.0 && p <= u32::MAX as f64).then_some(p as u32)
}

impl Scalar for f64 {
    const MODE: NumericMode = NumericMode::Float;

    fn from_int(v: i64) -> Self {
        v as f64
    }

    fn ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn from_f64(v: f64) -> Option<Self> {
        v.is_finite().then_some(v)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn parse_literal(s: &str) -> Option<Self> {
        let s = s.trim();
        if let Some((p, q)) = s.split_once('/') {
            let p: f64 = p.trim().parse().ok()?;
            let q: f64 = q.trim().parse().ok()?;
            if q == 0.0 {
                return None;
            }
            let v = p / q;
            return v.is_finite().then_some(v);
        }
        let v: f64 = s.parse().ok()?;
        v.is_finite().then_some(v)
    }

    fn render(&self) -> String {
        format!("{:.16e}", self)
    }

    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }

    fn pow_real(&self, p: f64) -> Self {
        match integer_exponent(p) {
            Some(k) if k <= i32::MAX as u32 => self.powi(k as i32),
            _ => self.powf(p),
        }
    }

    fn root_real(&self, p: f64) -> Self {
        if p == 1.0 {
            *self
        } else if p == 2.0 {
            self.sqrt()
        } else {
            self.powf(1.0 / p)
        }
    }

    fn default_tol() -> Self {
        FLOAT_TOL
    }
}

fn parse_rational_decimal(s: &str) -> Option<Rational> {
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let all_digits = format!("{int_part}{frac_part}");
    let numer: BigInt = if all_digits.is_empty() {
        BigInt::zero()
    } else {
        all_digits.parse().ok()?
    };
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10u32);
    let value = if scale >= 0 {
        Rational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    Some(if negative { -value } else { value })
}

fn exact_root(v: &BigInt, k: u32) -> Option<BigInt> {
    let r = v.nth_root(k);
    (num_traits::pow(r.clone(), k as usize) == *v).then_some(r)
}

impl Scalar for Rational {
    const MODE: NumericMode = NumericMode::Rational;

    fn from_int(v: i64) -> Self {
        Rational::from_integer(BigInt::from(v))
    }

    fn ratio(num: i64, den: i64) -> Self {
        Rational::new(BigInt::from(num), BigInt::from(den))
    }

    fn from_f64(v: f64) -> Option<Self> {
        Rational::from_float(v)
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn parse_literal(s: &str) -> Option<Self> {
        let s = s.trim();
        if let Some((p, q)) = s.split_once('/') {
            let p: BigInt = p.trim().parse().ok()?;
            let q: BigInt = q.trim().parse().ok()?;
            if q.is_zero() {
                return None;
            }
            return Some(Rational::new(p, q));
        }
        parse_rational_decimal(s)
    }

    fn render(&self) -> String {
        format!("{}/{}", self.numer(), self.denom())
    }

    fn is_finite_value(&self) -> bool {
        true
    }

    fn pow_real(&self, p: f64) -> Self {
        match integer_exponent(p) {
            Some(k) => num_traits::pow(self.clone(), k as usize),
            None => Rational::from_float(Scalar::to_f64(self).powf(p)).unwrap_or_else(Rational::zero),
        }
    }

    fn root_real(&self, p: f64) -> Self {
        if p == 1.0 || self.is_zero() || self.is_one() {
            return self.clone();
        }
        if let Some(k) = integer_exponent(p) {
            if k >= 1 && !self.is_negative() {
                if let (Some(n), Some(d)) = (exact_root(self.numer(), k), exact_root(self.denom(), k)) {
                    return Rational::new(n, d);
                }
            }
        }
        Rational::from_float(Scalar::to_f64(self).powf(1.0 / p)).unwrap_or_else(Rational::zero)
    }

    fn default_tol() -> Self {
        Rational::zero()
    }
}

/// Converts a float tolerance into the scalar domain (exactly for rationals).
pub fn tol_from_f64<T: Scalar>(tol: f64) -> Result<T, OtError> {
    if !(tol >= 0.0) || !tol.is_finite() {
        return Err(OtError::Parameter(format!("tolerance must be a finite nonnegative number, got {tol}")));
    }
    T::from_f64(tol).ok_or_else(|| OtError::Parameter(format!("tolerance {tol} is not representable")))
}

/// Real number or `+∞`. `−∞` and NaN are not representable.
#[derive(Clone, Debug, PartialEq)]
pub enum Extended<T> {
    Finite(T),
    PosInf,
}

impl<T: Scalar> Extended<T> {
    pub fn zero() -> Self {
        Extended::Finite(T::zero())
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Extended::Finite(_))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Extended::PosInf)
    }

    pub fn finite(&self) -> Option<&T> {
        match self {
            Extended::Finite(v) => Some(v),
            Extended::PosInf => None,
        }
    }

    pub fn into_finite(self) -> Option<T> {
        match self {
            Extended::Finite(v) => Some(v),
            Extended::PosInf => None,
        }
    }

    /// `self · mass` under the integration convention `0·∞ = 0`.
    /// `mass` must be nonnegative.
    pub fn times_mass(&self, mass: &T) -> Self {
        match self {
            Extended::Finite(v) => Extended::Finite(v.clone() * mass.clone()),
            Extended::PosInf if mass.is_zero() => Extended::zero(),
            Extended::PosInf => Extended::PosInf,
        }
    }

    pub fn from_f64(v: f64) -> Option<Self> {
        if v == f64::INFINITY {
            Some(Extended::PosInf)
        } else {
            T::from_f64(v).map(Extended::Finite)
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Extended::Finite(v) => v.to_f64(),
            Extended::PosInf => f64::INFINITY,
        }
    }

    /// Accepts every scalar literal plus `"+inf"`, `"inf"`, `"infinity"`.
    pub fn parse_literal(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "+inf" | "inf" | "+infinity" | "infinity" => Some(Extended::PosInf),
            "-inf" | "-infinity" | "nan" => None,
            other => T::parse_literal(other).map(Extended::Finite),
        }
    }

    pub fn render(&self) -> String {
        match self {
            Extended::Finite(v) => v.render(),
            Extended::PosInf => "+inf".to_string(),
        }
    }

    /// `self ≤ other + tol`, with `+∞ ≤ +∞`.
    pub fn le_tol(&self, other: &Self, tol: &T) -> bool {
        match (self, other) {
            (_, Extended::PosInf) => true,
            (Extended::PosInf, Extended::Finite(_)) => false,
            (Extended::Finite(a), Extended::Finite(b)) => a.le_tol(b, tol),
        }
    }

    pub fn eq_tol(&self, other: &Self, tol: &T) -> bool {
        match (self, other) {
            (Extended::PosInf, Extended::PosInf) => true,
            (Extended::Finite(a), Extended::Finite(b)) => a.eq_tol(b, tol),
            _ => false,
        }
    }
}

impl<T: Scalar> Add for Extended<T> {
    type Output = Extended<T>;

    fn add(self, rhs: Self) -> Self::Output {
        match (self, rhs) {
            (Extended::Finite(a), Extended::Finite(b)) => Extended::Finite(a + b),
            _ => Extended::PosInf,
        }
    }
}

impl<T: Scalar> Sum for Extended<T> {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        let mut acc = T::zero();
        for item in iter {
            match item {
                Extended::Finite(v) => acc += v,
                Extended::PosInf => return Extended::PosInf,
            }
        }
        Extended::Finite(acc)
    }
}

impl<T: Scalar> PartialOrd for Extended<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Extended::PosInf, Extended::PosInf) => Some(Ordering::Equal),
            (Extended::PosInf, Extended::Finite(_)) => Some(Ordering::Greater),
            (Extended::Finite(_), Extended::PosInf) => Some(Ordering::Less),
            (Extended::Finite(a), Extended::Finite(b)) => a.partial_cmp(b),
        }
    }
}

impl<T: Scalar> From<T> for Extended<T> {
    fn from(v: T) -> Self {
        Extended::Finite(v)
    }
}
