//! Unbounded nonnegative machine values and the primitive operations on them.
//!
//! Every operation here is total on its domain or reports an [`ArithFault`];
//! nothing wraps or truncates. Multiplication and reduction recognise
//! power-of-two operands and moduli of the form `2^e - c` (with `c` small)
//! and take shift-based paths; the results are identical to the generic
//! big-integer routines.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A register value: an arbitrary-precision nonnegative integer.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Value(BigUint);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Error, Serialize, Deserialize)]
pub enum ArithFault {
    #[error("division by zero")]
    DivisionByZero,
    #[error("exact division left a remainder")]
    ExactDivRemainder,
    #[error("exact division by zero")]
    ExactDivByZero,
    #[error("shift amount does not fit in a machine word")]
    ShiftTooLarge,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid value literal `{0}`")]
pub struct LiteralError(pub String);

impl Value {
    pub fn zero() -> Self {
        Value(BigUint::zero())
    }

    pub fn one() -> Self {
        Value(BigUint::one())
    }

    /// `2^e`.
    pub fn pow2(e: u64) -> Self {
        Value(BigUint::one() << e)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    /// Number of significant bits; zero has bit-length 0.
    pub fn bits(&self) -> u64 {
        self.0.bits()
    }

    /// `Some(e)` iff the value equals `2^e`.
    pub fn power_of_two_exponent(&self) -> Option<u64> {
        let tz = self.0.trailing_zeros()?;
        (self.0.bits() == tz + 1).then_some(tz)
    }

    pub fn to_u64(&self) -> Option<u64> {
        self.0.to_u64()
    }

    pub fn as_biguint(&self) -> &BigUint {
        &self.0
    }

    pub fn into_biguint(self) -> BigUint {
        self.0
    }

    /// Parses a decimal, `0x` hexadecimal or `2^<e>` literal.
    pub fn parse_literal(text: &str) -> Result<Self, LiteralError> {
        let t = text.trim();
        let err = || LiteralError(text.to_string());
        if let Some(exp) = t.strip_prefix("2^") {
            let e: u64 = exp.trim().parse().map_err(|_| err())?;
            return Ok(Value::pow2(e));
        }
        let parsed = if let Some(hex) = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
            BigUint::parse_bytes(hex.as_bytes(), 16)
        } else if !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit()) {
            BigUint::parse_bytes(t.as_bytes(), 10)
        } else {
            None
        };
        parsed.map(Value).ok_or_else(err)
    }

    /// Compact human rendering: decimal up to `max_bits`, otherwise `2^e`
    /// when exact, otherwise `<n bits>`.
    pub fn display_compact(&self, max_bits: u64) -> String {
        if self.bits() <= max_bits {
            self.0.to_str_radix(10)
        } else if let Some(e) = self.power_of_two_exponent() {
            format!("2^{e}")
        } else {
            format!("<{} bits>", self.bits())
        }
    }

    /// Low-order preview for traces: full decimal when it fits in `width`
    /// hex digits, else the lowest `width` hex digits.
    pub fn preview(&self, width: usize) -> String {
        let width_bits = 4 * width as u64;
        if self.bits() <= width_bits.min(64) {
            self.0.to_str_radix(10)
        } else if self.bits() <= width_bits {
            format!("0x{}", self.0.to_str_radix(16))
        } else {
            let mask = (BigUint::one() << width_bits) - 1u32;
            let low = &self.0 & &mask;
            format!("0x..{:0>width$}", low.to_str_radix(16), width = width)
        }
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.bits() <= 128 {
            write!(f, "{}", self.0)
        } else {
            write!(f, "{}", self.display_compact(128))
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for Value {
    type Err = LiteralError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Value::parse_literal(s)
    }
}

impl From<BigUint> for Value {
    fn from(v: BigUint) -> Self {
        Value(v)
    }
}

macro_rules! from_prim {
    ($($t:ty),*) => {$(
        impl From<$t> for Value {
            fn from(v: $t) -> Self {
                Value(BigUint::from(v))
            }
        }
    )*};
}
from_prim!(u8, u16, u32, u64, u128, usize);

impl Serialize for Value {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.to_str_radix(10))
    }
}

impl<'de> Deserialize<'de> for Value {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Value::parse_literal(&s).map_err(serde::de::Error::custom)
    }
}

pub fn add(a: &Value, b: &Value) -> Value {
    Value(&a.0 + &b.0)
}

/// Truncated subtraction, `max(a - b, 0)`.
pub fn monus(a: &Value, b: &Value) -> Value {
    if a.0 <= b.0 {
        Value::zero()
    } else {
        Value(&a.0 - &b.0)
    }
}

pub fn mul(a: &Value, b: &Value) -> Value {
    Value(mul_big(&a.0, &b.0))
}

pub fn int_div(a: &Value, b: &Value) -> Result<Value, ArithFault> {
    if b.is_zero() {
        return Err(ArithFault::DivisionByZero);
    }
    if let Some(e) = b.power_of_two_exponent() {
        return Ok(Value(&a.0 >> e));
    }
    Ok(Value(&a.0 / &b.0))
}

/// Division defined only when `b` divides `a`.
pub fn exact_div(a: &Value, b: &Value) -> Result<Value, ArithFault> {
    if b.is_zero() {
        return Err(ArithFault::ExactDivByZero);
    }
    let (q, r) = a.0.div_rem(&b.0);
    if r.is_zero() {
        Ok(Value(q))
    } else {
        Err(ArithFault::ExactDivRemainder)
    }
}

pub fn modulo(a: &Value, b: &Value) -> Result<Value, ArithFault> {
    if b.is_zero() {
        return Err(ArithFault::DivisionByZero);
    }
    Ok(Value(rem_big(&a.0, &b.0)))
}

/// `a * 2^b`.
pub fn lshift(a: &Value, b: &Value) -> Result<Value, ArithFault> {
    if a.is_zero() {
        return Ok(Value::zero());
    }
    let shift = b.to_u64().ok_or(ArithFault::ShiftTooLarge)?;
    Ok(Value(&a.0 << shift))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoolKind {
    And,
    Or,
    Xor,
}

pub fn bool_op(kind: BoolKind, a: &Value, b: &Value) -> Value {
    match kind {
        BoolKind::And => Value(&a.0 & &b.0),
        BoolKind::Or => Value(&a.0 | &b.0),
        BoolKind::Xor => Value(&a.0 ^ &b.0),
    }
}

fn pow2_exponent(v: &BigUint) -> Option<u64> {
    let tz = v.trailing_zeros()?;
    (v.bits() == tz + 1).then_some(tz)
}

fn mul_big(a: &BigUint, b: &BigUint) -> BigUint {
    if a.is_zero() || b.is_zero() {
        return BigUint::zero();
    }
    if let Some(e) = pow2_exponent(b) {
        return a << e;
    }
    if let Some(e) = pow2_exponent(a) {
        return b << e;
    }
    a * b
}

// Folding is only worth it when the dividend is not astronomically longer
// than the modulus; beyond this ratio the generic routine is used.
const FOLD_MAX_RATIO: u64 = 4096;

fn rem_big(a: &BigUint, m: &BigUint) -> BigUint {
    if a < m {
        return a.clone();
    }
    if let Some(e) = pow2_exponent(m) {
        return low_bits(a, e);
    }
    let e = m.bits();
    if e >= 8 && a.bits() <= e.saturating_mul(FOLD_MAX_RATIO) {
        // m = 2^e - c with 0 < c < 2^(e-1)
        let c = (BigUint::one() << e) - m;
        if 2 * c.bits() <= e {
            return fold_rem(a, m, &c, e);
        }
    }
    a % m
}

/// Reduces `a` modulo `m = 2^e - c` using `2^e ≡ c (mod m)`.
fn fold_rem(a: &BigUint, m: &BigUint, c: &BigUint, e: u64) -> BigUint {
    let mask = (BigUint::one() << e) - 1u32;
    let mut r = a.clone();
    while r.bits() > e {
        let hi = &r >> e;
        let lo = &r & &mask;
        r = lo + mul_big(&hi, c);
    }
    while &r >= m {
        r -= m;
    }
    r
}

fn low_bits(a: &BigUint, e: u64) -> BigUint {
    if a.bits() <= e {
        return a.clone();
    }
    let mask = (BigUint::one() << e) - 1u32;
    a & &mask
}
