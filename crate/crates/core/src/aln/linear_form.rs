//! Formal expressions `a0 + a1*w1 + ... + ak*wk` over symbols `w_i`, where
//! each symbol is taken to be larger than any fixed combination of the
//! lower-indexed ones. Under that reading the numeric order is the
//! lexicographic order on coefficients from the highest index down.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigUint;
use thiserror::Error;

use crate::value::{self, Value};

/// Index 0 is the constant term; index `i >= 1` multiplies `w_i`.
/// Zero coefficients are never stored.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct LinearForm {
    coeffs: BTreeMap<usize, Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no witness supplied for w{0}")]
pub struct MissingWitness(pub usize);

impl LinearForm {
    pub fn zero() -> Self {
        LinearForm::default()
    }

    pub fn constant(a: impl Into<Value>) -> Self {
        LinearForm::term(0, a)
    }

    pub fn term(index: usize, a: impl Into<Value>) -> Self {
        LinearForm::from_coeffs([(index, a.into())])
    }

    pub fn from_coeffs(coeffs: impl IntoIterator<Item = (usize, Value)>) -> Self {
        let mut form = LinearForm::zero();
        for (i, a) in coeffs {
            form.add_term(i, &a);
        }
        form
    }

    pub fn coeff(&self, index: usize) -> Value {
        self.coeffs.get(&index).cloned().unwrap_or_default()
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (usize, &Value)> {
        self.coeffs.iter().map(|(i, a)| (*i, a))
    }

    pub fn max_index(&self) -> Option<usize> {
        self.coeffs.keys().next_back().copied()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    fn add_term(&mut self, index: usize, a: &Value) {
        if a.is_zero() {
            return;
        }
        let slot = self.coeffs.entry(index).or_default();
        *slot = value::add(slot, a);
    }

    /// Numeric value with `witnesses[i - 1]` substituted for `w_i`.
    pub fn instantiate(&self, witnesses: &[Value]) -> Result<Value, MissingWitness> {
        let mut total = BigUint::default();
        // Largest term first so the running sum is allocated once.
        for (&i, a) in self.coeffs.iter().rev() {
            let term = if i == 0 {
                a.clone()
            } else {
                let w = witnesses.get(i - 1).ok_or(MissingWitness(i))?;
                value::mul(a, w)
            };
            if total.bits() == 0 {
                total = term.into_biguint();
            } else {
                total += term.as_biguint();
            }
        }
        Ok(Value::from(total))
    }
}

/// Coefficient-wise sum.
pub fn lf_add(p: &LinearForm, q: &LinearForm) -> LinearForm {
    let mut out = p.clone();
    for (&i, a) in &q.coeffs {
        out.add_term(i, a);
    }
    out
}

/// Lexicographic comparison from the highest index downward.
pub fn lf_compare(p: &LinearForm, q: &LinearForm) -> Ordering {
    let mut pi = p.coeffs.iter().rev();
    let mut qi = q.coeffs.iter().rev();
    loop {
        match (pi.next(), qi.next()) {
            (None, None) => return Ordering::Equal,
            (Some(_), None) => return Ordering::Greater,
            (None, Some(_)) => return Ordering::Less,
            (Some((i, a)), Some((j, b))) => {
                let ord = i.cmp(j).then_with(|| a.cmp(b));
                if ord != Ordering::Equal {
                    return ord;
                }
            }
        }
    }
}

pub fn lf_instantiate(p: &LinearForm, witnesses: &[Value]) -> Result<Value, MissingWitness> {
    p.instantiate(witnesses)
}

impl PartialOrd for LinearForm {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for LinearForm {
    fn cmp(&self, other: &Self) -> Ordering {
        lf_compare(self, other)
    }
}

impl fmt::Display for LinearForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return f.write_str("0");
        }
        for (n, (&i, a)) in self.coeffs.iter().rev().enumerate() {
            if n > 0 {
                f.write_str(" + ")?;
            }
            match (i, a.to_u64()) {
                (0, _) => write!(f, "{a}")?,
                (_, Some(1)) => write!(f, "w{i}")?,
                _ => write!(f, "{a}w{i}")?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lf(terms: &[(usize, u64)]) -> LinearForm {
        LinearForm::from_coeffs(terms.iter().map(|&(i, a)| (i, Value::from(a))))
    }

    #[test]
    fn addition() {
        assert_eq!(lf_add(&lf(&[(1, 1), (0, 2)]), &lf(&[(1, 3), (0, 5)])), lf(&[(1, 4), (0, 7)]));
        let p = lf(&[(3, 2), (0, 1)]);
        assert_eq!(lf_add(&p, &LinearForm::zero()), p);
        let s = lf_add(&lf(&[(2, 1)]), &lf(&[(1, 1)]));
        assert_eq!(s.to_string(), "w2 + w1");
    }

    #[test]
    fn zero_coefficients_are_not_stored() {
        let p = lf(&[(1, 0), (2, 0), (0, 0)]);
        assert!(p.is_zero());
        assert_eq!(p, LinearForm::zero());
        assert_eq!(p.max_index(), None);
    }

    #[test]
    fn comparison() {
        let p = lf(&[(2, 1), (1, 5)]);
        assert_eq!(lf_compare(&p, &p.clone()), Ordering::Equal);
        assert_eq!(lf_compare(&lf(&[(2, 1)]), &lf(&[(1, 1000), (0, 999)])), Ordering::Greater);
        assert_eq!(lf_compare(&lf(&[(1, 2), (0, 3)]), &lf(&[(1, 2), (0, 7)])), Ordering::Less);
        assert_eq!(lf_compare(&LinearForm::zero(), &lf(&[(0, 1)])), Ordering::Less);
    }

    #[test]
    fn high_symbol_beats_big_low_combination_numerically() {
        let w = [Value::pow2(64), Value::pow2(4096)];
        let lhs = lf(&[(2, 1)]).instantiate(&w).unwrap();
        let rhs = lf(&[(1, 1000), (0, 999)]).instantiate(&w).unwrap();
        assert!(lhs > rhs);
    }

    #[test]
    fn instantiation() {
        assert_eq!(lf(&[(1, 2), (0, 3)]).instantiate(&[Value::from(10u64)]), Ok(Value::from(23u64)));
        assert_eq!(lf(&[(0, 7)]).instantiate(&[]), Ok(Value::from(7u64)));
        let w = [Value::pow2(64), Value::pow2(256)];
        let expected = value::add(
            &value::add(&value::mul(&Value::from(3u64), &Value::pow2(256)), &Value::pow2(64)),
            &Value::from(5u64),
        );
        assert_eq!(lf(&[(2, 3), (1, 1), (0, 5)]).instantiate(&w), Ok(expected));
        assert_eq!(lf(&[(3, 1)]).instantiate(&w), Err(MissingWitness(3)));
    }

    #[test]
    fn display() {
        assert_eq!(lf(&[(2, 3), (1, 1), (0, 5)]).to_string(), "3w2 + w1 + 5");
        assert_eq!(LinearForm::zero().to_string(), "0");
    }
}
