//! Nonnegative integers stored as the sorted positions of their set bits.
//!
//! Model counts of DQBF routinely exceed anything a machine word (or even a
//! dense bignum) can hold comfortably: `2^(2^64)` is a perfectly ordinary
//! answer. A [`BigCount`] stores only the exponents of the one bits, and the
//! exponents themselves are arbitrary precision.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

/// Largest exponent rendered in decimal by default.
pub const DEFAULT_DECIMAL_BOUND: u64 = 4096;

/// Upper bound on the number of set bits a single subtraction may introduce.
const MAX_BORROW_RUN: u64 = 1 << 32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BigCountError {
    #[error("subtraction underflow: subtrahend exceeds minuend")]
    Underflow,
    #[error("decimal rendering requested for a number with highest exponent {0} (bound {1})")]
    DecimalTooLarge(BigUint, u64),
    #[error("result has more than {MAX_BORROW_RUN} set bits")]
    TooDense,
    #[error("invalid binary digit {0:?}")]
    BadDigit(char),
}

/// Output style for [`BigCount::format`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountFormat {
    /// Plain decimal, refused above the decimal bound.
    Decimal,
    /// `2^a + 2^b + ...`, highest power first.
    Sparse,
    /// `≈2^e (k set bits)`.
    Log2Summary,
}

/// A nonnegative integer in sparse binary form.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BigCount {
    exps: Vec<BigUint>,
}

impl BigCount {
    pub fn zero() -> Self {
        BigCount { exps: Vec::new() }
    }

    pub fn one() -> Self {
        Self::from_pow2(BigUint::zero())
    }

    pub fn from_pow2(e: impl Into<BigUint>) -> Self {
        BigCount { exps: vec![e.into()] }
    }

    pub fn from_u64(mut v: u64) -> Self {
        let mut exps = Vec::new();
        let mut pos = 0u64;
        while v != 0 {
            if v & 1 == 1 {
                exps.push(BigUint::from(pos));
            }
            v >>= 1;
            pos += 1;
        }
        BigCount { exps }
    }

    pub fn from_biguint(v: &BigUint) -> Self {
        let exps = (0..v.bits())
            .filter(|&i| v.bit(i))
            .map(BigUint::from)
            .collect();
        BigCount { exps }
    }

    /// Parses a binary numeral written most significant bit first.
    pub fn from_bits(bits: &str) -> Result<Self, BigCountError> {
        let digits: Vec<char> = bits.chars().filter(|c| *c != '_').collect();
        let mut exps = Vec::new();
        for (pos, c) in digits.iter().rev().enumerate() {
            match c {
                '1' => exps.push(BigUint::from(pos)),
                '0' => {}
                other => return Err(BigCountError::BadDigit(*other)),
            }
        }
        Ok(BigCount { exps })
    }

    /// Builds a count from an arbitrary multiset of powers of two.
    pub fn from_exponents<I: IntoIterator<Item = BigUint>>(it: I) -> Self {
        let mut bag: BTreeMap<BigUint, u64> = BTreeMap::new();
        for e in it {
            *bag.entry(e).or_insert(0) += 1;
        }
        normalize(bag)
    }

    pub fn exponents(&self) -> &[BigUint] {
        &self.exps
    }

    pub fn is_zero(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.exps.len() == 1 && self.exps[0].is_zero()
    }

    pub fn is_pow2(&self) -> bool {
        self.exps.len() == 1
    }

    /// Number of one bits.
    pub fn popcount(&self) -> usize {
        self.exps.len()
    }

    /// Exponent of the highest set bit, `None` for zero.
    pub fn max_exponent(&self) -> Option<&BigUint> {
        self.exps.last()
    }

    pub fn add(&self, other: &BigCount) -> BigCount {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        Self::from_exponents(self.exps.iter().chain(other.exps.iter()).cloned())
    }

    /// `self - other`; fails when `other > self`.
    pub fn sub(&self, other: &BigCount) -> Result<BigCount, BigCountError> {
        if self.cmp(other) == Ordering::Less {
            return Err(BigCountError::Underflow);
        }
        let mut bits: BTreeSet<BigUint> = self.exps.iter().cloned().collect();
        for e in &other.exps {
            // smallest set bit at or above e; present because self >= other
            let f = bits
                .range(e.clone()..)
                .next()
                .cloned()
                .ok_or(BigCountError::Underflow)?;
            bits.remove(&f);
            let run = (&f - e).to_u64().filter(|r| *r <= MAX_BORROW_RUN);
            let run = run.ok_or(BigCountError::TooDense)?;
            let mut j = e.clone();
            for _ in 0..run {
                bits.insert(j.clone());
                j += 1u32;
            }
        }
        Ok(BigCount {
            exps: bits.into_iter().collect(),
        })
    }

    pub fn mul(&self, other: &BigCount) -> BigCount {
        if self.is_zero() || other.is_zero() {
            return BigCount::zero();
        }
        if self.is_pow2() {
            return other.shl(&self.exps[0]);
        }
        if other.is_pow2() {
            return self.shl(&other.exps[0]);
        }
        let mut bag: BTreeMap<BigUint, u64> = BTreeMap::new();
        for a in &self.exps {
            for b in &other.exps {
                *bag.entry(a + b).or_insert(0) += 1;
            }
        }
        normalize(bag)
    }

    /// Multiplication by `2^e`.
    pub fn shl(&self, e: &BigUint) -> BigCount {
        BigCount {
            exps: self.exps.iter().map(|x| x + e).collect(),
        }
    }

    pub fn pow(&self, mut e: u64) -> BigCount {
        let mut base = self.clone();
        let mut acc = BigCount::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Dense value, if the highest exponent does not exceed `bound`.
    pub fn to_biguint_bounded(&self, bound: u64) -> Option<BigUint> {
        let mut v = BigUint::zero();
        for e in &self.exps {
            let e = e.to_u64().filter(|e| *e <= bound)?;
            v.set_bit(e, true);
        }
        Some(v)
    }

    pub fn to_u64(&self) -> Option<u64> {
        self.to_biguint_bounded(63).and_then(|v| v.to_u64())
    }

    pub fn format(&self, mode: CountFormat) -> Result<String, BigCountError> {
        self.format_with_bound(mode, DEFAULT_DECIMAL_BOUND)
    }

    pub fn format_with_bound(&self, mode: CountFormat, bound: u64) -> Result<String, BigCountError> {
        if self.is_zero() {
            return Ok("0".to_string());
        }
        match mode {
            CountFormat::Decimal => match self.to_biguint_bounded(bound) {
                Some(v) => Ok(v.to_str_radix(10)),
                None => Err(BigCountError::DecimalTooLarge(
                    self.max_exponent().cloned().unwrap_or_default(),
                    bound,
                )),
            },
            CountFormat::Sparse => Ok(self
                .exps
                .iter()
                .rev()
                .map(|e| format!("2^{e}"))
                .collect::<Vec<_>>()
                .join(" + ")),
            CountFormat::Log2Summary => Ok(format!(
                "≈2^{} ({} set bits)",
                self.exps.last().expect("nonzero"),
                self.exps.len()
            )),
        }
    }

    /// Decimal when it fits the default bound, sparse otherwise.
    pub fn display_auto(&self) -> String {
        self.format(CountFormat::Decimal)
            .or_else(|_| self.format(CountFormat::Sparse))
            .expect("sparse rendering is total")
    }
}

fn normalize(mut bag: BTreeMap<BigUint, u64>) -> BigCount {
    let mut exps = Vec::new();
    while let Some((e, m)) = bag.pop_first() {
        if m & 1 == 1 {
            exps.push(e.clone());
        }
        let carry = m >> 1;
        if carry > 0 {
            *bag.entry(e + BigUint::one()).or_insert(0) += carry;
        }
    }
    BigCount { exps }
}

impl Ord for BigCount {
    fn cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.exps.iter().rev().zip(other.exps.iter().rev()) {
            match a.cmp(b) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        self.exps.len().cmp(&other.exps.len())
    }
}

impl PartialOrd for BigCount {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for BigCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "⟨")?;
        for (i, e) in self.exps.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, "⟩")
    }
}

impl fmt::Display for BigCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display_auto())
    }
}

impl From<u64> for BigCount {
    fn from(v: u64) -> Self {
        BigCount::from_u64(v)
    }
}

impl std::iter::Product for BigCount {
    fn product<I: Iterator<Item = BigCount>>(iter: I) -> Self {
        iter.fold(BigCount::one(), |a, b| a.mul(&b))
    }
}

impl std::iter::Sum for BigCount {
    fn sum<I: Iterator<Item = BigCount>>(iter: I) -> Self {
        iter.fold(BigCount::zero(), |a, b| a.add(&b))
    }
}

impl serde::Serialize for BigCount {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let decimal = self.format(CountFormat::Decimal).ok();
        let mut m = s.serialize_map(Some(if decimal.is_some() { 2 } else { 1 }))?;
        let sparse: Vec<String> = self.exps.iter().map(|e| e.to_string()).collect();
        m.serialize_entry("sparse", &sparse)?;
        if let Some(d) = decimal {
            m.serialize_entry("decimal", &d)?;
        }
        m.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exps(c: &BigCount) -> Vec<u64> {
        c.exponents().iter().map(|e| e.to_u64().unwrap()).collect()
    }

    #[test]
    fn binary_literal_round_trip() {
        let c = BigCount::from_bits("10100101").unwrap();
        assert_eq!(exps(&c), vec![0, 2, 5, 7]);
        assert_eq!(c.format(CountFormat::Decimal).unwrap(), "165");
        assert_eq!(BigCount::from_bits("0").unwrap(), BigCount::zero());
        assert!(BigCount::from_bits("102").is_err());
    }

    #[test]
    fn units_and_shifts() {
        assert_eq!(exps(&BigCount::from_pow2(0u32)), vec![0]);
        assert_eq!(exps(&BigCount::one().shl(&BigUint::from(64u32))), vec![64]);
        assert_eq!(exps(&BigCount::one().add(&BigCount::one())), vec![1]);
    }

    #[test]
    fn small_products() {
        let three = BigCount::from_u64(3);
        assert_eq!(exps(&three.mul(&three)), vec![0, 3]);
        assert_eq!(BigCount::from_u64(7).pow(2), BigCount::from_u64(49));
    }

    #[test]
    fn subtraction() {
        let a = BigCount::from_u64(1 << 20);
        let b = BigCount::from_u64(1);
        assert_eq!(a.sub(&b).unwrap(), BigCount::from_u64((1 << 20) - 1));
        assert_eq!(b.sub(&a), Err(BigCountError::Underflow));
        assert_eq!(a.sub(&a).unwrap(), BigCount::zero());
    }

    #[test]
    fn formatting() {
        let big = BigCount::from_pow2(9220u32);
        assert_eq!(big.format(CountFormat::Sparse).unwrap(), "2^9220");
        assert!(big.format(CountFormat::Decimal).is_err());
        assert_eq!(BigCount::zero().format(CountFormat::Sparse).unwrap(), "0");
        assert_eq!(BigCount::zero().format(CountFormat::Log2Summary).unwrap(), "0");
        assert_eq!(
            BigCount::from_u64(165).format(CountFormat::Log2Summary).unwrap(),
            "≈2^7 (4 set bits)"
        );
        assert_eq!(
            BigCount::from_u64(5).format(CountFormat::Sparse).unwrap(),
            "2^2 + 2^0"
        );
    }

    #[test]
    fn huge_exponents() {
        let e = BigUint::from(1u32) << 70u32;
        let a = BigCount::from_pow2(e.clone());
        let doubled = a.add(&a);
        assert_eq!(doubled.exponents(), &[e.clone() + 1u32]);
        assert!(a.to_biguint_bounded(4096).is_none());
    }
}
