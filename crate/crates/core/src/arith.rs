//! Exact rationals extended with a single positive infinity.
//!
//! Every cost and weight in the crate is an [`ExtRat`]. Finite values are
//! arbitrary-precision reduced fractions; `PosInf` sits above all of them.
//! Multiplication follows the convention `0 · ∞ = 0` and `c · ∞ = ∞` for
//! `c > 0`. There is no negative infinity, so `∞ - ∞` and `(-1) · ∞` are
//! reported as [`Error::UndefinedArithmetic`].

use std::cmp::Ordering;
use std::fmt;
use std::ops::Add;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Finite exact rational. `BigRational` keeps itself in lowest terms with a
/// positive denominator.
pub type Rat = BigRational;

/// Builds `num/den` as a reduced rational. Panics on a zero denominator.
pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Textual form of a finite rational: `p` for integers, `p/q` otherwise.
pub fn fmt_rat(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses `p` or `p/q` with an optional leading `-`. Digits only; the
/// denominator must be positive. Non-reduced input is reduced.
pub fn parse_rat(text: &str) -> Result<Rat> {
    let bad = || Error::parse(0, format!("invalid rational `{text}`"));
    let (neg, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    let (num, den) = match body.split_once('/') {
        Some((n, d)) => (n, d),
        None => (body, "1"),
    };
    if !digits(num) || !digits(den) {
        return Err(bad());
    }
    let num: BigInt = num.parse().map_err(|_| bad())?;
    let den: BigInt = den.parse().map_err(|_| bad())?;
    if den.is_zero() {
        return Err(bad());
    }
    let r = Rat::new(num, den);
    Ok(if neg { -r } else { r })
}

/// Least common multiple of the denominators of `values` (1 for none).
pub fn common_denominator<'a>(values: impl IntoIterator<Item = &'a Rat>) -> BigInt {
    use num_integer::Integer;
    values
        .into_iter()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ExtRat {
    Finite(Rat),
    PosInf,
}

impl ExtRat {
    pub fn zero() -> Self {
        ExtRat::Finite(Rat::zero())
    }

    pub fn one() -> Self {
        ExtRat::Finite(Rat::one())
    }

    pub fn from_int(n: i64) -> Self {
        ExtRat::Finite(int(n))
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtRat::Finite(_))
    }

    pub fn is_inf(&self) -> bool {
        matches!(self, ExtRat::PosInf)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ExtRat::Finite(r) if r.is_zero())
    }

    pub fn is_positive(&self) -> bool {
        match self {
            ExtRat::Finite(r) => r.is_positive(),
            ExtRat::PosInf => true,
        }
    }

    pub fn is_negative(&self) -> bool {
        matches!(self, ExtRat::Finite(r) if r.is_negative())
    }

    pub fn finite(&self) -> Option<&Rat> {
        match self {
            ExtRat::Finite(r) => Some(r),
            ExtRat::PosInf => None,
        }
    }

    pub fn checked_add(&self, other: &ExtRat) -> Result<ExtRat> {
        Ok(self.clone() + other.clone())
    }

    pub fn checked_neg(&self) -> Result<ExtRat> {
        match self {
            ExtRat::Finite(r) => Ok(ExtRat::Finite(-r)),
            ExtRat::PosInf => Err(Error::UndefinedArithmetic("negation of inf".into())),
        }
    }

    pub fn checked_sub(&self, other: &ExtRat) -> Result<ExtRat> {
        match (self, other) {
            (ExtRat::Finite(a), ExtRat::Finite(b)) => Ok(ExtRat::Finite(a - b)),
            (ExtRat::PosInf, ExtRat::Finite(_)) => Ok(ExtRat::PosInf),
            (_, ExtRat::PosInf) => Err(Error::UndefinedArithmetic(format!(
                "{self} - inf"
            ))),
        }
    }

    pub fn checked_mul(&self, other: &ExtRat) -> Result<ExtRat> {
        match (self, other) {
            (ExtRat::Finite(a), ExtRat::Finite(b)) => Ok(ExtRat::Finite(a * b)),
            (ExtRat::PosInf, ExtRat::PosInf) => Ok(ExtRat::PosInf),
            (ExtRat::Finite(c), ExtRat::PosInf) | (ExtRat::PosInf, ExtRat::Finite(c)) => {
                if c.is_zero() {
                    Ok(ExtRat::zero())
                } else if c.is_positive() {
                    Ok(ExtRat::PosInf)
                } else {
                    Err(Error::UndefinedArithmetic(format!("{} * inf", fmt_rat(c))))
                }
            }
        }
    }

    pub fn checked_div(&self, other: &ExtRat) -> Result<ExtRat> {
        let d = match other {
            ExtRat::Finite(d) if !d.is_zero() => d,
            _ => {
                return Err(Error::UndefinedArithmetic(format!(
                    "division of {self} by {other}"
                )))
            }
        };
        match self {
            ExtRat::Finite(a) => Ok(ExtRat::Finite(a / d)),
            ExtRat::PosInf if d.is_positive() => Ok(ExtRat::PosInf),
            ExtRat::PosInf => Err(Error::UndefinedArithmetic(format!(
                "inf / {}",
                fmt_rat(d)
            ))),
        }
    }

    /// Multiplies by a non-negative finite weight; total under `0 · ∞ = 0`.
    pub fn scale(&self, weight: &Rat) -> ExtRat {
        debug_assert!(!weight.is_negative());
        match self {
            ExtRat::Finite(r) => ExtRat::Finite(r * weight),
            ExtRat::PosInf if weight.is_zero() => ExtRat::zero(),
            ExtRat::PosInf => ExtRat::PosInf,
        }
    }
}

impl Add for ExtRat {
    type Output = ExtRat;

    fn add(self, rhs: ExtRat) -> ExtRat {
        match (self, rhs) {
            (ExtRat::Finite(a), ExtRat::Finite(b)) => ExtRat::Finite(a + b),
            _ => ExtRat::PosInf,
        }
    }
}

impl std::iter::Sum for ExtRat {
    fn sum<I: Iterator<Item = ExtRat>>(iter: I) -> ExtRat {
        iter.fold(ExtRat::zero(), |acc, x| acc + x)
    }
}

impl From<Rat> for ExtRat {
    fn from(r: Rat) -> Self {
        ExtRat::Finite(r)
    }
}

impl PartialOrd for ExtRat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtRat {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ExtRat::Finite(a), ExtRat::Finite(b)) => a.cmp(b),
            (ExtRat::Finite(_), ExtRat::PosInf) => Ordering::Less,
            (ExtRat::PosInf, ExtRat::Finite(_)) => Ordering::Greater,
            (ExtRat::PosInf, ExtRat::PosInf) => Ordering::Equal,
        }
    }
}

impl fmt::Display for ExtRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtRat::Finite(r) => f.write_str(&fmt_rat(r)),
            ExtRat::PosInf => f.write_str("inf"),
        }
    }
}

impl FromStr for ExtRat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "inf" {
            Ok(ExtRat::PosInf)
        } else {
            parse_rat(s).map(ExtRat::Finite)
        }
    }
}

impl Serialize for ExtRat {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ExtRat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
