//! Arbitrary precision rationals and their canonical `"p/q"` text form.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Exact rational scalar. Always stored reduced with a positive denominator.
pub type Rational = BigRational;

/// Builds `n / d` from machine integers. Panics if `d == 0`.
pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Renders the canonical text form: `"p"` for integers, `"p/q"` otherwise.
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RationalParseError {
    #[error("malformed rational {0:?}")]
    Malformed(String),
    #[error("zero denominator in {0:?}")]
    ZeroDenominator(String),
    #[error("rational {0:?} is not in lowest terms with positive denominator")]
    NotCanonical(String),
}

/// Parses the canonical text form. Non-reduced fractions (`"2/4"`), explicit unit
/// denominators (`"3/1"`), signs on denominators and leading `+` are rejected.
pub fn parse_rational(s: &str) -> Result<Rational, RationalParseError> {
    let malformed = || RationalParseError::Malformed(s.to_string());
    let parse_int = |t: &str, allow_sign: bool| -> Option<BigInt> {
        let digits = if allow_sign { t.strip_prefix('-').unwrap_or(t) } else { t };
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        if digits.len() > 1 && digits.starts_with('0') {
            return None;
        }
        if t.starts_with('-') && digits == "0" {
            return None;
        }
        t.parse().ok()
    };
    match s.split_once('/') {
        None => Ok(Rational::from_integer(parse_int(s, true).ok_or_else(malformed)?)),
        Some((n, d)) => {
            let n = parse_int(n, true).ok_or_else(malformed)?;
            let d = parse_int(d, false).ok_or_else(malformed)?;
            if d.is_zero() {
                return Err(RationalParseError::ZeroDenominator(s.to_string()));
            }
            if d.is_one() || !n.gcd(&d).is_one() {
                return Err(RationalParseError::NotCanonical(s.to_string()));
            }
            Ok(Rational::new_raw(n, d))
        }
    }
}

/// True when `r` is an integer.
pub fn is_integer(r: &Rational) -> bool {
    r.denom().is_one()
}

/// Least common multiple of the denominators of `values` (1 for an empty slice).
pub fn lcm_denominators<'a>(values: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    values
        .into_iter()
        .fold(BigInt::one(), |acc, r| acc.lcm(r.denom()))
}

pub fn abs(r: &Rational) -> Rational {
    r.abs()
}

pub mod serde_rational {
    //! `#[serde(with = ...)]` adapter for canonical rational strings.
    use super::*;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let text = String::deserialize(d)?;
        parse_rational(&text).map_err(D::Error::custom)
    }
}
