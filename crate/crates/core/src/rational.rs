//! Exact rational helpers shared by the exact layer.
//!
//! Rationals cross process boundaries as `"num/den"` strings (or bare
//! integers), never as floats.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn int(n: i64) -> Rational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `"a"`, `"-a"`, `"a/b"` or a finite decimal such as `"0.75"`.
pub fn parse_rational(input: &str) -> Result<Rational> {
    parse_at(input, 1)
}

/// Like [`parse_rational`], reporting errors relative to `column`.
pub(crate) fn parse_at(input: &str, column: usize) -> Result<Rational> {
    let err = |offset: usize, reason: &str| Error::ParseRational {
        input: input.to_string(),
        column: column + offset,
        reason: reason.to_string(),
    };
    let trimmed = input.trim();
    let lead = input.len() - input.trim_start().len();
    if trimmed.is_empty() {
        return Err(err(0, "empty"));
    }
    if let Some((num, den)) = trimmed.split_once('/') {
        let n = parse_integer(num).ok_or_else(|| err(lead, "numerator is not an integer"))?;
        let d = parse_integer(den)
            .ok_or_else(|| err(lead + num.len() + 1, "denominator is not an integer"))?;
        if d.is_zero() {
            return Err(err(lead + num.len() + 1, "zero denominator"));
        }
        return Ok(BigRational::new(n, d));
    }
    if let Some((whole, frac)) = trimmed.split_once('.') {
        let neg = whole.starts_with('-');
        let digits = whole.trim_start_matches(['-', '+']);
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err(lead + whole.len() + 1, "bad fractional digits"));
        }
        let w = if digits.is_empty() {
            BigInt::zero()
        } else {
            parse_integer(digits).ok_or_else(|| err(lead, "bad integer part"))?
        };
        let f: BigInt = frac.parse().map_err(|_| err(lead, "bad fractional digits"))?;
        let scale = num_traits::pow(BigInt::from(10), frac.len());
        let mag = BigRational::new(w * &scale + f, scale);
        return Ok(if neg { -mag } else { mag });
    }
    parse_integer(trimmed)
        .map(BigRational::from_integer)
        .ok_or_else(|| err(lead, "not a rational number"))
}

fn parse_integer(s: &str) -> Option<BigInt> {
    let s = s.trim();
    let body = s.strip_prefix(['-', '+']).unwrap_or(s);
    if body.is_empty() || !body.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

/// Parses a comma separated list, reporting the column of a bad entry.
pub fn parse_rational_list(input: &str) -> Result<Vec<Rational>> {
    let mut out = Vec::new();
    let mut column = 1;
    for piece in input.split(',') {
        out.push(parse_at(piece, column)?);
        column += piece.len() + 1;
    }
    Ok(out)
}

pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // ToPrimitive gives up on huge numerators; fall back to a scaled quotient.
        let shift = r.numer().bits().max(r.denom().bits()).saturating_sub(1000);
        let n = (r.numer() >> shift).to_f64().unwrap_or(f64::NAN);
        let d = (r.denom() >> shift).to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Exact f64 to rational conversion (every finite double is a dyadic rational).
pub fn from_f64(x: f64) -> Option<Rational> {
    BigRational::from_float(x)
}

/// Exact square root when `r` is the square of a rational.
pub fn sqrt_exact(r: &Rational) -> Option<Rational> {
    if r.is_negative() {
        return None;
    }
    let n = r.numer().sqrt();
    let d = r.denom().sqrt();
    if &(&n * &n) == r.numer() && &(&d * &d) == r.denom() {
        Some(BigRational::new(n, d))
    } else {
        None
    }
}

/// Multinomial count of distinct orderings of a multiset with the given multiplicities.
pub fn distinct_permutations(multiplicities: &[usize]) -> u64 {
    let total: usize = multiplicities.iter().sum();
    let mut out = factorial(total);
    for &m in multiplicities {
        out /= factorial(m);
    }
    out
}

pub fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

pub mod serde_str {
    //! `serde(with = ...)` adapter storing a rational as a `"num/den"` string.
    use super::{format_rational, parse_rational, Rational};
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let raw = String::deserialize(d)?;
        parse_rational(&raw).map_err(D::Error::custom)
    }
}

pub mod serde_str_vec {
    use super::{format_rational, parse_rational, Rational};
    use serde::{de::Error, ser::SerializeSeq, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for r in v {
            seq.serialize_element(&format_rational(r))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        let raw = Vec::<String>::deserialize(d)?;
        raw.iter()
            .map(|s| parse_rational(s).map_err(D::Error::custom))
            .collect()
    }
}
