//! Exact rational helpers: parsing, printing, decimal rendering and dyadic rounding.

use std::fmt;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Arbitrary-precision rational, always normalized (lowest terms, positive denominator).
pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseRationalError {
    pub input: String,
    pub reason: &'static str,
}

impl fmt::Display for ParseRationalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "malformed rational {:?}: {}", self.input, self.reason)
    }
}

impl std::error::Error for ParseRationalError {}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

pub fn zero() -> Rational {
    Rational::zero()
}

pub fn one() -> Rational {
    Rational::one()
}

fn parse_int(s: &str, input: &str) -> Result<BigInt, ParseRationalError> {
    let digits = s.strip_prefix('-').unwrap_or(s);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(ParseRationalError {
            input: input.to_string(),
            reason: "expected an integer or p/q",
        });
    }
    s.parse::<BigInt>().map_err(|_| ParseRationalError {
        input: input.to_string(),
        reason: "expected an integer or p/q",
    })
}

/// Parses `"p/q"` or a bare integer `"p"`. No whitespace, no decimals.
pub fn parse_rational(s: &str) -> Result<Rational, ParseRationalError> {
    match s.split_once('/') {
        None => Ok(Rational::from_integer(parse_int(s, s)?)),
        Some((p, q)) => {
            let p = parse_int(p, s)?;
            if q.starts_with('-') {
                return Err(ParseRationalError {
                    input: s.to_string(),
                    reason: "denominator must be positive",
                });
            }
            let q = parse_int(q, s)?;
            if q.is_zero() {
                return Err(ParseRationalError {
                    input: s.to_string(),
                    reason: "zero denominator",
                });
            }
            Ok(Rational::new(p, q))
        }
    }
}

/// Canonical text form: `"p/q"`, or `"p"` when the denominator is 1.
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Decimal rendering with `digits` fractional digits, rounded half away from zero.
pub fn to_decimal(r: &Rational, digits: usize) -> String {
    let scale = BigInt::from(10u32).pow(digits as u32);
    let scaled = r.abs() * Rational::from_integer(scale.clone());
    let (q, rem) = scaled.numer().div_rem(scaled.denom());
    let twice = rem * 2u32;
    let q = if &twice >= scaled.denom() { q + 1u32 } else { q };
    let (ip, fp) = q.div_rem(&scale);
    let neg = r.is_negative() && !(ip.is_zero() && fp.is_zero());
    let sign = if neg { "-" } else { "" };
    if digits == 0 {
        format!("{sign}{ip}")
    } else {
        format!("{sign}{ip}.{:0>width$}", fp.to_string(), width = digits)
    }
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

fn dyadic(r: &Rational, bits: u32, up: bool) -> Rational {
    let scale = BigInt::one() << bits;
    let scaled = r * Rational::from_integer(scale.clone());
    let n = if up { scaled.ceil() } else { scaled.floor() };
    Rational::new(n.to_integer(), scale)
}

/// Largest multiple of `2^-bits` that is `<= r`.
pub fn round_down_dyadic(r: &Rational, bits: u32) -> Rational {
    dyadic(r, bits, false)
}

/// Smallest multiple of `2^-bits` that is `>= r`.
pub fn round_up_dyadic(r: &Rational, bits: u32) -> Rational {
    dyadic(r, bits, true)
}

/// Number of bits in the denominator; used by callers that cap exact growth.
pub fn denominator_bits(r: &Rational) -> u64 {
    r.denom().bits()
}

pub fn is_positive(r: &Rational) -> bool {
    r.numer().sign() == Sign::Plus
}
