//! Scalar abstraction shared by every module.
//!
//! Distributions, order checks and decompositions are written once against
//! [`Scalar`]. The exact instantiation ([`crate::Rational`]) is what the
//! library uses for all verification; `f64` is used for samples driven by
//! continuous jump laws.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{FromPrimitive, Num, One, Signed, ToPrimitive, Zero};

use crate::error::Error;

pub trait Scalar:
    Clone + Debug + PartialOrd + Num + Signed + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// True when arithmetic is exact (no rounding).
    const EXACT: bool;

    /// Best-effort conversion to `f64`; NaN if the value does not fit.
    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// The value as a nonnegative integer count, if it is one.
    fn as_count(&self) -> Option<u64>;

    /// Parse from text: integers, `p/q`, or decimals such as `-0.25`.
    fn parse_text(s: &str) -> Result<Self, Error>;

    /// Canonical text used in JSON documents.
    fn to_text(&self) -> String;

    /// Text used in sample CSV files.
    fn to_csv_text(&self) -> String {
        self.to_text()
    }

    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("u64 counts are representable")
    }

    fn max_of(a: &Self, b: &Self) -> Self {
        if a >= b {
            a.clone()
        } else {
            b.clone()
        }
    }
}

fn parse_error(s: &str, why: &str) -> Error {
    Error::Parse(format!("{s:?}: {why}"))
}

/// Parse a decimal, integer or `p/q` string exactly.
pub fn parse_rational(text: &str) -> Result<BigRational, Error> {
    let s = text.trim();
    if s.is_empty() {
        return Err(parse_error(text, "empty number"));
    }
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p
            .trim()
            .parse()
            .map_err(|_| parse_error(text, "bad numerator"))?;
        let q: BigInt = q
            .trim()
            .parse()
            .map_err(|_| parse_error(text, "bad denominator"))?;
        if q.is_zero() {
            return Err(parse_error(text, "zero denominator"));
        }
        return Ok(BigRational::new(p, q));
    }

    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => {
            let e: i64 = s[i + 1..]
                .parse()
                .map_err(|_| parse_error(text, "bad exponent"))?;
            (&s[..i], e)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.as_bytes().first() {
        Some(b'-') => (true, &mantissa[1..]),
        Some(b'+') => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(parse_error(text, "no digits"));
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(parse_error(text, "not a number"));
    }
    let all_digits = format!("{int_part}{frac_part}");
    let numer: BigInt = all_digits.parse().unwrap_or_else(|_| BigInt::zero());
    let scale = exponent - frac_part.len() as i64;
    let ten = BigInt::from(10u32);
    let value = if scale >= 0 {
        BigRational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    Ok(if negative { -value } else { value })
}

/// `p` or `p/q` in lowest terms.
pub fn format_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Exact decimal expansion when the denominator is a power of two,
/// otherwise `p/q`.
pub fn format_rational_csv(r: &BigRational) -> String {
    let denom = r.denom();
    let twos = denom.trailing_zeros().unwrap_or(0);
    if denom.is_one() || (denom >> twos as usize).is_one() {
        if denom.is_one() {
            return r.numer().to_string();
        }
        // n / 2^k = n * 5^k / 10^k
        let digits = twos as usize;
        let scaled = r.numer().abs() * num_traits::pow(BigInt::from(5u32), digits);
        let mut s = scaled.to_string();
        if s.len() <= digits {
            s = format!("{}{}", "0".repeat(digits + 1 - s.len()), s);
        }
        let (int_part, frac_part) = s.split_at(s.len() - digits);
        let sign = if r.is_negative() { "-" } else { "" };
        format!("{sign}{int_part}.{frac_part}")
    } else {
        format_rational(r)
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn to_f64_lossy(&self) -> f64 {
        match self.to_f64() {
            Some(x) => x,
            None => self.numer().to_f64().unwrap_or(f64::NAN) / self.denom().to_f64().unwrap_or(f64::NAN),
        }
    }

    fn as_count(&self) -> Option<u64> {
        if self.is_integer() {
            self.numer().to_u64()
        } else {
            None
        }
    }

    fn parse_text(s: &str) -> Result<Self, Error> {
        parse_rational(s)
    }

    fn to_text(&self) -> String {
        format_rational(self)
    }

    fn to_csv_text(&self) -> String {
        format_rational_csv(self)
    }
}

impl Scalar for Ratio<i64> {
    const EXACT: bool = true;

    fn as_count(&self) -> Option<u64> {
        if self.is_integer() {
            u64::try_from(*self.numer()).ok()
        } else {
            None
        }
    }

    fn parse_text(s: &str) -> Result<Self, Error> {
        let r = parse_rational(s)?;
        match (r.numer().to_i64(), r.denom().to_i64()) {
            (Some(p), Some(q)) => Ok(Ratio::new(p, q)),
            _ => Err(parse_error(s, "does not fit in a 64-bit ratio")),
        }
    }

    fn to_text(&self) -> String {
        if self.denom().is_one() {
            self.numer().to_string()
        } else {
            format!("{}/{}", self.numer(), self.denom())
        }
    }
}

fn float_count(x: f64) -> Option<u64> {
    if x >= 0.0 && x.fract() == 0.0 && x <= u64::MAX as f64 {
        Some(x as u64)
    } else {
        None
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn as_count(&self) -> Option<u64> {
        float_count(*self)
    }

    fn parse_text(s: &str) -> Result<Self, Error> {
        if let Some((p, q)) = s.split_once('/') {
            let p: f64 = p.trim().parse().map_err(|_| parse_error(s, "bad numerator"))?;
            let q: f64 = q.trim().parse().map_err(|_| parse_error(s, "bad denominator"))?;
            return Ok(p / q);
        }
        s.trim().parse().map_err(|_| parse_error(s, "not a number"))
    }

    fn to_text(&self) -> String {
        format!("{self:.16e}")
    }
}

impl Scalar for f32 {
    const EXACT: bool = false;

    fn as_count(&self) -> Option<u64> {
        float_count(f64::from(*self))
    }

    fn parse_text(s: &str) -> Result<Self, Error> {
        f64::parse_text(s).map(|x| x as f32)
    }

    fn to_text(&self) -> String {
        format!("{self:.8e}")
    }
}
