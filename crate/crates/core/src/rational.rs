//! Helpers on top of `BigRational`: 2-adic valuation and `num/den` formatting.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn frac(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// 2^e as a rational, for any integer e.
pub fn pow2(e: i64) -> Rational {
    let p = BigInt::one() << e.unsigned_abs();
    if e >= 0 {
        Rational::from_integer(p)
    } else {
        Rational::new(BigInt::one(), p)
    }
}

/// Exponent of 2 in a non-zero big integer.
pub fn v2_bigint(n: &BigInt) -> Option<u64> {
    n.trailing_zeros()
}

/// Exponent of 2 in a non-zero rational; `None` for zero.
pub fn v2(q: &Rational) -> Option<i64> {
    if q.is_zero() {
        return None;
    }
    let num = v2_bigint(q.numer()).expect("non-zero numerator");
    let den = v2_bigint(q.denom()).expect("non-zero denominator");
    Some(num as i64 - den as i64)
}

/// `num/den`, always with an explicit denominator.
pub fn format(q: &Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// Parses `num/den` or a bare integer.
pub fn parse(s: &str) -> Result<Rational> {
    let bad = || Error::InvalidInput(format!("not a rational: {s:?}"));
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s.trim(), "1"),
    };
    let num: BigInt = num.parse().map_err(|_| bad())?;
    let den: BigInt = den.parse().map_err(|_| bad())?;
    if den.is_zero() {
        return Err(bad());
    }
    Ok(Rational::new(num, den))
}

pub fn is_integer(q: &Rational) -> bool {
    q.denom().is_one()
}

/// Ceiling of a rational as an i64 (panics if out of range).
pub fn ceil_i64(q: &Rational) -> i64 {
    use num_traits::ToPrimitive;
    q.ceil().to_integer().to_i64().expect("ceil fits in i64")
}

pub fn abs(q: &Rational) -> Rational {
    q.abs()
}
