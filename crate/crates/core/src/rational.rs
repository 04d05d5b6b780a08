//! Exact rational helpers.
//!
//! Every price, weight and verdict in this crate is a [`Q`]; floating point
//! never enters a verdict path.

use alloc::string::String;
use core::fmt::Write as _;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational number.
pub type Q = BigRational;

pub fn q(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qu(n: u64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Parses `"p/q"` or `"p"` (optional sign, decimal digits only).
pub fn parse_q(s: &str) -> Option<Q> {
    let s = s.trim();
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: BigInt = n.parse().ok()?;
    let d: BigInt = d.parse().ok()?;
    if d.is_zero() {
        return None;
    }
    Some(Q::new(n, d))
}

/// Formats as `"p/q"`, always with an explicit denominator.
pub fn format_q(x: &Q) -> String {
    let mut s = String::new();
    let _ = write!(s, "{}/{}", x.numer(), x.denom());
    s
}

/// Lossy conversion for human-readable output only.
pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

pub fn pow_q(base: &Q, exp: i64) -> Q {
    if exp >= 0 {
        num_traits::pow(base.clone(), exp as usize)
    } else {
        num_traits::pow(base.recip(), (-exp) as usize)
    }
}

pub fn floor_q(x: &Q) -> BigInt {
    x.numer().div_floor(x.denom())
}

pub fn ceil_q(x: &Q) -> BigInt {
    -((-x.numer()).div_floor(x.denom()))
}

pub fn abs_q(x: &Q) -> Q {
    x.abs()
}

pub fn is_int(x: &Q) -> bool {
    x.denom().is_one()
}

pub fn max_q(a: Q, b: Q) -> Q {
    if a >= b {
        a
    } else {
        b
    }
}

pub fn min_q(a: Q, b: Q) -> Q {
    if a <= b {
        a
    } else {
        b
    }
}

/// Generalised binomial coefficient `C(n, k)` for integer `n` (possibly negative).
pub fn binom(n: i64, k: usize) -> Q {
    let mut acc = Q::one();
    for j in 0..k {
        acc = acc * qi(n - j as i64) / qu(j as u64 + 1);
    }
    acc
}

pub fn lcm_u64(a: u64, b: u64) -> u64 {
    a.lcm(&b)
}

pub fn zero() -> Q {
    Q::zero()
}

pub fn one() -> Q {
    Q::one()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format() {
        assert_eq!(parse_q("3/5"), Some(q(3, 5)));
        assert_eq!(parse_q("-6/10"), Some(q(-3, 5)));
        assert_eq!(parse_q("7"), Some(qi(7)));
        assert_eq!(parse_q("1/0"), None);
        assert_eq!(parse_q("x"), None);
        assert_eq!(format_q(&qi(2)), "2/1");
        assert_eq!(format_q(&q(-1, 4)), "-1/4");
    }

    #[test]
    fn binomials() {
        assert_eq!(binom(5, 2), qi(10));
        // C(-2, 3) = (-2)(-3)(-4)/6 = -4
        assert_eq!(binom(-2, 3), qi(-4));
        assert_eq!(binom(-1, 4), qi(1));
    }

    #[test]
    fn floors() {
        assert_eq!(floor_q(&q(-7, 2)), BigInt::from(-4));
        assert_eq!(ceil_q(&q(-7, 2)), BigInt::from(-3));
        assert_eq!(ceil_q(&q(7, 2)), BigInt::from(4));
    }
}
