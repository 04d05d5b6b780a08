//! Outward-rounded fixed-point intervals.
//!
//! Long partial sums (10^5..10^6 terms) are accumulated here instead of in
//! [`Q`]: each term is enclosed in `[lo, hi] * 2^-64` with floor/ceil
//! rounding, so the accumulated interval always contains the exact sum.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::rational::Q;

pub const FRAC_BITS: u32 = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Fx {
    pub lo: i128,
    pub hi: i128,
}

fn scale() -> BigInt {
    BigInt::one() << FRAC_BITS
}

impl Fx {
    pub const ZERO: Fx = Fx { lo: 0, hi: 0 };

    pub fn point(v: i128) -> Fx {
        Fx { lo: v, hi: v }
    }

    /// Encloses `num / den`.
    pub fn ratio(num: &BigInt, den: &BigInt) -> Option<Fx> {
        if den.is_zero() {
            return None;
        }
        let (num, den) = if den.is_negative() {
            (-num, -den)
        } else {
            (num.clone(), den.clone())
        };
        let scaled = num << FRAC_BITS;
        let (lo, rem) = scaled.div_mod_floor(&den);
        let hi = if rem.is_zero() { lo.clone() } else { &lo + 1 };
        Some(Fx {
            lo: lo.to_i128()?,
            hi: hi.to_i128()?,
        })
    }

    /// Fast path for machine-sized numerators and denominators; falls back to
    /// big integers when the intermediate shift would overflow.
    pub fn ratio_i128(num: i128, den: i128) -> Option<Fx> {
        if den == 0 {
            return None;
        }
        let (num, den) = if den < 0 {
            (num.checked_neg()?, den.checked_neg()?)
        } else {
            (num, den)
        };
        if den >= (1i128 << 62) {
            return Fx::ratio(&BigInt::from(num), &BigInt::from(den));
        }
        let q0 = num.div_euclid(den);
        let r = num.rem_euclid(den);
        let shifted = r << FRAC_BITS;
        let frac = shifted / den;
        let rem2 = shifted % den;
        let base = q0.checked_mul(1i128 << FRAC_BITS)?;
        let lo = base.checked_add(frac)?;
        let hi = if rem2 == 0 { lo } else { lo.checked_add(1)? };
        Some(Fx { lo, hi })
    }

    pub fn from_q(x: &Q) -> Option<Fx> {
        Fx::ratio(x.numer(), x.denom())
    }

    pub fn checked_add(self, o: Fx) -> Option<Fx> {
        Some(Fx {
            lo: self.lo.checked_add(o.lo)?,
            hi: self.hi.checked_add(o.hi)?,
        })
    }

    pub fn neg(self) -> Fx {
        Fx {
            lo: -self.hi,
            hi: -self.lo,
        }
    }

    pub fn checked_sub(self, o: Fx) -> Option<Fx> {
        self.checked_add(o.neg())
    }

    pub fn lo_q(&self) -> Q {
        Q::new(BigInt::from(self.lo), scale())
    }

    pub fn hi_q(&self) -> Q {
        Q::new(BigInt::from(self.hi), scale())
    }

    /// Upper bound on `|x|` over the interval.
    pub fn mag(&self) -> i128 {
        self.lo.abs().max(self.hi.abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    #[test]
    fn ratio_encloses() {
        for (n, d) in [(1i64, 3i64), (-1, 3), (7, -2), (0, 5), (123456789, 1000)] {
            let f = Fx::ratio_i128(n as i128, d as i128).unwrap();
            let x = q(n, d);
            assert!(f.lo_q() <= x && x <= f.hi_q(), "{n}/{d}");
            assert!(f.hi - f.lo <= 1);
            let g = Fx::from_q(&x).unwrap();
            assert_eq!(f, g);
        }
    }

    #[test]
    fn big_denominator_falls_back() {
        let d: i128 = (1i128 << 100) + 7;
        let f = Fx::ratio_i128(3, d).unwrap();
        let x = Q::new(BigInt::from(3), BigInt::from(d));
        assert!(f.lo_q() <= x && x <= f.hi_q());
    }
}
