//! Exponential-rational index rules.
//!
//! A [`RuleNF`] is `sum_c sign_c(m) * ratio_c^m * f_c(m)` where `sign_c(m)` is
//! `(-1)^m` for alternating components and `f_c` is a [`RatFn`]. Components
//! are kept with distinct `(alt, ratio)` keys so the asymptotic type of a rule
//! can be read off structurally.

use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::ratfn::{Lead, RatFn};
use crate::fixed::Fx;
use crate::rational::{pow_q, qi, Q};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Comp {
    pub alt: bool,
    pub ratio: Q,
    pub f: RatFn,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RuleNF {
    pub comps: Vec<Comp>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Limit {
    Finite(Q),
    PosInf,
    NegInf,
    Oscillating,
}

impl Comp {
    pub fn degree(&self) -> Option<i64> {
        match self.f.leading() {
            Lead::Zero => None,
            Lead::Power { deg, .. } => Some(deg),
        }
    }

    fn lead_coeff(&self) -> Q {
        match self.f.leading() {
            Lead::Zero => Q::zero(),
            Lead::Power { coeff, .. } => coeff,
        }
    }
}

impl RuleNF {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Q) -> Self {
        Self::from_ratfn(RatFn::constant(c))
    }

    pub fn from_ratfn(f: RatFn) -> Self {
        Self::from_comp(false, Q::one(), f)
    }

    /// `c * r^m` for any nonzero rational `r`.
    pub fn geometric(c: Q, r: &Q) -> Self {
        Self::from_comp(r.is_negative(), r.abs(), RatFn::constant(c))
    }

    pub fn alternating(f: RatFn) -> Self {
        Self::from_comp(true, Q::one(), f)
    }

    pub fn from_comp(alt: bool, ratio: Q, f: RatFn) -> Self {
        let mut r = RuleNF::zero();
        r.push(Comp { alt, ratio, f });
        r
    }

    fn push(&mut self, c: Comp) {
        if c.f.is_zero() {
            return;
        }
        assert!(c.ratio.is_positive(), "component ratio must be positive");
        match self
            .comps
            .binary_search_by(|x| (x.alt, &x.ratio).cmp(&(c.alt, &c.ratio)))
        {
            Ok(i) => {
                let f = self.comps[i].f.add(&c.f);
                if f.is_zero() {
                    self.comps.remove(i);
                } else {
                    self.comps[i].f = f;
                }
            }
            Err(i) => self.comps.insert(i, c),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.comps.is_empty()
    }

    pub fn as_constant(&self) -> Option<Q> {
        match self.comps.as_slice() {
            [] => Some(Q::zero()),
            [c] if !c.alt && c.ratio.is_one() => c.f.as_constant(),
            _ => None,
        }
    }

    pub fn add(&self, o: &RuleNF) -> RuleNF {
        let mut out = self.clone();
        for c in &o.comps {
            out.push(c.clone());
        }
        out
    }

    pub fn scale(&self, k: &Q) -> RuleNF {
        let mut out = RuleNF::zero();
        for c in &self.comps {
            out.push(Comp {
                alt: c.alt,
                ratio: c.ratio.clone(),
                f: c.f.scale(k),
            });
        }
        out
    }

    pub fn neg(&self) -> RuleNF {
        self.scale(&-Q::one())
    }

    pub fn sub(&self, o: &RuleNF) -> RuleNF {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &RuleNF) -> RuleNF {
        let mut out = RuleNF::zero();
        for a in &self.comps {
            for b in &o.comps {
                out.push(Comp {
                    alt: a.alt ^ b.alt,
                    ratio: &a.ratio * &b.ratio,
                    f: a.f.mul(&b.f),
                });
            }
        }
        out
    }

    /// The rule as a function of `m'` where `m = a m' + b`.
    pub fn subst_affine(&self, a: u64, b: i64) -> RuleNF {
        assert!(a >= 1);
        let aq = Q::from_integer(BigInt::from(a));
        let bq = qi(b);
        let mut out = RuleNF::zero();
        for c in &self.comps {
            // (-1)^(a m + b) r^(a m + b) = (-1)^b r^b * ((-1)^a)^m (r^a)^m
            let mut k = pow_q(&c.ratio, b);
            if c.alt && b.rem_euclid(2) == 1 {
                k = -k;
            }
            out.push(Comp {
                alt: c.alt && a % 2 == 1,
                ratio: pow_q(&c.ratio, a as i64),
                f: c.f.subst_affine(&aq, &bq).scale(&k),
            });
        }
        out
    }

    pub fn eval(&self, m: i64) -> Option<Q> {
        let x = qi(m);
        let mut acc = Q::zero();
        for c in &self.comps {
            let mut v = c.f.eval(&x)? * pow_q(&c.ratio, m);
            if c.alt && m.rem_euclid(2) == 1 {
                v = -v;
            }
            acc += v;
        }
        Some(acc)
    }

    /// True when every term with index `>= start` is free of singularities
    /// and every shifted factor `m + s` is positive there.
    pub fn regular_from(&self, start: i64) -> bool {
        self.comps.iter().all(|c| match c.f.min_shift() {
            None => true,
            Some(s) => (qi(start) + s).is_positive(),
        })
    }

    /// Smallest index from which [`Self::regular_from`] holds.
    pub fn first_regular(&self) -> i64 {
        let mut start = 1i64;
        for c in &self.comps {
            if let Some(s) = c.f.min_shift() {
                let need: BigInt = crate::rational::floor_q(&-s) + 1;
                if let Some(n) = need.to_i64() {
                    start = start.max(n);
                }
            }
        }
        start
    }

    pub fn limit(&self) -> Limit {
        if self.comps.is_empty() {
            return Limit::Finite(Q::zero());
        }
        let top = self.comps.iter().map(|c| &c.ratio).max().cloned().unwrap();
        if top < Q::one() {
            return Limit::Finite(Q::zero());
        }
        let dominant: Vec<&Comp> = self.comps.iter().filter(|c| c.ratio == top).collect();
        let deg = dominant.iter().filter_map(|c| c.degree()).max().unwrap_or(i64::MIN);
        let lead: Vec<&&Comp> = dominant.iter().filter(|c| c.degree() == Some(deg)).collect();
        let growing = top > Q::one() || deg > 0;
        if !growing {
            if deg < 0 {
                return Limit::Finite(Q::zero());
            }
            // ratio 1, degree 0
            if lead.iter().any(|c| c.alt) {
                return Limit::Oscillating;
            }
            return Limit::Finite(lead[0].lead_coeff());
        }
        if lead.len() == 1 && !lead[0].alt {
            if lead[0].lead_coeff().is_positive() {
                Limit::PosInf
            } else {
                Limit::NegInf
            }
        } else {
            Limit::Oscillating
        }
    }

    pub fn tends_to_zero(&self) -> bool {
        matches!(self.limit(), Limit::Finite(ref v) if v.is_zero())
    }

    /// `sum |term|` converges. Exact on this grammar: components of distinct
    /// asymptotic type cannot cancel in absolute value.
    pub fn abs_summable(&self) -> bool {
        self.comps.iter().all(|c| {
            if c.ratio < Q::one() {
                true
            } else if c.ratio.is_one() {
                c.degree().is_none_or(|d| d <= -2)
            } else {
                false
            }
        })
    }

    /// The non-summable harmonic-type component, if any: non-alternating,
    /// ratio one, degree exactly -1. Returns the sign of its coefficient.
    pub fn harmonic_sign(&self) -> Option<bool> {
        self.comps
            .iter()
            .find(|c| !c.alt && c.ratio.is_one() && c.degree() == Some(-1))
            .map(|c| c.lead_coeff().is_positive())
    }

    /// Multiplicative inverse for single-component rules whose rational part
    /// is invertible in the pole algebra.
    pub fn invert(&self) -> Option<RuleNF> {
        match self.comps.as_slice() {
            [c] => Some(RuleNF::from_comp(c.alt, c.ratio.recip(), c.f.invert()?)),
            _ => None,
        }
    }

    /// Sufficient check that every term with index `>= from` is strictly
    /// positive: one non-alternating component whose numerator has
    /// nonnegative coefficients after recentring at `from`.
    pub fn positive_from(&self, from: i64) -> bool {
        let [c] = self.comps.as_slice() else {
            return false;
        };
        if c.alt || !self.regular_from(from) {
            return false;
        }
        let (num, _den) = c.f.num_den();
        let shifted = super::poly::compose_affine(&num, &Q::one(), &qi(from));
        !shifted.is_empty()
            && shifted[0].is_positive()
            && shifted.iter().all(|x| !x.is_negative())
    }

    pub fn fx(&self) -> FxRule {
        FxRule::new(self)
    }
}

/// Precomputed fixed-point evaluator. Ratio-one components use an `i128`
/// fast path; anything else falls back to exact evaluation.
pub struct FxRule {
    unit: Vec<(bool, FxRat)>,
    other: RuleNF,
}

struct PoleTerm {
    num: i128,
    den: i128,
    q: i128,
    p: i128,
    k: u32,
    exact: (Q, Q, usize),
}

struct FxRat {
    poly: Option<RatFn>,
    poles: Vec<PoleTerm>,
}

impl FxRat {
    fn new(f: &RatFn) -> FxRat {
        let poly = if f.poly.is_empty() {
            None
        } else {
            Some(RatFn::from_poly(f.poly.clone()))
        };
        let mut poles = Vec::new();
        for (s, v) in &f.poles {
            for (km1, a) in v.iter().enumerate() {
                if a.is_zero() {
                    continue;
                }
                let k = km1 as u32 + 1;
                let q = s.denom().clone();
                let p = s.numer().clone();
                // a / (m + p/q)^k = a q^k / (q m + p)^k
                let num = a.numer() * num_traits::pow(q.clone(), k as usize);
                let (num, den, qq, pp) = (
                    num.to_i128().unwrap_or(i128::MAX),
                    a.denom().to_i128().unwrap_or(i128::MAX),
                    q.to_i128().unwrap_or(i128::MAX),
                    p.to_i128().unwrap_or(i128::MAX),
                );
                poles.push(PoleTerm {
                    num,
                    den,
                    q: qq,
                    p: pp,
                    k,
                    exact: (a.clone(), s.clone(), k as usize),
                });
            }
        }
        FxRat { poly, poles }
    }

    fn eval(&self, m: i64) -> Option<Fx> {
        let mut acc = Fx::ZERO;
        if let Some(p) = &self.poly {
            acc = acc.checked_add(Fx::from_q(&p.eval(&qi(m))?)?)?;
        }
        for t in &self.poles {
            acc = acc.checked_add(t.eval(m)?)?;
        }
        Some(acc)
    }
}

impl PoleTerm {
    fn eval(&self, m: i64) -> Option<Fx> {
        if let Some(v) = self.fast(m) {
            return Some(v);
        }
        let (a, s, k) = &self.exact;
        let base = qi(m) + s;
        if base.is_zero() {
            return None;
        }
        Fx::from_q(&(a * pow_q(&base, -(*k as i64))))
    }

    fn fast(&self, m: i64) -> Option<Fx> {
        if self.num == i128::MAX || self.den == i128::MAX || self.q == i128::MAX {
            return None;
        }
        let base = self.q.checked_mul(m as i128)?.checked_add(self.p)?;
        let mut d = self.den;
        for _ in 0..self.k {
            d = d.checked_mul(base)?;
        }
        Fx::ratio_i128(self.num, d)
    }
}

impl FxRule {
    pub fn new(r: &RuleNF) -> FxRule {
        let mut unit = Vec::new();
        let mut other = RuleNF::zero();
        for c in &r.comps {
            if c.ratio.is_one() {
                unit.push((c.alt, FxRat::new(&c.f)));
            } else {
                other.push(c.clone());
            }
        }
        FxRule { unit, other }
    }

    pub fn eval(&self, m: i64) -> Option<Fx> {
        let mut acc = Fx::ZERO;
        for (alt, f) in &self.unit {
            let mut v = f.eval(m)?;
            if *alt && m.rem_euclid(2) == 1 {
                v = v.neg();
            }
            acc = acc.checked_add(v)?;
        }
        if !self.other.is_zero() {
            acc = acc.checked_add(Fx::from_q(&self.other.eval(m)?)?)?;
        }
        Some(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn harmonic_alt() -> RuleNF {
        RuleNF::alternating(RatFn::pole(qi(0), 1, qi(1)))
    }

    #[test]
    fn affine_substitution_matches_pointwise() {
        let r = harmonic_alt()
            .add(&RuleNF::geometric(q(3, 2), &q(-1, 3)))
            .add(&RuleNF::from_ratfn(RatFn::from_poly(alloc::vec![qi(1), qi(2)])));
        for (a, b) in [(1u64, 0i64), (2, -1), (3, 2), (4, -3)] {
            let s = r.subst_affine(a, b);
            for m in 1..8 {
                assert_eq!(s.eval(m), r.eval(a as i64 * m + b), "a={a} b={b} m={m}");
            }
        }
    }

    #[test]
    fn limits() {
        assert_eq!(harmonic_alt().limit(), Limit::Finite(qi(0)));
        assert_eq!(RuleNF::constant(qi(2)).limit(), Limit::Finite(qi(2)));
        assert_eq!(RuleNF::geometric(qi(1), &qi(-2)).limit(), Limit::Oscillating);
        assert_eq!(RuleNF::geometric(qi(-1), &qi(2)).limit(), Limit::NegInf);
        assert_eq!(RuleNF::alternating(RatFn::constant(qi(1))).limit(), Limit::Oscillating);
        let mixed = RuleNF::constant(qi(1)).add(&harmonic_alt());
        assert_eq!(mixed.limit(), Limit::Finite(qi(1)));
    }

    #[test]
    fn summability_flags() {
        assert!(!harmonic_alt().abs_summable());
        assert!(RuleNF::from_ratfn(RatFn::pole(qi(0), 2, qi(1))).abs_summable());
        assert!(RuleNF::geometric(qi(5), &q(1, 2)).abs_summable());
        let h = RuleNF::from_ratfn(RatFn::pole(qi(1), 1, qi(-3)));
        assert_eq!(h.harmonic_sign(), Some(false));
    }

    #[test]
    fn inverse_and_positivity() {
        let p = RuleNF::geometric(qi(1), &q(1, 2));
        let inv = p.invert().unwrap();
        assert_eq!(p.mul(&inv), RuleNF::constant(qi(1)));
        let d = RuleNF::from_ratfn(RatFn::pole(qi(1), 1, qi(1)).sub(&RatFn::pole(qi(2), 1, qi(1))));
        assert!(d.positive_from(1));
        assert!(!d.neg().positive_from(1));
        assert!(p.positive_from(1));
    }

    #[test]
    fn fixed_point_encloses_exact() {
        let r = harmonic_alt()
            .add(&RuleNF::from_ratfn(RatFn::pole(q(-1, 4), 2, q(7, 3))))
            .add(&RuleNF::geometric(qi(1), &q(1, 2)));
        let f = r.fx();
        for m in 1..50 {
            let v = f.eval(m).unwrap();
            let x = r.eval(m).unwrap();
            assert!(v.lo_q() <= x && x <= v.hi_q());
        }
    }
}
