//! Rational functions of the index in partial-fraction normal form.
//!
//! `f(x) = poly(x) + sum_s sum_k A[s][k-1] / (x + s)^k`. The normal form is
//! canonical, so cancellation between terms (telescoping, rearranged
//! harmonic blocks) is visible structurally.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Signed, Zero};

use super::poly::{self, Poly};
use crate::rational::{binom, Q};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct RatFn {
    pub poly: Poly,
    pub poles: BTreeMap<Q, Vec<Q>>,
}

/// Leading asymptotic term `coeff * x^deg`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Lead {
    Zero,
    Power { deg: i64, coeff: Q },
}

impl RatFn {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Q) -> Self {
        let mut p = vec![c];
        poly::trim(&mut p);
        RatFn {
            poly: p,
            poles: BTreeMap::new(),
        }
    }

    pub fn from_poly(mut p: Poly) -> Self {
        poly::trim(&mut p);
        RatFn {
            poly: p,
            poles: BTreeMap::new(),
        }
    }

    /// `c / (x + s)^k` for `k >= 1`.
    pub fn pole(s: Q, k: usize, c: Q) -> Self {
        let mut r = RatFn::zero();
        if !c.is_zero() && k > 0 {
            let mut v = vec![Q::zero(); k];
            v[k - 1] = c;
            r.poles.insert(s, v);
        }
        r
    }

    /// `(x + s)^p` for any integer `p`.
    pub fn linear_power(s: &Q, p: i32) -> Self {
        if p >= 0 {
            RatFn::from_poly(poly::linear_power(s, p as usize))
        } else {
            RatFn::pole(s.clone(), (-p) as usize, Q::one())
        }
    }

    fn normalize(mut self) -> Self {
        poly::trim(&mut self.poly);
        self.poles.retain(|_, v| {
            while v.last().is_some_and(|c| c.is_zero()) {
                v.pop();
            }
            !v.is_empty()
        });
        self
    }

    pub fn is_zero(&self) -> bool {
        self.poly.is_empty() && self.poles.is_empty()
    }

    pub fn as_constant(&self) -> Option<Q> {
        if !self.poles.is_empty() || self.poly.len() > 1 {
            return None;
        }
        Some(self.poly.first().cloned().unwrap_or_else(Q::zero))
    }

    pub fn is_polynomial(&self) -> bool {
        self.poles.is_empty()
    }

    pub fn add(&self, o: &RatFn) -> RatFn {
        let mut out = self.clone();
        out.poly = poly::add(&out.poly, &o.poly);
        for (s, v) in &o.poles {
            let e = out.poles.entry(s.clone()).or_default();
            if e.len() < v.len() {
                e.resize(v.len(), Q::zero());
            }
            for (i, c) in v.iter().enumerate() {
                e[i] += c;
            }
        }
        out.normalize()
    }

    pub fn scale(&self, c: &Q) -> RatFn {
        if c.is_zero() {
            return RatFn::zero();
        }
        RatFn {
            poly: poly::scale(&self.poly, c),
            poles: self
                .poles
                .iter()
                .map(|(s, v)| (s.clone(), v.iter().map(|x| x * c).collect()))
                .collect(),
        }
    }

    pub fn neg(&self) -> RatFn {
        self.scale(&-Q::one())
    }

    pub fn sub(&self, o: &RatFn) -> RatFn {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &RatFn) -> RatFn {
        let mut out = RatFn::from_poly(poly::mul(&self.poly, &o.poly));
        for (s, v) in &o.poles {
            for (k, a) in v.iter().enumerate() {
                if !a.is_zero() {
                    out = out.add(&poly_times_pole(&self.poly, s, k + 1).scale(a));
                }
            }
        }
        for (s, v) in &self.poles {
            for (k, a) in v.iter().enumerate() {
                if !a.is_zero() {
                    out = out.add(&poly_times_pole(&o.poly, s, k + 1).scale(a));
                }
            }
        }
        for (s, v) in &self.poles {
            for (k, a) in v.iter().enumerate() {
                if a.is_zero() {
                    continue;
                }
                for (t, w) in &o.poles {
                    for (l, b) in w.iter().enumerate() {
                        if b.is_zero() {
                            continue;
                        }
                        let prod = pole_product(s, k + 1, t, l + 1);
                        out = out.add(&prod.scale(&(a * b)));
                    }
                }
            }
        }
        out
    }

    pub fn eval(&self, x: &Q) -> Option<Q> {
        let mut acc = poly::eval(&self.poly, x);
        for (s, v) in &self.poles {
            let base = x + s;
            if base.is_zero() {
                return None;
            }
            let inv = base.recip();
            let mut p = inv.clone();
            for a in v {
                acc += a * &p;
                p = &p * &inv;
            }
        }
        Some(acc)
    }

    /// `f(a y + b)` as a function of `y`; `a` must be nonzero.
    pub fn subst_affine(&self, a: &Q, b: &Q) -> RatFn {
        let mut out = RatFn::from_poly(poly::compose_affine(&self.poly, a, b));
        for (s, v) in &self.poles {
            // A / (a y + b + s)^k = A a^-k / (y + (b+s)/a)^k
            let shift = (b + s) / a;
            let mut factor = a.recip();
            for (k, c) in v.iter().enumerate() {
                out = out.add(&RatFn::pole(shift.clone(), k + 1, c * &factor));
                factor = &factor / a;
            }
        }
        out
    }

    /// Total pole order `sum_s max_k`.
    pub fn pole_order(&self) -> usize {
        self.poles.values().map(|v| v.len()).sum()
    }

    /// Coefficients `e_j` of `x^-j` (j = 1..=order) in the expansion at
    /// infinity of the pole part.
    pub fn expansion(&self, order: usize) -> Vec<Q> {
        let mut e = vec![Q::zero(); order];
        for (s, v) in &self.poles {
            for (km1, a) in v.iter().enumerate() {
                if a.is_zero() {
                    continue;
                }
                let k = km1 + 1;
                // 1/(x+s)^k = sum_t C(-k,t) s^t x^(-k-t)
                let mut sp = Q::one();
                for t in 0.. {
                    let j = k + t;
                    if j > order {
                        break;
                    }
                    e[j - 1] += a * binom(-(k as i64), t) * &sp;
                    sp = &sp * s;
                }
            }
        }
        e
    }

    pub fn leading(&self) -> Lead {
        if let Some(d) = poly::degree(&self.poly) {
            return Lead::Power {
                deg: d as i64,
                coeff: self.poly[d].clone(),
            };
        }
        if self.poles.is_empty() {
            return Lead::Zero;
        }
        let order = self.pole_order();
        let e = self.expansion(order);
        for (j, c) in e.iter().enumerate() {
            if !c.is_zero() {
                return Lead::Power {
                    deg: -((j + 1) as i64),
                    coeff: c.clone(),
                };
            }
        }
        Lead::Zero
    }

    /// Numerator/denominator form with `D = prod_s (x+s)^kmax_s`.
    pub fn num_den(&self) -> (Poly, Poly) {
        let mut den: Poly = vec![Q::one()];
        for (s, v) in &self.poles {
            den = poly::mul(&den, &poly::linear_power(s, v.len()));
        }
        let mut num = poly::mul(&self.poly, &den);
        for (s, v) in &self.poles {
            let mut others: Poly = vec![Q::one()];
            for (t, w) in &self.poles {
                if t != s {
                    others = poly::mul(&others, &poly::linear_power(t, w.len()));
                }
            }
            for (km1, a) in v.iter().enumerate() {
                let k = km1 + 1;
                let part = poly::mul(&others, &poly::linear_power(s, v.len() - k));
                num = poly::add(&num, &poly::scale(&part, a));
            }
        }
        (num, den)
    }

    /// Smallest shift; every index `x` with `x + s <= 0` is a singularity.
    pub fn min_shift(&self) -> Option<&Q> {
        self.poles.keys().next()
    }

    /// Multiplicative inverse when it stays inside the pole/polynomial algebra:
    /// requires the numerator to have degree at most one.
    pub fn invert(&self) -> Option<RatFn> {
        let (num, den) = self.num_den();
        match poly::degree(&num) {
            None => None,
            Some(0) => Some(RatFn::from_poly(poly::scale(&den, &num[0].recip()))),
            Some(1) => {
                let root_shift = &num[0] / &num[1];
                let base = RatFn::from_poly(poly::scale(&den, &num[1].recip()));
                Some(base.mul(&RatFn::pole(root_shift, 1, Q::one())))
            }
            _ => None,
        }
    }

    pub fn abs_coeff_bound(&self) -> Q {
        let mut acc = Q::zero();
        for v in self.poles.values() {
            for c in v {
                acc += c.abs();
            }
        }
        acc
    }
}

/// `x^n` (given as a polynomial) times `1/(x+s)^k`.
fn poly_times_pole(p: &Poly, s: &Q, k: usize) -> RatFn {
    let mut out = RatFn::zero();
    for (n, c) in p.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        // x^n = sum_j C(n,j) (x+s)^j (-s)^(n-j)
        let ms = -s.clone();
        for j in 0..=n {
            let coef = c * binom(n as i64, j) * num_traits::pow(ms.clone(), n - j);
            if coef.is_zero() {
                continue;
            }
            let e = j as i64 - k as i64;
            let term = if e >= 0 {
                RatFn::from_poly(poly::linear_power(s, e as usize))
            } else {
                RatFn::pole(s.clone(), (-e) as usize, Q::one())
            };
            out = out.add(&term.scale(&coef));
        }
    }
    out
}

/// `1 / ((x+s)^a (x+t)^b)`.
fn pole_product(s: &Q, a: usize, t: &Q, b: usize) -> RatFn {
    if s == t {
        return RatFn::pole(s.clone(), a + b, Q::one());
    }
    if a == 0 {
        return RatFn::pole(t.clone(), b, Q::one());
    }
    if b == 0 {
        return RatFn::pole(s.clone(), a, Q::one());
    }
    let d = t - s;
    let left = pole_product(s, a, t, b - 1);
    let right = pole_product(s, a - 1, t, b);
    left.sub(&right).scale(&d.recip())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};

    fn check_eq_on_points(f: &RatFn, g: impl Fn(&Q) -> Q) {
        for i in 1..12 {
            let x = qi(i);
            assert_eq!(f.eval(&x).unwrap(), g(&x), "at {i}");
        }
    }

    #[test]
    fn product_of_distinct_poles_is_partial_fractions() {
        let a = RatFn::linear_power(&qi(0), -1);
        let b = RatFn::linear_power(&qi(1), -1);
        let p = a.mul(&b);
        // 1/(x(x+1)) = 1/x - 1/(x+1)
        assert_eq!(p.poles.len(), 2);
        assert_eq!(p.poles[&qi(0)], vec![qi(1)]);
        assert_eq!(p.poles[&qi(1)], vec![qi(-1)]);
        let c = RatFn::linear_power(&q(1, 2), -2).mul(&RatFn::linear_power(&qi(3), -3));
        check_eq_on_points(&c, |x| {
            let u = x + q(1, 2);
            let v = x + qi(3);
            (u.clone() * u * v.clone() * v.clone() * v).recip()
        });
    }

    #[test]
    fn polynomial_times_pole() {
        let p = RatFn::linear_power(&qi(0), 2).mul(&RatFn::linear_power(&qi(1), -1));
        check_eq_on_points(&p, |x| x * x / (x + qi(1)));
        assert_eq!(p.leading(), Lead::Power { deg: 1, coeff: qi(1) });
    }

    #[test]
    fn cancellation_lowers_degree() {
        // 1/(4m-3) + 1/(4m-1) - 1/(2m) ~ c/m^2
        let f = RatFn::pole(q(-3, 4), 1, q(1, 4))
            .add(&RatFn::pole(q(-1, 4), 1, q(1, 4)))
            .add(&RatFn::pole(qi(0), 1, q(-1, 2)));
        match f.leading() {
            Lead::Power { deg, .. } => assert_eq!(deg, -2),
            Lead::Zero => panic!(),
        }
        let (n, d) = f.num_den();
        check_eq_on_points(&f, |x| poly::eval(&n, x) / poly::eval(&d, x));
    }

    #[test]
    fn affine_substitution() {
        let f = RatFn::linear_power(&qi(1), -1).add(&RatFn::from_poly(vec![qi(0), qi(3)]));
        let g = f.subst_affine(&qi(4), &qi(-3));
        for m in 1..10 {
            let m = qi(m);
            let i = qi(4) * &m - qi(3);
            assert_eq!(g.eval(&m), f.eval(&i));
        }
    }

    #[test]
    fn inversion() {
        let f = RatFn::linear_power(&qi(0), -1).mul(&RatFn::linear_power(&qi(1), -1));
        let g = f.invert().unwrap();
        check_eq_on_points(&g, |x| x * (x + qi(1)));
        let h = RatFn::from_poly(vec![qi(2), qi(1)]).invert().unwrap();
        check_eq_on_points(&h, |x| (x + qi(2)).recip());
        assert!(RatFn::zero().invert().is_none());
    }
}
