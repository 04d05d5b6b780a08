//! Certified evaluation of series over [`RuleNF`] terms.
//!
//! Partial sums are accumulated in outward-rounded fixed point; tails are
//! bounded symbolically from the asymptotic expansion of each component. All
//! bounds end up as exact rationals.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::fixed::Fx;
use crate::rational::{max_q, min_q, pow_q, qi, qu, Q};
use crate::rule::nf::{Comp, Limit, RuleNF};
use crate::rule::ratfn::{Lead, RatFn};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    PosInf,
    NegInf,
    Oscillating,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TailKind {
    FiniteSum,
    GeometricTail,
    PSeriesIntegralTail,
    AlternatingTail,
    /// Sum of enclosures carrying different tail kinds.
    Composite,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    pub kind: TailKind,
    /// Index of the first term bounded by the tail estimate.
    pub cut: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SeriesValue {
    Exact(Q),
    Enclosure { lo: Q, hi: Q, cert: Certificate },
    Divergent(Direction),
    Undetermined(String),
}

impl TailKind {
    pub fn name(self) -> &'static str {
        match self {
            TailKind::FiniteSum => "FiniteSum",
            TailKind::GeometricTail => "GeometricTail",
            TailKind::PSeriesIntegralTail => "PSeriesIntegralTail",
            TailKind::AlternatingTail => "AlternatingTail",
            TailKind::Composite => "Composite",
        }
    }
}

impl fmt::Display for SeriesValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeriesValue::Exact(v) => write!(f, "{v}"),
            SeriesValue::Enclosure { lo, hi, cert } => {
                write!(f, "[{}, {}] ({}@{})", crate::rational::to_f64(lo), crate::rational::to_f64(hi), cert.kind.name(), cert.cut)
            }
            SeriesValue::Divergent(d) => write!(f, "divergent {d:?}"),
            SeriesValue::Undetermined(r) => write!(f, "undetermined: {r}"),
        }
    }
}

impl SeriesValue {
    pub fn exact(v: Q) -> Self {
        SeriesValue::Exact(v)
    }

    pub fn undetermined(reason: impl Into<String>) -> Self {
        SeriesValue::Undetermined(reason.into())
    }

    /// `(lo, hi)` for convergent values.
    pub fn bounds(&self) -> Option<(Q, Q)> {
        match self {
            SeriesValue::Exact(v) => Some((v.clone(), v.clone())),
            SeriesValue::Enclosure { lo, hi, .. } => Some((lo.clone(), hi.clone())),
            _ => None,
        }
    }

    pub fn is_convergent(&self) -> bool {
        self.bounds().is_some()
    }

    pub fn width(&self) -> Option<Q> {
        self.bounds().map(|(l, h)| h - l)
    }

    pub fn contains(&self, x: &Q) -> bool {
        self.bounds().is_some_and(|(l, h)| &l <= x && x <= &h)
    }

    pub fn excludes_zero(&self) -> bool {
        self.bounds().is_some_and(|(l, h)| l.is_positive() || h.is_negative())
    }

    pub fn as_exact(&self) -> Option<&Q> {
        match self {
            SeriesValue::Exact(v) => Some(v),
            _ => None,
        }
    }

    fn cert(&self) -> Option<&Certificate> {
        match self {
            SeriesValue::Enclosure { cert, .. } => Some(cert),
            _ => None,
        }
    }

    pub fn add(&self, o: &SeriesValue) -> SeriesValue {
        use SeriesValue::*;
        match (self, o) {
            (Undetermined(r), _) | (_, Undetermined(r)) => Undetermined(r.clone()),
            (Divergent(a), Divergent(b)) => {
                if a == b && *a != Direction::Oscillating {
                    Divergent(*a)
                } else {
                    Undetermined("sum of two divergent series".to_string())
                }
            }
            (Divergent(d), _) | (_, Divergent(d)) => Divergent(*d),
            (Exact(a), Exact(b)) => Exact(a + b),
            _ => {
                let (l1, h1) = self.bounds().unwrap();
                let (l2, h2) = o.bounds().unwrap();
                let cert = match (self.cert(), o.cert()) {
                    (Some(a), Some(b)) => Certificate {
                        kind: if a.kind == b.kind { a.kind } else { TailKind::Composite },
                        cut: a.cut.max(b.cut),
                    },
                    (Some(a), None) | (None, Some(a)) => a.clone(),
                    (None, None) => unreachable!(),
                };
                Enclosure { lo: l1 + l2, hi: h1 + h2, cert }
            }
        }
    }

    pub fn add_exact(&self, x: &Q) -> SeriesValue {
        self.add(&SeriesValue::Exact(x.clone()))
    }

    pub fn neg(&self) -> SeriesValue {
        self.scale(&-Q::one())
    }

    pub fn scale(&self, k: &Q) -> SeriesValue {
        use SeriesValue::*;
        match self {
            Exact(v) => Exact(v * k),
            Enclosure { lo, hi, cert } => {
                let (a, b) = (lo * k, hi * k);
                Enclosure { lo: min_q(a.clone(), b.clone()), hi: max_q(a, b), cert: cert.clone() }
            }
            Divergent(d) => {
                if k.is_zero() {
                    Exact(Q::zero())
                } else if k.is_negative() {
                    Divergent(match d {
                        Direction::PosInf => Direction::NegInf,
                        Direction::NegInf => Direction::PosInf,
                        Direction::Oscillating => Direction::Oscillating,
                    })
                } else {
                    Divergent(*d)
                }
            }
            Undetermined(r) => Undetermined(r.clone()),
        }
    }

    /// Intersection of two enclosures of the same quantity.
    pub fn intersect(&self, o: &SeriesValue) -> SeriesValue {
        match (self, o) {
            (SeriesValue::Exact(_), _) => self.clone(),
            (_, SeriesValue::Exact(_)) => o.clone(),
            (SeriesValue::Enclosure { lo, hi, cert }, SeriesValue::Enclosure { lo: l2, hi: h2, cert: c2 }) => {
                let lo = max_q(lo.clone(), l2.clone());
                let hi = min_q(hi.clone(), h2.clone());
                let cert = if c2.cut > cert.cut { c2.clone() } else { cert.clone() };
                if lo > hi {
                    // Only possible through a bug in a tail bound.
                    return SeriesValue::undetermined("inconsistent enclosures");
                }
                if lo == hi {
                    return SeriesValue::Exact(lo);
                }
                SeriesValue::Enclosure { lo, hi, cert }
            }
            (SeriesValue::Enclosure { .. }, _) => self.clone(),
            _ => o.clone(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SumOpts {
    /// Maximum number of explicitly summed terms per component.
    pub horizon: u64,
    /// Stop refining once the enclosure width is at most this.
    pub tol: Q,
}

impl Default for SumOpts {
    fn default() -> Self {
        SumOpts { horizon: 1_000_000, tol: Q::new(BigInt::one(), BigInt::one() << 40u32) }
    }
}

impl SumOpts {
    pub fn with_horizon(horizon: u64) -> Self {
        SumOpts { horizon: horizon.max(1), ..Default::default() }
    }
}

/// Convergence type of `sum_{m >= start} rule(m)` decided from the
/// component structure alone.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Convergence {
    Absolute,
    Conditional,
    Diverges(Direction),
}

pub fn convergence(rule: &RuleNF) -> Convergence {
    match rule.limit() {
        Limit::Finite(v) if v.is_zero() => {}
        Limit::Finite(v) => {
            return Convergence::Diverges(if v.is_positive() { Direction::PosInf } else { Direction::NegInf })
        }
        Limit::PosInf => return Convergence::Diverges(Direction::PosInf),
        Limit::NegInf => return Convergence::Diverges(Direction::NegInf),
        Limit::Oscillating => return Convergence::Diverges(Direction::Oscillating),
    }
    if let Some(pos) = rule.harmonic_sign() {
        return Convergence::Diverges(if pos { Direction::PosInf } else { Direction::NegInf });
    }
    if rule.abs_summable() {
        Convergence::Absolute
    } else {
        Convergence::Conditional
    }
}

/// `sum_{m >= start} rule(m)`.
pub fn sum_rule(rule: &RuleNF, start: i64, opts: &SumOpts) -> SeriesValue {
    if rule.is_zero() {
        return SeriesValue::Exact(Q::zero());
    }
    if !rule.regular_from(start) {
        return SeriesValue::undetermined("rule is singular inside the summation range");
    }
    if let Convergence::Diverges(d) = convergence(rule) {
        return SeriesValue::Divergent(d);
    }
    let mut acc = SeriesValue::Exact(Q::zero());
    let mut unit_plain = RatFn::zero();
    let mut unit_alt = RatFn::zero();
    for c in &rule.comps {
        if c.ratio.is_one() {
            if c.alt {
                unit_alt = unit_alt.add(&c.f);
            } else {
                unit_plain = unit_plain.add(&c.f);
            }
        } else {
            acc = acc.add(&geometric_sum(c, start, opts));
        }
    }
    if unit_alt.is_zero() {
        if !unit_plain.is_zero() {
            acc = acc.add(&pseries_sum(&unit_plain, start, opts, TailKind::PSeriesIntegralTail));
        }
    } else {
        // Pair consecutive terms: g(j) = t(start + 2j) + t(start + 2j + 1), j >= 0.
        let sign = if start.rem_euclid(2) == 0 { Q::one() } else { -Q::one() };
        let two = qi(2);
        let even = unit_alt.scale(&sign).add(&unit_plain);
        let odd = unit_alt.scale(&-sign).add(&unit_plain);
        let g = even
            .subst_affine(&two, &qi(start))
            .add(&odd.subst_affine(&two, &qi(start + 1)));
        acc = acc.add(&pseries_sum(&g, 0, opts, TailKind::AlternatingTail));
    }
    acc
}

/// Exact telescoping value when, inside every class of shifts congruent
/// mod 1, the coefficients of each pole order sum to zero.
fn telescoping(f: &RatFn, start: i64) -> Option<Q> {
    if !f.poly.is_empty() {
        return None;
    }
    let shifts: Vec<&Q> = f.poles.keys().collect();
    let mut used = alloc::vec![false; shifts.len()];
    let mut total = Q::zero();
    for i in 0..shifts.len() {
        if used[i] {
            continue;
        }
        let s0 = shifts[i];
        let class: Vec<usize> = (i..shifts.len())
            .filter(|&j| !used[j] && crate::rational::is_int(&(shifts[j] - s0)))
            .collect();
        let maxk = class.iter().map(|&j| f.poles[shifts[j]].len()).max().unwrap_or(0);
        for k in 1..=maxk {
            let mut sum = Q::zero();
            for &j in &class {
                if let Some(a) = f.poles[shifts[j]].get(k - 1) {
                    sum += a;
                }
            }
            if !sum.is_zero() {
                return None;
            }
        }
        // s0 is the smallest shift of its class because keys are sorted.
        for &j in &class {
            used[j] = true;
            let t = (shifts[j] - s0).to_integer().to_i64()?;
            if t > 100_000 {
                return None;
            }
            for (km1, a) in f.poles[shifts[j]].iter().enumerate() {
                if a.is_zero() {
                    continue;
                }
                for jj in start..start + t {
                    total -= a * pow_q(&(qi(jj) + s0), -(km1 as i64 + 1));
                }
            }
        }
    }
    Some(total)
}

/// Cut points `floor(h / 2^t) >= 64` (or just `h` when smaller), ascending.
/// Doubling the horizon only adds a cut on top, so results are nested.
fn ladder(h: u64) -> Vec<u64> {
    let mut cuts = Vec::new();
    let mut c = h;
    while c >= 64 {
        cuts.push(c);
        c /= 2;
    }
    if cuts.is_empty() {
        cuts.push(h);
    }
    cuts.reverse();
    cuts
}

const EXPANSION_ORDER: usize = 6;

/// Enclosure of `sum_{m >= a} m^-j` for `j >= 2`, `a >= 1`.
fn zeta_tail(j: usize, a: &Q) -> (Q, Q) {
    let jq = qu(j as u64);
    let f = pow_q(a, -(j as i64));
    let lo = pow_q(a, 1 - j as i64) / (&jq - Q::one()) + &f / qi(2);
    let d1 = &jq * pow_q(a, -(j as i64) - 1);
    let d2 = &jq * (&jq + Q::one()) * pow_q(a, -(j as i64) - 2);
    let hi = &lo + (d1 + d2) / qi(12);
    (lo, hi)
}

/// Enclosure of `sum_{m >= a} f(m)` for a pole-only `f` of degree <= -2.
fn pole_tail(f: &RatFn, a: u64) -> Option<(Q, Q)> {
    let aq = qu(a);
    let q = EXPANSION_ORDER;
    let mut k_bound = Q::zero();
    for (s, v) in &f.poles {
        if qi(4) * s.abs() > aq {
            return None;
        }
        for (km1, c) in v.iter().enumerate() {
            let k = km1 + 1;
            let t = q.saturating_sub(k);
            k_bound += c.abs() * num_traits::pow(qi(2), k) * num_traits::pow(qi(2) * s.abs(), t);
        }
    }
    let e = f.expansion(q - 1);
    if !e[0].is_zero() {
        return None;
    }
    let mut lo = Q::zero();
    let mut hi = Q::zero();
    for (jm1, c) in e.iter().enumerate().skip(1) {
        if c.is_zero() {
            continue;
        }
        let (zl, zh) = zeta_tail(jm1 + 1, &aq);
        if c.is_positive() {
            lo += c * zl;
            hi += c * zh;
        } else {
            lo += c * zh;
            hi += c * zl;
        }
    }
    let rem = &k_bound * (pow_q(&aq, 1 - q as i64) / qu(q as u64 - 1) + pow_q(&aq, -(q as i64)));
    Some((lo - &rem, hi + rem))
}

fn pseries_sum(f: &RatFn, start: i64, opts: &SumOpts, kind: TailKind) -> SeriesValue {
    if f.is_zero() {
        return SeriesValue::Exact(Q::zero());
    }
    match f.leading() {
        Lead::Power { deg, .. } if deg <= -2 && f.poly.is_empty() => {}
        _ => return SeriesValue::undetermined("unit-ratio component is not summable"),
    }
    if let Some(v) = telescoping(f, start) {
        return SeriesValue::Exact(v);
    }
    let ev = crate::rule::nf::RuleNF::from_ratfn(f.clone()).fx();
    let mut partial = Fx::ZERO;
    let mut next = start;
    let mut best: Option<SeriesValue> = None;
    for cut in ladder(opts.horizon) {
        let end = start + cut as i64;
        while next < end {
            partial = match ev.eval(next).and_then(|t| partial.checked_add(t)) {
                Some(p) => p,
                None => return best.unwrap_or_else(|| SeriesValue::undetermined("fixed-point overflow")),
            };
            next += 1;
        }
        if end < 1 {
            continue;
        }
        let Some((tl, th)) = pole_tail(f, end as u64) else { continue };
        let enc = SeriesValue::Enclosure {
            lo: partial.lo_q() + tl,
            hi: partial.hi_q() + th,
            cert: Certificate { kind, cut: end as u64 },
        };
        let merged = match &best {
            Some(b) => b.intersect(&enc),
            None => enc,
        };
        let done = merged.width().is_some_and(|w| w <= opts.tol);
        best = Some(merged);
        if done {
            break;
        }
    }
    best.unwrap_or_else(|| SeriesValue::undetermined("horizon too small for a certified tail"))
}

fn geometric_sum(c: &Comp, start: i64, opts: &SumOpts) -> SeriesValue {
    let x = if c.alt { -c.ratio.clone() } else { c.ratio.clone() };
    if let Some(k) = c.f.as_constant() {
        return SeriesValue::Exact(k * pow_q(&x, start) / (Q::one() - &x));
    }
    let r = &c.ratio;
    // |f(m)| <= B m^d once m >= 2|s| for every pole shift s.
    let d = crate::rule::poly::degree(&c.f.poly).unwrap_or(0);
    let mut b = crate::rule::poly::abs_sum(&c.f.poly);
    let mut need = 1i64;
    for (s, v) in &c.f.poles {
        let lim = crate::rational::ceil_q(&(qi(2) * s.abs())).to_i64().unwrap_or(i64::MAX);
        need = need.max(lim);
        for (km1, a) in v.iter().enumerate() {
            b += a.abs() * num_traits::pow(qi(2), km1 + 1);
        }
    }
    let single = RuleNF::from_comp(c.alt, c.ratio.clone(), c.f.clone());
    let cap = opts.horizon.min(4096) as i64;
    let mut partial = Q::zero();
    let mut m = start;
    let mut n = 16i64;
    loop {
        let end = start + n.min(cap);
        while m < end {
            match single.eval(m) {
                Some(v) => partial += v,
                None => return SeriesValue::undetermined("singular geometric term"),
            }
            m += 1;
        }
        let a = end.max(need).max(1);
        let aq = qi(a);
        let qf = r * pow_q(&((&aq + Q::one()) / &aq), d as i64);
        if qf < Q::one() {
            let mut tail = &b * pow_q(&aq, d as i64) * pow_q(r, a) / (Q::one() - qf);
            // Terms between `end` and `a` are bounded the same way.
            for j in end..a {
                tail += single.eval(j).map(|v| v.abs()).unwrap_or_else(Q::zero);
            }
            if qi(2) * &tail <= opts.tol || end >= start + cap {
                return SeriesValue::Enclosure {
                    lo: &partial - &tail,
                    hi: &partial + &tail,
                    cert: Certificate { kind: TailKind::GeometricTail, cut: end as u64 },
                };
            }
        } else if end >= start + cap {
            return SeriesValue::undetermined("geometric tail bound not reached within horizon");
        }
        n *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, to_f64};

    /// ln 2 = sum_{k >= 1} 1 / (k 2^k): exact partial sums plus a geometric tail.
    fn ln2_oracle() -> (Q, Q) {
        let mut s = Q::zero();
        for k in 1..80i64 {
            s += Q::new(BigInt::one(), BigInt::from(k) << (k as usize));
        }
        let tail = Q::new(BigInt::one(), BigInt::one() << 79u32);
        (s.clone(), s + tail)
    }

    #[test]
    fn alternating_harmonic_encloses_minus_ln2() {
        let r = RuleNF::alternating(RatFn::pole(qi(0), 1, qi(1)));
        let v = sum_rule(&r, 1, &SumOpts::with_horizon(1_000_000));
        let (l, h) = v.bounds().unwrap();
        let (ol, oh) = ln2_oracle();
        assert!(l <= -oh.clone() && -ol <= h, "{v}");
        assert!(v.width().unwrap() <= q(2, 1_000_000));
        assert!(matches!(v, SeriesValue::Enclosure { cert: Certificate { kind: TailKind::AlternatingTail, .. }, .. }));
    }

    #[test]
    fn geometric_closed_form() {
        let r = RuleNF::geometric(qi(1), &q(1, 2));
        assert_eq!(sum_rule(&r, 0, &SumOpts::default()), SeriesValue::Exact(qi(2)));
        // 1/k 2^-k has a rational factor: certified tail instead.
        let g = RuleNF::from_comp(false, q(1, 2), RatFn::pole(qi(0), 1, qi(1)));
        let v = sum_rule(&g, 1, &SumOpts::default());
        let (ol, oh) = ln2_oracle();
        let (l, h) = v.bounds().unwrap();
        assert!(l <= ol && oh <= h);
        assert!(v.width().unwrap() < q(1, 1_000_000_000));
    }

    #[test]
    fn divergence_directions() {
        let ones = RuleNF::constant(qi(1));
        assert_eq!(sum_rule(&ones, 1, &SumOpts::default()), SeriesValue::Divergent(Direction::PosInf));
        let h = RuleNF::from_ratfn(RatFn::pole(qi(0), 1, qi(-1)));
        assert_eq!(sum_rule(&h, 1, &SumOpts::default()), SeriesValue::Divergent(Direction::NegInf));
        let alt = RuleNF::alternating(RatFn::constant(qi(1)));
        assert_eq!(sum_rule(&alt, 1, &SumOpts::default()), SeriesValue::Divergent(Direction::Oscillating));
    }

    #[test]
    fn telescoping_is_exact() {
        // sum_{k>=1} 1/(k+1) - 1/(k+2) = 1/2
        let f = RatFn::pole(qi(1), 1, qi(1)).sub(&RatFn::pole(qi(2), 1, qi(1)));
        assert_eq!(sum_rule(&RuleNF::from_ratfn(f), 1, &SumOpts::default()), SeriesValue::Exact(q(1, 2)));
        // second order: sum 1/k^2 - 1/(k+1)^2 = 1
        let g = RatFn::pole(qi(0), 2, qi(1)).sub(&RatFn::pole(qi(1), 2, qi(1)));
        assert_eq!(sum_rule(&RuleNF::from_ratfn(g), 1, &SumOpts::default()), SeriesValue::Exact(qi(1)));
    }

    #[test]
    fn basel_enclosure() {
        let r = RuleNF::from_ratfn(RatFn::pole(qi(0), 2, qi(1)));
        let v = sum_rule(&r, 1, &SumOpts::default());
        let pi2_6 = core::f64::consts::PI * core::f64::consts::PI / 6.0;
        let (l, h) = v.bounds().unwrap();
        assert!(to_f64(&l) <= pi2_6 + 1e-12 && pi2_6 - 1e-12 <= to_f64(&h));
        assert!(v.width().unwrap() <= SumOpts::default().tol);
    }

    #[test]
    fn nested_under_doubled_horizon() {
        let r = RuleNF::alternating(RatFn::pole(q(1, 3), 1, q(2, 5)));
        for h in [100u64, 777, 5000] {
            let tight = SumOpts { horizon: h, tol: Q::zero() };
            let wide = SumOpts { horizon: 2 * h, tol: Q::zero() };
            let (l1, h1) = sum_rule(&r, 1, &tight).bounds().unwrap();
            let (l2, h2) = sum_rule(&r, 1, &wide).bounds().unwrap();
            assert!(l1 <= l2 && h2 <= h1);
        }
    }
}
