//! Lowering of grammar sequences to an eventually periodic form: a finite
//! prefix followed by `P` lanes, where lane `j` at block `m >= 1` holds index
//! `prefix.len() + (m - 1) * P + j + 1`.

use alloc::sync::Arc;
use alloc::vec::Vec;

use num_integer::Integer;
use num_traits::Zero;

use super::family::{BaseFamily, FamilyInfo};
use super::grammar::{CoeffSeq, EventFamily, IndexMap, Portfolio};
use crate::error::{invalid, unsupported};
use crate::measure::{measure_of, CanonicalMeasure, Event, PriceAssignment, Space};
use crate::rational::{qi, Q};
use crate::rule::{RatFn, RuleNF};
use crate::Error;

const MAX_LANES: usize = 4096;

pub trait Lane: Clone {
    type Item: Clone;
    fn at(&self, m: i64) -> Result<Self::Item, Error>;
    /// The lane as a function of `m'` where `m = a m' + b`.
    fn subst(&self, a: u64, b: i64) -> Self;
    fn pad() -> Self;
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Periodic<L: Lane> {
    pub prefix: Vec<L::Item>,
    pub lanes: Vec<L>,
}

impl<L: Lane> Periodic<L> {
    pub fn finite(items: Vec<L::Item>) -> Self {
        Periodic { prefix: items, lanes: Vec::new() }
    }

    pub fn single(lane: L) -> Self {
        Periodic { prefix: Vec::new(), lanes: alloc::vec![lane] }
    }

    pub fn period(&self) -> usize {
        self.lanes.len()
    }

    pub fn is_finite(&self) -> bool {
        self.lanes.is_empty()
    }

    /// Element at 1-based index `i`; padding beyond a finite sequence.
    pub fn get(&self, i: u64) -> Result<L::Item, Error> {
        let n0 = self.prefix.len() as u64;
        if i >= 1 && i <= n0 {
            return Ok(self.prefix[i as usize - 1].clone());
        }
        let p = self.period() as u64;
        if p == 0 {
            return L::pad().at(1);
        }
        let off = i - n0 - 1;
        self.lanes[(off % p) as usize].at((off / p) as i64 + 1)
    }

    fn materialize_one(&mut self) -> Result<(), Error> {
        let first = self.lanes[0].at(1)?;
        self.prefix.push(first);
        self.lanes[0] = self.lanes[0].subst(1, 1);
        self.lanes.rotate_left(1);
        Ok(())
    }

    /// Extends the prefix to at least `n` items.
    pub fn materialize_to(&mut self, n: usize) -> Result<(), Error> {
        if self.is_finite() {
            while self.prefix.len() < n {
                self.prefix.push(L::pad().at(1)?);
            }
            return Ok(());
        }
        while self.prefix.len() < n {
            self.materialize_one()?;
        }
        Ok(())
    }

    /// Same sequence with period multiplied by `k`.
    pub fn refine(&self, k: usize) -> Result<Self, Error> {
        if k == 1 || self.is_finite() {
            return Ok(self.clone());
        }
        if self.period() * k > MAX_LANES {
            return Err(unsupported("period exceeds the lane budget"));
        }
        let mut lanes = Vec::with_capacity(self.period() * k);
        for t in 0..k as i64 {
            for l in &self.lanes {
                lanes.push(l.subst(k as u64, t + 1 - k as i64));
            }
        }
        Ok(Periodic { prefix: self.prefix.clone(), lanes })
    }

    fn infinite(&self) -> Self {
        let mut s = self.clone();
        if s.lanes.is_empty() {
            s.lanes.push(L::pad());
        }
        s
    }

    /// Block selection: the result at index `k (m - 1) + t` is
    /// `sources[t-1]` at index `a_t m + b_t`.
    pub fn select(k: usize, sources: &[(&Self, u64, i64)]) -> Result<Self, Error> {
        assert_eq!(k, sources.len());
        let srcs: Vec<(Self, u64, i64)> = sources.iter().map(|(s, a, b)| (s.infinite(), *a, *b)).collect();
        let mut r = 1u64;
        for (s, a, _) in &srcs {
            let p = s.period() as u64;
            r = r.lcm(&(p / a.gcd(&p)));
        }
        let r = r as i64;
        if k * r as usize > MAX_LANES {
            return Err(unsupported("period exceeds the lane budget"));
        }
        // Lane (rho, t) covers result index k (r (m' - 1) + rho) + t and reads
        // source index A m' + B.
        let mut specs = Vec::with_capacity(k * r as usize);
        let mut m0 = 1i64;
        for rho in 0..r {
            for (s, a, b) in &srcs {
                let big_a = *a as i64 * r;
                let big_b = *a as i64 * (rho + 1 - r) + b;
                let n0 = s.prefix.len() as i64;
                // smallest m' with A m' + B > n0
                let need = Integer::div_floor(&(n0 - big_b), &big_a) + 1;
                m0 = m0.max(need);
                specs.push((s, big_a, big_b));
            }
        }
        let mut prefix = Vec::new();
        for m in 1..m0 {
            for (s, a, b) in &specs {
                let idx = a * m + b;
                prefix.push(s.get(idx as u64)?);
            }
        }
        let mut lanes = Vec::with_capacity(specs.len());
        for (s, a, b) in &specs {
            let p = s.period() as i64;
            let n0 = s.prefix.len() as i64;
            // source index at the shifted block m' + m0 - 1
            let b_eff = a * (m0 - 1) + b;
            let off = b_eff - n0 - 1;
            let j = off.rem_euclid(p);
            let slope = a / p;
            let c = (off - j) / p + 1;
            lanes.push(s.lanes[j as usize].subst(slope as u64, c));
        }
        Ok(Periodic { prefix, lanes })
    }

    pub fn interleave(a: &Self, b: &Self) -> Result<Self, Error> {
        if a.is_finite() && b.is_finite() {
            let n = a.prefix.len().max(b.prefix.len());
            let mut out = Vec::with_capacity(2 * n);
            for i in 1..=n as u64 {
                out.push(a.get(i)?);
                out.push(b.get(i)?);
            }
            return Ok(Periodic::finite(out));
        }
        Self::select(2, &[(a, 1, 0), (b, 1, 0)])
    }

    pub fn permute(&self, m: &IndexMap) -> Result<Self, Error> {
        m.check_bijective()?;
        if let Some(bound) = m.support_bound() {
            let mut s = self.clone();
            s.materialize_to(bound as usize)?;
            let orig = s.prefix.clone();
            for i in 1..=bound {
                s.prefix[i as usize - 1] = orig[m.apply(i) as usize - 1].clone();
            }
            return Ok(s);
        }
        if self.is_finite() {
            if *m == IndexMap::Identity {
                return Ok(self.clone());
            }
            // Only the preimages of 1..=len carry items; the rest is padding.
            let (k, images) = m.as_block().unwrap();
            let mut last = 0u64;
            for j in 1..=self.prefix.len() as i64 {
                for (t, &(a, b)) in images.iter().enumerate() {
                    let d = j - b;
                    if d > 0 && d % a as i64 == 0 {
                        last = last.max(k * (d as u64 / a - 1) + t as u64 + 1);
                    }
                }
            }
            let items = (1..=last).map(|i| self.get(m.apply(i))).collect::<Result<Vec<_>, _>>()?;
            return Ok(Periodic::finite(items));
        }
        let (k, images) = m.as_block().unwrap();
        let srcs: Vec<(&Self, u64, i64)> = images.iter().map(|&(a, b)| (self, a, b)).collect();
        Self::select(k as usize, &srcs)
    }

    /// Brings two infinite sequences to a common prefix length and period.
    pub fn align<M: Lane>(a: &mut Self, b: &mut Periodic<M>) -> Result<(), Error> {
        let n = a.prefix.len().max(b.prefix.len());
        a.materialize_to(n)?;
        b.materialize_to(n)?;
        let p = a.period().lcm(&b.period());
        *a = a.refine(p / a.period())?;
        *b = b.refine(p / b.period())?;
        Ok(())
    }
}

impl Lane for RuleNF {
    type Item = Q;
    fn at(&self, m: i64) -> Result<Q, Error> {
        self.eval(m).ok_or(Error::InvalidRule("coefficient rule is singular at an index"))
    }
    fn subst(&self, a: u64, b: i64) -> Self {
        self.subst_affine(a, b)
    }
    fn pad() -> Self {
        RuleNF::zero()
    }
}

/// One concrete event reference.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EvItem {
    Member(Arc<FamilyInfo>, i64),
    Fixed(Event),
}

/// Events of one lane: `family(a m + b)` or a fixed event.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EvLane {
    Member { fam: Arc<FamilyInfo>, a: u64, b: i64 },
    Fixed(Event),
}

impl EvItem {
    pub fn event(&self) -> Event {
        match self {
            EvItem::Member(f, k) => f.event(*k),
            EvItem::Fixed(e) => e.clone(),
        }
    }
}

impl Lane for EvLane {
    type Item = EvItem;
    fn at(&self, m: i64) -> Result<EvItem, Error> {
        Ok(match self {
            EvLane::Member { fam, a, b } => {
                let k = *a as i64 * m + b;
                if k < 1 {
                    return Err(invalid("family index below 1"));
                }
                EvItem::Member(fam.clone(), k)
            }
            EvLane::Fixed(e) => EvItem::Fixed(e.clone()),
        })
    }
    fn subst(&self, a2: u64, b2: i64) -> Self {
        match self {
            EvLane::Member { fam, a, b } => EvLane::Member { fam: fam.clone(), a: a * a2, b: *a as i64 * b2 + b },
            EvLane::Fixed(e) => EvLane::Fixed(e.clone()),
        }
    }
    fn pad() -> Self {
        // Empty event of an unspecified space; only paired with zero
        // coefficients, never priced.
        EvLane::Fixed(Event::Finite(crate::measure::Bits::EMPTY))
    }
}

/// Rule `i -> rule(i)` restricted to lane `j` of a sequence with prefix `n0`
/// and period `p`.
pub(crate) fn lane_index_rule(rule: &RuleNF, n0: usize, p: usize, j: usize) -> RuleNF {
    rule.subst_affine(p as u64, n0 as i64 + j as i64 + 1 - p as i64)
}

pub fn compile_coeffs(c: &CoeffSeq) -> Result<Periodic<RuleNF>, Error> {
    c.validate()?;
    compile_coeffs_inner(c)
}

fn compile_coeffs_inner(c: &CoeffSeq) -> Result<Periodic<RuleNF>, Error> {
    Ok(match c {
        CoeffSeq::FiniteList(v) => Periodic::finite(v.clone()),
        CoeffSeq::Geometric { c, r } => Periodic::single(RuleNF::geometric(c / r, r)),
        CoeffSeq::AlternatingPower { c, shift, exponent } => Periodic::single(RuleNF::alternating(
            RatFn::linear_power(shift, -(*exponent as i32)).scale(c),
        )),
        CoeffSeq::Rule(r) => Periodic::single(r.compile()?),
        CoeffSeq::Scaled(base, rule) => {
            let rule = rule.compile()?;
            let mut s = compile_coeffs_inner(base)?;
            for (i, x) in s.prefix.iter_mut().enumerate() {
                *x = &*x * rule.at(i as i64 + 1)?;
            }
            let (n0, p) = (s.prefix.len(), s.period());
            for (j, l) in s.lanes.iter_mut().enumerate() {
                *l = l.mul(&lane_index_rule(&rule, n0, p, j));
            }
            s
        }
        CoeffSeq::Permuted(base, m) => compile_coeffs_inner(base)?.permute(m)?,
        CoeffSeq::Interleaved(a, b) => Periodic::interleave(&compile_coeffs_inner(a)?, &compile_coeffs_inner(b)?)?,
        CoeffSeq::Prefixed(head, tail) => {
            let mut s = compile_coeffs_inner(tail)?;
            let mut prefix = head.clone();
            prefix.append(&mut s.prefix);
            s.prefix = prefix;
            s
        }
    })
}

pub fn compile_events(e: &EventFamily) -> Result<Periodic<EvLane>, Error> {
    Ok(match e {
        EventFamily::ExplicitList(v) => Periodic::finite(v.iter().cloned().map(EvItem::Fixed).collect()),
        EventFamily::Base(BaseFamily::Constant(ev)) => Periodic::single(EvLane::Fixed(ev.clone())),
        EventFamily::Base(f) => Periodic::single(EvLane::Member { fam: Arc::new(f.info()?), a: 1, b: 0 }),
        EventFamily::Reindexed(base, m) => compile_events(base)?.permute(m)?,
        EventFamily::Interleaved(a, b) => Periodic::interleave(&compile_events(a)?, &compile_events(b)?)?,
        EventFamily::Prefixed(head, tail) => {
            let mut s = compile_events(tail)?;
            let mut prefix: Vec<EvItem> = head.iter().cloned().map(EvItem::Fixed).collect();
            prefix.append(&mut s.prefix);
            s.prefix = prefix;
            s
        }
    })
}

/// A portfolio in eventually periodic form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Compiled {
    pub space: Space,
    pub prefix: Vec<(Q, EvItem)>,
    pub lanes: Vec<(RuleNF, EvLane)>,
}

impl Compiled {
    pub fn new(pf: &Portfolio) -> Result<Self, Error> {
        pf.validate()?;
        let mut c = compile_coeffs(&pf.coeffs)?;
        let mut e = compile_events(&pf.events)?;
        if c.is_finite() != e.is_finite() {
            return Err(invalid("coefficients and events must index the same range"));
        }
        if c.is_finite() {
            let n = c.prefix.len().max(e.prefix.len());
            c.materialize_to(n)?;
            e.materialize_to(n)?;
        } else {
            Periodic::align(&mut c, &mut e)?;
        }
        let prefix = c.prefix.into_iter().zip(e.prefix).collect();
        let lanes = c.lanes.into_iter().zip(e.lanes).collect();
        Ok(Compiled { space: pf.space.clone(), prefix, lanes })
    }

    pub fn period(&self) -> usize {
        self.lanes.len()
    }

    /// Global index of lane `j` at block `m`.
    pub fn index_of(&self, j: usize, m: i64) -> i64 {
        self.prefix.len() as i64 + (m - 1) * self.period() as i64 + j as i64 + 1
    }

    /// Same portfolio with period multiplied by `k`.
    pub fn refine(&self, k: usize) -> Result<Self, Error> {
        if k == 1 || self.lanes.is_empty() {
            return Ok(self.clone());
        }
        if self.period() * k > MAX_LANES {
            return Err(unsupported("period exceeds the lane budget"));
        }
        let mut lanes = Vec::with_capacity(self.period() * k);
        for t in 0..k as i64 {
            for (c, e) in &self.lanes {
                lanes.push((c.subst(k as u64, t + 1 - k as i64), e.subst(k as u64, t + 1 - k as i64)));
            }
        }
        Ok(Compiled { space: self.space.clone(), prefix: self.prefix.clone(), lanes })
    }

    /// Bet at 1-based index `i`.
    pub fn bet(&self, i: u64) -> Result<(Q, EvItem), Error> {
        let n0 = self.prefix.len() as u64;
        if i >= 1 && i <= n0 {
            return Ok(self.prefix[i as usize - 1].clone());
        }
        let p = self.period() as u64;
        if p == 0 {
            return Ok((Q::zero(), EvLane::pad().at(1)?));
        }
        let off = i - n0 - 1;
        let (c, e) = &self.lanes[(off % p) as usize];
        let m = (off / p) as i64 + 1;
        Ok((c.at(m)?, e.at(m)?))
    }
}

/// Source of prices for portfolio evaluation.
#[derive(Clone, Copy, Debug)]
pub enum Pricing<'a> {
    Assigned(&'a PriceAssignment),
    Measure(&'a CanonicalMeasure),
}

impl Pricing<'_> {
    fn event_price(&self, e: &Event) -> Result<Q, Error> {
        match self {
            Pricing::Assigned(p) => p.get(e).cloned().ok_or_else(|| Error::MissingPrice(alloc::format!("{e}"))),
            Pricing::Measure(m) => measure_of(m, e),
        }
    }

    /// Price rule `k -> P(A_k)` of a family.
    pub fn family_rule(&self, fam: &FamilyInfo) -> Result<RuleNF, Error> {
        match self {
            Pricing::Assigned(p) => match p.rule(&fam.base) {
                Some(r) => r.compile(),
                None => match &fam.base {
                    BaseFamily::Constant(e) => Ok(RuleNF::constant(self.event_price(e)?)),
                    _ => Err(Error::MissingPrice("no price rule for an indexed family".into())),
                },
            },
            Pricing::Measure(m) => {
                let kind_ok = match (&fam.base, m) {
                    (BaseFamily::ChainIntervals { .. } | BaseFamily::ChainDifferences { .. }, CanonicalMeasure::LebesgueUnit) => true,
                    (BaseFamily::Coordinates | BaseFamily::FirstSuccess, CanonicalMeasure::FairCoin) => true,
                    (BaseFamily::Constant(_), _) => true,
                    _ => false,
                };
                if !kind_ok {
                    return Err(Error::SpaceMismatch(alloc::format!("family not measurable by {}", m.name())));
                }
                Ok(match &fam.base {
                    BaseFamily::ChainIntervals { .. } => fam.r.clone().unwrap(),
                    BaseFamily::ChainDifferences { .. } => {
                        let r = fam.r.clone().unwrap();
                        r.sub(&r.subst_affine(1, 1))
                    }
                    BaseFamily::Coordinates => RuleNF::constant(Q::new(1.into(), 2.into())),
                    BaseFamily::FirstSuccess => RuleNF::geometric(qi(1), &Q::new(1.into(), 2.into())),
                    BaseFamily::Constant(e) => RuleNF::constant(measure_of(m, e)?),
                })
            }
        }
    }

    pub fn item_price(&self, item: &EvItem) -> Result<Q, Error> {
        match item {
            EvItem::Fixed(e) => self.event_price(e),
            EvItem::Member(fam, k) => {
                if let Pricing::Assigned(p) = self {
                    if p.rule(&fam.base).is_none() {
                        return self.event_price(&fam.event(*k));
                    }
                }
                self.family_rule(fam)?.at(*k)
            }
        }
    }

    /// Price of lane events as a rule in the block index.
    pub fn lane_rule(&self, lane: &EvLane) -> Result<RuleNF, Error> {
        match lane {
            EvLane::Fixed(e) => Ok(RuleNF::constant(self.event_price(e)?)),
            EvLane::Member { fam, a, b } => Ok(self.family_rule(fam)?.subst_affine(*a, *b)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn harmonic_alt() -> Periodic<RuleNF> {
        compile_coeffs(&CoeffSeq::AlternatingPower { c: qi(1), shift: qi(0), exponent: 1 }).unwrap()
    }

    fn direct(i: u64) -> Q {
        let s = if i % 2 == 0 { 1 } else { -1 };
        q(s, i as i64)
    }

    #[test]
    fn lanes_reproduce_terms() {
        let s = harmonic_alt();
        for i in 1..30 {
            assert_eq!(s.get(i).unwrap(), direct(i));
        }
        let r = s.refine(3).unwrap();
        for i in 1..30 {
            assert_eq!(r.get(i).unwrap(), direct(i));
        }
        let mut m = s.clone();
        m.materialize_to(5).unwrap();
        for i in 1..30 {
            assert_eq!(m.get(i).unwrap(), direct(i));
        }
    }

    #[test]
    fn permutation_matches_index_map() {
        let s = harmonic_alt();
        for map in [
            IndexMap::BlockPattern { k: 3, images: alloc::vec![(4, -3), (4, -1), (2, 0)] },
            IndexMap::BlockPattern { k: 3, images: alloc::vec![(2, -1), (4, -2), (4, 0)] },
            IndexMap::PairInterleave,
            IndexMap::FiniteSwap(alloc::vec![(1, 5), (2, 3)]),
        ] {
            let mut base = s.clone();
            base.materialize_to(3).unwrap();
            let p = base.permute(&map).unwrap();
            for i in 1..60 {
                assert_eq!(p.get(i).unwrap(), direct(map.apply(i)), "{map:?} at {i}");
            }
        }
    }

    #[test]
    fn interleave_alternates() {
        let a = harmonic_alt();
        let b = compile_coeffs(&CoeffSeq::Geometric { c: qi(1), r: q(1, 2) }).unwrap();
        let mut b3 = b.clone();
        b3.materialize_to(2).unwrap();
        let s = Periodic::interleave(&a, &b3.refine(2).unwrap()).unwrap();
        for i in 1..40u64 {
            let want = if i % 2 == 1 { direct(i.div_ceil(2)) } else { b.get(i / 2).unwrap() };
            assert_eq!(s.get(i).unwrap(), want);
        }
    }
}
