//! Closed-form indexed event families and their pointwise membership.

use alloc::vec::Vec;

use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::invalid;
use crate::measure::{BitSeq, Event, Interval, Outcome, Space};
use crate::rational::Q;
use crate::rule::{IndexRule, Limit, RuleNF};
use crate::Error;

/// A countable family `k -> A_k`, `k >= 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BaseFamily {
    /// `A_k = (0, r(k))` with the given endpoint flags; `r` strictly decreasing.
    ChainIntervals { r: IndexRule, lo_closed: bool, hi_closed: bool },
    /// `A_k \ A_{k+1}` of the chain with the same `r` and upper flag.
    ChainDifferences { r: IndexRule, hi_closed: bool },
    /// `{w : w_k = 1}` on binary sequences.
    Coordinates,
    /// `{w : w_1 = ... = w_{k-1} = 0, w_k = 1}`.
    FirstSuccess,
    /// `A_k = E` for every `k`.
    Constant(Event),
}

/// Index set `{k >= 1}` as a union of half-open ranges `[lo, hi)`; `None`
/// means unbounded.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Membership {
    pub ranges: Vec<(i64, Option<i64>)>,
}

impl Membership {
    pub fn none() -> Self {
        Membership::default()
    }

    pub fn all() -> Self {
        Membership { ranges: alloc::vec![(1, None)] }
    }

    pub fn single(k: i64) -> Self {
        Membership { ranges: alloc::vec![(k, Some(k + 1))] }
    }

    pub fn contains(&self, k: i64) -> bool {
        self.ranges.iter().any(|(lo, hi)| k >= *lo && hi.is_none_or(|h| k < h))
    }

    /// Members are eventually all in (`Some(true)`) or all out.
    pub fn tail(&self) -> bool {
        self.ranges.iter().any(|(_, hi)| hi.is_none())
    }

    /// First index from which membership is constant.
    pub fn settled_from(&self) -> i64 {
        self.ranges
            .iter()
            .map(|(lo, hi)| match hi {
                Some(h) => *h,
                None => *lo,
            })
            .max()
            .unwrap_or(1)
    }
}

/// Compiled view of a [`BaseFamily`] with its structural facts checked.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FamilyInfo {
    pub base: BaseFamily,
    pub r: Option<RuleNF>,
    pub r_inf: Option<Q>,
}

impl BaseFamily {
    pub fn space_kind(&self) -> Option<Space> {
        match self {
            BaseFamily::ChainIntervals { .. } | BaseFamily::ChainDifferences { .. } => Some(Space::UnitInterval),
            BaseFamily::Coordinates | BaseFamily::FirstSuccess => Some(Space::BinarySequences),
            BaseFamily::Constant(_) => None,
        }
    }

    pub fn is_disjoint(&self) -> bool {
        matches!(self, BaseFamily::ChainDifferences { .. } | BaseFamily::FirstSuccess)
    }

    pub fn info(&self) -> Result<FamilyInfo, Error> {
        let (r, r_inf) = match self {
            BaseFamily::ChainIntervals { r, .. } | BaseFamily::ChainDifferences { r, .. } => {
                let r = r.compile()?;
                let diff = r.sub(&r.subst_affine(1, 1));
                if !diff.positive_from(1) {
                    return Err(invalid("chain rule is not provably strictly decreasing"));
                }
                let lim = match r.limit() {
                    Limit::Finite(v) if !v.is_negative() => v,
                    _ => return Err(invalid("chain rule must converge to a nonnegative limit")),
                };
                let r1 = r.eval(1).ok_or_else(|| invalid("chain rule singular at 1"))?;
                if r1 > Q::one() {
                    return Err(invalid("chain rule must satisfy r(1) <= 1"));
                }
                (Some(r), Some(lim))
            }
            _ => (None, None),
        };
        Ok(FamilyInfo { base: self.clone(), r, r_inf })
    }
}

impl FamilyInfo {
    fn r_at(&self, k: i64) -> Q {
        self.r.as_ref().unwrap().eval(k).expect("chain rule regular for k >= 1")
    }

    pub fn event(&self, k: i64) -> Event {
        match &self.base {
            BaseFamily::ChainIntervals { lo_closed, hi_closed, .. } => {
                Event::interval(Interval::new(Q::zero(), self.r_at(k), *lo_closed, *hi_closed))
            }
            BaseFamily::ChainDifferences { hi_closed, .. } => {
                Event::interval(Interval::new(self.r_at(k + 1), self.r_at(k), !hi_closed, *hi_closed))
            }
            BaseFamily::Coordinates => Event::coord(k as u64),
            BaseFamily::FirstSuccess => {
                let mut c = crate::measure::Cylinder::new();
                for j in 1..k as u64 {
                    c.insert(j, false);
                }
                c.insert(k as u64, true);
                Event::Cylinders(crate::measure::CylinderUnion::single(c))
            }
            BaseFamily::Constant(e) => e.clone(),
        }
    }

    /// Union of all members for the disjoint families that have one in the
    /// event grammar.
    pub fn disjoint_union(&self) -> Option<Event> {
        match &self.base {
            BaseFamily::ChainDifferences { hi_closed, .. } => {
                let r1 = self.r_at(1);
                Some(Event::interval(Interval::new(self.r_inf.clone().unwrap(), r1, false, *hi_closed)))
            }
            _ => None,
        }
    }

    /// Members of the chain containing `x`: `[1, K)` or everything.
    fn chain_members(&self, x: &Q, lo_closed: bool, hi_closed: bool) -> Membership {
        let lo_ok = x.is_positive() || (x.is_zero() && lo_closed);
        if !lo_ok {
            return Membership::none();
        }
        if x <= self.r_inf.as_ref().unwrap() {
            return Membership::all();
        }
        let inside = |k: i64| {
            let r = self.r_at(k);
            x < &r || (hi_closed && x == &r)
        };
        if !inside(1) {
            return Membership::none();
        }
        let mut hi = 2i64;
        while inside(hi) {
            hi = hi.saturating_mul(2);
        }
        let mut lo = hi / 2;
        // inside(lo), !inside(hi)
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if inside(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Membership { ranges: alloc::vec![(1, Some(hi))] }
    }

    pub fn membership(&self, w: &Outcome) -> Result<Membership, Error> {
        let mismatch = || Error::SpaceMismatch("outcome does not match family".into());
        Ok(match (&self.base, w) {
            (BaseFamily::ChainIntervals { lo_closed, hi_closed, .. }, Outcome::Unit(x)) => {
                self.chain_members(x, *lo_closed, *hi_closed)
            }
            (BaseFamily::ChainDifferences { hi_closed, .. }, Outcome::Unit(x)) => {
                let m = self.chain_members(x, false, *hi_closed);
                match m.ranges.as_slice() {
                    [(1, Some(k))] if *k >= 2 => Membership::single(k - 1),
                    _ => Membership::none(),
                }
            }
            (BaseFamily::Coordinates, Outcome::Bits(s)) => coordinate_members(s),
            (BaseFamily::FirstSuccess, Outcome::Bits(s)) => match first_success(s) {
                Some(k) => Membership::single(k),
                None => Membership::none(),
            },
            (BaseFamily::Constant(e), w) => {
                if e.indicator(w)? {
                    Membership::all()
                } else {
                    Membership::none()
                }
            }
            _ => return Err(mismatch()),
        })
    }

    /// Points where the eventual membership pattern of this family can
    /// change (unit interval only).
    pub fn critical_points(&self) -> Vec<Q> {
        match &self.base {
            BaseFamily::ChainIntervals { .. } | BaseFamily::ChainDifferences { .. } => {
                alloc::vec![Q::zero(), self.r_inf.clone().unwrap(), self.r_at(1)]
            }
            BaseFamily::Constant(Event::Intervals(u)) => u.endpoints().cloned().collect(),
            _ => Vec::new(),
        }
    }

    /// Coordinates mentioned by constant cylinder events.
    pub fn critical_coords(&self) -> Vec<u64> {
        match &self.base {
            BaseFamily::Constant(Event::Cylinders(c)) => c.coords(),
            _ => Vec::new(),
        }
    }

    /// Members can be an arbitrary index subset (independent coordinates).
    pub fn free_patterns(&self) -> bool {
        matches!(self.base, BaseFamily::Coordinates)
    }

    /// Some outcome lies in infinitely many members.
    pub fn has_infinite_membership(&self, space: &Space) -> bool {
        match &self.base {
            BaseFamily::ChainIntervals { lo_closed, .. } => {
                *lo_closed || self.r_inf.as_ref().is_some_and(|r| r.is_positive())
            }
            BaseFamily::ChainDifferences { .. } | BaseFamily::FirstSuccess => false,
            BaseFamily::Coordinates => true,
            BaseFamily::Constant(e) => !e.is_empty() && space.check_event(e).is_ok(),
        }
    }
}

fn coordinate_members(s: &BitSeq) -> Membership {
    let mut ranges = Vec::new();
    if s.tail {
        let mut start = 1i64;
        for (k, b) in &s.explicit {
            if !*b {
                let k = *k as i64;
                if k > start {
                    ranges.push((start, Some(k)));
                }
                start = k + 1;
            }
        }
        ranges.push((start, None));
    } else {
        for (k, b) in &s.explicit {
            if *b {
                ranges.push((*k as i64, Some(*k as i64 + 1)));
            }
        }
    }
    Membership { ranges }
}

fn first_success(s: &BitSeq) -> Option<i64> {
    let mut k = 1u64;
    loop {
        match s.explicit.get(&k) {
            Some(true) => return k.to_i64(),
            Some(false) => {}
            None if s.tail => return k.to_i64(),
            None if k >= s.tail_start() => return None,
            None => {}
        }
        k += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};
    use alloc::collections::BTreeMap;

    fn harmonic_chain(lo_closed: bool) -> FamilyInfo {
        BaseFamily::ChainIntervals { r: IndexRule::reciprocal(qi(1), qi(1)), lo_closed, hi_closed: false }
            .info()
            .unwrap()
    }

    #[test]
    fn chain_membership_is_initial_segment() {
        let f = harmonic_chain(false);
        // w in (0, 1/(k+1)) iff k + 1 < 1/w
        let m = f.membership(&Outcome::Unit(q(1, 10))).unwrap();
        assert_eq!(m.ranges, alloc::vec![(1, Some(9))]);
        for k in 1..20 {
            assert_eq!(m.contains(k), f.event(k).indicator(&Outcome::Unit(q(1, 10))).unwrap());
        }
        assert_eq!(f.membership(&Outcome::Unit(qi(0))).unwrap(), Membership::none());
        assert_eq!(harmonic_chain(true).membership(&Outcome::Unit(qi(0))).unwrap(), Membership::all());
    }

    #[test]
    fn differences_hit_once() {
        let d = BaseFamily::ChainDifferences { r: IndexRule::reciprocal(qi(1), qi(1)), hi_closed: false }
            .info()
            .unwrap();
        for w in [q(1, 10), q(1, 3), q(2, 5), q(1, 7)] {
            let m = d.membership(&Outcome::Unit(w.clone())).unwrap();
            for k in 1..30 {
                assert_eq!(m.contains(k), d.event(k).indicator(&Outcome::Unit(w.clone())).unwrap());
            }
        }
        assert_eq!(
            d.disjoint_union().unwrap(),
            Event::interval(Interval::open(qi(0), q(1, 2)))
        );
    }

    #[test]
    fn rejects_increasing_chain() {
        let bad = BaseFamily::ChainIntervals { r: IndexRule::power(q(1, 100), qi(0), 1), lo_closed: false, hi_closed: false };
        assert!(bad.info().is_err());
    }

    #[test]
    fn binary_families() {
        let s = BitSeq { explicit: BTreeMap::from([(1, false), (2, false), (3, true)]), tail: false };
        let fs = BaseFamily::FirstSuccess.info().unwrap();
        assert_eq!(fs.membership(&Outcome::Bits(s.clone())).unwrap(), Membership::single(3));
        let co = BaseFamily::Coordinates.info().unwrap();
        let ones = BitSeq { explicit: BTreeMap::from([(2, false)]), tail: true };
        let m = co.membership(&Outcome::Bits(ones.clone())).unwrap();
        for k in 1..10 {
            assert_eq!(m.contains(k), co.event(k).indicator(&Outcome::Bits(ones.clone())).unwrap());
            assert_eq!(
                fs.membership(&Outcome::Bits(s.clone())).unwrap().contains(k),
                fs.event(k).indicator(&Outcome::Bits(s.clone())).unwrap()
            );
        }
        assert_eq!(fs.membership(&Outcome::Bits(BitSeq::zeros())).unwrap(), Membership::none());
    }
}
