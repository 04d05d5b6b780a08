//! Sample spaces, outcomes and events.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_traits::{One, Signed, Zero};

use crate::error::invalid;
use crate::rational::{format_q, Q};
use crate::Error;

/// Finite spaces hold at most this many outcomes (one bit each).
pub const MAX_FINITE: usize = 128;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Space {
    Finite(Vec<String>),
    UnitInterval,
    BinarySequences,
}

impl Space {
    pub fn finite<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Space, Error> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() || labels.len() > MAX_FINITE {
            return Err(invalid("finite space needs 1..=128 outcomes"));
        }
        for (i, l) in labels.iter().enumerate() {
            if l.is_empty() || labels[..i].contains(l) {
                return Err(invalid("finite outcome labels must be distinct and nonempty"));
            }
        }
        Ok(Space::Finite(labels))
    }

    pub fn size(&self) -> Option<usize> {
        match self {
            Space::Finite(l) => Some(l.len()),
            _ => None,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Space::Finite(_) => "finite",
            Space::UnitInterval => "unit-interval",
            Space::BinarySequences => "binary-sequences",
        }
    }

    pub fn whole(&self) -> Event {
        match self {
            Space::Finite(l) => Event::Finite(Bits::full(l.len())),
            Space::UnitInterval => Event::Intervals(IntervalUnion::unit()),
            Space::BinarySequences => Event::Cylinders(CylinderUnion::full()),
        }
    }

    pub fn empty(&self) -> Event {
        match self {
            Space::Finite(_) => Event::Finite(Bits::EMPTY),
            Space::UnitInterval => Event::Intervals(IntervalUnion::default()),
            Space::BinarySequences => Event::Cylinders(CylinderUnion::default()),
        }
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        match self {
            Space::Finite(l) => l.iter().position(|x| x == label),
            _ => None,
        }
    }

    pub fn check_outcome(&self, w: &Outcome) -> Result<(), Error> {
        match (self, w) {
            (Space::Finite(l), Outcome::Finite(i)) if *i < l.len() => Ok(()),
            (Space::UnitInterval, Outcome::Unit(x)) if !x.is_negative() && x <= &Q::one() => Ok(()),
            (Space::BinarySequences, Outcome::Bits(_)) => Ok(()),
            _ => Err(Error::SpaceMismatch(alloc::format!("outcome not in {} space", self.kind_name()))),
        }
    }

    pub fn check_event(&self, e: &Event) -> Result<(), Error> {
        match (self, e) {
            (Space::Finite(l), Event::Finite(b)) if b.0 & !Bits::full(l.len()).0 == 0 => Ok(()),
            (Space::UnitInterval, Event::Intervals(_)) | (Space::BinarySequences, Event::Cylinders(_)) => Ok(()),
            _ => Err(Error::SpaceMismatch(alloc::format!("event not in {} space", self.kind_name()))),
        }
    }
}

/// Bitset over the outcomes of a finite space.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bits(pub u128);

impl Bits {
    pub const EMPTY: Bits = Bits(0);

    pub fn full(n: usize) -> Bits {
        if n >= 128 {
            Bits(u128::MAX)
        } else {
            Bits((1u128 << n) - 1)
        }
    }

    pub fn single(i: usize) -> Bits {
        Bits(1u128 << i)
    }

    pub fn from_indices(ix: impl IntoIterator<Item = usize>) -> Bits {
        Bits(ix.into_iter().fold(0, |acc, i| acc | (1u128 << i)))
    }

    pub fn contains(self, i: usize) -> bool {
        i < 128 && self.0 >> i & 1 == 1
    }

    pub fn indices(self) -> impl Iterator<Item = usize> {
        (0..128).filter(move |&i| self.contains(i))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Interval {
    pub lo: Q,
    pub hi: Q,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn new(lo: Q, hi: Q, lo_closed: bool, hi_closed: bool) -> Interval {
        Interval { lo, hi, lo_closed, hi_closed }
    }

    pub fn open(lo: Q, hi: Q) -> Interval {
        Interval::new(lo, hi, false, false)
    }

    /// `[lo, hi)`.
    pub fn left_closed(lo: Q, hi: Q) -> Interval {
        Interval::new(lo, hi, true, false)
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi || (self.lo == self.hi && !(self.lo_closed && self.hi_closed))
    }

    pub fn contains(&self, x: &Q) -> bool {
        let above = if self.lo_closed { x >= &self.lo } else { x > &self.lo };
        let below = if self.hi_closed { x <= &self.hi } else { x < &self.hi };
        above && below
    }

    pub fn length(&self) -> Q {
        if self.is_empty() {
            Q::zero()
        } else {
            &self.hi - &self.lo
        }
    }

    fn intersect(&self, o: &Interval) -> Interval {
        let (lo, lo_closed) = if self.lo > o.lo {
            (self.lo.clone(), self.lo_closed)
        } else if o.lo > self.lo {
            (o.lo.clone(), o.lo_closed)
        } else {
            (self.lo.clone(), self.lo_closed && o.lo_closed)
        };
        let (hi, hi_closed) = if self.hi < o.hi {
            (self.hi.clone(), self.hi_closed)
        } else if o.hi < self.hi {
            (o.hi.clone(), o.hi_closed)
        } else {
            (self.hi.clone(), self.hi_closed && o.hi_closed)
        };
        Interval { lo, hi, lo_closed, hi_closed }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{},{}{}",
            if self.lo_closed { '[' } else { '(' },
            format_q(&self.lo),
            format_q(&self.hi),
            if self.hi_closed { ']' } else { ')' }
        )
    }
}

/// Sorted, pairwise disjoint, non-adjacent intervals inside `[0, 1]`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IntervalUnion(Vec<Interval>);

impl IntervalUnion {
    pub fn unit() -> IntervalUnion {
        IntervalUnion(alloc::vec![Interval::new(Q::zero(), Q::one(), true, true)])
    }

    pub fn new(parts: impl IntoIterator<Item = Interval>) -> IntervalUnion {
        let unit = Interval::new(Q::zero(), Q::one(), true, true);
        let mut v: Vec<Interval> = parts
            .into_iter()
            .map(|i| i.intersect(&unit))
            .filter(|i| !i.is_empty())
            .collect();
        v.sort_by(|a, b| a.lo.cmp(&b.lo).then(b.lo_closed.cmp(&a.lo_closed)));
        let mut out: Vec<Interval> = Vec::new();
        for i in v {
            if let Some(last) = out.last_mut() {
                let touches = i.lo < last.hi || (i.lo == last.hi && (i.lo_closed || last.hi_closed));
                if touches {
                    if i.hi > last.hi {
                        last.hi = i.hi;
                        last.hi_closed = i.hi_closed;
                    } else if i.hi == last.hi {
                        last.hi_closed |= i.hi_closed;
                    }
                    continue;
                }
            }
            out.push(i);
        }
        IntervalUnion(out)
    }

    pub fn parts(&self) -> &[Interval] {
        &self.0
    }

    pub fn contains(&self, x: &Q) -> bool {
        self.0.iter().any(|i| i.contains(x))
    }

    pub fn length(&self) -> Q {
        self.0.iter().map(Interval::length).fold(Q::zero(), |a, b| a + b)
    }

    pub fn union(&self, o: &IntervalUnion) -> IntervalUnion {
        IntervalUnion::new(self.0.iter().chain(o.0.iter()).cloned())
    }

    pub fn intersect(&self, o: &IntervalUnion) -> IntervalUnion {
        let mut v = Vec::new();
        for a in &self.0 {
            for b in &o.0 {
                v.push(a.intersect(b));
            }
        }
        IntervalUnion::new(v)
    }

    /// Complement within `[0, 1]`.
    pub fn complement(&self) -> IntervalUnion {
        let mut v = Vec::new();
        let mut lo = Q::zero();
        let mut lo_closed = true;
        for i in &self.0 {
            v.push(Interval::new(lo.clone(), i.lo.clone(), lo_closed, !i.lo_closed));
            lo = i.hi.clone();
            lo_closed = !i.hi_closed;
        }
        v.push(Interval::new(lo, Q::one(), lo_closed, true));
        IntervalUnion::new(v)
    }

    /// Every endpoint, used to build cell representatives.
    pub fn endpoints(&self) -> impl Iterator<Item = &Q> {
        self.0.iter().flat_map(|i| [&i.lo, &i.hi])
    }
}

/// Finite map coordinate -> bit; coordinates are 1-based.
pub type Cylinder = BTreeMap<u64, bool>;

/// Finite union of cylinders without duplicates.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CylinderUnion(Vec<Cylinder>);

impl CylinderUnion {
    pub fn full() -> CylinderUnion {
        CylinderUnion(alloc::vec![Cylinder::new()])
    }

    pub fn new(cyls: impl IntoIterator<Item = Cylinder>) -> CylinderUnion {
        let mut v: Vec<Cylinder> = cyls.into_iter().collect();
        v.sort();
        v.dedup();
        CylinderUnion(v)
    }

    pub fn single(c: Cylinder) -> CylinderUnion {
        CylinderUnion(alloc::vec![c])
    }

    pub fn coord(k: u64, bit: bool) -> CylinderUnion {
        CylinderUnion::single(Cylinder::from([(k, bit)]))
    }

    pub fn cylinders(&self) -> &[Cylinder] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn coords(&self) -> Vec<u64> {
        let mut c: Vec<u64> = self.0.iter().flat_map(|m| m.keys().copied()).collect();
        c.sort_unstable();
        c.dedup();
        c
    }

    pub fn contains(&self, w: &BitSeq) -> bool {
        self.0.iter().any(|c| c.iter().all(|(k, b)| w.bit(*k) == *b))
    }

    pub fn union(&self, o: &CylinderUnion) -> CylinderUnion {
        CylinderUnion::new(self.0.iter().chain(o.0.iter()).cloned())
    }

    pub fn intersect(&self, o: &CylinderUnion) -> CylinderUnion {
        let mut v = Vec::new();
        for a in &self.0 {
            'pair: for b in &o.0 {
                let mut m = a.clone();
                for (k, bit) in b {
                    if let Some(x) = m.insert(*k, *bit) {
                        if x != *bit {
                            continue 'pair;
                        }
                    }
                }
                v.push(m);
            }
        }
        CylinderUnion::new(v)
    }

    /// Complement by enumeration over the mentioned coordinates.
    pub fn complement(&self) -> Result<CylinderUnion, Error> {
        let coords = self.coords();
        if coords.len() > 20 {
            return Err(crate::error::unsupported("cylinder complement over more than 20 coordinates"));
        }
        let mut v = Vec::new();
        for mask in 0u64..(1u64 << coords.len()) {
            let c: Cylinder = coords.iter().enumerate().map(|(i, k)| (*k, mask >> i & 1 == 1)).collect();
            let w = BitSeq { explicit: c.clone(), tail: false };
            if !self.contains(&w) {
                v.push(c);
            }
        }
        Ok(CylinderUnion::new(v))
    }

    /// Fair-coin measure by splitting on coordinates.
    pub fn fair_measure(&self) -> Q {
        fn go(cyls: &[Cylinder]) -> Q {
            if cyls.is_empty() {
                return Q::zero();
            }
            if cyls.iter().any(|c| c.is_empty()) {
                return Q::one();
            }
            let k = *cyls[0].keys().next().unwrap();
            let half = Q::new(1.into(), 2.into());
            let mut total = Q::zero();
            for bit in [false, true] {
                let sub: Vec<Cylinder> = cyls
                    .iter()
                    .filter(|c| c.get(&k).is_none_or(|b| *b == bit))
                    .map(|c| {
                        let mut c = c.clone();
                        c.remove(&k);
                        c
                    })
                    .collect();
                total += go(&sub) * &half;
            }
            total
        }
        go(&self.0)
    }
}

/// Binary sequence with finitely many explicit coordinates and a default tail.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitSeq {
    pub explicit: BTreeMap<u64, bool>,
    pub tail: bool,
}

impl BitSeq {
    pub fn zeros() -> BitSeq {
        BitSeq { explicit: BTreeMap::new(), tail: false }
    }

    pub fn bit(&self, k: u64) -> bool {
        self.explicit.get(&k).copied().unwrap_or(self.tail)
    }

    /// First index at which the explicit part no longer applies.
    pub fn tail_start(&self) -> u64 {
        self.explicit.keys().next_back().map_or(1, |k| k + 1)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Outcome {
    Finite(usize),
    Unit(Q),
    Bits(BitSeq),
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Finite(i) => write!(f, "#{i}"),
            Outcome::Unit(x) => write!(f, "{}", crate::rational::format_q(x)),
            Outcome::Bits(s) => {
                for (k, b) in &s.explicit {
                    write!(f, "w{k}={} ", u8::from(*b))?;
                }
                write!(f, "else {}", u8::from(s.tail))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Event {
    Finite(Bits),
    Intervals(IntervalUnion),
    Cylinders(CylinderUnion),
}

fn mismatch() -> Error {
    Error::SpaceMismatch("operands belong to different spaces".into())
}

impl Event {
    pub fn interval(i: Interval) -> Event {
        Event::Intervals(IntervalUnion::new([i]))
    }

    pub fn finite(ix: impl IntoIterator<Item = usize>) -> Event {
        Event::Finite(Bits::from_indices(ix))
    }

    pub fn coord(k: u64) -> Event {
        Event::Cylinders(CylinderUnion::coord(k, true))
    }

    pub fn indicator(&self, w: &Outcome) -> Result<bool, Error> {
        match (self, w) {
            (Event::Finite(b), Outcome::Finite(i)) => Ok(b.contains(*i)),
            (Event::Intervals(u), Outcome::Unit(x)) => Ok(u.contains(x)),
            (Event::Cylinders(c), Outcome::Bits(s)) => Ok(c.contains(s)),
            _ => Err(mismatch()),
        }
    }

    pub fn union(&self, o: &Event) -> Result<Event, Error> {
        match (self, o) {
            (Event::Finite(a), Event::Finite(b)) => Ok(Event::Finite(Bits(a.0 | b.0))),
            (Event::Intervals(a), Event::Intervals(b)) => Ok(Event::Intervals(a.union(b))),
            (Event::Cylinders(a), Event::Cylinders(b)) => Ok(Event::Cylinders(a.union(b))),
            _ => Err(mismatch()),
        }
    }

    pub fn intersect(&self, o: &Event) -> Result<Event, Error> {
        match (self, o) {
            (Event::Finite(a), Event::Finite(b)) => Ok(Event::Finite(Bits(a.0 & b.0))),
            (Event::Intervals(a), Event::Intervals(b)) => Ok(Event::Intervals(a.intersect(b))),
            (Event::Cylinders(a), Event::Cylinders(b)) => Ok(Event::Cylinders(a.intersect(b))),
            _ => Err(mismatch()),
        }
    }

    pub fn complement(&self, space: &Space) -> Result<Event, Error> {
        space.check_event(self)?;
        match self {
            Event::Finite(a) => Ok(Event::Finite(Bits(!a.0 & Bits::full(space.size().unwrap()).0))),
            Event::Intervals(a) => Ok(Event::Intervals(a.complement())),
            Event::Cylinders(a) => Ok(Event::Cylinders(a.complement()?)),
        }
    }

    pub fn difference(&self, o: &Event, space: &Space) -> Result<Event, Error> {
        self.intersect(&o.complement(space)?)
    }

    /// Emptiness; exact for every representation.
    pub fn is_empty(&self) -> bool {
        match self {
            Event::Finite(b) => b.is_empty(),
            Event::Intervals(u) => u.parts().is_empty(),
            Event::Cylinders(c) => c.is_empty(),
        }
    }

    pub fn is_disjoint(&self, o: &Event) -> Result<bool, Error> {
        Ok(self.intersect(o)?.is_empty())
    }

    /// Set equality (structural after normalization, except cylinder unions
    /// which are compared by two-way containment).
    pub fn same_set(&self, o: &Event, space: &Space) -> Result<bool, Error> {
        match (self, o) {
            (Event::Cylinders(_), Event::Cylinders(_)) => {
                Ok(self.difference(o, space)?.is_empty() && o.difference(self, space)?.is_empty())
            }
            _ => {
                space.check_event(o)?;
                Ok(self == o)
            }
        }
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Event::Finite(b) => {
                write!(f, "{{")?;
                for (n, i) in b.indices().enumerate() {
                    if n > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{i}")?;
                }
                write!(f, "}}")
            }
            Event::Intervals(u) => {
                if u.parts().is_empty() {
                    return write!(f, "∅");
                }
                for (n, i) in u.parts().iter().enumerate() {
                    if n > 0 {
                        write!(f, "∪")?;
                    }
                    write!(f, "{i}")?;
                }
                Ok(())
            }
            Event::Cylinders(c) => {
                if c.is_empty() {
                    return write!(f, "∅");
                }
                for (n, cyl) in c.cylinders().iter().enumerate() {
                    if n > 0 {
                        write!(f, "∪")?;
                    }
                    write!(f, "{{")?;
                    for (m, (k, b)) in cyl.iter().enumerate() {
                        if m > 0 {
                            write!(f, ",")?;
                        }
                        write!(f, "{k}={}", *b as u8)?;
                    }
                    write!(f, "}}")?;
                }
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    #[test]
    fn indicator_examples() {
        let s = Space::finite(["a", "b"]).unwrap();
        let a = Event::finite([0]);
        assert!(a.indicator(&Outcome::Finite(0)).unwrap());
        assert!(!a.complement(&s).unwrap().indicator(&Outcome::Finite(0)).unwrap());
        let half = Event::interval(Interval::open(q(0, 1), q(1, 2)));
        assert!(!half.indicator(&Outcome::Unit(q(3, 4))).unwrap());
        let c = Event::coord(2);
        let w = BitSeq { explicit: BTreeMap::from([(2, true)]), tail: false };
        assert!(c.indicator(&Outcome::Bits(w)).unwrap());
        assert!(a.indicator(&Outcome::Unit(q(1, 2))).is_err());
    }

    #[test]
    fn interval_normalization() {
        let u = IntervalUnion::new([
            Interval::open(q(1, 2), q(3, 4)),
            Interval::left_closed(q(0, 1), q(1, 2)),
        ]);
        // [0,1/2) and (1/2,3/4) stay apart: 1/2 is missing.
        assert_eq!(u.parts().len(), 2);
        let v = u.union(&IntervalUnion::new([Interval::new(q(1, 2), q(1, 2), true, true)]));
        assert_eq!(v.parts().len(), 1);
        assert_eq!(v.length(), q(3, 4));
        let c = v.complement();
        assert_eq!(c.parts(), &[Interval::new(q(3, 4), q(1, 1), true, true)]);
        assert_eq!(c.complement(), v);
    }

    #[test]
    fn fair_coin_inclusion_exclusion() {
        let e = CylinderUnion::coord(1, true).union(&CylinderUnion::coord(2, true));
        assert_eq!(e.fair_measure(), q(3, 4));
        assert_eq!(e.complement().unwrap().fair_measure(), q(1, 4));
    }
}
