//! Events, fields, atoms and the canonical reference measures.

mod event;


use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use num_traits::{One, Signed, Zero};

pub use event::{BitSeq, Bits, Cylinder, CylinderUnion, Event, Interval, IntervalUnion, Outcome, Space, MAX_FINITE};

use crate::error::{invalid, unsupported};
use crate::portfolio::family::BaseFamily;
use crate::rational::{format_q, Q};
use crate::rule::IndexRule;
use crate::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Tag {
    Unstructured,
    Field,
    DecreasingChain,
    DisjointFamily,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EventCollection {
    pub events: Vec<Event>,
    pub tag: Tag,
}

impl EventCollection {
    pub fn unstructured(events: Vec<Event>) -> Self {
        EventCollection { events, tag: Tag::Unstructured }
    }

    /// Builds a tagged collection, verifying the tag's defining property.
    pub fn tagged(space: &Space, events: Vec<Event>, tag: Tag) -> Result<Self, Error> {
        for e in &events {
            space.check_event(e)?;
        }
        match tag {
            Tag::Unstructured => {}
            Tag::Field => {
                if space.size().is_none() {
                    return Err(unsupported("field tags are verified on finite spaces only"));
                }
                for a in &events {
                    if !events.contains(&a.complement(space)?) {
                        return Err(invalid("collection is not closed under complement"));
                    }
                    for b in &events {
                        if !events.contains(&a.union(b)?) {
                            return Err(invalid("collection is not closed under union"));
                        }
                    }
                }
            }
            Tag::DecreasingChain => {
                for w in events.windows(2) {
                    if !w[1].difference(&w[0], space)?.is_empty() {
                        return Err(invalid("chain is not decreasing"));
                    }
                }
            }
            Tag::DisjointFamily => {
                for i in 0..events.len() {
                    for j in i + 1..events.len() {
                        if !events[i].is_disjoint(&events[j])? {
                            return Err(Error::NotDisjoint(i, j));
                        }
                    }
                }
            }
        }
        Ok(EventCollection { events, tag })
    }

    pub fn contains(&self, e: &Event) -> bool {
        self.events.contains(e)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum CanonicalMeasure {
    FiniteAtomic(Vec<Q>),
    LebesgueUnit,
    FairCoin,
}

impl CanonicalMeasure {
    pub fn finite_atomic(weights: Vec<Q>) -> Result<Self, Error> {
        if weights.iter().any(|w| w.is_negative()) {
            return Err(Error::NegativeWeight("atomic weights must be nonnegative".into()));
        }
        if weights.iter().fold(Q::zero(), |a, b| a + b) != Q::one() {
            return Err(invalid("atomic weights must sum to exactly 1"));
        }
        Ok(CanonicalMeasure::FiniteAtomic(weights))
    }

    pub fn uniform(n: usize) -> Self {
        CanonicalMeasure::FiniteAtomic(alloc::vec![Q::new(1.into(), (n as i64).into()); n])
    }

    pub fn fits(&self, space: &Space) -> bool {
        match (self, space) {
            (CanonicalMeasure::FiniteAtomic(w), Space::Finite(l)) => w.len() == l.len(),
            (CanonicalMeasure::LebesgueUnit, Space::UnitInterval) => true,
            (CanonicalMeasure::FairCoin, Space::BinarySequences) => true,
            _ => false,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CanonicalMeasure::FiniteAtomic(_) => "finite-atomic",
            CanonicalMeasure::LebesgueUnit => "lebesgue-unit",
            CanonicalMeasure::FairCoin => "fair-coin",
        }
    }
}

/// Probability of an event under a canonical measure.
pub fn measure_of(m: &CanonicalMeasure, event: &Event) -> Result<Q, Error> {
    match (m, event) {
        (CanonicalMeasure::FiniteAtomic(w), Event::Finite(b)) => {
            if b.0 & !Bits::full(w.len()).0 != 0 {
                return Err(Error::SpaceMismatch("event outside the atomic space".into()));
            }
            Ok(b.indices().map(|i| w[i].clone()).fold(Q::zero(), |a, x| a + x))
        }
        (CanonicalMeasure::LebesgueUnit, Event::Intervals(u)) => Ok(u.length()),
        (CanonicalMeasure::FairCoin, Event::Cylinders(c)) => Ok(c.fair_measure()),
        _ => Err(Error::SpaceMismatch(alloc::format!("event not measurable by {}", m.name()))),
    }
}

/// Arbitrary rational prices: an explicit event table plus closed-form
/// rules for indexed families. Prices are not restricted to `[0, 1]`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PriceAssignment {
    pub explicit: Vec<(Event, Q)>,
    pub rules: Vec<(BaseFamily, IndexRule)>,
}

impl PriceAssignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_event(mut self, e: Event, p: Q) -> Self {
        self.set(e, p);
        self
    }

    pub fn with_rule(mut self, fam: BaseFamily, rule: IndexRule) -> Self {
        self.rules.retain(|(f, _)| f != &fam);
        self.rules.push((fam, rule));
        self
    }

    pub fn set(&mut self, e: Event, p: Q) {
        match self.explicit.iter_mut().find(|(x, _)| x == &e) {
            Some(slot) => slot.1 = p,
            None => self.explicit.push((e, p)),
        }
    }

    pub fn get(&self, e: &Event) -> Option<&Q> {
        self.explicit.iter().find(|(x, _)| x == e).map(|(_, p)| p)
    }

    pub fn rule(&self, fam: &BaseFamily) -> Option<&IndexRule> {
        self.rules.iter().find(|(f, _)| f == fam).map(|(_, r)| r)
    }

    /// Every explicitly priced event belongs to `coll`.
    pub fn check_within(&self, coll: &EventCollection) -> Result<(), Error> {
        for (e, _) in &self.explicit {
            if !coll.contains(e) {
                return Err(invalid(alloc::format!("priced event {e} is not in the collection")));
            }
        }
        Ok(())
    }
}

/// Source of weights for atom and p-finiteness checks.
#[derive(Clone, Copy, Debug)]
pub enum Weights<'a> {
    Prices(&'a PriceAssignment),
    Measure(&'a CanonicalMeasure),
}

impl Weights<'_> {
    pub fn weight(&self, e: &Event) -> Result<Q, Error> {
        match self {
            Weights::Prices(p) => p.get(e).cloned().ok_or_else(|| Error::MissingPrice(alloc::format!("{e}"))),
            Weights::Measure(m) => measure_of(m, e),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Atom {
    pub event: Event,
    pub weight: Q,
}

/// Minimal nonempty members of a finite-space field: the cells of the
/// partition induced by the generators.
pub fn field_cells(space: &Space, generators: &[Event]) -> Result<Vec<Bits>, Error> {
    let n = space.size().ok_or_else(|| unsupported("field generation needs a finite space"))?;
    let mut by_sig: BTreeMap<Vec<bool>, u128> = BTreeMap::new();
    for i in 0..n {
        let w = Outcome::Finite(i);
        let sig = generators.iter().map(|g| g.indicator(&w)).collect::<Result<Vec<_>, _>>()?;
        *by_sig.entry(sig).or_default() |= 1u128 << i;
    }
    Ok(by_sig.into_values().map(Bits).collect())
}

/// Smallest field containing the generators (finite spaces only).
pub fn generate_field(space: &Space, generators: &EventCollection) -> Result<EventCollection, Error> {
    for g in &generators.events {
        space.check_event(g)?;
    }
    let cells = field_cells(space, &generators.events)?;
    if cells.len() > 16 {
        return Err(unsupported("generated field would exceed 2^16 members"));
    }
    let mut events = Vec::with_capacity(1 << cells.len());
    for mask in 0u32..(1u32 << cells.len()) {
        let mut b = 0u128;
        for (i, c) in cells.iter().enumerate() {
            if mask >> i & 1 == 1 {
                b |= c.0;
            }
        }
        events.push(Event::Finite(Bits(b)));
    }
    events.sort();
    Ok(EventCollection { events, tag: Tag::Field })
}

/// Minimal atoms: cells of the field with positive weight. Weights must be
/// defined and nonnegative on every member.
pub fn atoms(field: &EventCollection, weights: Weights<'_>) -> Result<Vec<Atom>, Error> {
    if field.tag != Tag::Field {
        return Err(invalid("atoms need a collection tagged Field"));
    }
    let mut ws = Vec::with_capacity(field.events.len());
    for e in &field.events {
        let w = weights.weight(e)?;
        if w.is_negative() {
            return Err(Error::NegativeWeight(alloc::format!("{e}: {}", format_q(&w))));
        }
        ws.push(w);
    }
    let mut out = Vec::new();
    for (i, e) in field.events.iter().enumerate() {
        let Event::Finite(b) = e else {
            return Err(unsupported("atoms are computed on finite spaces"));
        };
        if b.is_empty() {
            continue;
        }
        let minimal = field.events.iter().all(|o| match o {
            Event::Finite(c) => c.is_empty() || c.0 & !b.0 != 0 || c == b,
            _ => true,
        });
        if minimal && ws[i].is_positive() {
            out.push(Atom { event: e.clone(), weight: ws[i].clone() });
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PFinite {
    /// Positive atoms, with null outcomes absorbed into the first atom.
    Yes(Vec<Atom>),
    /// An infinite disjoint family of positive-weight events.
    No(BaseFamily),
}

/// p-finiteness on a finite space. Weights must be finitely additive.
pub fn is_p_finite(field: &EventCollection, weights: Weights<'_>) -> Result<PFinite, Error> {
    let positive = atoms(field, weights)?;
    // Finite additivity over the cell partition.
    let mut cells: Vec<&Event> = Vec::new();
    for e in &field.events {
        let Event::Finite(b) = e else { unreachable!() };
        if !b.is_empty()
            && field.events.iter().all(|o| match o {
                Event::Finite(c) => c.is_empty() || c.0 & !b.0 != 0 || c == b,
                _ => true,
            })
        {
            cells.push(e);
        }
    }
    for e in &field.events {
        let Event::Finite(b) = e else { unreachable!() };
        let mut sum = Q::zero();
        for c in &cells {
            let Event::Finite(cb) = c else { unreachable!() };
            if cb.0 & b.0 == cb.0 {
                sum += weights.weight(c)?;
            }
        }
        if sum != weights.weight(e)? {
            return Err(invalid(alloc::format!("weights are not finitely additive at {e}")));
        }
    }
    let mut out = positive;
    let covered = out.iter().fold(0u128, |acc, a| match &a.event {
        Event::Finite(b) => acc | b.0,
        _ => acc,
    });
    if let (Some(first), Some(Event::Finite(all))) = (out.first_mut(), field.events.last()) {
        if let Event::Finite(b) = &mut first.event {
            b.0 |= all.0 & !covered;
        }
    }
    Ok(PFinite::Yes(out))
}

/// p-finiteness witness for a closed-form chain: its differences form an
/// infinite disjoint family whose prices are eventually positive.
pub fn chain_p_finite(chain_rule: &IndexRule, price_rule: &IndexRule, hi_closed: bool) -> Result<PFinite, Error> {
    let p = price_rule.compile()?;
    let diff = p.sub(&p.subst_affine(1, 1));
    match diff.limit() {
        crate::rule::Limit::Finite(v) if v.is_zero() => {}
        _ => return Err(invalid("chain prices do not converge")),
    }
    // Eventually positive: leading behaviour of the difference rule.
    let k0 = diff.first_regular().max(1);
    let eventually_positive = (k0..k0 + 64).any(|k| diff.subst_affine(1, k - 1).positive_from(1));
    if eventually_positive {
        Ok(PFinite::No(BaseFamily::ChainDifferences { r: chain_rule.clone(), hi_closed }))
    } else {
        Err(unsupported("cannot certify positive chain differences"))
    }
}

/// Representative outcomes, one per cell of the partition generated by the
/// given critical data: each critical point of the unit interval and the
/// midpoint of each gap, or every assignment to the critical coordinates
/// with both tail bits.
pub fn cell_representatives(space: &Space, points: &[Q], coords: &[u64]) -> Result<Vec<Outcome>, Error> {
    Ok(match space {
        Space::Finite(l) => (0..l.len()).map(Outcome::Finite).collect(),
        Space::UnitInterval => {
            let mut p: Vec<Q> = points
                .iter()
                .filter(|x| !x.is_negative() && *x <= &Q::one())
                .cloned()
                .chain([Q::zero(), Q::one()])
                .collect();
            p.sort();
            p.dedup();
            let mut out = Vec::new();
            for (i, x) in p.iter().enumerate() {
                out.push(Outcome::Unit(x.clone()));
                if let Some(y) = p.get(i + 1) {
                    out.push(Outcome::Unit((x + y) / Q::from_integer(2.into())));
                }
            }
            out
        }
        Space::BinarySequences => {
            let mut c = coords.to_vec();
            c.sort_unstable();
            c.dedup();
            if c.len() > 14 {
                return Err(unsupported("more than 14 critical coordinates"));
            }
            let mut out = Vec::new();
            for mask in 0u32..(1u32 << c.len()) {
                for tail in [false, true] {
                    let explicit = c.iter().enumerate().map(|(i, k)| (*k, mask >> i & 1 == 1)).collect();
                    out.push(Outcome::Bits(BitSeq { explicit, tail }));
                }
            }
            out
        }
    })
}
