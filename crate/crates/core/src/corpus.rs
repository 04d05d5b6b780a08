//! Seeded random instances for property checks and the acceptance runs.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::coherence::{two_evens_per_odd, FiniteInstance};
use crate::measure::{field_cells, Bits, CanonicalMeasure, Event, EventCollection, PriceAssignment, Space};
use crate::portfolio::{BaseFamily, CoeffSeq, EventFamily, IndexMap, Portfolio};
use crate::rational::{q, Q};
use crate::rule::IndexRule;
use crate::synthesis::SimpleRV;

pub const MAX_OUTCOMES: usize = 6;
pub const MAX_EVENTS: usize = 8;

pub struct Corpus {
    pub seed: u64,
    rng: ChaCha8Rng,
}

impl Corpus {
    pub fn new(seed: u64) -> Self {
        Corpus { seed, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// Uniform on `lo..=hi`.
    pub fn rng_range(&mut self, lo: usize, hi: usize) -> usize {
        self.rng.gen_range(lo..=hi)
    }

    /// `p/q` with `|p| <= num`, `1 <= q <= den`.
    pub fn rational(&mut self, num: i64, den: i64) -> Q {
        let d = self.rng.gen_range(1..=den);
        let n = self.rng.gen_range(-num..=num);
        q(n, d)
    }

    /// Uniform on the grid `{lo + k/den}` inside `[lo, hi]`.
    pub fn rational_in(&mut self, lo: &Q, hi: &Q, den: i64) -> Q {
        let steps = ((hi - lo) * Q::from_integer(den.into())).floor().to_integer();
        let steps: i64 = steps.try_into().unwrap_or(0);
        lo + q(self.rng.gen_range(0..=steps), den)
    }

    pub fn finite_space(&mut self, n: usize) -> Space {
        Space::finite((0..n).map(|i| format!("w{}", i + 1))).expect("1..=MAX_OUTCOMES outcomes")
    }

    pub fn subset(&mut self, n: usize) -> Bits {
        Bits(self.rng.gen_range(0..(1u128 << n)))
    }

    /// Nonnegative weights summing to one, some possibly zero.
    pub fn weights(&mut self, n: usize) -> Vec<Q> {
        let raw: Vec<i64> = (0..n).map(|_| if self.rng.gen_bool(0.15) { 0 } else { self.rng.gen_range(1..=9) }).collect();
        let total: i64 = raw.iter().sum();
        if total == 0 {
            let mut w = alloc::vec![Q::zero(); n];
            w[self.rng.gen_range(0..n)] = Q::one();
            return w;
        }
        raw.into_iter().map(|r| q(r, total)).collect()
    }

    pub fn atomic_measure(&mut self, n: usize) -> CanonicalMeasure {
        let w = self.weights(n);
        CanonicalMeasure::finite_atomic(w).expect("weights are nonnegative")
    }

    /// Up to eight distinct events on at most six outcomes with prices in
    /// `[-1/2, 3/2]`. About half the instances price by a random measure,
    /// some of those perturbed at one event.
    pub fn finite_instance(&mut self) -> FiniteInstance {
        let n = self.rng.gen_range(1..=MAX_OUTCOMES);
        let space = self.finite_space(n);
        let m = self.rng.gen_range(1..=MAX_EVENTS).min(1 << n);
        let mut events: Vec<Bits> = Vec::with_capacity(m);
        while events.len() < m {
            let b = self.subset(n);
            if !events.contains(&b) {
                events.push(b);
            }
        }
        let mode = self.rng.gen_range(0..4);
        let w = self.weights(n);
        let (lo, hi) = (q(-1, 2), q(3, 2));
        let mut prices = PriceAssignment::new();
        for (i, b) in events.iter().enumerate() {
            let p = match mode {
                0 | 1 => {
                    let mut p: Q = (0..n).filter(|&j| b.contains(j)).map(|j| w[j].clone()).sum();
                    if mode == 1 && i == 0 {
                        p = self.rational_in(&lo, &hi, 4);
                    }
                    p
                }
                _ => self.rational_in(&lo, &hi, 6),
            };
            prices.set(Event::Finite(*b), p);
        }
        let coll = EventCollection::unstructured(events.into_iter().map(Event::Finite).collect());
        FiniteInstance::new(&space, &coll, &prices).expect("generated instance is well formed")
    }

    /// `(space, measure, whole, parts)` with the parts partitioning `whole`.
    pub fn decomposition(&mut self) -> (Space, CanonicalMeasure, Event, Vec<Event>) {
        let n = self.rng.gen_range(1..=MAX_OUTCOMES);
        let space = self.finite_space(n);
        let m = self.atomic_measure(n);
        let (whole, parts) = self.partition(n);
        (space, m, whole, parts)
    }

    /// A nonempty subset of `n` outcomes split into one to four nonempty
    /// disjoint parts, in random order.
    pub fn partition(&mut self, n: usize) -> (Event, Vec<Event>) {
        let whole = loop {
            let b = self.subset(n);
            if !b.is_empty() {
                break b;
            }
        };
        let k = self.rng.gen_range(1..=whole.len().min(4));
        let mut parts = alloc::vec![0u128; k];
        for (i, j) in whole.indices().enumerate() {
            let slot = if i < k { i } else { self.rng.gen_range(0..k) };
            parts[slot] |= 1u128 << j;
        }
        parts.shuffle(&mut self.rng);
        (Event::Finite(whole), parts.into_iter().map(|p| Event::Finite(Bits(p))).collect())
    }

    /// A simple variable on the cells of a random field, centred under a
    /// random measure when `centred`, otherwise shifted off zero.
    pub fn simple_target(&mut self, centred: bool) -> (SimpleRV, CanonicalMeasure) {
        let n = self.rng.gen_range(1..=MAX_OUTCOMES);
        let space = self.finite_space(n);
        let w = self.weights(n);
        let gens: Vec<Event> = (0..self.rng.gen_range(0..=3)).map(|_| Event::Finite(self.subset(n))).collect();
        let cells = field_cells(&space, &gens).expect("finite space");
        let mass: Vec<Q> = cells.iter().map(|c| (0..n).filter(|&j| c.contains(j)).map(|j| w[j].clone()).sum()).collect();
        let mut values: Vec<Q> = cells.iter().map(|_| self.rational(6, 4)).collect();
        let heavy: Vec<usize> = (0..cells.len()).filter(|&i| mass[i].is_positive()).collect();
        let pivot = *heavy.choose(&mut self.rng).expect("weights sum to one");
        let rest: Q = (0..cells.len()).filter(|&i| i != pivot).map(|i| &values[i] * &mass[i]).sum();
        values[pivot] = -rest / &mass[pivot];
        if !centred {
            let shift = loop {
                let s = self.rational(3, 3);
                if !s.is_zero() {
                    break s;
                }
            };
            values[pivot] += shift / &mass[pivot];
        }
        let rv = SimpleRV::new(space, cells.into_iter().map(Event::Finite).zip(values).collect()).expect("cells partition the space");
        (rv, CanonicalMeasure::finite_atomic(w).expect("nonnegative"))
    }

    pub fn index_map(&mut self) -> IndexMap {
        match self.rng.gen_range(0..4) {
            0 => IndexMap::Identity,
            1 => {
                let swaps = (0..self.rng.gen_range(1..=3)).map(|_| (self.rng.gen_range(1..=8), self.rng.gen_range(1..=8))).collect();
                IndexMap::FiniteSwap(swaps)
            }
            2 => IndexMap::PairInterleave,
            _ => two_evens_per_odd(),
        }
    }

    fn small_nonzero(&mut self) -> Q {
        loop {
            let c = self.rational(4, 3);
            if !c.is_zero() {
                return c;
            }
        }
    }

    /// A random closed-form coefficient sequence of bounded depth.
    pub fn coeff_seq(&mut self, depth: u32) -> CoeffSeq {
        let top = if depth == 0 { 5 } else { 9 };
        match self.rng.gen_range(0..top) {
            0 => CoeffSeq::FiniteList((0..self.rng.gen_range(1..=5)).map(|_| self.rational(4, 3)).collect()),
            1 => {
                let r = loop {
                    let r = self.rational(3, 4);
                    if r.abs() < Q::one() {
                        break r;
                    }
                };
                CoeffSeq::Geometric { c: self.small_nonzero(), r }
            }
            2 => CoeffSeq::AlternatingPower {
                c: self.small_nonzero(),
                shift: Q::from_integer(BigInt::from(self.rng.gen_range(0..3))),
                exponent: self.rng.gen_range(1..=3),
            },
            3 => CoeffSeq::Rule(IndexRule::power(
                self.small_nonzero(),
                Q::from_integer(BigInt::from(self.rng.gen_range(0..3))),
                -self.rng.gen_range(1..=3),
            )),
            4 => CoeffSeq::Rule(IndexRule::Const(self.small_nonzero())),
            5 => {
                let rule = if self.rng.gen_bool(0.5) {
                    IndexRule::Alternating(Box::new(IndexRule::Const(Q::one())))
                } else {
                    IndexRule::Geometric { coeff: Q::one(), ratio: q(self.rng.gen_range(1..=3), 4) }
                };
                CoeffSeq::Scaled(Box::new(self.coeff_seq(depth - 1)), rule)
            }
            6 => {
                let base = self.coeff_seq(depth - 1);
                CoeffSeq::Permuted(Box::new(base), self.index_map())
            }
            7 => CoeffSeq::Interleaved(Box::new(self.coeff_seq(depth - 1)), Box::new(self.coeff_seq(depth - 1))),
            _ => {
                let head = (0..self.rng.gen_range(1..=3)).map(|_| self.rational(4, 3)).collect();
                CoeffSeq::Prefixed(head, Box::new(self.coeff_seq(depth - 1)))
            }
        }
    }

    /// A grammar portfolio on `family`; sequences the grammar rejects are
    /// redrawn.
    pub fn grammar_portfolio(&mut self, family: &BaseFamily, space: &Space) -> Portfolio {
        loop {
            let c = self.coeff_seq(2);
            if let Ok(pf) = Portfolio::new(c, EventFamily::Base(family.clone()), space.clone()) {
                return pf;
            }
        }
    }

    /// A canonical measure with an infinite family it prices.
    pub fn measured_family(&mut self) -> (BaseFamily, Space, CanonicalMeasure) {
        match self.rng.gen_range(0..4) {
            0 => (
                BaseFamily::ChainIntervals { r: IndexRule::reciprocal(Q::one(), Q::one()), lo_closed: false, hi_closed: false },
                Space::UnitInterval,
                CanonicalMeasure::LebesgueUnit,
            ),
            1 => (
                BaseFamily::ChainDifferences { r: IndexRule::Geometric { coeff: Q::one(), ratio: q(1, 2) }, hi_closed: false },
                Space::UnitInterval,
                CanonicalMeasure::LebesgueUnit,
            ),
            2 => (BaseFamily::Coordinates, Space::BinarySequences, CanonicalMeasure::FairCoin),
            _ => (BaseFamily::FirstSuccess, Space::BinarySequences, CanonicalMeasure::FairCoin),
        }
    }
}

/// Runs `f` on each of `count` draws from a fresh corpus.
pub fn sample<T>(seed: u64, count: usize, mut f: impl FnMut(&mut Corpus) -> T) -> Vec<T> {
    let mut c = Corpus::new(seed);
    (0..count).map(|_| f(&mut c)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        let a = sample(7, 20, |c| c.finite_instance());
        let b = sample(7, 20, |c| c.finite_instance());
        assert_eq!(a, b);
        let c = sample(8, 20, |c| c.finite_instance());
        assert_ne!(a, c);
    }

    #[test]
    fn instance_bounds() {
        for inst in sample(1, 200, |c| c.finite_instance()) {
            assert!(inst.space.size().unwrap() <= MAX_OUTCOMES);
            assert!(!inst.events.is_empty() && inst.events.len() <= MAX_EVENTS);
            assert!(inst.prices.iter().all(|p| *p >= q(-1, 2) && *p <= q(3, 2)));
        }
    }

    #[test]
    fn targets_and_decompositions() {
        let mut c = Corpus::new(3);
        for _ in 0..100 {
            let (x, m) = c.simple_target(true);
            assert!(x.expectation(&m).unwrap().is_zero());
            let (y, m) = c.simple_target(false);
            assert!(!y.expectation(&m).unwrap().is_zero());
            let (space, _, whole, parts) = c.decomposition();
            let mut u = space.empty();
            for p in &parts {
                assert!(u.is_disjoint(p).unwrap());
                u = u.union(p).unwrap();
            }
            assert!(u.same_set(&whole, &space).unwrap());
        }
    }

    #[test]
    fn portfolios_validate() {
        let mut c = Corpus::new(11);
        for _ in 0..100 {
            let (fam, space, _) = c.measured_family();
            let pf = c.grammar_portfolio(&fam, &space);
            assert!(crate::portfolio::Compiled::new(&pf).is_ok(), "{pf:?}");
        }
    }
}
