use std::collections::BTreeMap;

use coherence_core::coherence::{check_countable_additivity, Additivity};
use coherence_core::corpus::Corpus;
use coherence_core::gallery::p0_symmetry_check;
use coherence_core::measure::{
    atoms, generate_field, measure_of, BitSeq, Bits, CanonicalMeasure, Event, EventCollection, Interval, Outcome, Space,
    Weights,
};
use coherence_core::portfolio::compiled::compile_coeffs;
use coherence_core::portfolio::{balance_at, CoeffSeq, classify, interleave, negate, permute, price_of, series_sum, EventFamily, Pricing};
use coherence_core::rational::{q, qi};
use coherence_core::rule::IndexRule;
use coherence_core::synthesis::expectation_of_balance;
use coherence_core::{SeriesValue, SumOpts, Q};
use num_traits::{Signed, Zero};
use proptest::prelude::*;

fn unit_point(c: &mut Corpus) -> Q {
    q(c.rng_range(1, 999) as i64, 1000)
}

fn random_event(c: &mut Corpus, space: &Space) -> Event {
    match space {
        Space::UnitInterval => {
            let mut e = space.empty();
            for _ in 0..c.rng_range(1, 3) {
                let (a, b) = (q(c.rng_range(0, 12) as i64, 12), q(c.rng_range(0, 12) as i64, 12));
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                let iv = Interval::new(lo, hi, c.rng_range(0, 1) == 1, c.rng_range(0, 1) == 1);
                e = e.union(&Event::interval(iv)).unwrap();
            }
            e
        }
        Space::BinarySequences => {
            let mut e = space.empty();
            for _ in 0..c.rng_range(1, 3) {
                let mut cyl = space.whole();
                for _ in 0..c.rng_range(1, 3) {
                    let k = Event::coord(c.rng_range(1, 5) as u64);
                    let k = if c.rng_range(0, 1) == 1 { k } else { k.complement(space).unwrap() };
                    cyl = cyl.intersect(&k).unwrap();
                }
                e = e.union(&cyl).unwrap();
            }
            e
        }
        _ => Event::Finite(c.subset(space.size().unwrap())),
    }
}

fn random_outcome(c: &mut Corpus, space: &Space) -> Outcome {
    match space {
        Space::UnitInterval => Outcome::Unit(unit_point(c)),
        Space::BinarySequences => {
            let explicit: BTreeMap<u64, bool> = (1..=6).map(|k| (k, c.rng_range(0, 1) == 1)).collect();
            Outcome::Bits(BitSeq { explicit, tail: c.rng_range(0, 1) == 1 })
        }
        _ => Outcome::Finite(c.rng_range(0, space.size().unwrap() - 1)),
    }
}

fn space_and_measure(c: &mut Corpus, kind: usize) -> (Space, CanonicalMeasure) {
    match kind {
        0 => (Space::UnitInterval, CanonicalMeasure::LebesgueUnit),
        1 => (Space::BinarySequences, CanonicalMeasure::FairCoin),
        _ => {
            let n = c.rng_range(1, 6);
            (c.finite_space(n), c.atomic_measure(n))
        }
    }
}

fn opts() -> SumOpts {
    SumOpts::default()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn complement_indicators_sum_to_one(seed in any::<u64>(), kind in 0usize..3) {
        let mut c = Corpus::new(seed);
        let (space, _) = space_and_measure(&mut c, kind);
        let e = random_event(&mut c, &space);
        let ec = e.complement(&space).unwrap();
        for _ in 0..20 {
            let w = random_outcome(&mut c, &space);
            prop_assert!(e.indicator(&w).unwrap() != ec.indicator(&w).unwrap());
        }
    }

    #[test]
    fn measure_is_finitely_additive(seed in any::<u64>(), kind in 0usize..3) {
        let mut c = Corpus::new(seed);
        let (space, m) = space_and_measure(&mut c, kind);
        for _ in 0..16 {
            let a = random_event(&mut c, &space);
            let b = random_event(&mut c, &space).difference(&a, &space).unwrap();
            prop_assert!(a.is_disjoint(&b).unwrap());
            let u = a.union(&b).unwrap();
            prop_assert_eq!(measure_of(&m, &u).unwrap(), measure_of(&m, &a).unwrap() + measure_of(&m, &b).unwrap());
        }
    }

    #[test]
    fn generated_fields_are_closed(seed in any::<u64>()) {
        let mut c = Corpus::new(seed);
        let n = c.rng_range(1, 5);
        let space = c.finite_space(n);
        let gens: Vec<Event> = (0..c.rng_range(0, 3)).map(|_| Event::Finite(c.subset(n))).collect();
        let field = generate_field(&space, &EventCollection::unstructured(gens.clone())).unwrap();
        for g in &gens {
            prop_assert!(field.contains(g));
        }
        for a in &field.events {
            prop_assert!(field.contains(&a.complement(&space).unwrap()));
            for b in &field.events {
                prop_assert!(field.contains(&a.union(b).unwrap()));
            }
        }
    }

    #[test]
    fn atoms_partition_positive_mass(seed in any::<u64>()) {
        let mut c = Corpus::new(seed);
        let n = c.rng_range(1, 6);
        let space = c.finite_space(n);
        let m = c.atomic_measure(n);
        let gens: Vec<Event> = (0..c.rng_range(0, 3)).map(|_| Event::Finite(c.subset(n))).collect();
        let field = generate_field(&space, &EventCollection::unstructured(gens)).unwrap();
        let at = atoms(&field, Weights::Measure(&m)).unwrap();
        let mut union = Bits(0);
        for a in &at {
            let Event::Finite(b) = a.event else { unreachable!() };
            prop_assert!(a.weight.is_positive());
            prop_assert_eq!(union.0 & b.0, 0);
            union = Bits(union.0 | b.0);
        }
        prop_assert_eq!(measure_of(&m, &Event::Finite(union)).unwrap(), qi(1));
        prop_assert_eq!(at.iter().map(|a| a.weight.clone()).sum::<Q>(), qi(1));
    }

    #[test]
    fn finite_additivity_check_matches_direct_sum(seed in any::<u64>()) {
        let mut c = Corpus::new(seed);
        let (space, m, whole, parts) = c.decomposition();
        let direct: Q = parts.iter().map(|p| measure_of(&m, p).unwrap()).sum();
        prop_assert_eq!(measure_of(&m, &whole).unwrap(), direct);
        let r = check_countable_additivity(&space, Pricing::Measure(&m), &whole, &EventFamily::ExplicitList(parts), &opts()).unwrap();
        prop_assert_eq!(r, Additivity::Holds(SeriesValue::Exact(qi(0))));
    }

    #[test]
    fn classification_respects_containment(seed in any::<u64>()) {
        let mut c = Corpus::new(seed);
        let (fam, space, m) = c.measured_family();
        let pf = c.grammar_portfolio(&fam, &space);
        let v = classify(&pf, Pricing::Measure(&m)).unwrap();
        prop_assert!(v.consistent(), "{:?}", v);
    }

    #[test]
    fn negation_reflects_balances_and_expectations(seed in any::<u64>()) {
        let mut c = Corpus::new(seed);
        let (fam, space, m) = c.measured_family();
        let pf = c.grammar_portfolio(&fam, &space);
        let neg = negate(&pf);
        let pricing = Pricing::Measure(&m);
        for _ in 0..4 {
            let w = random_outcome(&mut c, &space);
            let (Ok(a), Ok(b)) = (balance_at(&pf, pricing, &w, &opts()), balance_at(&neg, pricing, &w, &opts())) else { continue };
            if a.bounds().is_some() {
                prop_assert_eq!(b, a.neg());
            }
        }
        if let (Ok(a), Ok(b)) = (expectation_of_balance(&pf, &m, &opts()), expectation_of_balance(&neg, &m, &opts())) {
            if a.bounds().is_some() {
                prop_assert_eq!(b, a.neg());
            }
        }
    }

    #[test]
    fn interleaving_adds_balances(seed in any::<u64>()) {
        let mut c = Corpus::new(seed);
        let (fam, space, m) = c.measured_family();
        let x = c.grammar_portfolio(&fam, &space);
        let y = c.grammar_portfolio(&fam, &space);
        let xy = interleave(&x, &y).unwrap();
        let pricing = Pricing::Measure(&m);
        for _ in 0..4 {
            let w = random_outcome(&mut c, &space);
            let (Ok(a), Ok(b)) = (balance_at(&x, pricing, &w, &opts()), balance_at(&y, pricing, &w, &opts())) else { continue };
            let (Some((alo, ahi)), Some((blo, bhi))) = (a.bounds(), b.bounds()) else { continue };
            let s = balance_at(&xy, pricing, &w, &opts()).unwrap();
            let (slo, shi) = s.bounds().expect("sum of convergent balances converges");
            prop_assert!(slo <= &ahi + &bhi && shi >= &alo + &blo, "{:?} vs {:?} + {:?}", s, a, b);
        }
    }

    #[test]
    fn enclosures_nest_under_longer_horizons(seed in any::<u64>()) {
        let mut c = Corpus::new(seed);
        let coeffs = c.coeff_seq(2);
        let weight = if c.rng_range(0, 1) == 1 { IndexRule::Const(qi(1)) } else { IndexRule::reciprocal(qi(1), qi(1)) };
        let h = c.rng_range(50, 400) as u64;
        let short = SumOpts { horizon: h, tol: Q::zero() };
        let long = SumOpts { horizon: 2 * h, tol: Q::zero() };
        let (Ok(a), Ok(b)) = (series_sum(&coeffs, &weight, &short), series_sum(&coeffs, &weight, &long)) else { return Ok(()) };
        if let (Some((alo, ahi)), Some((blo, bhi))) = (a.bounds(), b.bounds()) {
            prop_assert!(alo <= blo && bhi <= ahi, "{:?} not inside {:?}", b, a);
        }
    }

    #[test]
    fn absolutely_convergent_prices_survive_permutation(seed in any::<u64>()) {
        let mut c = Corpus::new(seed);
        let (fam, space, m) = c.measured_family();
        let pf = c.grammar_portfolio(&fam, &space);
        let pricing = Pricing::Measure(&m);
        if !classify(&pf, pricing).unwrap().s2.is_in() {
            return Ok(());
        }
        let map = c.index_map();
        let p = price_of(&pf, pricing, &opts()).unwrap();
        let pp = price_of(&permute(&pf, &map).unwrap(), pricing, &opts()).unwrap();
        let ((a, b), (x, y)) = (p.bounds().unwrap(), pp.bounds().unwrap());
        prop_assert!(a <= y && x <= b, "{:?} vs {:?}", p, pp);
    }

    #[test]
    fn symmetric_coin_bound(seed in any::<u64>()) {
        let mut c = Corpus::new(seed);
        let n = c.rng_range(1, 12);
        let coeffs: Vec<Q> = (0..n).map(|_| c.rational(7, 5)).collect();
        let coords: Vec<u64> = (0..n).map(|_| c.rng_range(1, 12) as u64).collect();
        prop_assert!(p0_symmetry_check(&coeffs, &coords).unwrap() >= q(1, 2));
    }

    #[test]
    fn finite_block_permutations_move_items(seed in any::<u64>()) {
        let mut c = Corpus::new(seed);
        let n = c.rng_range(1, 6);
        let list: Vec<Q> = (0..n).map(|_| c.rational(3, 2)).collect();
        let map = c.index_map();
        let moved = compile_coeffs(&CoeffSeq::FiniteList(list.clone())).unwrap().permute(&map).unwrap();
        prop_assert!(moved.is_finite());
        for i in 1..=40u64 {
            let want = list.get(map.apply(i) as usize - 1).cloned().unwrap_or_else(Q::zero);
            prop_assert_eq!(moved.get(i).unwrap(), want);
        }
    }
}
