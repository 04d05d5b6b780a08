//! Portfolios realizing prescribed balances, and balance expectations under
//! canonical measures.

use alloc::string::String;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::invalid;
use crate::measure::{measure_of, CanonicalMeasure, Event, Outcome, Space};
use crate::portfolio::compiled::Lane;
use crate::portfolio::{classify, Compiled, Portfolio, Pricing, System};
use crate::rational::{floor_q, Q};
use crate::rule::RuleNF;
use crate::series::{sum_rule, SeriesValue, SumOpts};
use crate::Error;

/// A simple random variable: finitely many disjoint cells covering the
/// space, each with a rational value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimpleRV {
    pub space: Space,
    pub cells: Vec<(Event, Q)>,
}

impl SimpleRV {
    pub fn new(space: Space, cells: Vec<(Event, Q)>) -> Result<Self, Error> {
        let mut union = space.empty();
        for (i, (a, _)) in cells.iter().enumerate() {
            space.check_event(a)?;
            for (j, (b, _)) in cells.iter().enumerate().skip(i + 1) {
                if !a.is_disjoint(b)? {
                    return Err(Error::NotDisjoint(i + 1, j + 1));
                }
            }
            union = union.union(a)?;
        }
        if !union.same_set(&space.whole(), &space)? {
            return Err(invalid("cells do not cover the space"));
        }
        Ok(SimpleRV { space, cells })
    }

    pub fn value_at(&self, w: &Outcome) -> Result<Q, Error> {
        for (e, v) in &self.cells {
            if e.indicator(w)? {
                return Ok(v.clone());
            }
        }
        Err(invalid("outcome lies in no cell"))
    }

    pub fn expectation(&self, m: &CanonicalMeasure) -> Result<Q, Error> {
        let mut acc = Q::zero();
        for (e, v) in &self.cells {
            if !v.is_zero() {
                acc += v * measure_of(m, e)?;
            }
        }
        Ok(acc)
    }

    fn map(&self, f: impl Fn(&Q) -> Q) -> SimpleRV {
        SimpleRV { space: self.space.clone(), cells: self.cells.iter().map(|(e, v)| (e.clone(), f(v))).collect() }
    }

    /// `X+ = X I_{X > 0}`.
    pub fn positive_part(&self) -> SimpleRV {
        self.map(|v| if v.is_positive() { v.clone() } else { Q::zero() })
    }

    /// `X- = X I_{X < 0}` (nonpositive).
    pub fn negative_part(&self) -> SimpleRV {
        self.map(|v| if v.is_negative() { v.clone() } else { Q::zero() })
    }

    /// Dyadic approximations `X_n = min(n, floor(2^n X) / 2^n)` of a
    /// nonnegative variable, increasing to it.
    pub fn dyadic_stages(&self) -> DyadicStages<'_> {
        DyadicStages { target: self, n: 0, prev: self.map(|_| Q::zero()) }
    }
}

/// Stages `(X_n, Y_n = X_n - X_{n-1})` of the monotone approximation.
pub struct DyadicStages<'a> {
    target: &'a SimpleRV,
    n: u32,
    prev: SimpleRV,
}

impl Iterator for DyadicStages<'_> {
    type Item = (SimpleRV, SimpleRV);

    fn next(&mut self) -> Option<Self::Item> {
        if self.n >= 62 {
            return None;
        }
        self.n += 1;
        let scale = Q::from_integer(BigInt::one() << self.n);
        let cap = Q::from_integer(BigInt::from(self.n));
        let stage = self.target.map(|v| {
            if !v.is_positive() {
                return Q::zero();
            }
            let d = Q::from_integer(floor_q(&(v * &scale))) / &scale;
            if d > cap {
                cap.clone()
            } else {
                d
            }
        });
        let step = SimpleRV {
            space: stage.space.clone(),
            cells: stage.cells.iter().zip(&self.prev.cells).map(|((e, a), (_, b))| (e.clone(), a - b)).collect(),
        };
        self.prev = stage.clone();
        Some((stage, step))
    }
}

/// Buy the positive part cell by cell and sell the negative part,
/// alternating; prices are the measure.
pub fn synthesize_balance(target: &SimpleRV, m: &CanonicalMeasure) -> Result<Portfolio, Error> {
    if !m.fits(&target.space) {
        return Err(Error::SpaceMismatch(alloc::format!("{} does not live on this space", m.name())));
    }
    let e = target.expectation(m)?;
    if !e.is_zero() {
        return Err(Error::NonzeroExpectation(e));
    }
    let pos: Vec<(Q, Event)> =
        target.cells.iter().filter(|(_, v)| v.is_positive()).map(|(e, v)| (v.clone(), e.clone())).collect();
    let neg: Vec<(Q, Event)> =
        target.cells.iter().filter(|(_, v)| v.is_negative()).map(|(e, v)| (v.clone(), e.clone())).collect();
    let mut bets = Vec::with_capacity(pos.len() + neg.len());
    for i in 0..pos.len().max(neg.len()) {
        bets.extend(pos.get(i).cloned());
        bets.extend(neg.get(i).cloned());
    }
    Portfolio::finite(target.space.clone(), bets)
}

/// Lane terms with a fixed sign from block `start` on, plus the exact sum of
/// the earlier blocks split by sign.
struct SignSplit {
    pos: Vec<RuleNF>,
    neg: Vec<RuleNF>,
    head_pos: Q,
    head_neg: Q,
    start: i64,
}

const SIGN_SEARCH: i64 = 1 << 12;

fn split_by_sign(c: &Compiled, pricing: Pricing<'_>) -> Result<Option<SignSplit>, Error> {
    let c = c.refine(2)?;
    let mut head_pos = Q::zero();
    let mut head_neg = Q::zero();
    for (a, item) in &c.prefix {
        let t = a * pricing.item_price(item)?;
        if t.is_positive() {
            head_pos += t;
        } else {
            head_neg += t;
        }
    }
    let terms = c.price_lanes(pricing)?;
    let mut start = 1i64;
    let mut signs = Vec::with_capacity(c.lanes.len());
    for ((coef, _), t) in c.lanes.iter().zip(&terms) {
        if coef.is_zero() || t.is_zero() {
            signs.push(None);
            continue;
        }
        let mut m0 = 1i64;
        let sign = loop {
            if coef.positive_from(m0) {
                break true;
            }
            if coef.neg().positive_from(m0) {
                break false;
            }
            m0 *= 2;
            if m0 > SIGN_SEARCH {
                return Ok(None);
            }
        };
        start = start.max(m0);
        signs.push(Some(sign));
    }
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (((coef, _), t), s) in c.lanes.iter().zip(&terms).zip(&signs) {
        let Some(s) = s else { continue };
        for m in 1..start {
            let v = t.at(m)?;
            if coef.at(m)?.is_positive() {
                head_pos += v;
            } else {
                head_neg += v;
            }
        }
        if *s {
            pos.push(t.clone());
        } else {
            neg.push(t.clone());
        }
    }
    Ok(Some(SignSplit { pos, neg, head_pos, head_neg, start }))
}

fn part_sum(lanes: &[RuleNF], head: &Q, start: i64, opts: &SumOpts) -> SeriesValue {
    let total = lanes.iter().fold(RuleNF::zero(), |a, l| a.add(l));
    sum_rule(&total, start, opts).add_exact(head)
}

/// `E[sum_i alpha_i (I_{A_i} - P(A_i))]` with the measure as prices.
pub fn expectation_of_balance(pf: &Portfolio, m: &CanonicalMeasure, opts: &SumOpts) -> Result<SeriesValue, Error> {
    match expectation_via(pf, m, System::S2, opts)? {
        SeriesValue::Undetermined(_) => expectation_via(pf, m, System::S2A, opts),
        v => Ok(v),
    }
}

/// Expectation along one lemma's route. Under `S2` the positive and
/// negative stakes are summed separately (each is an expectation of a
/// monotone limit); under `S2A` the absolute term expectations
/// `2|alpha| P (1 - P)` must be summable, so every term's zero expectation
/// carries over to the sum.
pub fn expectation_via(pf: &Portfolio, m: &CanonicalMeasure, system: System, opts: &SumOpts) -> Result<SeriesValue, Error> {
    let pricing = Pricing::Measure(m);
    let c = Compiled::new(pf)?;
    if c.lanes.iter().all(|(a, _)| a.is_zero()) {
        c.prefix_price(pricing)?;
        return Ok(SeriesValue::Exact(Q::zero()));
    }
    let verdict = classify(pf, pricing)?;
    let undefined = |why: String| Ok(SeriesValue::Undetermined(why));
    match system {
        System::S2 => {
            if !verdict.s2.is_in() {
                return undefined(alloc::format!("not in S2: {}", verdict.s2.reason()));
            }
            let Some(split) = split_by_sign(&c, pricing)? else {
                return undefined("coefficient signs do not settle".into());
            };
            let pos = part_sum(&split.pos, &split.head_pos, split.start, opts);
            let neg = part_sum(&split.neg, &split.head_neg, split.start, opts);
            // E[X+] + E[X-] from the stakes, minus the price paid.
            let paid = pos.add(&neg);
            Ok(pos.add(&neg).add(&paid.neg()))
        }
        System::S2A => {
            if !verdict.s2a.is_in() {
                return undefined(alloc::format!("not in S2A: {}", verdict.s2a.reason()));
            }
            for (coef, lane) in &c.lanes {
                if coef.is_zero() {
                    continue;
                }
                let p = pricing.lane_rule(lane)?;
                let spread = coef.mul(&p).mul(&RuleNF::constant(Q::one()).sub(&p));
                if !spread.abs_summable() {
                    return undefined("absolute term expectations are not summable".into());
                }
            }
            Ok(SeriesValue::Exact(Q::zero()))
        }
        _ => Err(invalid("expectation routes exist for S2 and S2A only")),
    }
}

/// Prediction of the space-of-balances table for a simple target, with a
/// witness when representable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BalanceMembership {
    pub system: System,
    pub representable: bool,
    pub reason: String,
    pub witness: Option<Portfolio>,
}

pub fn balance_space_membership(target: &SimpleRV, system: System, m: &CanonicalMeasure) -> Result<BalanceMembership, Error> {
    let e = target.expectation(m)?;
    let condition = match system {
        System::S1 => "simple, field-measurable, zero expectation",
        System::S2 | System::S2A => "zero expectation under the extension",
        System::S2B => "bounded, zero expectation under the extension",
        System::S3 => "simple, zero expectation under the extension",
    };
    if !e.is_zero() {
        return Ok(BalanceMembership {
            system,
            representable: false,
            reason: alloc::format!("expectation is {e}; needs {condition}"),
            witness: None,
        });
    }
    Ok(BalanceMembership {
        system,
        representable: true,
        reason: alloc::format!("simple target meets: {condition}"),
        witness: Some(synthesize_balance(target, m)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Interval;
    use crate::portfolio::{balance_at, negate, BaseFamily, CoeffSeq, EventFamily};
    use crate::rational::{q, qi};
    use crate::rule::IndexRule;

    fn abc() -> Space {
        Space::finite(["a", "b", "c"]).unwrap()
    }

    #[test]
    fn three_point_target() {
        let x = SimpleRV::new(
            abc(),
            alloc::vec![(Event::finite([0]), qi(2)), (Event::finite([1]), qi(-1)), (Event::finite([2]), qi(-1))],
        )
        .unwrap();
        let m = CanonicalMeasure::uniform(3);
        let pf = synthesize_balance(&x, &m).unwrap();
        let expect = Portfolio::finite(
            abc(),
            alloc::vec![(qi(2), Event::finite([0])), (qi(-1), Event::finite([1])), (qi(-1), Event::finite([2]))],
        )
        .unwrap();
        assert_eq!(pf, expect);
        for w in 0..3 {
            let w = Outcome::Finite(w);
            let b = balance_at(&pf, Pricing::Measure(&m), &w, &SumOpts::default()).unwrap();
            assert_eq!(b, SeriesValue::Exact(x.value_at(&w).unwrap()));
        }
    }

    #[test]
    fn zero_and_rejected_targets() {
        let m = CanonicalMeasure::uniform(3);
        let zero = SimpleRV::new(abc(), alloc::vec![(abc().whole(), qi(0))]).unwrap();
        assert_eq!(synthesize_balance(&zero, &m).unwrap().coeffs, CoeffSeq::FiniteList(alloc::vec![]));
        let off = SimpleRV::new(abc(), alloc::vec![(Event::finite([0]), q(3, 4)), (Event::finite([1, 2]), qi(0))]).unwrap();
        assert_eq!(synthesize_balance(&off, &m), Err(Error::NonzeroExpectation(q(1, 4))));
        let mem = balance_space_membership(&off, System::S3, &m).unwrap();
        assert!(!mem.representable && mem.witness.is_none());
        assert!(SimpleRV::new(abc(), alloc::vec![(Event::finite([0, 1]), qi(1)), (Event::finite([1, 2]), qi(1))]).is_err());
        assert!(SimpleRV::new(abc(), alloc::vec![(Event::finite([0]), qi(1))]).is_err());
    }

    #[test]
    fn unit_interval_target() {
        let h = q(1, 2);
        let x = SimpleRV::new(
            Space::UnitInterval,
            alloc::vec![
                (Event::interval(Interval::new(qi(0), h.clone(), true, false)), qi(1)),
                (Event::interval(Interval::new(h, qi(1), true, true)), qi(-1)),
            ],
        )
        .unwrap();
        let m = CanonicalMeasure::LebesgueUnit;
        let pf = synthesize_balance(&x, &m).unwrap();
        for w in [q(1, 4), q(3, 4)] {
            let w = Outcome::Unit(w);
            let b = balance_at(&pf, Pricing::Measure(&m), &w, &SumOpts::default()).unwrap();
            assert_eq!(b, SeriesValue::Exact(x.value_at(&w).unwrap()));
        }
        for s in System::ALL {
            let mem = balance_space_membership(&x, s, &m).unwrap();
            assert!(mem.representable && mem.witness.is_some());
        }
    }

    #[test]
    fn dyadic_stages_increase() {
        let x = SimpleRV::new(abc(), alloc::vec![(Event::finite([0]), q(5, 3)), (Event::finite([1, 2]), q(-1, 2))]).unwrap();
        let plus = x.positive_part();
        let mut last = qi(0);
        for (n, (stage, step)) in plus.dyadic_stages().take(10).enumerate() {
            let v = stage.cells[0].1.clone();
            assert!(v >= last && v <= q(5, 3));
            assert_eq!(step.cells[0].1, &v - &last);
            assert!(step.cells.iter().all(|(_, s)| !s.is_negative()));
            assert!(stage.cells[1].1.is_zero());
            if n >= 1 {
                assert!(q(5, 3) - &v <= q(1, 1 << (n + 1)));
            }
            last = v;
        }
    }

    #[test]
    fn expectations() {
        let m = CanonicalMeasure::LebesgueUnit;
        let opts = SumOpts::default();
        let fin = Portfolio::finite(Space::UnitInterval, alloc::vec![(qi(3), Event::interval(Interval::open(qi(0), q(1, 3))))]).unwrap();
        assert_eq!(expectation_of_balance(&fin, &m, &opts).unwrap(), SeriesValue::Exact(qi(0)));

        let sq = BaseFamily::ChainIntervals { r: IndexRule::power(qi(1), qi(0), -2), lo_closed: false, hi_closed: false };
        let alt = Portfolio::new(
            CoeffSeq::AlternatingPower { c: qi(1), shift: qi(0), exponent: 1 },
            EventFamily::Base(sq),
            Space::UnitInterval,
        )
        .unwrap();
        let e = expectation_via(&alt, &m, System::S2, &opts).unwrap();
        assert!(e.contains(&qi(0)) && e.width().unwrap() <= q(1, 100_000), "{e:?}");
        let en = expectation_via(&negate(&alt), &m, System::S2, &opts).unwrap();
        assert_eq!(en, e.neg());

        let whole = Portfolio::new(
            CoeffSeq::Rule(IndexRule::Const(qi(1))),
            EventFamily::Base(BaseFamily::Constant(Event::interval(Interval::new(qi(0), qi(1), true, true)))),
            Space::UnitInterval,
        )
        .unwrap();
        assert!(matches!(expectation_via(&whole, &m, System::S2, &opts).unwrap(), SeriesValue::Undetermined(_)));
        assert_eq!(expectation_via(&whole, &m, System::S2A, &opts).unwrap(), SeriesValue::Exact(qi(0)));
        assert_eq!(expectation_of_balance(&whole, &m, &opts).unwrap(), SeriesValue::Exact(qi(0)));
    }
}
