//! Prices and pointwise balances of portfolios as certified series values.

use alloc::vec::Vec;

use num_traits::{Signed, Zero};

use super::compiled::{compile_coeffs, lane_index_rule, Compiled, EvItem, EvLane, Lane, Pricing};
use super::grammar::{CoeffSeq, Portfolio};
use crate::fixed::Fx;
use crate::measure::Outcome;
use crate::rational::Q;
use crate::rule::{IndexRule, Limit, RuleNF};
use crate::series::{sum_rule, Certificate, Direction, SeriesValue, SumOpts, TailKind};
use crate::Error;

/// Middle blocks summed exactly; beyond this, in fixed point.
const EXACT_MIDDLE: u64 = 256;

/// `head + sum_{m >= start} sum_j lanes_j(m)` in declared index order.
///
/// Block grouping is exact when every lane tends to zero; otherwise the
/// ordered partial sums cannot converge.
pub fn ordered_sum(head: SeriesValue, lanes: &[RuleNF], start: i64, opts: &SumOpts) -> SeriesValue {
    let total = lanes.iter().fold(RuleNF::zero(), |acc, l| acc.add(l));
    let grouped = sum_rule(&total, start, opts);
    if lanes.iter().all(RuleNF::tends_to_zero) {
        return head.add(&grouped);
    }
    let dir = match grouped {
        SeriesValue::Divergent(d @ (Direction::PosInf | Direction::NegInf)) => {
            let agrees = lanes.iter().all(|l| match (l.limit(), d) {
                (Limit::Finite(v), Direction::PosInf) => !v.is_negative(),
                (Limit::Finite(v), Direction::NegInf) => !v.is_positive(),
                (Limit::PosInf, Direction::PosInf) | (Limit::NegInf, Direction::NegInf) => true,
                _ => false,
            });
            if agrees {
                d
            } else {
                Direction::Oscillating
            }
        }
        _ => Direction::Oscillating,
    };
    match head {
        SeriesValue::Undetermined(r) => SeriesValue::Undetermined(r),
        _ => SeriesValue::Divergent(dir),
    }
}

/// `sum_i terms_i * weight(i)`.
pub fn series_sum(terms: &CoeffSeq, weight: &IndexRule, opts: &SumOpts) -> Result<SeriesValue, Error> {
    let s = compile_coeffs(terms)?;
    let w = weight.compile()?;
    let mut head = Q::zero();
    for (i, c) in s.prefix.iter().enumerate() {
        if !c.is_zero() {
            head += c * w.at(i as i64 + 1)?;
        }
    }
    let (n0, p) = (s.prefix.len(), s.period());
    let lanes: Vec<RuleNF> = s
        .lanes
        .iter()
        .enumerate()
        .map(|(j, l)| l.mul(&lane_index_rule(&w, n0, p, j)))
        .collect();
    Ok(ordered_sum(SeriesValue::Exact(head), &lanes, 1, opts))
}

/// Per-lane structure of the balance at one outcome.
pub struct LaneBalance {
    pub coeff: RuleNF,
    pub price_term: RuleNF,
    /// Whether lane `j` contains `w` at block `m`.
    member: Membership,
    /// First block from which membership is constant.
    pub settle: i64,
    pub tail_in: bool,
}

enum Membership {
    Const(bool),
    Family { m: super::family::Membership, a: u64, b: i64 },
}

impl LaneBalance {
    pub fn contains(&self, m: i64) -> bool {
        match &self.member {
            Membership::Const(v) => *v,
            Membership::Family { m: mem, a, b } => mem.contains(*a as i64 * m + b),
        }
    }

    /// Tail term `c(m) (I - P(m))` once membership has settled.
    pub fn tail_rule(&self) -> RuleNF {
        if self.tail_in {
            self.coeff.sub(&self.price_term)
        } else {
            self.price_term.neg()
        }
    }
}

impl Compiled {
    /// Price terms `c_j(m) P_j(m)` for every lane.
    pub fn price_lanes(&self, pricing: Pricing<'_>) -> Result<Vec<RuleNF>, Error> {
        self.lanes
            .iter()
            .map(|(c, e)| if c.is_zero() { Ok(RuleNF::zero()) } else { Ok(c.mul(&pricing.lane_rule(e)?)) })
            .collect()
    }

    pub fn prefix_price(&self, pricing: Pricing<'_>) -> Result<Q, Error> {
        let mut acc = Q::zero();
        for (c, e) in &self.prefix {
            if !c.is_zero() {
                acc += c * pricing.item_price(e)?;
            }
        }
        Ok(acc)
    }

    pub fn price(&self, pricing: Pricing<'_>, opts: &SumOpts) -> Result<SeriesValue, Error> {
        let head = self.prefix_price(pricing)?;
        Ok(ordered_sum(SeriesValue::Exact(head), &self.price_lanes(pricing)?, 1, opts))
    }

    /// Exact balance contributed by the prefix at `w`.
    pub fn prefix_balance(&self, pricing: Pricing<'_>, w: &Outcome) -> Result<Q, Error> {
        let mut acc = Q::zero();
        for (c, e) in &self.prefix {
            if !c.is_zero() {
                let ind = item_contains(e, w)?;
                let p = pricing.item_price(e)?;
                acc += if ind { c * (Q::from_integer(1.into()) - p) } else { -(c * p) };
            }
        }
        Ok(acc)
    }

    pub fn lane_balances(&self, pricing: Pricing<'_>, w: &Outcome) -> Result<Vec<LaneBalance>, Error> {
        let mut out = Vec::with_capacity(self.lanes.len());
        for (c, e) in &self.lanes {
            if c.is_zero() {
                out.push(LaneBalance {
                    coeff: RuleNF::zero(),
                    price_term: RuleNF::zero(),
                    member: Membership::Const(false),
                    settle: 1,
                    tail_in: false,
                });
                continue;
            }
            let price_term = c.mul(&pricing.lane_rule(e)?);
            let (member, settle, tail_in) = match e {
                EvLane::Fixed(ev) => {
                    let v = ev.indicator(w)?;
                    (Membership::Const(v), 1, v)
                }
                EvLane::Member { fam, a, b } => {
                    let mem = fam.membership(w)?;
                    let k = mem.settled_from();
                    let settle = num_integer::Integer::div_ceil(&(k - b), &(*a as i64)).max(1);
                    let tail = mem.tail();
                    (Membership::Family { m: mem, a: *a, b: *b }, settle, tail)
                }
            };
            out.push(LaneBalance { coeff: c.clone(), price_term, member, settle, tail_in });
        }
        Ok(out)
    }

    pub fn balance_at(&self, pricing: Pricing<'_>, w: &Outcome, opts: &SumOpts) -> Result<SeriesValue, Error> {
        self.space.check_outcome(w)?;
        let head = self.prefix_balance(pricing, w)?;
        if self.lanes.is_empty() {
            return Ok(SeriesValue::Exact(head));
        }
        let lanes = self.lane_balances(pricing, w)?;
        let t = lanes.iter().map(|l| l.settle).max().unwrap_or(1);
        let middle_terms = (t as u64 - 1) * lanes.len() as u64;
        let middle = if middle_terms <= EXACT_MIDDLE {
            let mut acc = head;
            for m in 1..t {
                for l in &lanes {
                    acc += lane_term(l, m)?;
                }
            }
            SeriesValue::Exact(acc)
        } else if middle_terms <= opts.horizon {
            fx_middle(&lanes, t, &head)
        } else {
            return Ok(SeriesValue::undetermined("outcome lies in too many leading events for the horizon"));
        };
        let tails: Vec<RuleNF> = lanes.iter().map(LaneBalance::tail_rule).collect();
        Ok(ordered_sum(middle, &tails, t, opts))
    }
}

fn item_contains(e: &EvItem, w: &Outcome) -> Result<bool, Error> {
    match e {
        EvItem::Fixed(ev) => ev.indicator(w),
        EvItem::Member(fam, k) => Ok(fam.membership(w)?.contains(*k)),
    }
}

fn lane_term(l: &LaneBalance, m: i64) -> Result<Q, Error> {
    if l.coeff.is_zero() {
        return Ok(Q::zero());
    }
    let q = l.price_term.at(m)?;
    Ok(if l.contains(m) { l.coeff.at(m)? - q } else { -q })
}

/// Blocks `1..t` in outward-rounded fixed point.
fn fx_middle(lanes: &[LaneBalance], t: i64, head: &Q) -> SeriesValue {
    let fx: Vec<_> = lanes.iter().map(|l| (l.coeff.fx(), l.price_term.fx())).collect();
    let mut acc = Fx::ZERO;
    for m in 1..t {
        for (l, (c, q)) in lanes.iter().zip(&fx) {
            if l.coeff.is_zero() {
                continue;
            }
            let Some(qv) = q.eval(m) else {
                return SeriesValue::undetermined("fixed-point overflow in balance prefix");
            };
            let term = if l.contains(m) {
                match c.eval(m).and_then(|cv| cv.checked_sub(qv)) {
                    Some(v) => v,
                    None => return SeriesValue::undetermined("fixed-point overflow in balance prefix"),
                }
            } else {
                qv.neg()
            };
            match acc.checked_add(term) {
                Some(v) => acc = v,
                None => return SeriesValue::undetermined("fixed-point overflow in balance prefix"),
            }
        }
    }
    SeriesValue::Enclosure {
        lo: acc.lo_q() + head,
        hi: acc.hi_q() + head,
        cert: Certificate { kind: TailKind::FiniteSum, cut: t as u64 },
    }
}

pub fn price_of(pf: &Portfolio, pricing: Pricing<'_>, opts: &SumOpts) -> Result<SeriesValue, Error> {
    Compiled::new(pf)?.price(pricing, opts)
}

pub fn balance_at(pf: &Portfolio, pricing: Pricing<'_>, w: &Outcome, opts: &SumOpts) -> Result<SeriesValue, Error> {
    Compiled::new(pf)?.balance_at(pricing, w, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{CanonicalMeasure, Event, PriceAssignment, Space};
    use crate::portfolio::family::BaseFamily;
    use crate::portfolio::grammar::{EventFamily, IndexMap};
    use crate::rational::{q, qi};
    use alloc::boxed::Box;

    fn opts() -> SumOpts {
        SumOpts::default()
    }

    /// ln 2 from the fast series sum 1/(k 2^k), with its geometric tail.
    fn ln2_bounds() -> (f64, f64) {
        let mut s = 0.0f64;
        for k in 1..60 {
            s += 1.0 / (k as f64 * 2f64.powi(k));
        }
        (s - 1e-15, s + 1e-15)
    }

    #[test]
    fn geometric_and_divergent_sums() {
        let g = CoeffSeq::Geometric { c: q(1, 2), r: q(1, 2) };
        assert_eq!(series_sum(&g, &IndexRule::Const(qi(1)), &opts()).unwrap(), SeriesValue::Exact(qi(1)));
        let ones = CoeffSeq::Rule(IndexRule::Const(qi(1)));
        assert_eq!(
            series_sum(&ones, &IndexRule::Const(qi(1)), &opts()).unwrap(),
            SeriesValue::Divergent(Direction::PosInf)
        );
        let ap = CoeffSeq::AlternatingPower { c: qi(1), shift: qi(0), exponent: 1 };
        let v = series_sum(&ap, &IndexRule::Const(qi(1)), &opts()).unwrap();
        let (lo, hi) = v.bounds().unwrap();
        let (l2, h2) = ln2_bounds();
        assert!(crate::rational::to_f64(&lo) <= -l2 + 1e-12 && crate::rational::to_f64(&hi) >= -h2 - 1e-12);
        assert!(v.width().unwrap() <= q(2, 1_000_000));
    }

    #[test]
    fn finite_price_and_balance() {
        let s = Space::finite(["a", "b"]).unwrap();
        let pf = Portfolio::finite(s.clone(), alloc::vec![(qi(1), Event::finite([0])), (qi(1), Event::finite([1]))]).unwrap();
        let p = PriceAssignment::new().with_event(Event::finite([0]), q(2, 5)).with_event(Event::finite([1]), q(3, 5));
        assert_eq!(price_of(&pf, Pricing::Assigned(&p), &opts()).unwrap(), SeriesValue::Exact(qi(1)));
        let one = Portfolio::finite(s, alloc::vec![(qi(1), Event::finite([0]))]).unwrap();
        assert_eq!(
            balance_at(&one, Pricing::Assigned(&p), &Outcome::Finite(0), &opts()).unwrap(),
            SeriesValue::Exact(q(3, 5))
        );
    }

    #[test]
    fn whole_space_bets() {
        let pf = Portfolio::new(
            CoeffSeq::Rule(IndexRule::Const(qi(1))),
            EventFamily::Base(BaseFamily::Constant(Space::UnitInterval.whole())),
            Space::UnitInterval,
        )
        .unwrap();
        let m = CanonicalMeasure::LebesgueUnit;
        assert_eq!(price_of(&pf, Pricing::Measure(&m), &opts()).unwrap(), SeriesValue::Divergent(Direction::PosInf));
        assert_eq!(
            balance_at(&pf, Pricing::Measure(&m), &Outcome::Unit(q(1, 3)), &opts()).unwrap(),
            SeriesValue::Exact(qi(0))
        );
    }

    fn chain() -> BaseFamily {
        BaseFamily::ChainIntervals { r: IndexRule::reciprocal(qi(1), qi(1)), lo_closed: false, hi_closed: false }
    }

    fn chain_prices(delta: Q) -> PriceAssignment {
        PriceAssignment::new().with_rule(
            chain(),
            IndexRule::Sum(alloc::vec![IndexRule::reciprocal(qi(1), qi(1)), IndexRule::Const(delta)]),
        )
    }

    #[test]
    fn chain_probe_balance_telescopes() {
        // (1, A_1), (-1, A_2), (-1, A_3), ... over the differences is constant;
        // here the raw chain version: I_{A_1} - sum_{i>=2} I_{A_i} - delta
        let pf = Portfolio::new(
            CoeffSeq::Prefixed(alloc::vec![qi(1)], Box::new(CoeffSeq::Rule(IndexRule::Const(qi(-1))))),
            EventFamily::Base(chain()),
            Space::UnitInterval,
        )
        .unwrap();
        let p = chain_prices(q(1, 10));
        // w = 3/4 lies in no A_i: balance = -P(A_1) + sum_{i>=2} P(A_i) diverges
        let v = balance_at(&pf, Pricing::Assigned(&p), &Outcome::Unit(q(3, 4)), &opts()).unwrap();
        assert_eq!(v, SeriesValue::Divergent(Direction::PosInf));
    }

    #[test]
    fn differences_probe_is_constant() {
        let d = BaseFamily::ChainDifferences { r: IndexRule::reciprocal(qi(1), qi(1)), hi_closed: false };
        let info = d.info().unwrap();
        let whole = info.disjoint_union().unwrap();
        let pf = Portfolio::new(
            CoeffSeq::Prefixed(alloc::vec![qi(1)], Box::new(CoeffSeq::Rule(IndexRule::Const(qi(-1))))),
            EventFamily::Prefixed(alloc::vec![whole.clone()], Box::new(EventFamily::Base(d.clone()))),
            Space::UnitInterval,
        )
        .unwrap();
        let m = CanonicalMeasure::LebesgueUnit;
        for w in [q(1, 3), q(1, 7), q(3, 4), qi(0), q(1, 1000)] {
            let v = balance_at(&pf, Pricing::Measure(&m), &Outcome::Unit(w.clone()), &opts()).unwrap();
            assert!(v.contains(&qi(0)), "{w}: {v}");
        }
    }

    #[test]
    fn permuted_price_changes() {
        let pf = Portfolio::new(
            CoeffSeq::AlternatingPower { c: qi(1), shift: qi(0), exponent: 1 },
            EventFamily::Base(BaseFamily::Constant(Space::UnitInterval.whole())),
            Space::UnitInterval,
        )
        .unwrap();
        let m = CanonicalMeasure::LebesgueUnit;
        let map = IndexMap::BlockPattern { k: 3, images: alloc::vec![(2, -1), (4, -2), (4, 0)] };
        let p1 = price_of(&pf, Pricing::Measure(&m), &opts()).unwrap();
        let p2 = price_of(&crate::portfolio::permute(&pf, &map).unwrap(), Pricing::Measure(&m), &opts()).unwrap();
        // one odd (negative) per two evens: -ln 2 + (1/2) ln 2
        let diff = p2.add(&p1.neg());
        let half_ln2 = 0.5 * core::f64::consts::LN_2;
        let (lo, hi) = diff.bounds().unwrap();
        assert!(crate::rational::to_f64(&lo) <= half_ln2 && crate::rational::to_f64(&hi) >= half_ln2, "{diff}");
        assert!(diff.width().unwrap() < q(1, 100_000));
    }

    #[test]
    fn small_outcome_uses_fixed_point_prefix() {
        let pf = Portfolio::new(
            CoeffSeq::AlternatingPower { c: qi(1), shift: qi(1), exponent: 1 },
            EventFamily::Base(chain()),
            Space::UnitInterval,
        )
        .unwrap();
        let m = CanonicalMeasure::LebesgueUnit;
        let w = Outcome::Unit(q(1, 5000));
        let v = balance_at(&pf, Pricing::Measure(&m), &w, &opts()).unwrap();
        // direct partial sum over the members, then the priced tail
        let mut direct = 0.0f64;
        for i in 1..200_000i64 {
            let c = if i % 2 == 0 { 1.0 } else { -1.0 } / (i as f64 + 1.0);
            let p = 1.0 / (i as f64 + 1.0);
            let ind = if (i + 1) < 5000 { 1.0 } else { 0.0 };
            direct += c * (ind - p);
        }
        let (lo, hi) = v.bounds().unwrap();
        assert!(crate::rational::to_f64(&lo) - 1e-6 <= direct && direct <= crate::rational::to_f64(&hi) + 1e-6, "{v} vs {direct}");
    }
}
