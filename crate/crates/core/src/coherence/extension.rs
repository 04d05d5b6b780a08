//! Obstructions to coherent extension and the reduction of chain
//! portfolios to finite quotient problems.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_traits::Zero;

use super::finite::{check_instance, FiniteInstance};
use super::CoherenceVerdict;
use crate::error::{invalid, unsupported};
use crate::measure::{Bits, Event, EventCollection, PriceAssignment, Space, MAX_FINITE};
use crate::portfolio::compiled::Lane;
use crate::portfolio::{BaseFamily, Compiled, EvItem, EvLane, EventFamily, FamilyInfo, Portfolio, Pricing};
use crate::rational::Q;
use crate::rule::Limit;
use crate::series::SeriesValue;
use crate::Error;

const MEMBER_SEARCH: i64 = 100_000;

/// A chain decreasing to the empty set whose prices stay away from zero:
/// no countably additive, hence no System-2-coherent, extension exists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtensionObstruction {
    pub chain: EventFamily,
    pub limit: SeriesValue,
}

fn chain_info(chain: &BaseFamily) -> Result<FamilyInfo, Error> {
    let BaseFamily::ChainIntervals { lo_closed, .. } = chain else {
        return Err(invalid("obstruction needs a chain of intervals"));
    };
    let info = chain.info()?;
    if *lo_closed || !info.r_inf.as_ref().unwrap().is_zero() {
        return Err(invalid("chain does not decrease to the empty set"));
    }
    Ok(info)
}

pub fn extension_obstruction(chain: &BaseFamily, pricing: Pricing<'_>) -> Result<Option<ExtensionObstruction>, Error> {
    let info = chain_info(chain)?;
    let limit = match pricing.family_rule(&info)?.limit() {
        Limit::Finite(v) => v,
        _ => return Err(invalid("chain prices have no finite limit")),
    };
    if limit.is_zero() {
        return Ok(None);
    }
    Ok(Some(ExtensionObstruction { chain: EventFamily::Base(chain.clone()), limit: SeriesValue::Exact(limit) }))
}

/// A chain portfolio regrouped by member and truncated: `alpha_j` is the
/// total stake on `A_j`, `j <= k*`, posed on the quotient space whose
/// outcomes are "outside A_1", "in A_j but not A_{j+1}" and "in A_{k*}".
#[derive(Clone, Debug)]
pub struct FiniteReduction {
    pub portfolio: Portfolio,
    pub alpha: Vec<Q>,
    pub quotient: Space,
    pub collection: EventCollection,
    pub prices: PriceAssignment,
}

impl FiniteReduction {
    pub fn instance(&self) -> Result<FiniteInstance, Error> {
        FiniteInstance::new(&self.quotient, &self.collection, &self.prices)
    }

    /// Exact balance of the reduced portfolio at every quotient outcome.
    pub fn balances(&self) -> Result<Vec<Q>, Error> {
        let inst = self.instance()?;
        Ok((0..inst.outcomes()).map(|w| inst.balance(&self.alpha, w)).collect())
    }

    /// `Ok(None)` when the quotient prices are coherent, so no finite
    /// portfolio over them (this one included) loses surely; otherwise the
    /// reason.
    pub fn sure_loss(&self) -> Result<Option<String>, Error> {
        let inst = self.instance()?;
        let report = check_instance(&inst)?;
        Ok(match report.verdict {
            CoherenceVerdict::Coherent(ext) => {
                let mean: Q = self
                    .balances()?
                    .iter()
                    .zip(&ext.outcome_weights)
                    .map(|(b, q)| b * q)
                    .sum();
                if mean.is_zero() {
                    None
                } else {
                    Some(format!("extension gives nonzero expected balance {mean}"))
                }
            }
            CoherenceVerdict::Incoherent(book) => Some(format!("quotient prices admit a Dutch book with margin {:?}", book.margin)),
            CoherenceVerdict::Undetermined(r) => Some(r),
        })
    }
}

/// Index of `e` in the chain, if it is a member.
fn member_index(info: &FamilyInfo, e: &Event, cap: i64) -> Option<i64> {
    (1..=cap).find(|&k| info.event(k) == *e)
}

/// Regroups `pf`, whose bets all lie on members of `chain`, into total stakes
/// on `A_1..A_{k*}`; members beyond `k*` are dropped.
pub fn finite_reduction(pf: &Portfolio, chain: &BaseFamily, pricing: Pricing<'_>, k_star: usize) -> Result<FiniteReduction, Error> {
    if k_star == 0 {
        return Err(invalid("k* must be positive"));
    }
    if k_star + 1 > MAX_FINITE {
        return Err(unsupported(format!("k* above {}", MAX_FINITE - 1)));
    }
    if !matches!(chain, BaseFamily::ChainIntervals { .. }) {
        return Err(invalid("reduction needs a chain of intervals"));
    }
    let info = chain.info()?;
    let c = Compiled::new(pf)?;
    let foreign = || invalid("reduction needs every bet on a member of the chain");
    let mut alpha = alloc::vec![Q::zero(); k_star];
    for (a, item) in &c.prefix {
        if a.is_zero() {
            continue;
        }
        let k = match item {
            EvItem::Member(f, k) if f.base == *chain => *k,
            EvItem::Fixed(e) => member_index(&info, e, MEMBER_SEARCH).ok_or_else(foreign)?,
            _ => return Err(foreign()),
        };
        if k as usize <= k_star {
            alpha[k as usize - 1] += a;
        }
    }
    for (coef, lane) in &c.lanes {
        if coef.is_zero() {
            continue;
        }
        let (a, b) = match lane {
            EvLane::Member { fam, a, b } if fam.base == *chain => (*a as i64, *b),
            _ => return Err(foreign()),
        };
        // Each lane meets member j at most once, at block (j - b) / a.
        for j in 1..=k_star as i64 {
            if (j - b).rem_euclid(a) == 0 && (j - b) / a >= 1 {
                alpha[j as usize - 1] += coef.at((j - b) / a)?;
            }
        }
    }
    let labels: Vec<String> = (0..=k_star).map(|c| if c == 0 { "out".into() } else { format!("c{c}") }).collect();
    let quotient = Space::finite(labels)?;
    let rule = pricing.family_rule(&info)?;
    let mut events = Vec::with_capacity(k_star);
    let mut prices = PriceAssignment::new();
    let mut bets = Vec::with_capacity(k_star);
    for j in 1..=k_star {
        let ev = Event::Finite(Bits::from_indices(j..=k_star));
        prices.set(ev.clone(), rule.at(j as i64)?);
        events.push(ev);
        bets.push((alpha[j - 1].clone(), info.event(j as i64)));
    }
    let portfolio = Portfolio::finite(pf.space.clone(), bets)?;
    Ok(FiniteReduction { portfolio, alpha, quotient, collection: EventCollection::unstructured(events), prices })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{CanonicalMeasure, Outcome};
    use crate::portfolio::CoeffSeq;
    use crate::rational::{q, qi};
    use crate::rule::IndexRule;

    fn chain() -> BaseFamily {
        BaseFamily::ChainIntervals { r: IndexRule::reciprocal(qi(1), qi(1)), lo_closed: false, hi_closed: false }
    }

    fn ex24(delta: Q) -> PriceAssignment {
        PriceAssignment::new().with_rule(
            chain(),
            IndexRule::Sum(alloc::vec![IndexRule::reciprocal(qi(1), qi(1)), IndexRule::Const(delta)]),
        )
    }

    #[test]
    fn obstructions() {
        let p = ex24(q(1, 10));
        let ob = extension_obstruction(&chain(), Pricing::Assigned(&p)).unwrap().unwrap();
        assert_eq!(ob.limit, SeriesValue::Exact(q(1, 10)));
        let plain = PriceAssignment::new().with_rule(chain(), IndexRule::reciprocal(qi(1), qi(1)));
        assert!(extension_obstruction(&chain(), Pricing::Assigned(&plain)).unwrap().is_none());
        assert!(extension_obstruction(&chain(), Pricing::Measure(&CanonicalMeasure::LebesgueUnit)).unwrap().is_none());
        let geo = BaseFamily::ChainIntervals {
            r: IndexRule::Geometric { coeff: qi(1), ratio: q(1, 2) },
            lo_closed: false,
            hi_closed: true,
        };
        let gp = PriceAssignment::new().with_rule(
            geo.clone(),
            IndexRule::Sum(alloc::vec![IndexRule::Geometric { coeff: qi(1), ratio: q(1, 2) }, IndexRule::Const(q(1, 7))]),
        );
        let ob = extension_obstruction(&geo, Pricing::Assigned(&gp)).unwrap().unwrap();
        assert_eq!(ob.limit, SeriesValue::Exact(q(1, 7)));
        let closed = BaseFamily::ChainIntervals { r: IndexRule::reciprocal(qi(1), qi(1)), lo_closed: true, hi_closed: false };
        assert!(extension_obstruction(&closed, Pricing::Assigned(&p)).is_err());
    }

    #[test]
    fn identity_reduction() {
        let p = ex24(q(1, 10));
        let info = chain().info().unwrap();
        let bets = alloc::vec![(qi(2), info.event(1)), (qi(0), info.event(2)), (qi(-1), info.event(3))];
        let pf = Portfolio::finite(Space::UnitInterval, bets).unwrap();
        let red = finite_reduction(&pf, &chain(), Pricing::Assigned(&p), 3).unwrap();
        assert_eq!(red.portfolio, pf);
        let off = Portfolio::finite(Space::UnitInterval, alloc::vec![(qi(1), Event::interval(crate::measure::Interval::open(qi(0), q(2, 3))))]).unwrap();
        assert!(finite_reduction(&off, &chain(), Pricing::Assigned(&p), 3).is_err());
        assert!(finite_reduction(&pf, &chain(), Pricing::Assigned(&p), 0).is_err());
    }

    #[test]
    fn fiber_cancellation() {
        // beta = (1, -1, ...) on A_1, A_1 via interleave of the same chain.
        let p = ex24(q(1, 10));
        let a = Portfolio::new(
            CoeffSeq::Geometric { c: qi(1), r: q(1, 2) },
            EventFamily::Base(chain()),
            Space::UnitInterval,
        )
        .unwrap();
        let pf = crate::portfolio::interleave(&a, &crate::portfolio::negate(&a)).unwrap();
        let red = finite_reduction(&pf, &chain(), Pricing::Assigned(&p), 20).unwrap();
        assert!(red.alpha.iter().all(Q::is_zero));
        let red = finite_reduction(&a, &chain(), Pricing::Assigned(&p), 20).unwrap();
        assert_eq!(red.alpha[0], qi(1));
        assert_eq!(red.alpha[2], q(1, 4));
        assert_eq!(red.quotient.size(), Some(21));
        assert_eq!(red.sure_loss().unwrap(), None);
        // The reduced bets reproduce the truncated balance at a point of each cell.
        let bal = red.balances().unwrap();
        for (c, w) in [(0usize, q(3, 4)), (1, q(2, 5)), (5, q(1, 7) + q(1, 1000)), (20, q(1, 100))] {
            let direct: Q = red
                .portfolio
                .coeffs
                .clone()
                .pipe_finite()
                .iter()
                .enumerate()
                .map(|(j, al)| {
                    let e = chain().info().unwrap().event(j as i64 + 1);
                    let ind = e.indicator(&Outcome::Unit(w.clone())).unwrap();
                    let pr = q(1, j as i64 + 2) + q(1, 10);
                    if ind { al * (qi(1) - pr) } else { -(al * pr) }
                })
                .sum();
            assert_eq!(bal[c], direct, "cell {c}");
        }
    }

    trait PipeFinite {
        fn pipe_finite(self) -> Vec<Q>;
    }

    impl PipeFinite for CoeffSeq {
        fn pipe_finite(self) -> Vec<Q> {
            match self {
                CoeffSeq::FiniteList(v) => v,
                _ => panic!("not finite"),
            }
        }
    }

    #[test]
    fn incoherent_quotient_is_reported() {
        // Increasing prices on a decreasing chain.
        let bad = PriceAssignment::new().with_rule(chain(), IndexRule::reciprocal(qi(-1), qi(1)));
        let a = Portfolio::new(CoeffSeq::Geometric { c: qi(1), r: q(1, 2) }, EventFamily::Base(chain()), Space::UnitInterval).unwrap();
        let red = finite_reduction(&a, &chain(), Pricing::Assigned(&bad), 3).unwrap();
        assert!(red.sure_loss().unwrap().is_some());
    }
}
