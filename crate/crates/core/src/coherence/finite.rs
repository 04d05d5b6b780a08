//! Exact LP checks on finite spaces: de Finetti feasibility with dual
//! Dutch books, and the uniform, strict and weak sure-loss variants.

use alloc::vec::Vec;

use num_traits::{One, Signed, Zero};

use super::{CoherenceReport, CoherenceVerdict, DutchBook, Extension, SureLoss};
use crate::error::{invalid, unsupported};
use crate::lp::{Lp, LpResult, Rel};
use crate::measure::{field_cells, Event, EventCollection, Outcome, PriceAssignment, Space};
use crate::portfolio::Portfolio;
use crate::rational::Q;
use crate::series::SeriesValue;
use crate::Error;

/// A finite betting problem: outcomes, priced events and the indicator
/// matrix `ind[a][w]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteInstance {
    pub space: Space,
    pub events: Vec<Event>,
    pub prices: Vec<Q>,
    ind: Vec<Vec<bool>>,
}

impl FiniteInstance {
    pub fn new(space: &Space, coll: &EventCollection, prices: &PriceAssignment) -> Result<Self, Error> {
        let n = space.size().ok_or_else(|| unsupported("LP coherence needs a finite space"))?;
        if n == 0 {
            return Err(invalid("empty outcome set"));
        }
        let mut events: Vec<Event> = Vec::new();
        let mut ps = Vec::new();
        for e in &coll.events {
            space.check_event(e)?;
            if events.contains(e) {
                continue;
            }
            let p = prices.get(e).ok_or_else(|| Error::MissingPrice(alloc::format!("{e}")))?;
            events.push(e.clone());
            ps.push(p.clone());
        }
        let ind = events
            .iter()
            .map(|e| (0..n).map(|w| e.indicator(&Outcome::Finite(w))).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        Ok(FiniteInstance { space: space.clone(), events, prices: ps, ind })
    }

    pub fn outcomes(&self) -> usize {
        self.space.size().unwrap()
    }

    /// Exact balance of coefficients `alpha` at outcome `w`.
    pub fn balance(&self, alpha: &[Q], w: usize) -> Q {
        let mut acc = Q::zero();
        for (a, (row, p)) in alpha.iter().zip(self.ind.iter().zip(&self.prices)) {
            if a.is_zero() {
                continue;
            }
            acc += if row[w] { a * (Q::one() - p) } else { -(a * p) };
        }
        acc
    }

    fn extension_lp(&self) -> Lp {
        let n = self.outcomes();
        let mut lp = Lp::new(n);
        lp.row(alloc::vec![Q::one(); n], Rel::Eq, Q::one());
        for (row, p) in self.ind.iter().zip(&self.prices) {
            lp.row(row.iter().map(|&b| if b { Q::one() } else { Q::zero() }).collect(), Rel::Eq, p.clone());
        }
        lp
    }

    /// Outcome weights of a finitely additive extension, or a Farkas vector.
    pub fn extension(&self) -> Result<Vec<Q>, Vec<Q>> {
        match self.extension_lp().solve() {
            LpResult::Optimal { x, .. } => Ok(x),
            LpResult::Infeasible { farkas } => Err(farkas),
            LpResult::Unbounded => unreachable!("zero objective"),
        }
    }

    /// Best normalized book over the outcomes in `support`:
    /// `max eps` with `balance(w) <= -eps` on `support`, `|alpha| <= 1`,
    /// `0 <= eps <= 1`.
    pub fn uniform_book(&self, support: &[usize]) -> (Vec<Q>, Q) {
        let k = self.events.len();
        let mut lp = Lp::new(k + 1);
        for j in 0..k {
            lp.free[j] = true;
        }
        lp.objective[k] = Q::one();
        for &w in support {
            let mut row: Vec<Q> = (0..k)
                .map(|a| if self.ind[a][w] { Q::one() - &self.prices[a] } else { -self.prices[a].clone() })
                .collect();
            row.push(Q::one());
            lp.row(row, Rel::Le, Q::zero());
        }
        for j in 0..=k {
            let mut e = alloc::vec![Q::zero(); k + 1];
            e[j] = Q::one();
            lp.row(e.clone(), Rel::Le, Q::one());
            if j < k {
                e[j] = -Q::one();
                lp.row(e, Rel::Le, Q::one());
            }
        }
        match lp.solve() {
            LpResult::Optimal { mut x, value, .. } => {
                x.truncate(k);
                (x, value)
            }
            other => unreachable!("bounded feasible LP: {other:?}"),
        }
    }

    /// `max sum eps_w` with `balance(w) + eps_w <= 0`, `0 <= eps_w <= 1`,
    /// coefficients free. Equals `|support|` iff a strictly losing book exists.
    pub fn strict_book(&self) -> (Vec<Q>, bool) {
        let k = self.events.len();
        let n = self.outcomes();
        let mut lp = Lp::new(k + n);
        for j in 0..k {
            lp.free[j] = true;
        }
        for w in 0..n {
            lp.objective[k + w] = Q::one();
            let mut row: Vec<Q> = (0..k)
                .map(|a| if self.ind[a][w] { Q::one() - &self.prices[a] } else { -self.prices[a].clone() })
                .collect();
            row.extend((0..n).map(|v| if v == w { Q::one() } else { Q::zero() }));
            lp.row(row, Rel::Le, Q::zero());
            let mut cap = alloc::vec![Q::zero(); k + n];
            cap[k + w] = Q::one();
            lp.row(cap, Rel::Le, Q::one());
        }
        match lp.solve() {
            LpResult::Optimal { mut x, value, .. } => {
                x.truncate(k);
                (x, value == Q::from_integer((n as i64).into()))
            }
            other => unreachable!("bounded feasible LP: {other:?}"),
        }
    }

    /// Outcomes with zero weight under every extension (all outcomes when
    /// no extension exists).
    pub fn null_outcomes(&self) -> Vec<usize> {
        let n = self.outcomes();
        let mut null = Vec::new();
        for w in 0..n {
            let mut lp = self.extension_lp();
            lp.objective[w] = Q::one();
            match lp.solve() {
                LpResult::Optimal { value, .. } if value.is_positive() => {}
                _ => null.push(w),
            }
        }
        null
    }

    fn book_portfolio(&self, alpha: &[Q]) -> Result<Portfolio, Error> {
        let bets = alpha
            .iter()
            .zip(&self.events)
            .filter(|(a, _)| !a.is_zero())
            .map(|(a, e)| (a.clone(), e.clone()))
            .collect();
        Portfolio::finite(self.space.clone(), bets)
    }

    /// Exact worst-case balance of `alpha` over `support`.
    pub fn worst(&self, alpha: &[Q], support: &[usize]) -> Option<Q> {
        support.iter().map(|&w| self.balance(alpha, w)).max()
    }
}

pub fn lp_coherence_finite(space: &Space, coll: &EventCollection, prices: &PriceAssignment) -> Result<CoherenceReport, Error> {
    let inst = FiniteInstance::new(space, coll, prices)?;
    check_instance(&inst)
}

pub fn check_instance(inst: &FiniteInstance) -> Result<CoherenceReport, Error> {
    let all: Vec<usize> = (0..inst.outcomes()).collect();
    match inst.extension() {
        Ok(q) => {
            let cells = field_cells(&inst.space, &inst.events)?;
            let atoms = cells
                .into_iter()
                .map(|c| (Event::Finite(c), c.indices().map(|w| q[w].clone()).sum::<Q>()))
                .collect();
            Ok(CoherenceReport {
                verdict: CoherenceVerdict::Coherent(Extension { outcome_weights: q, atoms }),
                farkas: None,
            })
        }
        Err(farkas) => {
            let (alpha, eps) = inst.uniform_book(&all);
            let worst = inst.worst(&alpha, &all).unwrap();
            if !eps.is_positive() || worst > -eps.clone() {
                return Ok(CoherenceReport {
                    verdict: CoherenceVerdict::Undetermined("primal infeasible but no uniform book found".into()),
                    farkas: Some(farkas),
                });
            }
            let margin = -worst;
            Ok(CoherenceReport {
                verdict: CoherenceVerdict::Incoherent(DutchBook {
                    portfolio: inst.book_portfolio(&alpha)?,
                    margin: SeriesValue::Exact(margin),
                    kind: SureLoss::Uniform,
                }),
                farkas: Some(farkas),
            })
        }
    }
}

/// Verdicts of the three sure-loss notions on one finite instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trichotomy {
    pub extension_exists: bool,
    pub uniform_loss: bool,
    pub strict_loss: bool,
    pub weak_loss: bool,
    pub null_outcomes: Vec<usize>,
}

impl Trichotomy {
    pub fn agree(&self) -> bool {
        self.uniform_loss == self.strict_loss && self.strict_loss == self.weak_loss && self.weak_loss != self.extension_exists
    }
}

pub fn coherence_trichotomy_check(space: &Space, coll: &EventCollection, prices: &PriceAssignment) -> Result<Trichotomy, Error> {
    trichotomy(&FiniteInstance::new(space, coll, prices)?)
}

pub fn trichotomy(inst: &FiniteInstance) -> Result<Trichotomy, Error> {
    let all: Vec<usize> = (0..inst.outcomes()).collect();
    let extension_exists = inst.extension().is_ok();
    let (_, eps) = inst.uniform_book(&all);
    let (_, strict_loss) = inst.strict_book();
    let null = inst.null_outcomes();
    let live: Vec<usize> = all.iter().copied().filter(|w| !null.contains(w)).collect();
    let weak_loss = live.is_empty() || inst.uniform_book(&live).1.is_positive();
    Ok(Trichotomy { extension_exists, uniform_loss: eps.is_positive(), strict_loss, weak_loss, null_outcomes: null })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};

    fn ab(pa: Q, pb: Q) -> (Space, EventCollection, PriceAssignment) {
        let s = Space::finite(["a", "b"]).unwrap();
        let c = EventCollection::unstructured(alloc::vec![Event::finite([0]), Event::finite([1])]);
        let p = PriceAssignment::new().with_event(Event::finite([0]), pa).with_event(Event::finite([1]), pb);
        (s, c, p)
    }

    #[test]
    fn two_point_examples() {
        let (s, c, p) = ab(q(3, 5), q(3, 5));
        let r = lp_coherence_finite(&s, &c, &p).unwrap();
        let CoherenceVerdict::Incoherent(book) = r.verdict else { panic!() };
        assert_eq!(book.margin, SeriesValue::Exact(q(1, 5)));
        assert_eq!(book.portfolio, Portfolio::finite(s.clone(), alloc::vec![(qi(1), Event::finite([0])), (qi(1), Event::finite([1]))]).unwrap());

        let (s, c, p) = ab(q(2, 5), q(3, 5));
        let r = lp_coherence_finite(&s, &c, &p).unwrap();
        let CoherenceVerdict::Coherent(ext) = r.verdict else { panic!() };
        assert_eq!(ext.outcome_weights, alloc::vec![q(2, 5), q(3, 5)]);
        let t = coherence_trichotomy_check(&s, &c, &p).unwrap();
        assert!(t.agree() && !t.uniform_loss);
    }

    #[test]
    fn monotonicity_violation() {
        let s = Space::finite(["a", "b", "c"]).unwrap();
        let (ab_, bc, b) = (Event::finite([0, 1]), Event::finite([1, 2]), Event::finite([1]));
        let c = EventCollection::unstructured(alloc::vec![ab_.clone(), bc.clone(), b.clone()]);
        let p = PriceAssignment::new().with_event(ab_, q(1, 2)).with_event(bc, q(1, 2)).with_event(b, q(3, 4));
        let r = lp_coherence_finite(&s, &c, &p).unwrap();
        let CoherenceVerdict::Incoherent(book) = r.verdict else { panic!() };
        let inst = FiniteInstance::new(&s, &c, &p).unwrap();
        let farkas = r.farkas.unwrap();
        // y0 + sum y_A I_A(w) >= 0 everywhere and y^T b < 0
        for w in 0..3 {
            let mut v = farkas[0].clone();
            for a in 0..3 {
                if inst.ind[a][w] {
                    v += &farkas[a + 1];
                }
            }
            assert!(!v.is_negative());
        }
        assert!(book.margin.excludes_zero());
        assert!(coherence_trichotomy_check(&s, &c, &p).unwrap().agree());
    }
}
