//! Betting-system membership decided structurally on the grammar.
//!
//! Membership in every system reduces to facts about each lane's tail rules:
//! the middle of a balance series is always finite, and which lanes eventually
//! contain `w` is constant on finitely many cells of the space.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_traits::One;

use super::compiled::{Compiled, EvLane, Pricing};
use super::family::BaseFamily;
use super::grammar::Portfolio;
use crate::measure::{cell_representatives, Event, Outcome};
use crate::rule::RuleNF;
use crate::series::{convergence, Convergence};
use crate::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum System {
    S1,
    S2,
    S2B,
    S2A,
    S3,
}

impl System {
    pub const ALL: [System; 5] = [System::S1, System::S2, System::S2B, System::S2A, System::S3];

    pub fn name(self) -> &'static str {
        match self {
            System::S1 => "S1",
            System::S2 => "S2",
            System::S2B => "S2B",
            System::S2A => "S2A",
            System::S3 => "S3",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    In(String),
    Out(String),
    Unknown(String),
}

impl Verdict {
    pub fn is_in(&self) -> bool {
        matches!(self, Verdict::In(_))
    }

    pub fn is_out(&self) -> bool {
        matches!(self, Verdict::Out(_))
    }

    pub fn label(&self) -> &'static str {
        match self {
            Verdict::In(_) => "In",
            Verdict::Out(_) => "Out",
            Verdict::Unknown(_) => "Unknown",
        }
    }

    pub fn reason(&self) -> &str {
        match self {
            Verdict::In(r) | Verdict::Out(r) | Verdict::Unknown(r) => r,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SystemVerdict {
    pub s1: Verdict,
    pub s2: Verdict,
    pub s2b: Verdict,
    pub s2a: Verdict,
    pub s3: Verdict,
}

impl SystemVerdict {
    pub fn get(&self, s: System) -> &Verdict {
        match s {
            System::S1 => &self.s1,
            System::S2 => &self.s2,
            System::S2B => &self.s2b,
            System::S2A => &self.s2a,
            System::S3 => &self.s3,
        }
    }

    fn all_in(reason: &str) -> Self {
        let v = Verdict::In(reason.into());
        SystemVerdict { s1: v.clone(), s2: v.clone(), s2b: v.clone(), s2a: v.clone(), s3: v }
    }

    /// Propagates the containments S1 ⊆ S2 ⊆ S3, S1 ⊆ S2B ⊆ S2A.
    fn close(mut self) -> Self {
        let implied = |v: &Verdict, by: &Verdict, name: &str| match (v, by) {
            (Verdict::In(_), _) => v.clone(),
            (_, Verdict::In(_)) => Verdict::In(format!("contains {name}")),
            _ => v.clone(),
        };
        self.s2 = implied(&self.s2, &self.s1, "S1");
        self.s2b = implied(&self.s2b, &self.s1, "S1");
        self.s3 = implied(&self.s3, &self.s2, "S2");
        self.s2a = implied(&self.s2a, &self.s2b, "S2B");
        let excluded = |v: &Verdict, by: &Verdict, name: &str| match (v, by) {
            (Verdict::Unknown(_), Verdict::Out(_)) => Verdict::Out(format!("not in {name}")),
            _ => v.clone(),
        };
        self.s2 = excluded(&self.s2, &self.s3, "S3");
        self.s2b = excluded(&self.s2b, &self.s2a, "S2A");
        self.s1 = excluded(&self.s1, &self.s2, "S2");
        self.s1 = excluded(&self.s1, &self.s2b, "S2B");
        self
    }

    /// The containment implications hold.
    pub fn consistent(&self) -> bool {
        let imp = |a: &Verdict, b: &Verdict| !a.is_in() || b.is_in();
        imp(&self.s1, &self.s2)
            && imp(&self.s1, &self.s2a)
            && imp(&self.s1, &self.s2b)
            && imp(&self.s1, &self.s3)
            && imp(&self.s2, &self.s3)
            && imp(&self.s2b, &self.s2a)
    }
}

/// Terms bounded in absolute value.
pub fn bounded(r: &RuleNF) -> bool {
    r.comps.iter().all(|c| c.ratio < crate::rational::one() || (c.ratio.is_one() && c.degree().is_none_or(|d| d <= 0)))
}

fn converges(lanes: &[RuleNF]) -> bool {
    if !lanes.iter().all(RuleNF::tends_to_zero) {
        return false;
    }
    let total = lanes.iter().fold(RuleNF::zero(), |a, l| a.add(l));
    !matches!(convergence(&total), Convergence::Diverges(_))
}

fn tail_in(lane: &EvLane, w: &Outcome) -> Result<bool, Error> {
    match lane {
        EvLane::Fixed(e) => e.indicator(w),
        EvLane::Member { fam, .. } => Ok(fam.membership(w)?.tail()),
    }
}

fn is_coordinates(lane: &EvLane) -> bool {
    matches!(lane, EvLane::Member { fam, .. } if fam.base == BaseFamily::Coordinates)
}

/// Outcomes covering every eventual membership pattern of the lanes.
pub fn lane_representatives(c: &Compiled) -> Result<Vec<Outcome>, Error> {
    let mut points = Vec::new();
    let mut coords = Vec::new();
    for (coef, lane) in &c.lanes {
        if coef.is_zero() {
            continue;
        }
        match lane {
            EvLane::Fixed(Event::Intervals(u)) => points.extend(u.endpoints().cloned()),
            EvLane::Fixed(Event::Cylinders(cy)) => coords.extend(cy.coords()),
            EvLane::Fixed(Event::Finite(_)) => {}
            EvLane::Member { fam, .. } => {
                points.extend(fam.critical_points());
                coords.extend(fam.critical_coords());
            }
        }
    }
    cell_representatives(&c.space, &points, &coords)
}

pub fn classify(pf: &Portfolio, pricing: Pricing<'_>) -> Result<SystemVerdict, Error> {
    classify_compiled(&Compiled::new(pf)?, pricing)
}

pub fn classify_compiled(c: &Compiled, pricing: Pricing<'_>) -> Result<SystemVerdict, Error> {
    let live: Vec<usize> = (0..c.lanes.len()).filter(|&j| !c.lanes[j].0.is_zero()).collect();
    // Prices must exist even for finite portfolios.
    c.prefix_price(pricing)?;
    if live.is_empty() {
        return Ok(SystemVerdict::all_in("finitely many nonzero bets"));
    }
    let s1 = Verdict::Out("a lane has infinitely many nonzero coefficients".into());
    let price_terms = c.price_lanes(pricing)?;
    let coeff = |j: usize| &c.lanes[j].0;
    let ev = |j: usize| &c.lanes[j].1;

    let price_abs = live.iter().all(|&j| price_terms[j].abs_summable());
    let price_conv = converges(&price_terms);

    let coord: Vec<usize> = live.iter().copied().filter(|&j| is_coordinates(ev(j))).collect();
    let plain: Vec<usize> = live.iter().copied().filter(|&j| !is_coordinates(ev(j))).collect();
    let coord_abs = coord.iter().all(|&j| coeff(j).abs_summable() && price_terms[j].abs_summable());

    let reps = lane_representatives(c)?;
    let mut pointwise: Option<String> = None;
    let mut s2a_fail: Option<String> = None;
    for w in &reps {
        let mut tails = Vec::with_capacity(plain.len());
        let mut abs_ok = true;
        for &j in &plain {
            let t = if tail_in(ev(j), w)? { coeff(j).sub(&price_terms[j]) } else { price_terms[j].neg() };
            abs_ok &= t.abs_summable();
            tails.push(t);
        }
        if pointwise.is_none() && !converges(&tails) {
            pointwise = Some(format!("balance diverges at w = {w}"));
        }
        if s2a_fail.is_none() && !abs_ok {
            s2a_fail = Some(format!("absolute balance diverges at w = {w}"));
        }
    }
    if s2a_fail.is_none() && !coord_abs {
        s2a_fail = Some("absolute balance diverges at the all-ones or all-zeros sequence".into());
    }

    let balance_conv = match (&pointwise, coord_abs) {
        (Some(r), _) => Err(Verdict::Out(r.clone())),
        (None, true) => Ok(()),
        (None, false) => Err(Verdict::Unknown("coordinate lanes are not absolutely summable".into())),
    };

    let s2 = if !price_abs {
        Verdict::Out("sum of |alpha_i P(A_i)| diverges".into())
    } else {
        match &balance_conv {
            Ok(()) => Verdict::In("absolutely convergent price; balance converges on every cell".into()),
            Err(v) => v.clone(),
        }
    };
    let s3 = if !price_conv {
        Verdict::Out("price series does not converge in the declared order".into())
    } else {
        match &balance_conv {
            Ok(()) => Verdict::In("price converges; balance converges on every cell".into()),
            Err(v) => v.clone(),
        }
    };
    let s2a = match &s2a_fail {
        Some(r) => Verdict::Out(r.clone()),
        None => Verdict::In("absolute balance finite on every cell".into()),
    };
    let s2b = s2b_verdict(c, &live, &price_terms, &reps)?;
    Ok(SystemVerdict { s1, s2, s2b, s2a, s3 }.close())
}

fn s2b_verdict(c: &Compiled, live: &[usize], price_terms: &[RuleNF], reps: &[Outcome]) -> Result<Verdict, Error> {
    let mut unknown = None;
    for &j in live {
        let (coef, lane) = &c.lanes[j];
        let q = &price_terms[j];
        let inside = coef.sub(q);
        match lane {
            EvLane::Fixed(e) => {
                let can_in = !e.is_empty();
                let can_out = !e.complement(&c.space)?.is_empty();
                if (can_in && !inside.abs_summable()) || (can_out && !q.abs_summable()) {
                    return Ok(Verdict::Out(format!("unbounded absolute balance from bets on {e}")));
                }
            }
            EvLane::Member { fam, .. } => match &fam.base {
                BaseFamily::ChainIntervals { .. } => {
                    if !inside.abs_summable() {
                        return Ok(Verdict::Out("absolute balance unbounded near the chain limit".into()));
                    }
                    if !q.abs_summable() {
                        let mut outside = false;
                        for w in reps {
                            outside |= fam.membership(w)?.ranges.is_empty();
                        }
                        if outside {
                            return Ok(Verdict::Out("absolute balance diverges outside the chain".into()));
                        }
                        unknown = Some("cannot bound the priced part of a chain lane");
                    }
                }
                BaseFamily::ChainDifferences { .. } | BaseFamily::FirstSuccess => {
                    if !q.abs_summable() || !bounded(&inside) {
                        return Ok(Verdict::Out("absolute balance unbounded over a disjoint family".into()));
                    }
                }
                BaseFamily::Coordinates => {
                    if !inside.abs_summable() || !q.abs_summable() {
                        return Ok(Verdict::Out("absolute balance unbounded over coordinate patterns".into()));
                    }
                }
                BaseFamily::Constant(_) => unreachable!("constant families compile to fixed lanes"),
            },
        }
    }
    Ok(match unknown {
        Some(r) => Verdict::Unknown(r.into()),
        None => Verdict::In("every lane has a bounded absolute balance".into()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{CanonicalMeasure, Space};
    use crate::portfolio::grammar::{CoeffSeq, EventFamily};
    use crate::rational::qi;
    use crate::rule::IndexRule;

    fn leb() -> CanonicalMeasure {
        CanonicalMeasure::LebesgueUnit
    }

    #[test]
    fn boundary_portfolios() {
        let a = Portfolio::new(
            CoeffSeq::AlternatingPower { c: qi(1), shift: qi(0), exponent: 1 },
            EventFamily::Base(BaseFamily::ChainIntervals {
                r: IndexRule::power(qi(1), qi(0), -2),
                lo_closed: true,
                hi_closed: false,
            }),
            Space::UnitInterval,
        )
        .unwrap();
        let m = leb();
        let v = classify(&a, Pricing::Measure(&m)).unwrap();
        assert!(v.s2.is_in(), "{v:?}");
        assert!(v.s2a.is_out(), "{v:?}");
        assert!(v.s1.is_out() && v.s3.is_in() && v.s2b.is_out());

        let b = Portfolio::new(
            CoeffSeq::Rule(IndexRule::Const(qi(1))),
            EventFamily::Base(BaseFamily::Constant(Space::UnitInterval.whole())),
            Space::UnitInterval,
        )
        .unwrap();
        let v = classify(&b, Pricing::Measure(&m)).unwrap();
        assert!(v.s2b.is_in() && v.s2a.is_in(), "{v:?}");
        assert!(v.s2.is_out() && v.s3.is_out(), "{v:?}");
        assert!(v.consistent());
    }

    #[test]
    fn finite_is_everywhere() {
        let s = Space::finite(["a", "b"]).unwrap();
        let pf = Portfolio::finite(s, alloc::vec![(qi(3), Event::finite([0]))]).unwrap();
        let p = crate::measure::PriceAssignment::new().with_event(Event::finite([0]), qi(2));
        let v = classify(&pf, Pricing::Assigned(&p)).unwrap();
        for sys in System::ALL {
            assert!(v.get(sys).is_in());
        }
    }

    #[test]
    fn rearranged_first_success() {
        // (-1)^i 2^i / i on first-success events priced 2^-i
        let pf = Portfolio::new(
            CoeffSeq::Rule(IndexRule::Product(alloc::vec![
                IndexRule::Alternating(alloc::boxed::Box::new(IndexRule::reciprocal(qi(1), qi(0)))),
                IndexRule::Geometric { coeff: qi(1), ratio: qi(2) },
            ])),
            EventFamily::Base(BaseFamily::FirstSuccess),
            Space::BinarySequences,
        )
        .unwrap();
        let m = CanonicalMeasure::FairCoin;
        let v = classify(&pf, Pricing::Measure(&m)).unwrap();
        assert!(v.s3.is_in(), "{v:?}");
        assert!(v.s2.is_out() && v.s2b.is_out(), "{v:?}");
        assert!(v.s2a.is_out(), "{v:?}");
    }
}
