//! Constructive Dutch books: constant-balance portfolios, the additivity
//! probe, and rearrangements of conditionally convergent prices.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{DutchBook, SureLoss};
use crate::error::{invalid, unsupported};
use crate::fixed::Fx;
use crate::measure::{cell_representatives, CanonicalMeasure, Event, Outcome, PriceAssignment, Space};
use crate::portfolio::{
    interleave, negate, permute, price_of, BaseFamily, CoeffSeq, Compiled, EvItem, EvLane, EventFamily, FamilyInfo, IndexMap,
    Portfolio, Pricing,
};
use crate::rational::Q;
use crate::portfolio::compiled::Lane;
use crate::rule::{IndexRule, RuleNF};
use crate::series::{SeriesValue, SumOpts};
use crate::Error;

/// Largest family index checked explicitly before residue rules take over.
const EXPLICIT_LIMIT: i64 = 100_000;

struct FamNet {
    fam: Arc<FamilyInfo>,
    explicit: BTreeMap<i64, Q>,
    lanes: Vec<(RuleNF, u64, i64)>,
}

impl FamNet {
    fn at(&self, k: i64) -> Result<Q, Error> {
        let mut acc = self.explicit.get(&k).cloned().unwrap_or_else(Q::zero);
        for (c, a, b) in &self.lanes {
            let a = *a as i64;
            if (k - b).rem_euclid(a) == 0 && (k - b) / a >= 1 {
                acc += c.at((k - b) / a)?;
            }
        }
        Ok(acc)
    }

    /// Net coefficient on member `L (n - 1) + rho` as a rule in `n`, valid
    /// once every lane has started.
    fn residue_rules(&self) -> (u64, Vec<RuleNF>) {
        let l = self.lanes.iter().fold(1u64, |acc, (_, a, _)| acc.lcm(a));
        let rules = (1..=l as i64)
            .map(|rho| {
                self.lanes.iter().fold(RuleNF::zero(), |acc, (c, a, b)| {
                    let ai = *a as i64;
                    let off = rho - l as i64 - b;
                    if off.rem_euclid(ai) != 0 {
                        acc
                    } else {
                        acc.add(&c.subst_affine(l / a, off / ai))
                    }
                })
            })
            .collect();
        (l, rules)
    }

    /// The net coefficient is the same constant on every member.
    fn constant(&self) -> Result<Option<Q>, Error> {
        let start = self
            .lanes
            .iter()
            .map(|(_, a, b)| *a as i64 + b)
            .chain(self.explicit.keys().map(|k| k + 1))
            .max()
            .unwrap_or(1)
            .max(1);
        if start > EXPLICIT_LIMIT {
            return Ok(None);
        }
        let c = self.at(1)?;
        for k in 2..start {
            if self.at(k)? != c {
                return Ok(None);
            }
        }
        let (_, rules) = self.residue_rules();
        for r in &rules {
            let v = if r.is_zero() { Some(Q::zero()) } else { r.as_constant() };
            if v.as_ref() != Some(&c) {
                return Ok(None);
            }
        }
        Ok(Some(c))
    }
}

/// The payout `sum_i alpha_i I_{A_i}` when the grammar proves it constant on
/// the whole space and its partial sums converge at every outcome.
pub fn constant_payout(c: &Compiled) -> Result<Option<Q>, Error> {
    let mut fixed: Vec<(Q, Event)> = Vec::new();
    let mut fams: BTreeMap<BaseFamily, FamNet> = BTreeMap::new();
    for (a, item) in &c.prefix {
        if a.is_zero() {
            continue;
        }
        match item {
            EvItem::Fixed(e) => fixed.push((a.clone(), e.clone())),
            EvItem::Member(fam, k) => {
                *fam_net(&mut fams, fam).explicit.entry(*k).or_insert_with(Q::zero) += a;
            }
        }
    }
    let mut fixed_lanes: BTreeMap<Event, RuleNF> = BTreeMap::new();
    for (coef, lane) in &c.lanes {
        if coef.is_zero() {
            continue;
        }
        match lane {
            EvLane::Fixed(e) => {
                if !coef.tends_to_zero() {
                    return Ok(None);
                }
                let acc = fixed_lanes.entry(e.clone()).or_insert_with(RuleNF::zero);
                *acc = acc.add(coef);
            }
            EvLane::Member { fam, a, b } => {
                fam_net(&mut fams, fam).lanes.push((coef.clone(), *a, *b));
            }
        }
    }
    if fixed_lanes.values().any(|r| !r.is_zero()) {
        return Ok(None);
    }
    for net in fams.values() {
        let Some(v) = net.constant()? else {
            return Ok(None);
        };
        if v.is_zero() {
            if net.fam.has_infinite_membership(&c.space) {
                return Ok(None);
            }
        } else {
            match net.fam.disjoint_union() {
                Some(u) if net.fam.base.is_disjoint() => fixed.push((v, u)),
                _ => return Ok(None),
            }
        }
    }
    fixed_payout(&c.space, &fixed)
}

fn fam_net<'a>(fams: &'a mut BTreeMap<BaseFamily, FamNet>, fam: &Arc<FamilyInfo>) -> &'a mut FamNet {
    fams.entry(fam.base.clone())
        .or_insert_with(|| FamNet { fam: fam.clone(), explicit: BTreeMap::new(), lanes: Vec::new() })
}

fn fixed_payout(space: &Space, bets: &[(Q, Event)]) -> Result<Option<Q>, Error> {
    let mut points = Vec::new();
    let mut coords = Vec::new();
    for (_, e) in bets {
        match e {
            Event::Intervals(u) => points.extend(u.endpoints().cloned()),
            Event::Cylinders(cy) => coords.extend(cy.coords()),
            Event::Finite(_) => {}
        }
    }
    let mut value: Option<Q> = None;
    for w in cell_representatives(space, &points, &coords)? {
        let mut acc = Q::zero();
        for (a, e) in bets {
            if e.indicator(&w)? {
                acc += a;
            }
        }
        match &value {
            None => value = Some(acc),
            Some(v) if *v != acc => return Ok(None),
            _ => {}
        }
    }
    Ok(Some(value.unwrap_or_else(Q::zero)))
}

/// The constant balance of `pf`, if the grammar proves one.
pub fn constant_balance(pf: &Portfolio, pricing: Pricing<'_>, opts: &SumOpts) -> Result<Option<SeriesValue>, Error> {
    let c = Compiled::new(pf)?;
    let Some(payout) = constant_payout(&c)? else {
        return Ok(None);
    };
    let price = c.price(pricing, opts)?;
    if !price.is_convergent() {
        return Ok(None);
    }
    Ok(Some(price.neg().add_exact(&payout)))
}

/// A uniform Dutch book from a portfolio with provably constant nonzero
/// balance: the portfolio itself when the constant is negative, its
/// negation when positive.
pub fn constant_balance_attack(pf: &Portfolio, pricing: Pricing<'_>, opts: &SumOpts) -> Result<Option<DutchBook>, Error> {
    let Some(bal) = constant_balance(pf, pricing, opts)? else {
        return Ok(None);
    };
    if !bal.excludes_zero() {
        return Ok(None);
    }
    let (lo, _) = bal.bounds().unwrap();
    Ok(Some(if lo.is_negative() {
        DutchBook { portfolio: pf.clone(), margin: bal.neg(), kind: SureLoss::Uniform }
    } else {
        DutchBook { portfolio: negate(pf), margin: bal, kind: SureLoss::Uniform }
    }))
}

/// `(1, whole), (-1, part_1), (-1, part_2), ...`. The parts must be provably
/// disjoint with union `whole`.
pub fn additivity_probe(space: &Space, whole: &Event, parts: &EventFamily) -> Result<Portfolio, Error> {
    space.check_event(whole)?;
    match parts {
        EventFamily::ExplicitList(v) => {
            for (i, a) in v.iter().enumerate() {
                for (j, b) in v.iter().enumerate().skip(i + 1) {
                    if !a.is_disjoint(b)? {
                        return Err(Error::NotDisjoint(i + 1, j + 1));
                    }
                }
            }
            let mut u = space.empty();
            for e in v {
                u = u.union(e)?;
            }
            if !u.same_set(whole, space)? {
                return Err(invalid("parts do not cover the whole event"));
            }
            let mut bets = alloc::vec![(Q::one(), whole.clone())];
            bets.extend(v.iter().map(|e| (-Q::one(), e.clone())));
            Portfolio::finite(space.clone(), bets)
        }
        EventFamily::Base(base) => {
            let info = base.info()?;
            let u = match info.disjoint_union() {
                Some(u) if base.is_disjoint() => u,
                _ => return Err(unsupported("disjointness or union of this family is not symbolically checkable")),
            };
            if !u.same_set(whole, space)? {
                return Err(invalid("parts do not cover the whole event"));
            }
            Portfolio::new(
                CoeffSeq::Prefixed(alloc::vec![Q::one()], Box::new(CoeffSeq::Rule(IndexRule::Const(-Q::one())))),
                EventFamily::Prefixed(alloc::vec![whole.clone()], Box::new(parts.clone())),
                space.clone(),
            )
        }
        _ => Err(unsupported("disjointness of a composite family is not symbolically checkable")),
    }
}

/// Outcome of comparing `P(whole)` with `sum_i P(part_i)`; the enclosure is
/// of the gap `P(whole) - sum_i P(part_i)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Additivity {
    Holds(SeriesValue),
    Fails(SeriesValue),
    Undetermined(String),
}

pub fn check_countable_additivity(
    space: &Space,
    pricing: Pricing<'_>,
    whole: &Event,
    parts: &EventFamily,
    opts: &SumOpts,
) -> Result<Additivity, Error> {
    let probe = match additivity_probe(space, whole, parts) {
        Err(Error::Unsupported(why)) => return Ok(Additivity::Undetermined(why)),
        r => r?,
    };
    let gap = price_of(&probe, pricing, opts)?;
    Ok(match gap {
        SeriesValue::Divergent(_) | SeriesValue::Undetermined(_) => Additivity::Undetermined(alloc::format!("gap series: {gap:?}")),
        g if g.excludes_zero() => Additivity::Fails(g),
        g if g.contains(&Q::zero()) => Additivity::Holds(g),
        g => Additivity::Undetermined(alloc::format!("gap enclosure {g:?} neither contains nor excludes 0")),
    })
}

/// `1 / rule` within the rule grammar.
pub fn invert_rule(r: &IndexRule) -> Result<IndexRule, Error> {
    let inv = |c: &Q| {
        if c.is_zero() {
            Err(invalid("rule has a zero factor"))
        } else {
            Ok(c.recip())
        }
    };
    Ok(match r {
        IndexRule::Const(c) => IndexRule::Const(inv(c)?),
        IndexRule::Power { coeff, shift, exponent } => {
            IndexRule::Power { coeff: inv(coeff)?, shift: shift.clone(), exponent: -exponent }
        }
        IndexRule::Geometric { coeff, ratio } => IndexRule::Geometric { coeff: inv(coeff)?, ratio: inv(ratio)? },
        IndexRule::Alternating(x) => IndexRule::Alternating(Box::new(invert_rule(x)?)),
        IndexRule::Product(v) => IndexRule::Product(v.iter().map(invert_rule).collect::<Result<_, _>>()?),
        IndexRule::Sum(v) if v.len() == 1 => invert_rule(&v[0])?,
        IndexRule::Sum(_) => return Err(unsupported("reciprocal of a sum rule")),
    })
}

/// Price rule of a base family as an index rule.
fn price_index_rule(base: &BaseFamily, pricing: Pricing<'_>) -> Result<IndexRule, Error> {
    match pricing {
        Pricing::Assigned(p) => p.rule(base).cloned().ok_or_else(|| Error::MissingPrice("no price rule for the family".into())),
        Pricing::Measure(m) => match (base, m) {
            (BaseFamily::FirstSuccess, CanonicalMeasure::FairCoin) => {
                Ok(IndexRule::Geometric { coeff: Q::one(), ratio: Q::new(1.into(), 2.into()) })
            }
            _ => Err(unsupported("measure price rule of this family has no grammar reciprocal")),
        },
    }
}

/// Takes one odd-index term, then two even-index terms.
pub fn two_evens_per_odd() -> IndexMap {
    IndexMap::BlockPattern { k: 3, images: alloc::vec![(2, -1), (4, -2), (4, 0)] }
}

/// Interleaves `((-1)^i / (i P(A_i)), A_i)` with the negation of its
/// rearrangement under `pi`; the indicator terms cancel pairwise, leaving
/// the constant balance `p - p*`.
pub fn rearrangement_attack_with(
    family: &BaseFamily,
    pricing: Pricing<'_>,
    pi: &IndexMap,
    opts: &SumOpts,
) -> Result<Option<DutchBook>, Error> {
    if !family.is_disjoint() {
        return Err(invalid("rearrangement needs a disjoint family"));
    }
    let info = family.info()?;
    let space = family.space_kind().ok_or_else(|| invalid("family has no fixed space"))?;
    if !pricing.family_rule(&info)?.positive_from(1) {
        return Err(invalid("prices must be provably positive on every member"));
    }
    let inv = invert_rule(&price_index_rule(family, pricing)?)?;
    let pf1 = Portfolio::new(
        CoeffSeq::Scaled(Box::new(CoeffSeq::AlternatingPower { c: Q::one(), shift: Q::zero(), exponent: 1 }), inv),
        EventFamily::Base(family.clone()),
        space,
    )?;
    let pf2 = negate(&permute(&pf1, pi)?);
    constant_balance_attack(&interleave(&pf1, &pf2)?, pricing, opts)
}

/// [`rearrangement_attack_with`] under [`two_evens_per_odd`]; the margin is
/// `(1/2) ln 2`.
pub fn rearrangement_attack(family: &BaseFamily, pricing: Pricing<'_>, opts: &SumOpts) -> Result<DutchBook, Error> {
    rearrangement_attack_with(family, pricing, &two_evens_per_odd(), opts)?
        .ok_or_else(|| invalid("rearranged price does not certifiably differ"))
}

/// Certificates accompanying the chain rearrangement book.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BeamReport {
    pub delta: Q,
    pub samples: Vec<Q>,
    /// `sum_i beta_i I_{B_i}(w) = 0` exactly at every sample.
    pub cancellation: bool,
    pub horizon: u64,
    /// Upper bound on `|sum_{i >= n} beta_i (I_{B_i}(w) - P(B_i))|` for all
    /// `n <= horizon` and all `w`.
    pub bound: Q,
    /// Largest truncated balance magnitude seen at the samples.
    pub observed: Q,
}

pub fn beam_chain() -> BaseFamily {
    BaseFamily::ChainIntervals { r: IndexRule::reciprocal(Q::one(), Q::one()), lo_closed: false, hi_closed: false }
}

pub fn beam_prices(delta: &Q) -> PriceAssignment {
    PriceAssignment::new().with_rule(
        beam_chain(),
        IndexRule::Sum(alloc::vec![IndexRule::reciprocal(Q::one(), Q::one()), IndexRule::Const(delta.clone())]),
    )
}

pub fn beam_permutation() -> IndexMap {
    IndexMap::BlockPattern { k: 3, images: alloc::vec![(4, -3), (4, -1), (2, 0)] }
}

/// The interleave of `((-1)^i/(i+1), A_i)` and its mirrored rearrangement
/// on `A_i = (0, 1/(i+1))`.
pub fn beam_portfolio() -> Result<Portfolio, Error> {
    let sigma = Portfolio::new(
        CoeffSeq::AlternatingPower { c: Q::one(), shift: Q::one(), exponent: 1 },
        EventFamily::Base(beam_chain()),
        Space::UnitInterval,
    )?;
    let tau = negate(&permute(&sigma, &beam_permutation())?);
    interleave(&sigma, &tau)
}

fn default_samples() -> Vec<Q> {
    let mut out = alloc::vec![Q::new(3.into(), 4.into()), Q::new(1.into(), 2.into())];
    let mut j = 1i64;
    while out.len() < 100 {
        // Interior points and chain endpoints, alternately.
        out.push(if j % 2 == 0 { Q::new(1.into(), (j + 1).into()) } else { Q::new(2.into(), (2 * j + 3).into()) });
        j += 1;
    }
    out
}

pub fn beam_attack(delta: &Q, opts: &SumOpts) -> Result<(DutchBook, BeamReport), Error> {
    beam_attack_with(delta, &default_samples(), 100_000, opts)
}

pub fn beam_attack_with(delta: &Q, samples: &[Q], horizon: u64, opts: &SumOpts) -> Result<(DutchBook, BeamReport), Error> {
    if !delta.is_positive() || *delta > Q::new(1.into(), 2.into()) {
        return Err(invalid("delta must lie in (0, 1/2]"));
    }
    let prices = beam_prices(delta);
    let pricing = Pricing::Assigned(&prices);
    let pf = beam_portfolio()?;
    let book = constant_balance_attack(&pf, pricing, opts)?.ok_or_else(|| invalid("beam balance is not certified nonzero"))?;
    let c = Compiled::new(&pf)?;
    let fam = beam_chain().info()?;

    let mut cancellation = true;
    let mut outside = Vec::with_capacity(samples.len());
    for w in samples {
        let wo = Outcome::Unit(w.clone());
        let mem = fam.membership(&wo)?;
        let k_end = mem.settled_from();
        if mem.tail() {
            return Err(invalid("sample lies in every chain member"));
        }
        outside.push(k_end);
        // Family index pi(i) >= 2i/3, so global indices past 3K + 8 miss w.
        let last = 3 * k_end as u64 + 8;
        let mut acc = Q::zero();
        for i in 1..=last {
            let (a, item) = c.bet(i)?;
            if let EvItem::Member(_, k) = item {
                if mem.contains(k) {
                    acc += a;
                }
            }
        }
        cancellation &= acc.is_zero();
    }

    let (bound, observed) = truncation_bounds(&pf, delta, &book, &outside, horizon)?;
    let report = BeamReport { delta: delta.clone(), samples: samples.to_vec(), cancellation, horizon, bound, observed };
    Ok((book, report))
}

/// Worst-case bound on truncated balances and the largest value seen at
/// samples whose first excluded chain index is `outside[s]`.
fn truncation_bounds(pf: &Portfolio, delta: &Q, book: &DutchBook, outside: &[i64], horizon: u64) -> Result<(Q, Q), Error> {
    let c = Compiled::new(pf)?;
    let n = horizon as usize + 1;
    let (dn, dd) = (delta.numer().to_i128().unwrap(), delta.denom().to_i128().unwrap());
    let mut ks = Vec::with_capacity(n);
    let mut bet = Vec::with_capacity(n);
    let mut price = Vec::with_capacity(n);
    let overflow = || unsupported("fixed-point overflow in truncation bound");
    for i in 1..n as u64 {
        let (a, item) = c.bet(i)?;
        let EvItem::Member(_, k) = item else {
            return Err(invalid("beam portfolio has a fixed event"));
        };
        let s: i128 = if a.is_positive() { 1 } else { -1 };
        let k1 = k as i128 + 1;
        ks.push(k);
        bet.push(Fx::ratio_i128(s, k1).ok_or_else(overflow)?);
        // a P(A_k) = s (dd + dn (k+1)) / (dd (k+1)^2)
        price.push(Fx::ratio_i128(s * (dd + dn * k1), dd * k1 * k1).ok_or_else(overflow)?);
    }
    // Total balance and total price enclosures.
    let (blo, bhi) = book.margin.neg().bounds().ok_or_else(|| invalid("margin is not an enclosure"))?;
    let total_bal = Fx { lo: Fx::from_q(&blo).ok_or_else(overflow)?.lo, hi: Fx::from_q(&bhi).ok_or_else(overflow)?.hi };
    // The payout is identically zero, so price = -balance.
    let total_price = total_bal.neg();

    // |payout_{n-1}(w)| <= sum of |beta| over members hit by exactly one
    // side, maintained incrementally as each index is added.
    let kmax = ks.iter().copied().max().unwrap_or(1) as usize + 2;
    let mut net = alloc::vec![0i8; kmax];
    let mut unmatched = Fx::ZERO;
    let mut partial_price = Fx::ZERO;
    let mut bound = Fx::ZERO;
    for i in 0..ks.len() {
        // Bound for n = i + 1 (indices < n already included).
        let tail = total_price.checked_sub(partial_price).ok_or_else(overflow)?;
        let cand = unmatched.checked_add(Fx { lo: 0, hi: tail.mag() }).ok_or_else(overflow)?;
        bound.hi = bound.hi.max(cand.hi);
        let k = ks[i] as usize;
        let mag = Fx::ratio_i128(1, k as i128 + 1).ok_or_else(overflow)?;
        let s: i8 = if bet[i].hi > 0 { 1 } else { -1 };
        let before = net[k];
        net[k] += s;
        unmatched = match (before == 0, net[k] == 0) {
            (true, false) => unmatched.checked_add(mag),
            (false, true) => unmatched.checked_sub(mag),
            _ => Some(unmatched),
        }
        .ok_or_else(overflow)?;
        partial_price = partial_price.checked_add(price[i]).ok_or_else(overflow)?;
    }

    // Direct evaluation at the samples.
    let mut observed = 0i128;
    for &k_end in outside {
        let mut partial = Fx::ZERO;
        for i in 0..ks.len() {
            let t = total_bal.checked_sub(partial).ok_or_else(overflow)?;
            observed = observed.max(t.mag());
            let term = if ks[i] < k_end { bet[i].checked_sub(price[i]) } else { Some(price[i].neg()) };
            partial = partial.checked_add(term.ok_or_else(overflow)?).ok_or_else(overflow)?;
        }
    }
    Ok((round_up(&Fx { lo: 0, hi: bound.hi }.hi_q()), Fx { lo: 0, hi: observed }.hi_q()))
}

/// Rounds up to a multiple of `10^-6`.
fn round_up(x: &Q) -> Q {
    let m = BigInt::from(1_000_000);
    Q::new((x * Q::from_integer(m.clone())).ceil().to_integer(), m)
}
