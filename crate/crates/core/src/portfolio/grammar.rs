//! The closed grammar of coefficient sequences, index maps and event
//! families that portfolios are built from.

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::family::BaseFamily;
use crate::error::invalid;
use crate::measure::{Event, Space};
use crate::rational::{qi, Q};
use crate::rule::IndexRule;
use crate::Error;

/// Coefficients `alpha_i`, `i >= 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum CoeffSeq {
    FiniteList(Vec<Q>),
    /// `c * r^(i-1)` with `|r| < 1`.
    Geometric { c: Q, r: Q },
    /// `c * (-1)^i / (i + shift)^exponent`.
    AlternatingPower { c: Q, shift: Q, exponent: u32 },
    /// `rule(i)`.
    Rule(IndexRule),
    /// `base_i * rule(i)`.
    Scaled(Box<CoeffSeq>, IndexRule),
    /// `base_{map(i)}`.
    Permuted(Box<CoeffSeq>, IndexMap),
    /// `first_1, second_1, first_2, second_2, ...`
    Interleaved(Box<CoeffSeq>, Box<CoeffSeq>),
    /// The listed values, then the tail sequence re-indexed from 1.
    Prefixed(Vec<Q>, Box<CoeffSeq>),
}

/// Bijections of the positive integers.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum IndexMap {
    Identity,
    /// Transpositions applied left to right.
    FiniteSwap(Vec<(u64, u64)>),
    /// `map(k*(m-1) + t) = a_t * m + b_t` for `t = 1..=k`.
    BlockPattern { k: u64, images: Vec<(u64, i64)> },
    /// Swaps `2m - 1` and `2m`.
    PairInterleave,
}

/// Indexed events `A_i`, `i >= 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum EventFamily {
    ExplicitList(Vec<Event>),
    Base(BaseFamily),
    Reindexed(Box<EventFamily>, IndexMap),
    Interleaved(Box<EventFamily>, Box<EventFamily>),
    Prefixed(Vec<Event>, Box<EventFamily>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Portfolio {
    pub coeffs: CoeffSeq,
    pub events: EventFamily,
    pub space: Space,
}

/// Why a block pattern is a bijection: each image progression is a full
/// residue class of positive integers and the classes partition the
/// integers modulo `modulus`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BijectionCert {
    pub modulus: u64,
    pub prefix_checked: u64,
}

const PREFIX_CHECK: u64 = 10_000;

impl IndexMap {
    pub fn pair_interleave_pattern() -> IndexMap {
        IndexMap::BlockPattern { k: 2, images: alloc::vec![(2, 0), (2, -1)] }
    }

    /// Block form of the map, if it has one.
    pub fn as_block(&self) -> Option<(u64, Vec<(u64, i64)>)> {
        match self {
            IndexMap::Identity => Some((1, alloc::vec![(1, 0)])),
            IndexMap::BlockPattern { k, images } => Some((*k, images.clone())),
            IndexMap::PairInterleave => Self::pair_interleave_pattern().as_block(),
            IndexMap::FiniteSwap(_) => None,
        }
    }

    pub fn apply(&self, i: u64) -> u64 {
        match self {
            IndexMap::Identity => i,
            IndexMap::FiniteSwap(ts) => ts.iter().fold(i, |x, &(a, b)| {
                if x == a {
                    b
                } else if x == b {
                    a
                } else {
                    x
                }
            }),
            IndexMap::PairInterleave => {
                if i % 2 == 1 {
                    i + 1
                } else {
                    i - 1
                }
            }
            IndexMap::BlockPattern { k, images } => {
                let m = (i - 1) / k + 1;
                let t = ((i - 1) % k) as usize;
                let (a, b) = images[t];
                (a as i128 * m as i128 + b as i128) as u64
            }
        }
    }

    /// Largest index moved by a finite swap.
    pub fn support_bound(&self) -> Option<u64> {
        match self {
            IndexMap::FiniteSwap(ts) => Some(ts.iter().map(|&(a, b)| a.max(b)).max().unwrap_or(0)),
            _ => None,
        }
    }

    pub fn check_bijective(&self) -> Result<BijectionCert, Error> {
        let bad = |m: String| Error::NotBijective(m);
        match self {
            IndexMap::Identity | IndexMap::PairInterleave => Ok(BijectionCert { modulus: 2, prefix_checked: 0 }),
            IndexMap::FiniteSwap(ts) => {
                if ts.iter().any(|&(a, b)| a == 0 || b == 0) {
                    return Err(bad("indices start at 1".into()));
                }
                Ok(BijectionCert { modulus: 1, prefix_checked: 0 })
            }
            IndexMap::BlockPattern { k, images } => {
                if *k == 0 || images.len() as u64 != *k {
                    return Err(bad(format!("block of size {k} needs exactly {k} images")));
                }
                let mut modulus = 1u64;
                for (t, &(a, b)) in images.iter().enumerate() {
                    if a == 0 {
                        return Err(bad(format!("image {} is constant", t + 1)));
                    }
                    let first = a as i64 + b;
                    if first < 1 || first > a as i64 {
                        return Err(bad(format!(
                            "image {} does not start at the least positive member of its class",
                            t + 1
                        )));
                    }
                    modulus = modulus.lcm(&a);
                    if modulus > 1 << 20 {
                        return Err(bad("image moduli too large".into()));
                    }
                }
                let mut hit = alloc::vec![false; modulus as usize];
                for &(a, b) in images {
                    let r0 = b.rem_euclid(a as i64) as u64;
                    let mut r = r0;
                    while r < modulus {
                        if hit[r as usize] {
                            return Err(bad(format!("residue {r} mod {modulus} hit twice")));
                        }
                        hit[r as usize] = true;
                        r += a;
                    }
                }
                if let Some(r) = hit.iter().position(|h| !h) {
                    return Err(bad(format!("residue {r} mod {modulus} never hit")));
                }
                // Direct check on a prefix: injective, and every target below
                // the smallest progression bound is hit.
                let blocks = PREFIX_CHECK / k;
                let mut seen = BTreeSet::new();
                for i in 1..=blocks * k {
                    if !seen.insert(self.apply(i)) {
                        return Err(bad(format!("index {i} collides")));
                    }
                }
                let cutoff = images.iter().map(|&(a, b)| a as i64 * blocks as i64 + b).min().unwrap_or(0);
                for j in 1..=cutoff.max(0) as u64 {
                    if !seen.contains(&j) {
                        return Err(bad(format!("{j} has no preimage in the checked prefix")));
                    }
                }
                Ok(BijectionCert { modulus, prefix_checked: blocks * k })
            }
        }
    }
}

impl CoeffSeq {
    pub fn validate(&self) -> Result<(), Error> {
        match self {
            CoeffSeq::FiniteList(_) => Ok(()),
            CoeffSeq::Geometric { r, .. } => {
                if r.abs() < Q::one() && !r.is_zero() {
                    Ok(())
                } else {
                    Err(invalid("geometric ratio must satisfy 0 < |r| < 1"))
                }
            }
            CoeffSeq::AlternatingPower { shift, exponent, .. } => {
                if shift.is_negative() || *exponent == 0 {
                    Err(invalid("alternating power needs shift >= 0 and exponent > 0"))
                } else {
                    Ok(())
                }
            }
            CoeffSeq::Rule(r) => r.compile().map(|_| ()),
            CoeffSeq::Scaled(b, r) => {
                r.compile()?;
                b.validate()
            }
            CoeffSeq::Permuted(b, m) => {
                m.check_bijective()?;
                b.validate()
            }
            CoeffSeq::Interleaved(a, b) => {
                a.validate()?;
                b.validate()
            }
            CoeffSeq::Prefixed(_, b) => b.validate(),
        }
    }

    /// Number of terms, `None` for countable sequences.
    pub fn len(&self) -> Option<usize> {
        match self {
            CoeffSeq::FiniteList(v) => Some(v.len()),
            CoeffSeq::Scaled(b, _) | CoeffSeq::Permuted(b, _) => b.len(),
            CoeffSeq::Interleaved(a, b) => Some(2 * a.len()?.max(b.len()?)),
            CoeffSeq::Prefixed(p, b) => Some(p.len() + b.len()?),
            _ => None,
        }
    }

    pub fn negate(&self) -> CoeffSeq {
        match self {
            CoeffSeq::FiniteList(v) => CoeffSeq::FiniteList(v.iter().map(|x| -x).collect()),
            CoeffSeq::Geometric { c, r } => CoeffSeq::Geometric { c: -c, r: r.clone() },
            CoeffSeq::AlternatingPower { c, shift, exponent } => {
                CoeffSeq::AlternatingPower { c: -c, shift: shift.clone(), exponent: *exponent }
            }
            other => CoeffSeq::Scaled(Box::new(other.clone()), IndexRule::Const(qi(-1))),
        }
    }
}

impl EventFamily {
    pub fn len(&self) -> Option<usize> {
        match self {
            EventFamily::ExplicitList(v) => Some(v.len()),
            EventFamily::Base(_) => None,
            EventFamily::Reindexed(b, _) => b.len(),
            EventFamily::Interleaved(a, b) => Some(2 * a.len()?.max(b.len()?)),
            EventFamily::Prefixed(p, b) => Some(p.len() + b.len()?),
        }
    }

    pub fn validate(&self, space: &Space) -> Result<(), Error> {
        match self {
            EventFamily::ExplicitList(v) => v.iter().try_for_each(|e| space.check_event(e)),
            EventFamily::Base(f) => {
                if let BaseFamily::Constant(e) = f {
                    space.check_event(e)?;
                } else if f.space_kind().as_ref().map(Space::kind_name) != Some(space.kind_name()) {
                    return Err(Error::SpaceMismatch(format!("family does not live on {}", space.kind_name())));
                }
                f.info().map(|_| ())
            }
            EventFamily::Reindexed(b, m) => {
                m.check_bijective()?;
                b.validate(space)
            }
            EventFamily::Interleaved(a, b) => {
                a.validate(space)?;
                b.validate(space)
            }
            EventFamily::Prefixed(p, b) => {
                p.iter().try_for_each(|e| space.check_event(e))?;
                b.validate(space)
            }
        }
    }
}

impl Portfolio {
    pub fn new(coeffs: CoeffSeq, events: EventFamily, space: Space) -> Result<Self, Error> {
        let pf = Portfolio { coeffs, events, space };
        pf.validate()?;
        Ok(pf)
    }

    /// Finite portfolio from explicit bets.
    pub fn finite(space: Space, bets: Vec<(Q, Event)>) -> Result<Self, Error> {
        let (c, e): (Vec<Q>, Vec<Event>) = bets.into_iter().unzip();
        Self::new(CoeffSeq::FiniteList(c), EventFamily::ExplicitList(e), space)
    }

    pub fn validate(&self) -> Result<(), Error> {
        self.coeffs.validate()?;
        self.events.validate(&self.space)?;
        if self.coeffs.len() != self.events.len() {
            return Err(invalid("coefficients and events must index the same range"));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.len().is_some()
    }
}

pub fn negate(pf: &Portfolio) -> Portfolio {
    Portfolio { coeffs: pf.coeffs.negate(), events: pf.events.clone(), space: pf.space.clone() }
}

/// Odd positions from `a`, even positions from `b`.
pub fn interleave(a: &Portfolio, b: &Portfolio) -> Result<Portfolio, Error> {
    if a.space != b.space {
        return Err(Error::SpaceMismatch("interleaved portfolios live on different spaces".into()));
    }
    Ok(Portfolio {
        coeffs: CoeffSeq::Interleaved(Box::new(a.coeffs.clone()), Box::new(b.coeffs.clone())),
        events: EventFamily::Interleaved(Box::new(a.events.clone()), Box::new(b.events.clone())),
        space: a.space.clone(),
    })
}

/// The portfolio `(alpha_{m(i)}, A_{m(i)})`.
pub fn permute(pf: &Portfolio, m: &IndexMap) -> Result<Portfolio, Error> {
    m.check_bijective()?;
    if *m == IndexMap::Identity {
        return Ok(pf.clone());
    }
    if let Some(n) = pf.coeffs.len() {
        match m.support_bound() {
            Some(b) if b as usize <= n => {}
            _ => return Err(Error::NotBijective("map does not preserve the finite index range".into())),
        }
    }
    Ok(Portfolio {
        coeffs: CoeffSeq::Permuted(Box::new(pf.coeffs.clone()), m.clone()),
        events: EventFamily::Reindexed(Box::new(pf.events.clone()), m.clone()),
        space: pf.space.clone(),
    })
}
