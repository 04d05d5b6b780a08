//! Named worked constructions with their expected verdicts, and exhaustive
//! fair-coin checks.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::coherence::{beam_attack, beam_portfolio, beam_prices, extension_obstruction, finite_reduction};
use crate::error::{invalid, unsupported};
use crate::measure::{EventCollection, PriceAssignment, Space};
use crate::portfolio::{classify, BaseFamily, CoeffSeq, EventFamily, Portfolio, Pricing, System};
use crate::rational::{q, Q};
use crate::rule::IndexRule;
use crate::series::SumOpts;
use crate::Error;

/// One checkable statement about a gallery instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Claim {
    /// `P(A_k) = value` on the instance family.
    PriceAt { k: i64, value: Q },
    /// Prices strictly increase toward `limit` (checked on a prefix and by
    /// the rule's limit).
    IncreasingTo { limit: Q },
    /// The chain decreases to the empty set while prices tend to `limit`.
    ObstructionLimit { limit: Q },
    Classified { portfolio: usize, system: System, member: bool },
    /// The reduced finite portfolio at `k*` admits no sure loss.
    NoSureLossAfterReduction { portfolio: usize, k_star: usize },
    /// A Dutch book whose margin enclosure meets `[lo, hi]` and excludes 0.
    Margin { lo: Q, hi: Q },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GalleryInstance {
    pub name: String,
    pub space: Space,
    pub family: BaseFamily,
    pub collection: EventCollection,
    pub prices: PriceAssignment,
    pub portfolios: Vec<(String, Portfolio)>,
    pub expected: Vec<Claim>,
    pub delta: Option<Q>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClaimCheck {
    pub claim: Claim,
    pub pass: bool,
    pub detail: String,
}

pub const GALLERY: [&str; 4] = ["example-2.4", "example-3.6", "example-4.3", "example-4.4"];

pub fn by_name(name: &str, delta: Option<&Q>) -> Result<GalleryInstance, Error> {
    let d = delta.cloned().unwrap_or_else(|| q(1, 10));
    match name {
        "example-2.4" => example_2_4(&d),
        "example-3.6" => example_3_6(),
        "example-4.3" => example_4_3(&d),
        "example-4.4" => example_4_4(&d),
        _ => Err(invalid(format!("unknown gallery instance {name}; known: {}", GALLERY.join(", ")))),
    }
}

fn chain() -> BaseFamily {
    BaseFamily::ChainIntervals { r: IndexRule::reciprocal(Q::one(), Q::one()), lo_closed: false, hi_closed: false }
}

fn check_delta(delta: &Q) -> Result<(), Error> {
    if !delta.is_positive() || *delta > q(1, 2) {
        return Err(invalid("delta must lie in (0, 1/2]"));
    }
    Ok(())
}

fn on_chain(coeffs: CoeffSeq) -> Result<Portfolio, Error> {
    Portfolio::new(coeffs, EventFamily::Base(chain()), Space::UnitInterval)
}

/// `A_i = (0, 1/(i+1))` priced `1/(i+1) + delta`.
pub fn example_2_4(delta: &Q) -> Result<GalleryInstance, Error> {
    check_delta(delta)?;
    let squares = on_chain(CoeffSeq::Rule(IndexRule::power(Q::one(), Q::zero(), -2)))?;
    let alternating = on_chain(CoeffSeq::AlternatingPower { c: Q::one(), shift: Q::zero(), exponent: 1 })?;
    Ok(GalleryInstance {
        name: "example-2.4".into(),
        space: Space::UnitInterval,
        family: chain(),
        collection: EventCollection::unstructured(Vec::new()),
        prices: beam_prices(delta),
        portfolios: alloc::vec![("inverse-squares".into(), squares), ("alternating-harmonic".into(), alternating)],
        expected: alloc::vec![
            Claim::PriceAt { k: 1, value: q(1, 2) + delta },
            Claim::ObstructionLimit { limit: delta.clone() },
            Claim::Classified { portfolio: 0, system: System::S2, member: true },
            Claim::NoSureLossAfterReduction { portfolio: 0, k_star: 50 },
            Claim::Classified { portfolio: 1, system: System::S2, member: false },
        ],
        delta: Some(delta.clone()),
    })
}

/// Coordinates of a binary sequence priced `1/2 - 4^-i`.
pub fn example_3_6() -> Result<GalleryInstance, Error> {
    let prices = PriceAssignment::new().with_rule(BaseFamily::Coordinates, example_3_6_rule());
    Ok(GalleryInstance {
        name: "example-3.6".into(),
        space: Space::BinarySequences,
        family: BaseFamily::Coordinates,
        collection: EventCollection::unstructured(Vec::new()),
        prices,
        portfolios: Vec::new(),
        expected: alloc::vec![
            Claim::PriceAt { k: 1, value: q(1, 4) },
            Claim::PriceAt { k: 2, value: q(7, 16) },
            Claim::IncreasingTo { limit: q(1, 2) },
        ],
        delta: None,
    })
}

pub fn example_3_6_rule() -> IndexRule {
    IndexRule::Sum(alloc::vec![IndexRule::Const(q(1, 2)), IndexRule::Geometric { coeff: -Q::one(), ratio: q(1, 4) }])
}

/// The chain prices again: every S2A portfolio is S2 (its absolute
/// balance outside `A_1` is `sum |beta| P`), so the obstruction also rules
/// out S2A and S2B extensions.
pub fn example_4_3(delta: &Q) -> Result<GalleryInstance, Error> {
    let mut g = example_2_4(delta)?;
    g.name = "example-4.3".into();
    let geometric = on_chain(CoeffSeq::Geometric { c: Q::one(), r: q(-1, 2) })?;
    let ones = on_chain(CoeffSeq::Rule(IndexRule::Const(Q::one())))?;
    g.portfolios.push(("geometric".into(), geometric));
    g.portfolios.push(("ones".into(), ones));
    g.expected = alloc::vec![
        Claim::ObstructionLimit { limit: delta.clone() },
        Claim::Classified { portfolio: 0, system: System::S2A, member: true },
        Claim::Classified { portfolio: 0, system: System::S2, member: true },
        Claim::Classified { portfolio: 2, system: System::S2B, member: true },
        Claim::Classified { portfolio: 2, system: System::S2, member: true },
        Claim::Classified { portfolio: 3, system: System::S2A, member: false },
        Claim::Classified { portfolio: 3, system: System::S2, member: false },
    ];
    Ok(g)
}

/// The interleaved rearrangement on the chain: uniform sure loss
/// `delta (1/2) ln 2` with bounded truncated balances.
pub fn example_4_4(delta: &Q) -> Result<GalleryInstance, Error> {
    let mut g = example_2_4(delta)?;
    g.name = "example-4.4".into();
    g.portfolios = alloc::vec![("beam".into(), beam_portfolio()?)];
    let (lo, hi) = (q(346_573_590_279, 1_000_000_000_000), q(346_573_590_280, 1_000_000_000_000));
    g.expected = alloc::vec![
        Claim::Margin { lo: lo * delta, hi: hi * delta },
        Claim::Classified { portfolio: 0, system: System::S3, member: true },
        Claim::Classified { portfolio: 0, system: System::S2, member: false },
    ];
    Ok(g)
}

impl GalleryInstance {
    fn pricing(&self) -> Pricing<'_> {
        Pricing::Assigned(&self.prices)
    }

    pub fn verify(&self, opts: &SumOpts) -> Result<Vec<ClaimCheck>, Error> {
        let info = self.family.info()?;
        let rule = self.pricing().family_rule(&info)?;
        let mut out = Vec::with_capacity(self.expected.len());
        for claim in &self.expected {
            let (pass, detail) = match claim {
                Claim::PriceAt { k, value } => {
                    let p = rule.eval(*k).ok_or_else(|| invalid("price rule singular"))?;
                    (p == *value, format!("P(A_{k}) = {p}"))
                }
                Claim::IncreasingTo { limit } => {
                    let inc = rule.subst_affine(1, 1).sub(&rule).positive_from(1);
                    let lim = rule.limit();
                    let shown = match &lim {
                        crate::rule::Limit::Finite(v) => format!("{v}"),
                        _ => "not finite".into(),
                    };
                    (inc && lim == crate::rule::Limit::Finite(limit.clone()), format!("increasing: {inc}, limit {shown}"))
                }
                Claim::ObstructionLimit { limit } => match extension_obstruction(&self.family, self.pricing())? {
                    Some(ob) => (ob.limit.as_exact() == Some(limit), format!("limit {}", ob.limit)),
                    None => (false, "no obstruction".into()),
                },
                Claim::Classified { portfolio, system, member } => {
                    let v = classify(&self.portfolios[*portfolio].1, self.pricing())?;
                    let got = v.get(*system);
                    let pass = if *member { got.is_in() } else { got.is_out() };
                    (pass, format!("{} {}: {}", system.name(), got.label(), got.reason()))
                }
                Claim::NoSureLossAfterReduction { portfolio, k_star } => {
                    let red = finite_reduction(&self.portfolios[*portfolio].1, &self.family, self.pricing(), *k_star)?;
                    match red.sure_loss()? {
                        None => (true, format!("reduced to {k_star} bets; quotient prices coherent")),
                        Some(r) => (false, r),
                    }
                }
                Claim::Margin { lo, hi } => {
                    let delta = self.delta.clone().ok_or_else(|| invalid("instance has no delta"))?;
                    let (book, report) = beam_attack(&delta, opts)?;
                    let (a, b) = book.margin.bounds().ok_or_else(|| invalid("margin is not an enclosure"))?;
                    let pass = book.margin.excludes_zero() && a <= *hi && b >= *lo && report.cancellation;
                    (pass, format!("margin [{a}, {b}], truncation bound {}", report.bound))
                }
            };
            out.push(ClaimCheck { claim: claim.clone(), pass, detail });
        }
        Ok(out)
    }
}

pub const MAX_ENUMERATION_BETS: usize = 20;

/// Balance thresholds as integers over a common denominator: the event
/// `sum_j a_j I_j >= c` over the distinct coordinates.
fn scaled(alpha: &[Q], c: &Q) -> (Vec<BigInt>, BigInt) {
    let den = alpha.iter().chain([c]).fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let scale = |x: &Q| (x * Q::from_integer(den.clone())).to_integer();
    (alpha.iter().map(scale).collect(), scale(c))
}

/// `P0(sum_j a_j I_j >= c)` by enumerating all `2^d` coordinate patterns.
fn fair_coin_probability(alpha: &[Q], c: &Q) -> Q {
    let d = alpha.len();
    let (a, c) = scaled(alpha, c);
    let small: Option<(Vec<i128>, i128)> = a
        .iter()
        .map(|x| x.to_i128().filter(|v| v.abs() < (1i128 << 100) / 32))
        .collect::<Option<Vec<_>>>()
        .zip(c.to_i128().filter(|v| v.abs() < (1i128 << 100)));
    let total = 1usize << d;
    let hits = match small {
        Some((a, c)) => {
            let mut sums = alloc::vec![0i128; total];
            let mut hits = usize::from(0 >= c);
            for mask in 1..total {
                let low = mask.trailing_zeros() as usize;
                sums[mask] = sums[mask & (mask - 1)] + a[low];
                hits += usize::from(sums[mask] >= c);
            }
            hits
        }
        None => {
            let mut sums = alloc::vec![BigInt::zero(); total];
            let mut hits = usize::from(BigInt::zero() >= c);
            for mask in 1..total {
                let low = mask.trailing_zeros() as usize;
                sums[mask] = &sums[mask & (mask - 1)] + &a[low];
                hits += usize::from(sums[mask] >= c);
            }
            hits
        }
    };
    Q::new(BigInt::from(hits), BigInt::from(total))
}

/// Net stake per distinct coordinate.
fn merge(coeffs: &[Q], events: &[u64]) -> Result<Vec<(u64, Q)>, Error> {
    if coeffs.len() != events.len() {
        return Err(invalid("one coordinate per coefficient"));
    }
    if coeffs.len() > MAX_ENUMERATION_BETS {
        return Err(unsupported(format!("more than {MAX_ENUMERATION_BETS} bets")));
    }
    if events.contains(&0) {
        return Err(invalid("coordinates start at 1"));
    }
    let mut net: Vec<(u64, Q)> = Vec::new();
    for (a, &k) in coeffs.iter().zip(events) {
        match net.iter_mut().find(|(j, _)| *j == k) {
            Some((_, v)) => *v += a,
            None => net.push((k, a.clone())),
        }
    }
    Ok(net)
}

/// `P0(sum_i beta_i (I_{B_i} - 1/2) >= 0)` for coordinate events under the
/// fair coin.
pub fn p0_symmetry_check(coeffs: &[Q], events: &[u64]) -> Result<Q, Error> {
    let net = merge(coeffs, events)?;
    let alpha: Vec<Q> = net.iter().map(|(_, a)| a.clone()).collect();
    let c: Q = alpha.iter().sum::<Q>() / Q::from_integer(2.into());
    Ok(fair_coin_probability(&alpha, &c))
}

/// `P0(sum_i gamma_i (I_{C_i} - P(C_i)) >= 0)` with `P(A_j) = 1/2 - 4^-j`.
pub fn quarter_bound_check(coeffs: &[Q], events: &[u64]) -> Result<Q, Error> {
    let net = merge(coeffs, events)?;
    if net.iter().any(|(j, _)| *j > 512) {
        return Err(unsupported("coordinate index above 512"));
    }
    let price = |j: u64| q(1, 2) - Q::new(BigInt::one(), BigInt::from(4u8).pow(j as u32));
    let alpha: Vec<Q> = net.iter().map(|(_, a)| a.clone()).collect();
    let c: Q = net.iter().map(|(j, a)| a * price(*j)).sum();
    Ok(fair_coin_probability(&alpha, &c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::qi;

    /// Direct enumeration over the bets themselves.
    fn brute(coeffs: &[Q], events: &[u64], price: impl Fn(u64) -> Q) -> Q {
        let mut coords: Vec<u64> = events.to_vec();
        coords.sort_unstable();
        coords.dedup();
        let mut hits = 0u64;
        for mask in 0u64..(1 << coords.len()) {
            let bit = |k: u64| mask >> coords.iter().position(|&c| c == k).unwrap() & 1 == 1;
            let bal: Q = coeffs
                .iter()
                .zip(events)
                .map(|(b, &k)| b * (if bit(k) { qi(1) } else { qi(0) } - price(k)))
                .sum();
            hits += u64::from(!bal.is_negative());
        }
        Q::new(hits.into(), (1u64 << coords.len()).into())
    }

    #[test]
    fn p0_examples() {
        assert_eq!(p0_symmetry_check(&[qi(1), qi(1), qi(1)], &[1, 2, 3]).unwrap(), q(1, 2));
        assert_eq!(p0_symmetry_check(&[qi(1)], &[1]).unwrap(), q(1, 2));
        assert_eq!(p0_symmetry_check(&[qi(1), qi(-1)], &[1, 2]).unwrap(), q(3, 4));
        assert!(p0_symmetry_check(&alloc::vec![qi(1); 21], &[1; 21]).is_err());
    }

    #[test]
    fn quarter_examples() {
        assert_eq!(quarter_bound_check(&[qi(1)], &[1]).unwrap(), q(1, 2));
        let v = quarter_bound_check(&[qi(1), qi(1)], &[1, 2]).unwrap();
        assert!(v >= q(1, 4));
        assert_eq!(v, brute(&[qi(1), qi(1)], &[1, 2], |j| q(1, 2) - Q::new(1.into(), BigInt::from(4).pow(j as u32))));
    }

    #[test]
    fn enumeration_matches_brute_force() {
        let cases: [(&[Q], &[u64]); 3] = [
            (&[q(1, 3), q(-2, 5), qi(1), q(7, 2)], &[3, 1, 3, 2]),
            (&[qi(-1), qi(-1), q(1, 9)], &[4, 5, 6]),
            (&[q(3, 7), q(-3, 7)], &[2, 2]),
        ];
        for (c, e) in cases {
            assert_eq!(p0_symmetry_check(c, e).unwrap(), brute(c, e, |_| q(1, 2)));
            let p = |j: u64| q(1, 2) - Q::new(1.into(), BigInt::from(4).pow(j as u32));
            assert_eq!(quarter_bound_check(c, e).unwrap(), brute(c, e, p));
        }
    }

    #[test]
    fn gallery_claims_hold() {
        let opts = SumOpts::default();
        for name in GALLERY {
            let g = by_name(name, Some(&q(1, 10))).unwrap();
            for c in g.verify(&opts).unwrap() {
                assert!(c.pass, "{name}: {:?} -> {}", c.claim, c.detail);
            }
        }
        let g = example_2_4(&q(1, 2)).unwrap();
        assert!(g.verify(&opts).unwrap()[0].pass);
        assert!(example_2_4(&q(3, 5)).is_err());
        assert!(by_name("example-9", None).is_err());
    }
}
