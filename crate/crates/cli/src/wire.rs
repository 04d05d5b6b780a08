//! Instance-file format and its translation to and from engine types.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use coherence_core::measure::{CanonicalMeasure, CylinderUnion, Event, Interval, PriceAssignment, Space};
use coherence_core::portfolio::{BaseFamily, CoeffSeq, EventFamily, IndexMap, Portfolio};
use coherence_core::rule::IndexRule;
use coherence_core::synthesis::SimpleRV;
use coherence_core::Q;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A rational on the wire: `"p/q"` or `"p"`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rat(pub Q);

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl Serialize for Rat {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        parse_rat(&s).map_err(serde::de::Error::custom)
    }
}

pub fn parse_rat(s: &str) -> Result<Rat> {
    let t = s.trim();
    if let Some((_, den)) = t.split_once('/') {
        if den.trim_start_matches('+').chars().all(|c| c == '0') {
            bail!("zero denominator in {s:?}");
        }
    }
    Q::from_str(t).map(Rat).map_err(|_| anyhow!("expected a rational \"p/q\", got {s:?}"))
}

fn rat(q: &Q) -> Rat {
    Rat(q.clone())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceSpec {
    Finite { outcomes: Vec<String> },
    UnitInterval,
    BinarySequences,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntervalSpec {
    pub lo: Rat,
    pub hi: Rat,
    #[serde(default)]
    pub lo_closed: bool,
    #[serde(default)]
    pub hi_closed: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventDef {
    Outcomes(Vec<String>),
    Intervals(Vec<IntervalSpec>),
    /// Each cylinder maps coordinates (decimal strings, as JSON keys) to bits.
    Cylinders(Vec<BTreeMap<String, u8>>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamedEvent {
    pub name: String,
    #[serde(flatten)]
    pub def: EventDef,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EventRef {
    Name(String),
    Inline(EventDef),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleSpec {
    Const(Rat),
    Power { coeff: Rat, shift: Rat, exponent: i32 },
    Geometric { coeff: Rat, ratio: Rat },
    Alternating(Box<RuleSpec>),
    Sum(Vec<RuleSpec>),
    Product(Vec<RuleSpec>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapSpec {
    Identity,
    PairInterleave,
    FiniteSwap(Vec<(u64, u64)>),
    Block { k: u64, images: Vec<(u64, i64)> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilySpec {
    Chain {
        r: RuleSpec,
        #[serde(default)]
        lo_closed: bool,
        #[serde(default)]
        hi_closed: bool,
    },
    ChainDifferences {
        r: RuleSpec,
        #[serde(default)]
        hi_closed: bool,
    },
    Coordinates,
    FirstSuccess,
    Constant(EventRef),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoeffSpec {
    Finite(Vec<Rat>),
    Geometric { c: Rat, r: Rat },
    AlternatingPower { c: Rat, shift: Rat, exponent: u32 },
    Rule(RuleSpec),
    Scaled { base: Box<CoeffSpec>, by: RuleSpec },
    Permuted { base: Box<CoeffSpec>, map: MapSpec },
    Interleaved(Box<CoeffSpec>, Box<CoeffSpec>),
    Prefixed { head: Vec<Rat>, tail: Box<CoeffSpec> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventsSpec {
    List(Vec<EventRef>),
    Family(FamilySpec),
    Reindexed { base: Box<EventsSpec>, map: MapSpec },
    Interleaved(Box<EventsSpec>, Box<EventsSpec>),
    Prefixed { head: Vec<EventRef>, tail: Box<EventsSpec> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortfolioSpec {
    pub name: String,
    pub coeffs: CoeffSpec,
    pub events: EventsSpec,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RulePrice {
    pub family: FamilySpec,
    pub rule: RuleSpec,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PricesSpec {
    /// Prices of named events.
    #[serde(default)]
    pub events: BTreeMap<String, Rat>,
    #[serde(default)]
    pub rules: Vec<RulePrice>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureSpec {
    Atomic { weights: Vec<Rat> },
    Lebesgue,
    FairCoin,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellSpec {
    pub event: EventRef,
    pub value: Rat,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdditivitySpec {
    pub whole: EventRef,
    pub parts: EventsSpec,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub space: SpaceSpec,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub events: Vec<NamedEvent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prices: Option<PricesSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<MeasureSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub portfolios: Vec<PortfolioSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub additivity: Option<AdditivitySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<Vec<CellSpec>>,
    /// Disjoint family attacked by rearrangement.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rearrangement: Option<FamilySpec>,
    /// Cut-off for reducing chain portfolios to finite ones.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_star: Option<usize>,
}

/// Parses an instance, reporting the line and column of syntax and shape
/// errors.
pub fn parse_instance(text: &str) -> Result<InstanceFile> {
    serde_json::from_str(text).map_err(|e| anyhow!("instance parse error at line {} column {}: {e}", e.line(), e.column()))
}

/// Name resolution and conversion for one instance.
pub struct Resolved {
    pub space: Space,
    pub named: Vec<(String, Event)>,
    pub prices: Option<PriceAssignment>,
    pub measure: Option<CanonicalMeasure>,
    pub portfolios: Vec<(String, Portfolio)>,
}

impl Resolved {
    pub fn new(inst: &InstanceFile) -> Result<Self> {
        let space = match &inst.space {
            SpaceSpec::Finite { outcomes } => Space::finite(outcomes.clone())?,
            SpaceSpec::UnitInterval => Space::UnitInterval,
            SpaceSpec::BinarySequences => Space::BinarySequences,
        };
        let mut r = Resolved { space, named: Vec::new(), prices: None, measure: None, portfolios: Vec::new() };
        for ne in &inst.events {
            if r.lookup(&ne.name).is_some() {
                bail!("event {:?} is defined twice", ne.name);
            }
            let e = r.event_def(&ne.def).with_context(|| format!("event {:?}", ne.name))?;
            r.named.push((ne.name.clone(), e));
        }
        if let Some(p) = &inst.prices {
            let mut pa = PriceAssignment::new();
            for (name, v) in &p.events {
                let e = r.lookup(name).ok_or_else(|| anyhow!("prices refer to unknown event {name:?}"))?;
                pa.set(e.clone(), v.0.clone());
            }
            for rp in &p.rules {
                pa = pa.with_rule(r.family(&rp.family)?, rule(&rp.rule));
            }
            r.prices = Some(pa);
        }
        r.measure = inst
            .measure
            .as_ref()
            .map(|m| match m {
                MeasureSpec::Atomic { weights } => CanonicalMeasure::finite_atomic(weights.iter().map(|w| w.0.clone()).collect()),
                MeasureSpec::Lebesgue => Ok(CanonicalMeasure::LebesgueUnit),
                MeasureSpec::FairCoin => Ok(CanonicalMeasure::FairCoin),
            })
            .transpose()?;
        if let Some(m) = &r.measure {
            if !m.fits(&r.space) {
                bail!("measure {} does not live on this space", m.name());
            }
        }
        for ps in &inst.portfolios {
            let pf = Portfolio::new(coeffs(&ps.coeffs), r.events(&ps.events)?, r.space.clone())
                .with_context(|| format!("portfolio {:?}", ps.name))?;
            r.portfolios.push((ps.name.clone(), pf));
        }
        Ok(r)
    }

    pub fn lookup(&self, name: &str) -> Option<&Event> {
        self.named.iter().find(|(n, _)| n == name).map(|(_, e)| e)
    }

    pub fn name_of(&self, e: &Event) -> Option<&str> {
        self.named.iter().find(|(_, x)| x == e).map(|(n, _)| n.as_str())
    }

    pub fn event_def(&self, d: &EventDef) -> Result<Event> {
        let e = match (d, &self.space) {
            (EventDef::Outcomes(labels), Space::Finite(_)) => {
                let ix = labels
                    .iter()
                    .map(|l| self.space.label_index(l).ok_or_else(|| anyhow!("unknown outcome {l:?}")))
                    .collect::<Result<Vec<_>>>()?;
                Event::finite(ix)
            }
            (EventDef::Intervals(parts), Space::UnitInterval) => {
                let mut e = self.space.empty();
                for p in parts {
                    e = e.union(&Event::interval(Interval::new(p.lo.0.clone(), p.hi.0.clone(), p.lo_closed, p.hi_closed)))?;
                }
                e
            }
            (EventDef::Cylinders(cyls), Space::BinarySequences) => {
                let mut out = Vec::with_capacity(cyls.len());
                for c in cyls {
                    let mut m = BTreeMap::new();
                    for (k, &b) in c {
                        let k: u64 = k.parse().map_err(|_| anyhow!("cylinder coordinate {k:?} is not an integer"))?;
                        if k == 0 || b > 1 {
                            bail!("cylinder entries map coordinates >= 1 to bits 0 or 1");
                        }
                        m.insert(k, b == 1);
                    }
                    out.push(m);
                }
                Event::Cylinders(CylinderUnion::new(out))
            }
            _ => bail!("event kind does not match the {} space", self.space.kind_name()),
        };
        self.space.check_event(&e)?;
        Ok(e)
    }

    pub fn event_ref(&self, r: &EventRef) -> Result<Event> {
        match r {
            EventRef::Name(n) => self.lookup(n).cloned().ok_or_else(|| anyhow!("unknown event {n:?}")),
            EventRef::Inline(d) => self.event_def(d),
        }
    }

    pub fn family(&self, f: &FamilySpec) -> Result<BaseFamily> {
        Ok(match f {
            FamilySpec::Chain { r, lo_closed, hi_closed } => {
                BaseFamily::ChainIntervals { r: rule(r), lo_closed: *lo_closed, hi_closed: *hi_closed }
            }
            FamilySpec::ChainDifferences { r, hi_closed } => BaseFamily::ChainDifferences { r: rule(r), hi_closed: *hi_closed },
            FamilySpec::Coordinates => BaseFamily::Coordinates,
            FamilySpec::FirstSuccess => BaseFamily::FirstSuccess,
            FamilySpec::Constant(e) => BaseFamily::Constant(self.event_ref(e)?),
        })
    }

    pub fn events(&self, s: &EventsSpec) -> Result<EventFamily> {
        Ok(match s {
            EventsSpec::List(v) => EventFamily::ExplicitList(v.iter().map(|e| self.event_ref(e)).collect::<Result<_>>()?),
            EventsSpec::Family(f) => EventFamily::Base(self.family(f)?),
            EventsSpec::Reindexed { base, map } => EventFamily::Reindexed(Box::new(self.events(base)?), index_map(map)),
            EventsSpec::Interleaved(a, b) => EventFamily::Interleaved(Box::new(self.events(a)?), Box::new(self.events(b)?)),
            EventsSpec::Prefixed { head, tail } => EventFamily::Prefixed(
                head.iter().map(|e| self.event_ref(e)).collect::<Result<_>>()?,
                Box::new(self.events(tail)?),
            ),
        })
    }

    pub fn target(&self, cells: &[CellSpec]) -> Result<SimpleRV> {
        let cells = cells.iter().map(|c| Ok((self.event_ref(&c.event)?, c.value.0.clone()))).collect::<Result<Vec<_>>>()?;
        Ok(SimpleRV::new(self.space.clone(), cells)?)
    }

    /// Wraps engine values; explicitly priced events are named `e1`, `e2`, ...
    pub fn from_engine(
        space: Space,
        prices: Option<PriceAssignment>,
        measure: Option<CanonicalMeasure>,
        portfolios: Vec<(String, Portfolio)>,
    ) -> Self {
        let named = prices
            .iter()
            .flat_map(|p| p.explicit.iter())
            .enumerate()
            .map(|(i, (e, _))| (format!("e{}", i + 1), e.clone()))
            .collect();
        Resolved { space, named, prices, measure, portfolios }
    }

    /// The instance file describing these values.
    pub fn to_file(&self) -> InstanceFile {
        let prices = self.prices.as_ref().map(|p| PricesSpec {
            events: p
                .explicit
                .iter()
                .map(|(e, v)| (self.name_of(e).expect("priced events are named").to_string(), rat(v)))
                .collect(),
            rules: p.rules.iter().map(|(f, r)| RulePrice { family: self.family_out(f), rule: rule_out(r) }).collect(),
        });
        let measure = self.measure.as_ref().map(|m| match m {
            CanonicalMeasure::FiniteAtomic(w) => MeasureSpec::Atomic { weights: w.iter().map(rat).collect() },
            CanonicalMeasure::LebesgueUnit => MeasureSpec::Lebesgue,
            CanonicalMeasure::FairCoin => MeasureSpec::FairCoin,
        });
        InstanceFile {
            space: space_out(&self.space),
            events: self.named.iter().map(|(n, e)| NamedEvent { name: n.clone(), def: event_def_out(e, &self.space) }).collect(),
            prices,
            measure,
            portfolios: self
                .portfolios
                .iter()
                .map(|(n, pf)| PortfolioSpec { name: n.clone(), coeffs: coeffs_out(&pf.coeffs), events: self.events_out(&pf.events) })
                .collect(),
            additivity: None,
            target: None,
            rearrangement: None,
            k_star: None,
        }
    }

    // Engine values back to the wire, preferring declared names.

    pub fn event_out(&self, e: &Event) -> EventRef {
        match self.name_of(e) {
            Some(n) => EventRef::Name(n.to_string()),
            None => EventRef::Inline(event_def_out(e, &self.space)),
        }
    }

    pub fn family_out(&self, f: &BaseFamily) -> FamilySpec {
        match f {
            BaseFamily::ChainIntervals { r, lo_closed, hi_closed } => {
                FamilySpec::Chain { r: rule_out(r), lo_closed: *lo_closed, hi_closed: *hi_closed }
            }
            BaseFamily::ChainDifferences { r, hi_closed } => FamilySpec::ChainDifferences { r: rule_out(r), hi_closed: *hi_closed },
            BaseFamily::Coordinates => FamilySpec::Coordinates,
            BaseFamily::FirstSuccess => FamilySpec::FirstSuccess,
            BaseFamily::Constant(e) => FamilySpec::Constant(self.event_out(e)),
        }
    }

    pub fn events_out(&self, f: &EventFamily) -> EventsSpec {
        match f {
            EventFamily::ExplicitList(v) => EventsSpec::List(v.iter().map(|e| self.event_out(e)).collect()),
            EventFamily::Base(b) => EventsSpec::Family(self.family_out(b)),
            EventFamily::Reindexed(b, m) => EventsSpec::Reindexed { base: Box::new(self.events_out(b)), map: map_out(m) },
            EventFamily::Interleaved(a, b) => EventsSpec::Interleaved(Box::new(self.events_out(a)), Box::new(self.events_out(b))),
            EventFamily::Prefixed(h, t) => EventsSpec::Prefixed {
                head: h.iter().map(|e| self.event_out(e)).collect(),
                tail: Box::new(self.events_out(t)),
            },
        }
    }
}

pub fn event_def_out(e: &Event, space: &Space) -> EventDef {
    match e {
        Event::Finite(b) => {
            let Space::Finite(labels) = space else { unreachable!("finite event on a symbolic space") };
            EventDef::Outcomes(b.indices().map(|i| labels[i].clone()).collect())
        }
        Event::Intervals(u) => EventDef::Intervals(
            u.parts()
                .iter()
                .map(|i| IntervalSpec { lo: rat(&i.lo), hi: rat(&i.hi), lo_closed: i.lo_closed, hi_closed: i.hi_closed })
                .collect(),
        ),
        Event::Cylinders(u) => {
            EventDef::Cylinders(u.cylinders().iter().map(|c| c.iter().map(|(k, &b)| (k.to_string(), u8::from(b))).collect()).collect())
        }
    }
}

pub fn rule(r: &RuleSpec) -> IndexRule {
    match r {
        RuleSpec::Const(c) => IndexRule::Const(c.0.clone()),
        RuleSpec::Power { coeff, shift, exponent } => IndexRule::power(coeff.0.clone(), shift.0.clone(), *exponent),
        RuleSpec::Geometric { coeff, ratio } => IndexRule::Geometric { coeff: coeff.0.clone(), ratio: ratio.0.clone() },
        RuleSpec::Alternating(inner) => IndexRule::Alternating(Box::new(rule(inner))),
        RuleSpec::Sum(v) => IndexRule::Sum(v.iter().map(rule).collect()),
        RuleSpec::Product(v) => IndexRule::Product(v.iter().map(rule).collect()),
    }
}

pub fn rule_out(r: &IndexRule) -> RuleSpec {
    match r {
        IndexRule::Const(c) => RuleSpec::Const(rat(c)),
        IndexRule::Power { coeff, shift, exponent } => RuleSpec::Power { coeff: rat(coeff), shift: rat(shift), exponent: *exponent },
        IndexRule::Geometric { coeff, ratio } => RuleSpec::Geometric { coeff: rat(coeff), ratio: rat(ratio) },
        IndexRule::Alternating(inner) => RuleSpec::Alternating(Box::new(rule_out(inner))),
        IndexRule::Sum(v) => RuleSpec::Sum(v.iter().map(rule_out).collect()),
        IndexRule::Product(v) => RuleSpec::Product(v.iter().map(rule_out).collect()),
    }
}

pub fn index_map(m: &MapSpec) -> IndexMap {
    match m {
        MapSpec::Identity => IndexMap::Identity,
        MapSpec::PairInterleave => IndexMap::PairInterleave,
        MapSpec::FiniteSwap(v) => IndexMap::FiniteSwap(v.clone()),
        MapSpec::Block { k, images } => IndexMap::BlockPattern { k: *k, images: images.clone() },
    }
}

pub fn map_out(m: &IndexMap) -> MapSpec {
    match m {
        IndexMap::Identity => MapSpec::Identity,
        IndexMap::PairInterleave => MapSpec::PairInterleave,
        IndexMap::FiniteSwap(v) => MapSpec::FiniteSwap(v.clone()),
        IndexMap::BlockPattern { k, images } => MapSpec::Block { k: *k, images: images.clone() },
    }
}

pub fn coeffs(c: &CoeffSpec) -> CoeffSeq {
    let q = |r: &Rat| r.0.clone();
    match c {
        CoeffSpec::Finite(v) => CoeffSeq::FiniteList(v.iter().map(q).collect()),
        CoeffSpec::Geometric { c, r } => CoeffSeq::Geometric { c: q(c), r: q(r) },
        CoeffSpec::AlternatingPower { c, shift, exponent } => CoeffSeq::AlternatingPower { c: q(c), shift: q(shift), exponent: *exponent },
        CoeffSpec::Rule(r) => CoeffSeq::Rule(rule(r)),
        CoeffSpec::Scaled { base, by } => CoeffSeq::Scaled(Box::new(coeffs(base)), rule(by)),
        CoeffSpec::Permuted { base, map } => CoeffSeq::Permuted(Box::new(coeffs(base)), index_map(map)),
        CoeffSpec::Interleaved(a, b) => CoeffSeq::Interleaved(Box::new(coeffs(a)), Box::new(coeffs(b))),
        CoeffSpec::Prefixed { head, tail } => CoeffSeq::Prefixed(head.iter().map(q).collect(), Box::new(coeffs(tail))),
    }
}

pub fn coeffs_out(c: &CoeffSeq) -> CoeffSpec {
    match c {
        CoeffSeq::FiniteList(v) => CoeffSpec::Finite(v.iter().map(rat).collect()),
        CoeffSeq::Geometric { c, r } => CoeffSpec::Geometric { c: rat(c), r: rat(r) },
        CoeffSeq::AlternatingPower { c, shift, exponent } => CoeffSpec::AlternatingPower { c: rat(c), shift: rat(shift), exponent: *exponent },
        CoeffSeq::Rule(r) => CoeffSpec::Rule(rule_out(r)),
        CoeffSeq::Scaled(b, r) => CoeffSpec::Scaled { base: Box::new(coeffs_out(b)), by: rule_out(r) },
        CoeffSeq::Permuted(b, m) => CoeffSpec::Permuted { base: Box::new(coeffs_out(b)), map: map_out(m) },
        CoeffSeq::Interleaved(a, b) => CoeffSpec::Interleaved(Box::new(coeffs_out(a)), Box::new(coeffs_out(b))),
        CoeffSeq::Prefixed(h, t) => CoeffSpec::Prefixed { head: h.iter().map(rat).collect(), tail: Box::new(coeffs_out(t)) },
    }
}

pub fn space_out(s: &Space) -> SpaceSpec {
    match s {
        Space::Finite(l) => SpaceSpec::Finite { outcomes: l.clone() },
        Space::UnitInterval => SpaceSpec::UnitInterval,
        Space::BinarySequences => SpaceSpec::BinarySequences,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationals() {
        assert_eq!(parse_rat("3/5").unwrap().to_string(), "3/5");
        assert_eq!(parse_rat("-6/4").unwrap().to_string(), "-3/2");
        assert_eq!(parse_rat("2").unwrap().to_string(), "2/1");
        assert!(parse_rat("1/0").is_err());
        assert!(parse_rat("0.5").is_err());
    }

    #[test]
    fn parse_errors_carry_positions() {
        let err = parse_instance("{\n  \"space\": {\"kind\": \"finite\", \"outcomes\": [\"a\"]},\n  \"prices\": 3\n}").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        let err = parse_instance("{\"space\": {\"kind\": \"unit_interval\"}, \"events\": [{\"name\": \"A\", \"intervals\": [{\"lo\": \"x\", \"hi\": \"1\"}]}]}")
            .unwrap_err();
        assert!(err.to_string().contains("column"), "{err}");
    }

    #[test]
    fn instance_files_round_trip() {
        let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data");
        for entry in std::fs::read_dir(dir).unwrap() {
            let text = std::fs::read_to_string(entry.unwrap().path()).unwrap();
            let inst = parse_instance(&text).unwrap();
            let again = parse_instance(&serde_json::to_string(&inst).unwrap()).unwrap();
            assert_eq!(inst, again);
            let r = Resolved::new(&inst).unwrap();
            let rebuilt = Resolved::new(&r.to_file()).unwrap();
            assert_eq!(r.space, rebuilt.space);
            assert_eq!(r.portfolios, rebuilt.portfolios);
            assert_eq!(r.prices, rebuilt.prices);
            assert_eq!(r.measure, rebuilt.measure);
        }
    }

    #[test]
    fn unresolved_names_fail() {
        let inst = parse_instance(r#"{"space": {"kind": "finite", "outcomes": ["a", "b"]}, "prices": {"events": {"B": "1/2"}}}"#).unwrap();
        assert!(Resolved::new(&inst).is_err());
        let inst = parse_instance(r#"{"space": {"kind": "finite", "outcomes": ["a"]}, "events": [{"name": "A", "outcomes": ["z"]}]}"#).unwrap();
        assert!(Resolved::new(&inst).is_err());
    }
}
