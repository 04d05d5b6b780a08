//! Command dispatch. Input problems are `Err`; engine failures become
//! `Undetermined` records inside the report.

use anyhow::{anyhow, bail, Result};
use coherence_core::coherence::{
    additivity_probe, beam_attack, check_countable_additivity, constant_balance_attack, extension_obstruction,
    finite_reduction, lp_coherence_finite, rearrangement_attack, trichotomy, Additivity, DutchBook, FiniteInstance,
};
use coherence_core::gallery;
use coherence_core::measure::{
    atoms, chain_p_finite, generate_field, is_p_finite, BitSeq, EventCollection, Outcome, PFinite, Space, Weights,
};
use coherence_core::portfolio::{balance_at, classify, price_of, BaseFamily, Portfolio, Pricing, System};
use coherence_core::synthesis::{balance_space_membership, expectation_of_balance, synthesize_balance, SimpleRV};
use coherence_core::{SumOpts, Q};
use num_traits::Signed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::report::{self, q, series, undetermined};
use crate::wire::{InstanceFile, Rat, Resolved};

pub const SCHEMA: &str = "coherence-lab/report/v1";

/// Outcomes at which witnesses are spot-checked.
const SAMPLES: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Classify,
    Coherence,
    DutchBook,
    Additivity,
    Atoms,
    Synthesize,
    Gallery,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Classify => "classify",
            Command::Coherence => "coherence",
            Command::DutchBook => "dutch-book",
            Command::Additivity => "additivity",
            Command::Atoms => "atoms",
            Command::Synthesize => "synthesize",
            Command::Gallery => "gallery",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Config {
    pub horizon: u64,
    pub seed: u64,
    pub prefix: usize,
    pub delta: Option<Q>,
}

impl Config {
    fn opts(&self) -> SumOpts {
        SumOpts::with_horizon(self.horizon)
    }
}

pub enum Input {
    File(Box<InstanceFile>),
    Gallery(String),
}

pub fn run(cmd: Command, input: Input, cfg: &Config) -> Result<Value> {
    let (instance, results) = match (cmd, input) {
        (Command::Gallery, Input::Gallery(name)) => run_gallery(&name, cfg)?,
        (Command::Gallery, Input::File(_)) => bail!("gallery takes one of {}", gallery::GALLERY.join(", ")),
        (_, Input::Gallery(_)) => unreachable!("only gallery takes a name"),
        (cmd, Input::File(inst)) => {
            let r = Resolved::new(&inst)?;
            let mut ctx = Ctx { r: &r, inst: &inst, cfg, rng: ChaCha8Rng::seed_from_u64(cfg.seed) };
            let results = match cmd {
                Command::Classify => ctx.classify()?,
                Command::Coherence => ctx.coherence()?,
                Command::DutchBook => ctx.dutch_book()?,
                Command::Additivity => ctx.additivity()?,
                Command::Atoms => ctx.atoms()?,
                Command::Synthesize => ctx.synthesize()?,
                Command::Gallery => unreachable!(),
            };
            (*inst, results)
        }
    };
    let mut out = json!({
        "schema": SCHEMA,
        "command": cmd.name(),
        "seed": cfg.seed,
        "horizon": cfg.horizon,
        "prefix": cfg.prefix,
        "instance": serde_json::to_value(&instance)?,
        "results": results,
    });
    if let Some(d) = &cfg.delta {
        out["delta"] = q(d);
    }
    Ok(out)
}

fn or_undetermined<T>(r: Result<T, coherence_core::Error>, f: impl FnOnce(T) -> Value) -> Value {
    match r {
        Ok(v) => f(v),
        Err(e) => undetermined(e),
    }
}

fn chains(r: &Resolved) -> Vec<(BaseFamily, coherence_core::rule::IndexRule)> {
    r.prices
        .iter()
        .flat_map(|p| p.rules.iter())
        .filter(|(f, _)| matches!(f, BaseFamily::ChainIntervals { .. }))
        .cloned()
        .collect()
}

struct Ctx<'a> {
    r: &'a Resolved,
    inst: &'a InstanceFile,
    cfg: &'a Config,
    rng: ChaCha8Rng,
}

impl<'a> Ctx<'a> {
    fn pricing(&self) -> Result<Pricing<'a>> {
        let r: &'a Resolved = self.r;
        if let Some(p) = &r.prices {
            Ok(Pricing::Assigned(p))
        } else if let Some(m) = &r.measure {
            Ok(Pricing::Measure(m))
        } else {
            bail!("instance has neither prices nor a measure")
        }
    }

    fn portfolio(&self, pf: &Portfolio) -> Value {
        report::portfolio(self.r, pf, self.cfg.prefix)
    }

    fn outcome_json(&self, w: &Outcome) -> Value {
        match (w, &self.r.space) {
            (Outcome::Finite(i), Space::Finite(l)) => Value::String(l[*i].clone()),
            (Outcome::Unit(x), _) => q(x),
            (Outcome::Bits(b), _) => {
                let bits: String = b.explicit.values().map(|&v| if v { '1' } else { '0' }).collect();
                json!({ "bits": bits, "tail": u8::from(b.tail) })
            }
            _ => Value::Null,
        }
    }

    /// Every outcome of a finite space; seeded draws otherwise.
    fn sample_outcomes(&mut self) -> Vec<Outcome> {
        match &self.r.space {
            Space::Finite(l) => (0..l.len()).map(Outcome::Finite).collect(),
            Space::UnitInterval => (0..SAMPLES)
                .map(|_| {
                    let num: u64 = self.rng.gen_range(0..=1u64 << 20);
                    Outcome::Unit(Q::new(num.into(), (1u64 << 20).into()))
                })
                .collect(),
            Space::BinarySequences => (0..SAMPLES)
                .map(|_| {
                    let explicit = (1..=16u64).map(|k| (k, self.rng.gen_bool(0.5))).collect();
                    Outcome::Bits(BitSeq { explicit, tail: self.rng.gen_bool(0.5) })
                })
                .collect(),
        }
    }

    /// A Dutch book with its balance evaluated at sampled outcomes.
    fn book(&mut self, b: &DutchBook, pricing: Pricing<'_>) -> Value {
        let mut v = report::book(self.r, b, self.cfg.prefix);
        let bound = b.margin.bounds().map(|(lo, _)| -lo);
        let opts = self.cfg.opts();
        let checks: Vec<Value> = self
            .sample_outcomes()
            .iter()
            .map(|w| {
                let bal = balance_at(&b.portfolio, pricing, w, &opts);
                let enc = bal.as_ref().ok().and_then(|s| s.bounds());
                // The two enclosures come from different cuts, so only
                // compatibility with -margin is checkable, not the order.
                let consistent = match (&enc, &bound) {
                    (Some((lo, _)), Some(m)) => Some(lo <= m),
                    _ => None,
                };
                json!({
                    "outcome": self.outcome_json(w),
                    "balance": or_undetermined(bal, |s| series(&s)),
                    "certified_loss": enc.map(|(_, hi)| hi.is_negative()),
                    "consistent_with_margin": consistent,
                })
            })
            .collect();
        v["sampled_balances"] = Value::Array(checks);
        v
    }

    fn classify(&mut self) -> Result<Value> {
        let pricing = self.pricing()?;
        let opts = self.cfg.opts();
        Ok(self
            .r
            .portfolios
            .iter()
            .map(|(name, pf)| {
                json!({
                    "name": name,
                    "portfolio": self.portfolio(pf),
                    "systems": or_undetermined(classify(pf, pricing), |v| report::systems(&v)),
                    "price": or_undetermined(price_of(pf, pricing, &opts), |s| series(&s)),
                })
            })
            .collect())
    }

    fn finite_collection(&self) -> Option<(EventCollection, &coherence_core::measure::PriceAssignment)> {
        let p = self.r.prices.as_ref()?;
        if self.r.space.size().is_none() || p.explicit.is_empty() {
            return None;
        }
        Some((EventCollection::unstructured(p.explicit.iter().map(|(e, _)| e.clone()).collect()), p))
    }

    fn coherence(&mut self) -> Result<Value> {
        let mut out = json!({});
        if let Some((coll, prices)) = self.finite_collection() {
            out["finite"] = match lp_coherence_finite(&self.r.space, &coll, prices) {
                Ok(rep) => report::coherence(self.r, &rep.verdict, rep.farkas.as_ref(), self.cfg.prefix),
                Err(e) => undetermined(e),
            };
            out["trichotomy"] = or_undetermined(
                FiniteInstance::new(&self.r.space, &coll, prices).and_then(|i| trichotomy(&i)),
                |t| report::trichotomy(&self.r.space, &t),
            );
        }
        let chains = chains(self.r);
        if !chains.is_empty() {
            let pricing = self.pricing()?;
            let k_star = self.inst.k_star.unwrap_or(50);
            let records: Vec<Value> = chains
                .iter()
                .map(|(chain, _)| {
                    let obstruction = or_undetermined(extension_obstruction(chain, pricing), |o| match o {
                        Some(o) => json!({ "chain": self.r.events_out(&o.chain), "limit": series(&o.limit) }),
                        None => Value::Null,
                    });
                    let reductions: Vec<Value> = self
                        .r
                        .portfolios
                        .iter()
                        .map(|(name, pf)| {
                            let red = finite_reduction(pf, chain, pricing, k_star).and_then(|fr| Ok((fr.sure_loss()?, fr)));
                            json!({
                                "name": name,
                                "k_star": k_star,
                                "reduction": or_undetermined(red, |(loss, fr)| json!({
                                    "alpha": report::qs(&fr.alpha),
                                    "sure_loss": loss,
                                })),
                            })
                        })
                        .collect();
                    json!({
                        "chain": self.r.family_out(chain),
                        "obstruction": obstruction,
                        "reductions": reductions,
                    })
                })
                .collect();
            out["chains"] = Value::Array(records);
        }
        if let Some(m) = &self.r.measure {
            let opts = self.cfg.opts();
            out["expectations"] = self
                .r
                .portfolios
                .iter()
                .map(|(name, pf)| json!({ "name": name, "expectation": or_undetermined(expectation_of_balance(pf, m, &opts), |s| series(&s)) }))
                .collect();
        }
        if out.as_object().is_some_and(|o| o.is_empty()) {
            bail!("coherence needs explicit prices on a finite space, chain price rules or a measure");
        }
        Ok(out)
    }

    fn dutch_book(&mut self) -> Result<Value> {
        let pricing = self.pricing()?;
        let opts = self.cfg.opts();
        let mut out = json!({});
        if let Some((coll, prices)) = self.finite_collection() {
            out["finite"] = match lp_coherence_finite(&self.r.space, &coll, prices) {
                Ok(rep) => match &rep.verdict {
                    coherence_core::coherence::CoherenceVerdict::Incoherent(b) => self.book(b, pricing),
                    v => report::coherence(self.r, v, None, self.cfg.prefix),
                },
                Err(e) => undetermined(e),
            };
        }
        let mut per = Vec::new();
        for (name, pf) in &self.r.portfolios {
            let book = match constant_balance_attack(pf, pricing, &opts) {
                Ok(Some(b)) => self.book(&b, pricing),
                Ok(None) => undetermined("no constant nonzero balance is provable"),
                Err(e) => undetermined(e),
            };
            per.push(json!({ "name": name, "book": book }));
        }
        out["portfolios"] = Value::Array(per);
        if let Some(f) = &self.inst.rearrangement {
            let family = self.r.family(f)?;
            out["rearrangement"] = match rearrangement_attack(&family, pricing, &opts) {
                Ok(b) => self.book(&b, pricing),
                Err(e) => undetermined(e),
            };
        }
        Ok(out)
    }

    fn additivity(&mut self) -> Result<Value> {
        let spec = self.inst.additivity.as_ref().ok_or_else(|| anyhow!("instance has no additivity section"))?;
        let whole = self.r.event_ref(&spec.whole)?;
        let parts = self.r.events(&spec.parts)?;
        let pricing = self.pricing()?;
        let opts = self.cfg.opts();
        let check = match check_countable_additivity(&self.r.space, pricing, &whole, &parts, &opts) {
            Ok(Additivity::Holds(gap)) => json!({ "verdict": "Holds", "gap": series(&gap) }),
            Ok(Additivity::Fails(gap)) => json!({ "verdict": "Fails", "gap": series(&gap) }),
            Ok(Additivity::Undetermined(why)) => undetermined(why),
            Err(e) => undetermined(e),
        };
        let mut out = json!({ "check": check });
        if let Ok(probe) = additivity_probe(&self.r.space, &whole, &parts) {
            out["probe"] = self.portfolio(&probe);
            out["book"] = match constant_balance_attack(&probe, pricing, &opts) {
                Ok(Some(b)) => self.book(&b, pricing),
                Ok(None) => Value::Null,
                Err(e) => undetermined(e),
            };
        }
        Ok(out)
    }

    fn atoms(&mut self) -> Result<Value> {
        let mut out = json!({});
        if self.r.space.size().is_some() {
            let gens: Vec<_> = self.r.named.iter().map(|(_, e)| e.clone()).collect();
            match generate_field(&self.r.space, &EventCollection::unstructured(gens)) {
                Ok(field) => {
                    let weights = match (&self.r.measure, &self.r.prices) {
                        (Some(m), _) => Some(Weights::Measure(m)),
                        (None, Some(p)) => Some(Weights::Prices(p)),
                        _ => None,
                    };
                    out["field_size"] = json!(field.events.len());
                    if let Some(w) = weights {
                        out["atoms"] = or_undetermined(atoms(&field, w), |a| report::atoms(self.r, &a));
                        out["p_finite"] = or_undetermined(is_p_finite(&field, w), |p| self.p_finite(&p));
                    }
                }
                Err(e) => out["field"] = undetermined(e),
            }
        }
        let chains = chains(self.r);
        if !chains.is_empty() {
            out["chains"] = chains
                .iter()
                .map(|(chain, price)| {
                    let BaseFamily::ChainIntervals { r, hi_closed, .. } = chain else { unreachable!() };
                    json!({
                        "chain": self.r.family_out(chain),
                        "p_finite": or_undetermined(chain_p_finite(r, price, *hi_closed), |p| self.p_finite(&p)),
                    })
                })
                .collect();
        }
        if out.as_object().is_some_and(|o| o.is_empty()) {
            bail!("atoms needs a finite space or chain price rules");
        }
        Ok(out)
    }

    fn p_finite(&self, p: &PFinite) -> Value {
        match p {
            PFinite::Yes(a) => json!({ "p_finite": true, "atoms": report::atoms(self.r, a) }),
            PFinite::No(f) => json!({ "p_finite": false, "witness": self.r.family_out(f) }),
        }
    }

    fn synthesize(&mut self) -> Result<Value> {
        let cells = self.inst.target.as_ref().ok_or_else(|| anyhow!("instance has no target section"))?;
        let target: SimpleRV = self.r.target(cells)?;
        let m = self.r.measure.as_ref().ok_or_else(|| anyhow!("synthesize needs a measure"))?;
        let mut out = json!({
            "expectation": or_undetermined(target.expectation(m), |e| q(&e)),
            "membership": System::ALL
                .iter()
                .map(|&s| or_undetermined(balance_space_membership(&target, s, m), |b| json!({
                    "system": s.name(),
                    "representable": b.representable,
                    "reason": b.reason,
                })))
                .collect::<Vec<_>>(),
        });
        match synthesize_balance(&target, m) {
            Ok(pf) => {
                out["portfolio"] = self.portfolio(&pf);
                let opts = self.cfg.opts();
                let pricing = Pricing::Measure(m);
                out["sampled_balances"] = self
                    .sample_outcomes()
                    .iter()
                    .map(|w| {
                        let want = target.value_at(w).ok();
                        let got = balance_at(&pf, pricing, w, &opts);
                        let matches = match (&got, &want) {
                            (Ok(s), Some(t)) => Some(s.contains(t)),
                            _ => None,
                        };
                        json!({
                            "outcome": self.outcome_json(w),
                            "target": want.as_ref().map(q),
                            "balance": or_undetermined(got, |s| series(&s)),
                            "matches": matches,
                        })
                    })
                    .collect();
            }
            Err(e) => out["portfolio"] = undetermined(e),
        }
        Ok(out)
    }
}

fn run_gallery(name: &str, cfg: &Config) -> Result<(InstanceFile, Value)> {
    if !gallery::GALLERY.contains(&name) {
        bail!("unknown gallery instance {name:?}; expected one of {}", gallery::GALLERY.join(", "));
    }
    let g = gallery::by_name(name, cfg.delta.as_ref())?;
    let r = Resolved::from_engine(g.space.clone(), Some(g.prices.clone()), None, g.portfolios.clone());
    let opts = cfg.opts();
    let claims = match g.verify(&opts) {
        Ok(checks) => checks
            .iter()
            .map(|c| json!({ "claim": report::claim(&c.claim), "pass": c.pass, "detail": c.detail }))
            .collect(),
        Err(e) => undetermined(e),
    };
    let pricing = Pricing::Assigned(&g.prices);
    let portfolios: Vec<Value> = g
        .portfolios
        .iter()
        .map(|(n, pf)| {
            json!({
                "name": n,
                "portfolio": report::portfolio(&r, pf, cfg.prefix),
                "systems": or_undetermined(classify(pf, pricing), |v| report::systems(&v)),
            })
        })
        .collect();
    let mut results = json!({
        "name": g.name,
        "family": r.family_out(&g.family),
        "claims": claims,
        "portfolios": portfolios,
    });
    if let Some(d) = &g.delta {
        results["delta"] = q(d);
    }
    if name == "example-4.4" {
        let d = g.delta.clone().expect("beam instance carries delta");
        results["beam"] = match beam_attack(&d, &opts) {
            Ok((book, rep)) => json!({
                "dutch_book": report::book(&r, &book, cfg.prefix),
                "report": report::beam(&rep),
            }),
            Err(e) => undetermined(e),
        };
    }
    let mut file = r.to_file();
    file.k_star = (name == "example-2.4").then_some(50);
    Ok((file, results))
}

pub fn parse_delta(s: &str) -> Result<Q> {
    crate::wire::parse_rat(s).map(|Rat(x)| x)
}
