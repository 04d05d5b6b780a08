//! JSON renderings of engine results.

use coherence_core::coherence::{BeamReport, CoherenceVerdict, DutchBook, Trichotomy};
use coherence_core::gallery::Claim;
use coherence_core::measure::{Atom, Space};
use coherence_core::portfolio::{Compiled, EvItem, Portfolio, SystemVerdict, Verdict};
use coherence_core::{Direction, SeriesValue, Q};
use serde_json::{json, Value};

use crate::wire::{coeffs_out, Rat, Resolved};

pub fn q(x: &Q) -> Value {
    Value::String(Rat(x.clone()).to_string())
}

pub fn qs(v: &[Q]) -> Value {
    Value::Array(v.iter().map(q).collect())
}

pub fn series(v: &SeriesValue) -> Value {
    match v {
        SeriesValue::Exact(x) => json!({ "exact": q(x) }),
        SeriesValue::Enclosure { lo, hi, cert } => json!({
            "enclosure": { "lo": q(lo), "hi": q(hi), "certificate": cert.kind.name(), "cut": cert.cut }
        }),
        SeriesValue::Divergent(d) => json!({
            "divergent": match d {
                Direction::PosInf => "+inf",
                Direction::NegInf => "-inf",
                Direction::Oscillating => "oscillating",
            }
        }),
        SeriesValue::Undetermined(r) => json!({ "undetermined": r }),
    }
}

pub fn undetermined(reason: impl ToString) -> Value {
    json!({ "verdict": "Undetermined", "reason": reason.to_string() })
}

fn verdict(v: &Verdict) -> Value {
    json!({ "verdict": v.label(), "reason": v.reason() })
}

pub fn systems(v: &SystemVerdict) -> Value {
    json!({
        "S1": verdict(&v.s1),
        "S2": verdict(&v.s2),
        "S2B": verdict(&v.s2b),
        "S2A": verdict(&v.s2a),
        "S3": verdict(&v.s3),
        "consistent": v.consistent(),
    })
}

/// Grammar form plus the first `prefix` bets.
pub fn portfolio(r: &Resolved, pf: &Portfolio, prefix: usize) -> Value {
    let bets = match Compiled::new(pf) {
        Ok(c) => {
            let n = if c.lanes.is_empty() { c.prefix.len().min(prefix) } else { prefix };
            (1..=n as u64)
                .map(|i| match c.bet(i) {
                    Ok((a, EvItem::Fixed(e))) => json!({ "coeff": q(&a), "event": r.event_out(&e) }),
                    Ok((a, EvItem::Member(_, k))) => json!({ "coeff": q(&a), "member": k }),
                    Err(e) => undetermined(e),
                })
                .collect()
        }
        Err(e) => vec![undetermined(e)],
    };
    json!({
        "coeffs": coeffs_out(&pf.coeffs),
        "events": r.events_out(&pf.events),
        "prefix": bets,
    })
}

pub fn book(r: &Resolved, b: &DutchBook, prefix: usize) -> Value {
    json!({
        "kind": b.kind.name(),
        "margin": series(&b.margin),
        "portfolio": portfolio(r, &b.portfolio, prefix),
    })
}

fn labels(space: &Space, ix: &[usize]) -> Value {
    match space {
        Space::Finite(l) => ix.iter().map(|&i| Value::String(l[i].clone())).collect(),
        _ => ix.iter().map(|&i| json!(i)).collect(),
    }
}

pub fn coherence(r: &Resolved, v: &CoherenceVerdict, farkas: Option<&Vec<Q>>, prefix: usize) -> Value {
    let mut out = match v {
        CoherenceVerdict::Coherent(ext) => {
            let weights: serde_json::Map<String, Value> = match &r.space {
                Space::Finite(l) => l.iter().cloned().zip(ext.outcome_weights.iter().map(q)).collect(),
                _ => Default::default(),
            };
            json!({
                "verdict": "Coherent",
                "outcome_weights": weights,
                "atoms": ext.atoms.iter().map(|(e, w)| json!({ "event": r.event_out(e), "weight": q(w) })).collect::<Vec<_>>(),
            })
        }
        CoherenceVerdict::Incoherent(b) => json!({ "verdict": "Incoherent", "dutch_book": book(r, b, prefix) }),
        CoherenceVerdict::Undetermined(why) => undetermined(why),
    };
    if let Some(y) = farkas {
        out["farkas"] = qs(y);
    }
    out
}

pub fn trichotomy(space: &Space, t: &Trichotomy) -> Value {
    json!({
        "extension_exists": t.extension_exists,
        "uniform_sure_loss": t.uniform_loss,
        "strict_sure_loss": t.strict_loss,
        "weak_sure_loss": t.weak_loss,
        "null_outcomes": labels(space, &t.null_outcomes),
        "agree": t.agree(),
    })
}

pub fn atoms(r: &Resolved, at: &[Atom]) -> Value {
    at.iter().map(|a| json!({ "event": r.event_out(&a.event), "weight": q(&a.weight) })).collect()
}

pub fn beam(rep: &BeamReport) -> Value {
    json!({
        "delta": q(&rep.delta),
        "samples": rep.samples.len(),
        "indicator_cancellation": rep.cancellation,
        "truncation_horizon": rep.horizon,
        "truncation_bound": q(&rep.bound),
        "largest_observed_tail": q(&rep.observed),
    })
}

pub fn claim(c: &Claim) -> Value {
    match c {
        Claim::PriceAt { k, value } => json!({ "price_at": { "k": k, "value": q(value) } }),
        Claim::IncreasingTo { limit } => json!({ "increasing_to": q(limit) }),
        Claim::ObstructionLimit { limit } => json!({ "obstruction_limit": q(limit) }),
        Claim::Classified { portfolio, system, member } => {
            json!({ "classified": { "portfolio": portfolio, "system": system.name(), "member": member } })
        }
        Claim::NoSureLossAfterReduction { portfolio, k_star } => {
            json!({ "no_sure_loss_after_reduction": { "portfolio": portfolio, "k_star": k_star } })
        }
        Claim::Margin { lo, hi } => json!({ "margin_meets": { "lo": q(lo), "hi": q(hi) } }),
    }
}
