//! Dutch-book search and coherence checks.

pub mod attacks;
pub mod extension;
pub mod finite;

use alloc::string::String;
use alloc::vec::Vec;

use crate::measure::Event;
use crate::portfolio::Portfolio;
use crate::rational::Q;
use crate::series::SeriesValue;

pub use attacks::{
    additivity_probe, beam_attack, check_countable_additivity, beam_attack_with, beam_portfolio, beam_prices, constant_balance, constant_balance_attack,
    invert_rule, rearrangement_attack, rearrangement_attack_with, two_evens_per_odd, Additivity, BeamReport,
};
pub use extension::{extension_obstruction, finite_reduction, ExtensionObstruction, FiniteReduction};
pub use finite::{check_instance, coherence_trichotomy_check, lp_coherence_finite, trichotomy, FiniteInstance, Trichotomy};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SureLoss {
    Uniform,
    Weak,
    Strict,
}

impl SureLoss {
    pub fn name(self) -> &'static str {
        match self {
            SureLoss::Uniform => "UniformSureLoss",
            SureLoss::Weak => "WeakSureLoss",
            SureLoss::Strict => "StrictSureLoss",
        }
    }
}

/// A portfolio whose balance is at most `-margin` at every outcome.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DutchBook {
    pub portfolio: Portfolio,
    /// Enclosure of the guaranteed loss; positive.
    pub margin: SeriesValue,
    pub kind: SureLoss,
}

/// A finitely additive extension: outcome weights and the induced atom
/// weights on the generated field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Extension {
    pub outcome_weights: Vec<Q>,
    pub atoms: Vec<(Event, Q)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CoherenceVerdict {
    Coherent(Extension),
    Incoherent(DutchBook),
    Undetermined(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoherenceReport {
    pub verdict: CoherenceVerdict,
    /// Dual certificate of infeasibility, `(y_0, y_A...)`.
    pub farkas: Option<Vec<Q>>,
}
