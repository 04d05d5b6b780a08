//! Portfolios over closed-form grammars, their prices, balances and
//! betting-system membership.

pub mod classify;
pub mod compiled;
pub mod eval;
pub mod family;
pub mod grammar;

pub use compiled::{Compiled, EvItem, EvLane, Pricing};
pub use family::{BaseFamily, FamilyInfo, Membership};
pub use grammar::{interleave, negate, permute, CoeffSeq, EventFamily, IndexMap, Portfolio};
pub use eval::{balance_at, ordered_sum, price_of, series_sum};
pub use classify::{classify, System, SystemVerdict, Verdict};
