//! Closed-form index rules and their normal form.

pub mod index_rule;
pub mod nf;
pub mod poly;
pub mod ratfn;

pub use index_rule::IndexRule;
pub use nf::{Comp, Limit, RuleNF};
pub use ratfn::RatFn;
