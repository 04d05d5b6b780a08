//! Betting portfolios, Dutch books and coherence checks with exact rational
//! arithmetic and certified series enclosures.
#![no_std]

extern crate alloc;

mod error;
pub mod coherence;
pub mod corpus;
pub mod fixed;
pub mod gallery;
pub mod lp;
pub mod measure;
pub mod portfolio;
pub mod rational;
pub mod rule;
pub mod series;
pub mod synthesis;

pub use error::Error;
pub use rational::Q;
pub use series::{Certificate, Direction, SeriesValue, SumOpts, TailKind};
