//! User-facing closed-form index rules, compiled to [`RuleNF`].

use alloc::boxed::Box;
use alloc::vec::Vec;

use num_traits::{Signed, Zero};

use super::nf::RuleNF;
use super::ratfn::RatFn;
use crate::rational::Q;
use crate::Error;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IndexRule {
    Const(Q),
    /// `coeff * (i + shift)^exponent`.
    Power { coeff: Q, shift: Q, exponent: i32 },
    /// `coeff * ratio^i`.
    Geometric { coeff: Q, ratio: Q },
    /// `(-1)^i * inner`.
    Alternating(Box<IndexRule>),
    Sum(Vec<IndexRule>),
    Product(Vec<IndexRule>),
}

impl IndexRule {
    pub fn constant(c: Q) -> Self {
        IndexRule::Const(c)
    }

    pub fn power(coeff: Q, shift: Q, exponent: i32) -> Self {
        IndexRule::Power { coeff, shift, exponent }
    }

    /// `coeff / (i + shift)`.
    pub fn reciprocal(coeff: Q, shift: Q) -> Self {
        IndexRule::power(coeff, shift, -1)
    }

    pub fn compile(&self) -> Result<RuleNF, Error> {
        Ok(match self {
            IndexRule::Const(c) => RuleNF::constant(c.clone()),
            IndexRule::Power { coeff, shift, exponent } => {
                if *exponent < 0 && !(shift + Q::from_integer(1.into())).is_positive() {
                    return Err(Error::InvalidRule(
                        "negative power needs shift > -1 so every index i >= 1 is regular",
                    ));
                }
                RuleNF::from_ratfn(RatFn::linear_power(shift, *exponent).scale(coeff))
            }
            IndexRule::Geometric { coeff, ratio } => {
                if ratio.is_zero() {
                    return Err(Error::InvalidRule("geometric ratio must be nonzero"));
                }
                RuleNF::geometric(coeff.clone(), ratio)
            }
            IndexRule::Alternating(inner) => inner
                .compile()?
                .mul(&RuleNF::alternating(RatFn::constant(Q::from_integer(1.into())))),
            IndexRule::Sum(parts) => {
                let mut acc = RuleNF::zero();
                for p in parts {
                    acc = acc.add(&p.compile()?);
                }
                acc
            }
            IndexRule::Product(parts) => {
                let mut acc = RuleNF::constant(Q::from_integer(1.into()));
                for p in parts {
                    acc = acc.mul(&p.compile()?);
                }
                acc
            }
        })
    }

    pub fn eval(&self, i: i64) -> Result<Q, Error> {
        self.compile()?
            .eval(i)
            .ok_or(Error::InvalidRule("rule is singular at this index"))
    }
}
