//! Cost-aware active sequential hypothesis testing with random action costs
//! and per-action deadlines.
//!
//! The guide in `book/` walks through the modules with runnable examples.

// `!(x > 0.0)` style guards reject NaN together with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod cost;
pub mod deadline;
pub mod engine;
pub mod experiments;
pub mod numerics;
pub mod observation;
pub mod policies;

#[cfg(test)]
#[path = "../tests/common/oracles.rs"]
mod oracles;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/effective-cost.md")]
    mod effective_cost {}
    #[doc = include_str!("../../../book/src/cost-families.md")]
    mod cost_families {}
    #[doc = include_str!("../../../book/src/deadlines.md")]
    mod deadlines {}
    #[doc = include_str!("../../../book/src/observations.md")]
    mod observations {}
    #[doc = include_str!("../../../book/src/policies.md")]
    mod policies {}
    #[doc = include_str!("../../../book/src/engine.md")]
    mod engine {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
