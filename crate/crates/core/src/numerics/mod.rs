//! Numerical building blocks shared by the rest of the crate.
//!
//! Everything here is a pure function of its inputs except [`RandomStream`],
//! which is a single-owner generator.

mod game;
mod quad;
mod roots;
mod special;
mod stream;

pub use game::{solve_ratio_game, RatioGame, RatioSolution};
pub use quad::integrate_adaptive;
pub use roots::{find_root_bracketed, minimize_convex_1d, RootProblem};
pub use special::{beta, incomplete_beta, ln_gamma};
pub use stream::{rng_stream, RandomStream};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("argument out of domain: {0}")]
    Domain(String),
    #[error("root is not bracketed: f({lo}) = {f_lo}, f({hi}) = {f_hi}")]
    BracketInvalid { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("invalid ratio game: {0}")]
    InvalidGame(String),
}
