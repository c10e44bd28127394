//! Coverage and capacity of ultra-dense small-cell networks with idle-mode
//! base stations and a multi-piece LoS/NLoS path-loss model.

pub mod analytic;
pub mod capacity;
pub mod channel;
pub mod deployment;
pub mod error;
pub mod quadrature;
pub mod search;
pub mod simulator;
pub mod units;

pub use error::{Error, Result};

// The book's chapters, so `cargo test --doc` runs their snippets.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/channel.md")]
    mod channel {}
    #[doc = include_str!("../../../book/src/idle-mode.md")]
    mod idle_mode {}
    #[doc = include_str!("../../../book/src/coverage-limit.md")]
    mod coverage_limit {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/capacity.md")]
    mod capacity {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
