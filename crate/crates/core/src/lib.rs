//! Lorenz-80 slow/fast dynamics and neural closures.
//!
//! The crate covers the whole experimental loop: simulate the nine-variable
//! Lorenz (1980) primitive-equation truncation, split trajectories into slow
//! and fast parts, fit small tanh networks that express the divergent
//! amplitudes `x` through the rotational amplitudes `y`, run the resulting
//! closed `y`-systems, and measure lobe-transition statistics and
//! high-frequency deficits.
//!
//! A narrative guide lives in the `book/` directory at the repository root;
//! its code listings are compiled as doctests of this crate.

pub mod closure;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod fsutil;
pub mod integrator;
pub mod kv;
pub mod model;
pub mod neural;
pub mod pipelines;
pub mod signal;
pub mod statistics;
pub mod trajectory;

pub use error::{Error, Result};
pub use model::{ModelParams, Regime, State9};
pub use trajectory::Trajectory;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/integration.md")]
    mod integration {}
    #[doc = include_str!("../../../book/src/filtering.md")]
    mod filtering {}
    #[doc = include_str!("../../../book/src/networks.md")]
    mod networks {}
    #[doc = include_str!("../../../book/src/closures.md")]
    mod closures {}
    #[doc = include_str!("../../../book/src/lobes.md")]
    mod lobes {}
    #[doc = include_str!("../../../book/src/diagnostics.md")]
    mod diagnostics {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
