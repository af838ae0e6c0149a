//! Discrete-time quantum walks on general graphs and their execution on a
//! grid of quantum dots.
//!
//! - [`graph`]: undirected graphs, edge masks and graph file parsing.
//! - [`walk`]: the grid walk, coins and coin plans, position distributions.
//! - [`decomp`]: synthesis of a unitary into stages of commuting pair
//!   rotations.
//! - [`conveyor`]: the physical dot grid and the five-step stage protocol.
//! - [`tdse`]: 1D single-electron dynamics in a double well, Chebyshev
//!   propagation and hold-time calibration.
//! - [`io`]: JSON documents and TSV exports.
//!
//! Node, coin and dot indices are 1-based throughout the public API.
//!
//! ```
//! use qdot_walk::graph::Graph;
//! use qdot_walk::walk::{evolve, position_distribution_after, CoinKind, CoinPlan, WalkState};
//!
//! let k3 = Graph::complete(3)?;
//! let plan = CoinPlan::for_graph(&k3, CoinKind::Dft, 5)?;
//! let s = evolve(&WalkState::localized(3, 1, 2)?, 5, &plan)?;
//! let dist = position_distribution_after(&s, 5);
//! assert!((dist.total() - 1.0).abs() < 1e-12);
//! # Ok::<(), qdot_walk::Error>(())
//! ```

pub mod conveyor;
pub mod decomp;
pub mod error;
pub mod graph;
pub mod io;
pub mod linalg;
pub mod tdse;
pub mod walk;

pub use error::{Error, Result};

/// Book chapters, compiled so that their snippets run as doc-tests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/walks.md")]
    mod walks {}
    #[doc = include_str!("../../../book/src/decomposition.md")]
    mod decomposition {}
    #[doc = include_str!("../../../book/src/conveyor.md")]
    mod conveyor {}
    #[doc = include_str!("../../../book/src/tdse.md")]
    mod tdse {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/units.md")]
    mod units {}
}
