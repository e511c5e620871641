//! Simulation and exact-analysis toolkit for Markov chain dynamics on the
//! clique lattice of random graphs with a planted clique.
//!
//! The crate is organised bottom-up:
//!
//! - [`graph`]: planted-clique graph generation, bitset vertex sets, the
//!   common-neighbour primitive, the expansion check and the degree baseline.
//! - [`hamiltonian`]: size-indexed Hamiltonians and log-domain Gibbs weights.
//! - [`chains`]: Metropolis, greedy, simulated tempering and the auxiliary
//!   birth-death walks, plus the dominance coupling.
//! - [`exact`]: exhaustive oracles on small instances (clique enumeration,
//!   census, partition functions, transition matrices, gateways,
//!   bottleneck ratios, hitting times).
//! - [`analytics`]: finite-n first-moment and closed-form stationary formulas.
//! - [`experiments`]: plans, sweeps, and the invariant suites behind
//!   `pclab verify`.

pub mod analytics;
pub mod chains;
pub mod error;
pub mod exact;
pub mod experiments;
pub mod graph;
pub mod hamiltonian;
pub mod rng;

pub use error::{Error, Result};
pub use graph::{PlantedGraph, VertexSet};
pub use hamiltonian::{GibbsContext, HamiltonianSpec};

/// Base-2 logarithm used for every size threshold (`log2 n`).
#[inline]
pub fn log2n(n: usize) -> f64 {
    (n as f64).log2()
}
