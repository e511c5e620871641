//! Exhaustive oracles for small graphs.
//!
//! Everything here enumerates the full clique space, so it is limited to
//! graphs with at most a few hundred thousand cliques.

mod bottleneck;
mod census;
mod enumerate;
mod gateways;
mod kernel;

pub use bottleneck::{bottleneck_ratio_large_clique, ClaimsAB, LargeCliqueBottleneck};
pub use census::{
    bottleneck_ratio_intersection, census, census_of, partition_functions, CliqueCensus,
    PartitionFunctions,
};
pub use enumerate::{
    enumerate_cliques, for_each_clique, CliqueGraph, EnumerationStats, StateSpaceIndex,
};
pub use gateways::compute_gateways;
pub use kernel::{
    birth_death_2d_kernel, exact_stationary_and_balance, expected_hitting_time, metropolis_kernel,
    st_kernel, SparseKernel, Stationary, StationaryReport, DEFAULT_STATE_LIMIT,
};

/// Default enumeration budget (nodes).
pub const DEFAULT_BUDGET: usize = 5_000_000;
