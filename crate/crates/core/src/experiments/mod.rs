//! Sweep plans, orchestration and the bundled invariant suites.

mod plan;
mod sweep;
mod verify;

pub use plan::{
    graph_seed, k_from_alpha, trial_seed, BetaSpec, Cell, CellKind, ExperimentPlan,
    HamiltonianChoice, LogZChoice, SCHEMA_VERSION,
};
pub use sweep::{
    execute, expected_log_partition, resolve_threads, run_sweep, CellSummary, SweepFiles,
    SweepResult, TrialRow, THREADS_ENV,
};
pub use verify::{run_verify, SuiteResult, SMALL_FIXTURES};
