//! Markov chains on the clique lattice and their auxiliary walks.
//!
//! All samplers take a [`ChainRng`] with two independent streams: the
//! proposal stream picks vertices, move types and temperature directions,
//! the accept stream supplies Metropolis coin flips. Keeping them apart means
//! two dynamics that differ only in acceptance see identical proposals.

mod birth_death;
mod dominance;
mod metropolis;
mod state;
mod tempering;
mod trajectory;

pub use birth_death::{
    hitting_time_to_zero, run_birth_death_1d, run_birth_death_2d, BirthDeath1d, BirthDeath2d,
    Moves2d, WalkRecord,
};
pub use dominance::{check_dominance, DominanceReport, PreconditionFailure};
pub use metropolis::{greedy_step, metropolis_step, run_greedy, run_metropolis, StepOutcome};
pub use state::CliqueState;
pub use tempering::{run_st, st_step, Ladder};
pub use trajectory::{Thinning, TrajectoryPoint, TrajectoryRecord};

use crate::error::{invalid, Result};
use crate::rng::{derive_seed, prng, stream, Prng};
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Dynamics {
    Metropolis,
    Greedy,
    SimulatedTempering,
    BirthDeath1d,
    BirthDeath2d,
}

impl Dynamics {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "metropolis" => Dynamics::Metropolis,
            "greedy" => Dynamics::Greedy,
            "st" | "simulated_tempering" | "tempering" => Dynamics::SimulatedTempering,
            "birth_death_1d" | "bd1d" => Dynamics::BirthDeath1d,
            "birth_death_2d" | "bd2d" => Dynamics::BirthDeath2d,
            other => return invalid(format!("unknown dynamics `{other}`")),
        })
    }
}

/// Run control shared by every sampler. Model parameters (β, ladder, h)
/// live in [`crate::GibbsContext`] and [`Ladder`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainConfig {
    pub dynamics: Dynamics,
    pub max_steps: u64,
    pub size_target: Option<usize>,
    pub overlap_target: Option<usize>,
    /// Stop as soon as either target is hit.
    pub stop_at_target: bool,
    pub seed: u64,
    pub thinning: Thinning,
}

impl ChainConfig {
    pub fn new(dynamics: Dynamics, max_steps: u64, seed: u64) -> Self {
        Self {
            dynamics,
            max_steps,
            size_target: None,
            overlap_target: None,
            stop_at_target: true,
            seed,
            thinning: Thinning::Auto,
        }
    }

    /// Sets `size_target = ceil((1+eps) log2 n)` and
    /// `overlap_target = ceil(gamma log2 n)`.
    pub fn with_log_targets(mut self, n: usize, eps: f64, gamma: f64) -> Result<Self> {
        if !(eps.is_finite() && gamma.is_finite() && eps > -1.0 && gamma >= 0.0) {
            return invalid(format!("bad target factors eps={eps}, gamma={gamma}"));
        }
        let l = crate::log2n(n);
        self.size_target = Some(((1.0 + eps) * l).ceil() as usize);
        self.overlap_target = Some((gamma * l).ceil() as usize);
        Ok(self)
    }

    pub fn with_thinning(mut self, thinning: Thinning) -> Self {
        self.thinning = thinning;
        self
    }

    pub(crate) fn expect(&self, dynamics: Dynamics) -> Result<()> {
        if self.dynamics != dynamics {
            return invalid(format!(
                "config is for {:?}, sampler runs {:?}",
                self.dynamics, dynamics
            ));
        }
        Ok(())
    }
}

/// Proposal and accept streams derived from one chain seed.
pub struct ChainRng {
    pub proposal: Prng,
    pub accept: Prng,
}

impl ChainRng {
    pub fn new(seed: u64) -> Self {
        Self {
            proposal: prng(derive_seed(seed, &[stream::PROPOSAL])),
            accept: prng(derive_seed(seed, &[stream::ACCEPT])),
        }
    }
}

/// Release builds spot-check the cached state this often.
pub(crate) const RELEASE_CHECK_INTERVAL: u64 = 1 << 16;
