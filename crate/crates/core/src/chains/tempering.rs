use super::metropolis::{accept, flip, spot_check};
use super::trajectory::Recorder;
use super::{ChainConfig, ChainRng, CliqueState, Dynamics, StepOutcome, TrajectoryRecord};
use crate::error::{invalid, Error, Result};
use crate::graph::PlantedGraph;
use crate::hamiltonian::{GibbsContext, HamiltonianSpec};
use rand::Rng;
use serde::Serialize;

/// Temperature ladder `beta_0 < ... < beta_m` with log partition estimates.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Ladder {
    betas: Vec<f64>,
    log_z_hat: Vec<f64>,
    level_move_prob: f64,
    #[serde(skip)]
    levels: Vec<GibbsContext>,
}

impl Ladder {
    pub fn new(
        betas: Vec<f64>,
        log_z_hat: Vec<f64>,
        level_move_prob: f64,
        h: HamiltonianSpec,
    ) -> Result<Self> {
        if betas.is_empty() {
            return invalid("ladder needs at least one temperature");
        }
        if betas.len() != log_z_hat.len() {
            return invalid(format!(
                "{} temperatures but {} partition estimates",
                betas.len(),
                log_z_hat.len()
            ));
        }
        if betas
            .windows(2)
            .any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less))
        {
            return invalid("ladder must be strictly increasing");
        }
        if log_z_hat.iter().any(|z| !z.is_finite()) {
            return invalid("log partition estimates must be finite");
        }
        if !(level_move_prob > 0.0 && level_move_prob < 1.0) {
            return invalid(format!(
                "level move probability {level_move_prob} not in (0,1)"
            ));
        }
        let levels = betas
            .iter()
            .map(|&b| GibbsContext::new(b, h.clone()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            betas,
            log_z_hat,
            level_move_prob,
            levels,
        })
    }

    /// Index of the top temperature.
    pub fn m(&self) -> usize {
        self.betas.len() - 1
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn log_z_hat(&self) -> &[f64] {
        &self.log_z_hat
    }

    pub fn level_move_prob(&self) -> f64 {
        self.level_move_prob
    }

    pub fn level(&self, i: usize) -> &GibbsContext {
        &self.levels[i]
    }

    pub fn h(&self) -> &HamiltonianSpec {
        &self.levels[0].h
    }

    /// The empty-start analysis wants `Z_hat` increasing along the ladder.
    /// The dynamics is well defined either way; callers may warn on `false`.
    pub fn z_hat_increasing(&self) -> bool {
        self.log_z_hat.windows(2).all(|w| w[0] < w[1])
    }

    /// Log acceptance of the temperature move `i -> j` at clique size `size`.
    pub fn log_temperature_acceptance(&self, i: usize, j: usize, size: usize) -> f64 {
        let h = self.h().get(size);
        let dh = if h == 0.0 {
            0.0
        } else {
            (self.betas[j] - self.betas[i]) * h
        };
        (self.log_z_hat[i] - self.log_z_hat[j] + dh).min(0.0)
    }
}

/// One simulated-tempering step. With probability `a` a Metropolis flip at
/// `beta_i`; otherwise a temperature proposal `i ± 1`, off-ladder proposals
/// being self-loops.
pub fn st_step(
    g: &PlantedGraph,
    ladder: &Ladder,
    state: &mut CliqueState,
    temp_index: &mut usize,
    rng: &mut ChainRng,
) -> StepOutcome {
    let i = *temp_index;
    if rng.proposal.gen::<f64>() < ladder.level_move_prob {
        let v = rng.proposal.gen_range(0..g.n());
        return flip(g, ladder.level(i), state, v, rng);
    }
    let up = rng.proposal.gen::<bool>();
    let j = match (up, i) {
        (false, 0) => return StepOutcome::Blocked(i),
        (false, _) => i - 1,
        (true, _) if i == ladder.m() => return StepOutcome::Blocked(i),
        (true, _) => i + 1,
    };
    if accept(ladder.log_temperature_acceptance(i, j, state.size()), rng) {
        *temp_index = j;
        StepOutcome::Added(j)
    } else {
        StepOutcome::Rejected(j)
    }
}

/// Runs simulated tempering from `(start, start_index)`.
pub fn run_st(
    g: &PlantedGraph,
    ladder: &Ladder,
    start: CliqueState,
    start_index: usize,
    cfg: &ChainConfig,
) -> Result<TrajectoryRecord> {
    cfg.expect(Dynamics::SimulatedTempering)?;
    if start_index > ladder.m() {
        return invalid(format!(
            "temperature index {start_index} beyond m = {}",
            ladder.m()
        ));
    }
    if ladder.h().n() != g.n() {
        return invalid("hamiltonian length does not match the graph");
    }
    if !start.is_consistent(g) {
        return Err(Error::InvalidState(
            "start state is not a clique of the graph".into(),
        ));
    }
    let mut rng = ChainRng::new(cfg.seed);
    let mut state = start;
    let mut ti = start_index;
    let mut rec = Recorder::new(
        cfg.max_steps,
        cfg.thinning,
        cfg.size_target,
        cfg.overlap_target,
    );
    rec.sample(0, state.size(), state.pc_overlap(), ti);
    let on_target = rec.check_hits(0, state.size(), state.pc_overlap()) && cfg.stop_at_target;
    let (mut removals, mut accepted, mut t) = (0u64, 0u64, 0u64);
    while !on_target && t < cfg.max_steps {
        t += 1;
        let before = state.size();
        let out = st_step(g, ladder, &mut state, &mut ti, &mut rng);
        spot_check(g, &state, t);
        if out.moved() {
            accepted += 1;
            if state.size() < before {
                removals += 1;
            }
            if rec.check_hits(t, state.size(), state.pc_overlap()) && cfg.stop_at_target {
                rec.sample(t, state.size(), state.pc_overlap(), ti);
                break;
            }
        }
        rec.sample(t, state.size(), state.pc_overlap(), ti);
    }
    rec.finish(t, state.size(), state.pc_overlap(), ti);
    Ok(TrajectoryRecord {
        points: rec.points,
        steps_run: t,
        first_hit_size: rec.first_hit_size,
        first_hit_overlap: rec.first_hit_overlap,
        removals_count: removals,
        accepted_moves: accepted,
        final_state: state,
        final_temp_index: ti,
    })
}
