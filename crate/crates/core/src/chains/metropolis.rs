use super::trajectory::Recorder;
use super::{
    ChainConfig, ChainRng, CliqueState, Dynamics, TrajectoryRecord, RELEASE_CHECK_INTERVAL,
};
use crate::error::{Error, Result};
use crate::graph::PlantedGraph;
use crate::hamiltonian::GibbsContext;
use rand::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepOutcome {
    Added(usize),
    Removed(usize),
    /// Flip is a clique but the acceptance coin said no.
    Rejected(usize),
    /// `C ⊕ {v}` is not a clique.
    Blocked(usize),
}

impl StepOutcome {
    #[inline]
    pub fn moved(self) -> bool {
        matches!(self, StepOutcome::Added(_) | StepOutcome::Removed(_))
    }
}

#[inline]
pub(crate) fn accept(log_acc: f64, rng: &mut ChainRng) -> bool {
    log_acc >= 0.0 || rng.accept.gen::<f64>() < log_acc.exp()
}

/// One Metropolis step at `ctx`: flip a uniform vertex, accept with
/// `min(1, exp(beta (h_new - h_old)))` when the result is a clique.
pub fn metropolis_step(
    g: &PlantedGraph,
    ctx: &GibbsContext,
    state: &mut CliqueState,
    rng: &mut ChainRng,
) -> StepOutcome {
    let v = rng.proposal.gen_range(0..g.n());
    flip(g, ctx, state, v, rng)
}

#[inline]
pub(crate) fn flip(
    g: &PlantedGraph,
    ctx: &GibbsContext,
    state: &mut CliqueState,
    v: usize,
    rng: &mut ChainRng,
) -> StepOutcome {
    let s = state.size();
    if state.contains(v) {
        if accept(ctx.log_acceptance_unchecked(s, s - 1), rng) {
            state.remove(g, v);
            StepOutcome::Removed(v)
        } else {
            StepOutcome::Rejected(v)
        }
    } else if g.extends(state.members(), v) {
        if accept(ctx.log_acceptance_unchecked(s, s + 1), rng) {
            state.add(g, v);
            StepOutcome::Added(v)
        } else {
            StepOutcome::Rejected(v)
        }
    } else {
        StepOutcome::Blocked(v)
    }
}

/// One step of the `beta = +inf` limit: add `v` iff it extends the clique.
pub fn greedy_step(g: &PlantedGraph, state: &mut CliqueState, rng: &mut ChainRng) -> StepOutcome {
    let v = rng.proposal.gen_range(0..g.n());
    if state.contains(v) {
        StepOutcome::Rejected(v)
    } else if g.extends(state.members(), v) {
        state.add(g, v);
        StepOutcome::Added(v)
    } else {
        StepOutcome::Blocked(v)
    }
}

fn check_start(g: &PlantedGraph, start: &CliqueState) -> Result<()> {
    if start.members().universe() != g.n() || !start.is_consistent(g) {
        return Err(Error::InvalidState(
            "start state is not a clique of the graph".into(),
        ));
    }
    Ok(())
}

#[inline]
pub(crate) fn spot_check(g: &PlantedGraph, state: &CliqueState, step: u64) {
    if cfg!(debug_assertions) || step.is_multiple_of(RELEASE_CHECK_INTERVAL) {
        assert!(
            state.is_consistent(g),
            "clique state corrupted at step {step}"
        );
    }
}

fn drive(
    g: &PlantedGraph,
    start: CliqueState,
    cfg: &ChainConfig,
    mut step_fn: impl FnMut(&mut CliqueState, &mut ChainRng) -> StepOutcome,
) -> TrajectoryRecord {
    let mut rng = ChainRng::new(cfg.seed);
    let mut state = start;
    let mut rec = Recorder::new(
        cfg.max_steps,
        cfg.thinning,
        cfg.size_target,
        cfg.overlap_target,
    );
    rec.sample(0, state.size(), state.pc_overlap(), 0);
    let on_target = rec.check_hits(0, state.size(), state.pc_overlap()) && cfg.stop_at_target;
    let mut removals = 0u64;
    let mut accepted = 0u64;
    let mut t = 0u64;
    while !on_target && t < cfg.max_steps {
        t += 1;
        let out = step_fn(&mut state, &mut rng);
        spot_check(g, &state, t);
        if out.moved() {
            accepted += 1;
            if matches!(out, StepOutcome::Removed(_)) {
                removals += 1;
            }
            if rec.check_hits(t, state.size(), state.pc_overlap()) && cfg.stop_at_target {
                rec.sample(t, state.size(), state.pc_overlap(), 0);
                break;
            }
        }
        rec.sample(t, state.size(), state.pc_overlap(), 0);
    }
    rec.finish(t, state.size(), state.pc_overlap(), 0);
    TrajectoryRecord {
        points: rec.points,
        steps_run: t,
        first_hit_size: rec.first_hit_size,
        first_hit_overlap: rec.first_hit_overlap,
        removals_count: removals,
        accepted_moves: accepted,
        final_state: state,
        final_temp_index: 0,
    }
}

/// Runs the Metropolis chain for up to `cfg.max_steps` steps.
pub fn run_metropolis(
    g: &PlantedGraph,
    ctx: &GibbsContext,
    start: CliqueState,
    cfg: &ChainConfig,
) -> Result<TrajectoryRecord> {
    cfg.expect(Dynamics::Metropolis)?;
    check_start(g, &start)?;
    if ctx.h.n() != g.n() {
        return Err(Error::InvalidParameter(format!(
            "hamiltonian has length {}, graph needs {}",
            ctx.h.n() + 1,
            g.n() + 1
        )));
    }
    Ok(drive(g, start, cfg, |s, r| metropolis_step(g, ctx, s, r)))
}

/// Runs the greedy (never-remove) chain.
pub fn run_greedy(
    g: &PlantedGraph,
    start: CliqueState,
    cfg: &ChainConfig,
) -> Result<TrajectoryRecord> {
    cfg.expect(Dynamics::Greedy)?;
    check_start(g, &start)?;
    Ok(drive(g, start, cfg, |s, r| greedy_step(g, s, r)))
}
