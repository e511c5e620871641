use super::trajectory::Recorder;
use super::{ChainConfig, ChainRng, Dynamics, Ladder, TrajectoryPoint};
use crate::error::{invalid, Result};
use crate::graph::expansion_ceiling;
use crate::hamiltonian::GibbsContext;
use rand::Rng;
use serde::Serialize;
use std::io::Write;

fn check_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta < 1.0) {
        return invalid(format!("eta = {eta} not in (0,1)"));
    }
    Ok(())
}

/// Size-only proxy walk: down with `(s/n) min(e^{beta(h_{s-1}-h_s)}, 1)`,
/// up with `2^{-s}/20 min(e^{beta(h_{s+1}-h_s)}, 1)` below the ceiling
/// `floor((1-eta) log2 n)`.
#[derive(Clone, Debug)]
pub struct BirthDeath1d {
    n: usize,
    ctx: GibbsContext,
    ceiling: usize,
}

impl BirthDeath1d {
    pub fn new(n: usize, ctx: GibbsContext, eta: f64) -> Result<Self> {
        check_eta(eta)?;
        if n < 2 {
            return invalid("birth-death walk needs n >= 2");
        }
        if ctx.h.n() != n {
            return invalid(format!(
                "hamiltonian covers sizes 0..={}, need 0..={n}",
                ctx.h.n()
            ));
        }
        let ceiling = expansion_ceiling(n, eta);
        Ok(Self { n, ctx, ceiling })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ceiling(&self) -> usize {
        self.ceiling
    }

    pub fn ctx(&self) -> &GibbsContext {
        &self.ctx
    }

    #[inline]
    pub fn down(&self, s: usize) -> f64 {
        if s == 0 {
            return 0.0;
        }
        s as f64 / self.n as f64 * self.ctx.log_acceptance_unchecked(s, s - 1).exp()
    }

    #[inline]
    pub fn up(&self, s: usize) -> f64 {
        if s >= self.ceiling || s >= self.n {
            return 0.0;
        }
        (-(s as f64) * std::f64::consts::LN_2).exp() / 20.0
            * self.ctx.log_acceptance_unchecked(s, s + 1).exp()
    }

    /// `log nu(s) - log nu(0)` from the product of per-step ratios.
    pub fn log_nu(&self, s: usize) -> f64 {
        (1..=s).map(|i| (self.up(i - 1) / self.down(i)).ln()).sum()
    }

    /// Normalised stationary law on `0..=ceiling`.
    pub fn stationary(&self) -> Vec<f64> {
        let logs: Vec<f64> = (0..=self.ceiling).map(|s| self.log_nu(s)).collect();
        let z = crate::hamiltonian::log_sum_exp(logs.iter().copied());
        logs.into_iter().map(|l| (l - z).exp()).collect()
    }

    /// Inverse-CDF move: down on `[0, d)`, up on `[1 - u, 1)`.
    #[inline]
    pub fn step_with(&self, s: usize, u: f64) -> usize {
        if u < self.down(s) {
            s - 1
        } else if u >= 1.0 - self.up(s) {
            s + 1
        } else {
            s
        }
    }
}

/// Size and temperature walk. Size moves are the 1D kernel at `beta_j`
/// scaled by `a`; temperature moves `j ± 1` each have proposal weight
/// `(1-a)/2` and the tempering acceptance.
#[derive(Clone, Debug)]
pub struct BirthDeath2d {
    n: usize,
    ladder: Ladder,
    levels: Vec<BirthDeath1d>,
    ceiling: usize,
}

/// Transition probabilities out of one grid state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Moves2d {
    pub size_down: f64,
    pub size_up: f64,
    pub temp_down: f64,
    pub temp_up: f64,
}

impl Moves2d {
    pub fn hold(&self) -> f64 {
        1.0 - self.size_down - self.size_up - self.temp_down - self.temp_up
    }
}

impl BirthDeath2d {
    pub fn new(n: usize, ladder: Ladder, eta: f64) -> Result<Self> {
        if !ladder.h().is_monotone() {
            return invalid("the two-dimensional walk requires a nondecreasing hamiltonian");
        }
        let levels = (0..=ladder.m())
            .map(|j| BirthDeath1d::new(n, ladder.level(j).clone(), eta))
            .collect::<Result<Vec<_>>>()?;
        let ceiling = levels[0].ceiling();
        Ok(Self {
            n,
            ladder,
            levels,
            ceiling,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.ladder.m()
    }

    pub fn ceiling(&self) -> usize {
        self.ceiling
    }

    pub fn ladder(&self) -> &Ladder {
        &self.ladder
    }

    pub fn moves(&self, s: usize, j: usize) -> Moves2d {
        let a = self.ladder.level_move_prob();
        let half = (1.0 - a) / 2.0;
        let bd = &self.levels[j];
        let temp = |to: usize| half * self.ladder.log_temperature_acceptance(j, to, s).exp();
        Moves2d {
            size_down: a * bd.down(s),
            size_up: a * bd.up(s),
            temp_down: if j > 0 { temp(j - 1) } else { 0.0 },
            temp_up: if j < self.m() { temp(j + 1) } else { 0.0 },
        }
    }

    /// Transition probability between two grid states.
    pub fn prob(&self, from: (usize, usize), to: (usize, usize)) -> f64 {
        let mv = self.moves(from.0, from.1);
        match (to.0 as i64 - from.0 as i64, to.1 as i64 - from.1 as i64) {
            (0, 0) => mv.hold(),
            (-1, 0) => mv.size_down,
            (1, 0) => mv.size_up,
            (0, -1) => mv.temp_down,
            (0, 1) => mv.temp_up,
            _ => 0.0,
        }
    }

    /// `log nu((s,j))` up to a constant:
    /// `-log Z_hat_j + log(n^s / (20^s s! 2^{C(s,2)})) + beta_j h_s`.
    pub fn log_nu(&self, s: usize, j: usize) -> f64 {
        -self.ladder.log_z_hat()[j] + self.levels[j].log_nu(s)
    }

    #[inline]
    fn step_with(&self, s: usize, j: usize, u: f64) -> (usize, usize) {
        let mv = self.moves(s, j);
        let mut c = mv.size_down;
        if u < c {
            return (s - 1, j);
        }
        c += mv.size_up;
        if u < c {
            return (s + 1, j);
        }
        c += mv.temp_down;
        if u < c {
            return (s, j - 1);
        }
        c += mv.temp_up;
        if u < c {
            return (s, j + 1);
        }
        (s, j)
    }
}

/// Output of a proxy-walk simulation.
#[derive(Clone, Debug, Serialize)]
pub struct WalkRecord {
    pub points: Vec<TrajectoryPoint>,
    pub steps_run: u64,
    pub first_hit_size: Option<u64>,
    pub first_hit_zero: Option<u64>,
    /// Visits after each step, indexed `s * (m + 1) + j`.
    pub occupation: Vec<u64>,
    pub temperatures: usize,
    pub final_size: usize,
    pub final_temp_index: usize,
}

impl WalkRecord {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "step,size,overlap,temp_index")?;
        for p in &self.points {
            writeln!(w, "{},{},{},{}", p.step, p.size, p.overlap, p.temp_index)?;
        }
        Ok(())
    }

    /// Empirical law over sizes (summed over temperatures).
    pub fn size_occupation(&self) -> Vec<f64> {
        let total = self.occupation.iter().sum::<u64>().max(1) as f64;
        self.occupation
            .chunks(self.temperatures)
            .map(|c| c.iter().sum::<u64>() as f64 / total)
            .collect()
    }

    pub fn grid_occupation(&self) -> Vec<f64> {
        let total = self.occupation.iter().sum::<u64>().max(1) as f64;
        self.occupation.iter().map(|&c| c as f64 / total).collect()
    }
}

fn simulate(
    n: usize,
    temps: usize,
    start: (usize, usize),
    cfg: &ChainConfig,
    mut step: impl FnMut(usize, usize, f64) -> (usize, usize),
) -> WalkRecord {
    let mut rng = ChainRng::new(cfg.seed);
    let (mut s, mut j) = start;
    let mut rec = Recorder::new(cfg.max_steps, cfg.thinning, cfg.size_target, None);
    let mut occupation = vec![0u64; (n + 1) * temps];
    let mut first_zero = (s == 0).then_some(0);
    rec.sample(0, s, 0, j);
    let on_target = rec.check_hits(0, s, 0) && cfg.stop_at_target;
    let mut t = 0;
    while !on_target && t < cfg.max_steps {
        t += 1;
        let (s2, j2) = step(s, j, rng.proposal.gen::<f64>());
        let moved = (s2, j2) != (s, j);
        (s, j) = (s2, j2);
        occupation[s * temps + j] += 1;
        if moved {
            if s == 0 && first_zero.is_none() {
                first_zero = Some(t);
            }
            if rec.check_hits(t, s, 0) && cfg.stop_at_target {
                rec.sample(t, s, 0, j);
                break;
            }
        }
        rec.sample(t, s, 0, j);
    }
    rec.finish(t, s, 0, j);
    WalkRecord {
        points: rec.points,
        steps_run: t,
        first_hit_size: rec.first_hit_size,
        first_hit_zero: first_zero,
        occupation,
        temperatures: temps,
        final_size: s,
        final_temp_index: j,
    }
}

/// Simulates the 1D walk from `start_size`.
pub fn run_birth_death_1d(
    n: usize,
    ctx: &GibbsContext,
    eta: f64,
    start_size: usize,
    cfg: &ChainConfig,
) -> Result<WalkRecord> {
    cfg.expect(Dynamics::BirthDeath1d)?;
    let bd = BirthDeath1d::new(n, ctx.clone(), eta)?;
    if start_size > n {
        return invalid(format!("start size {start_size} beyond n = {n}"));
    }
    Ok(simulate(n, 1, (start_size, 0), cfg, |s, _, u| {
        (bd.step_with(s, u), 0)
    }))
}

/// Simulates the 2D walk from `(size, temp_index)`.
pub fn run_birth_death_2d(
    n: usize,
    ladder: &Ladder,
    eta: f64,
    start: (usize, usize),
    cfg: &ChainConfig,
) -> Result<WalkRecord> {
    cfg.expect(Dynamics::BirthDeath2d)?;
    let bd = BirthDeath2d::new(n, ladder.clone(), eta)?;
    if start.0 > n || start.1 > bd.m() {
        return invalid(format!("start {start:?} outside the grid"));
    }
    Ok(simulate(n, bd.m() + 1, start, cfg, |s, j, u| {
        bd.step_with(s, j, u)
    }))
}

/// Convenience: steps until the 1D walk first reaches 0 (None if not by
/// `max_steps`).
pub fn hitting_time_to_zero(
    n: usize,
    ctx: &GibbsContext,
    eta: f64,
    start_size: usize,
    max_steps: u64,
    seed: u64,
) -> Result<Option<u64>> {
    let bd = BirthDeath1d::new(n, ctx.clone(), eta)?;
    let mut rng = ChainRng::new(seed);
    let mut s = start_size.min(n);
    for t in 0..=max_steps {
        if s == 0 {
            return Ok(Some(t));
        }
        if t < max_steps {
            s = bd.step_with(s, rng.proposal.gen::<f64>());
        }
    }
    Ok(None)
}
