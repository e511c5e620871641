use super::birth_death::BirthDeath1d;
use super::CliqueState;
use crate::error::{invalid, Result};
use crate::graph::PlantedGraph;
use crate::hamiltonian::GibbsContext;
use crate::rng::{derive_seed, prng};
use rand::Rng;
use serde::Serialize;

/// A visited clique of size at most the ceiling with too few common
/// neighbours; the coupling is undefined from there on.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PreconditionFailure {
    pub trial: usize,
    pub step: u64,
    pub size: usize,
    pub common_neighbors: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct DominanceReport {
    pub n: usize,
    pub eta: f64,
    pub ceiling: usize,
    pub trials: usize,
    pub steps: u64,
    pub seed: u64,
    /// Steps (over all trials) with `Y_t > |X_t|`.
    pub violations: u64,
    pub precondition_failures: Vec<PreconditionFailure>,
    /// Smallest `|X_t| - Y_t` seen.
    pub min_gap: i64,
    pub mean_final_clique_size: f64,
    pub mean_final_walk_size: f64,
}

impl DominanceReport {
    pub fn status(&self) -> &'static str {
        if !self.precondition_failures.is_empty() {
            "COUPLING_PRECONDITION_FAILED"
        } else if self.violations > 0 {
            "DOMINANCE_VIOLATED"
        } else {
            "OK"
        }
    }

    pub fn passed(&self) -> bool {
        self.status() == "OK"
    }
}

/// Runs the Metropolis chain `X` and the birth-death walk `Y` under a shared
/// uniform per step: both move down on `[0, d)` and up on `[1 - u, 1)`, where
/// `d`, `u` are each chain's own down/up probabilities. Whenever
/// `|X| = Y` the down probabilities agree and the expansion bound gives
/// `u_X >= u_Y`, so `Y` can only move up together with `X`.
///
/// `X`'s marginal is the Metropolis kernel: a down move removes a uniform
/// member, an up move adds a uniform element of `A(X)`.
pub fn check_dominance(
    g: &PlantedGraph,
    ctx: &GibbsContext,
    eta: f64,
    start: &CliqueState,
    steps: u64,
    trials: usize,
    seed: u64,
) -> Result<DominanceReport> {
    let n = g.n();
    let bd = BirthDeath1d::new(n, ctx.clone(), eta)?;
    if !start.is_consistent(g) {
        return invalid("start is not a clique of the graph");
    }
    let ceiling = bd.ceiling();
    let mut report = DominanceReport {
        n,
        eta,
        ceiling,
        trials,
        steps,
        seed,
        violations: 0,
        precondition_failures: Vec::new(),
        min_gap: 0,
        mean_final_clique_size: 0.0,
        mean_final_walk_size: 0.0,
    };
    let mut min_gap = i64::MAX;
    for trial in 0..trials {
        let mut rng = prng(derive_seed(seed, &[trial as u64]));
        let mut x = start.clone();
        let mut y = start.size();
        min_gap = min_gap.min(0);
        'run: for t in 1..=steps {
            let s = x.size();
            let common = g.common_neighbors(x.members());
            let a = common.len();
            if s <= ceiling && (a as f64) * 20.0 * (s as f64).exp2() < n as f64 {
                report.precondition_failures.push(PreconditionFailure {
                    trial,
                    step: t - 1,
                    size: s,
                    common_neighbors: a,
                });
                break 'run;
            }
            let d_x = bd.down(s);
            let u_x = if s < n {
                a as f64 / n as f64 * ctx.log_acceptance_unchecked(s, s + 1).exp()
            } else {
                0.0
            };
            let u: f64 = rng.gen();
            if u < d_x {
                let v = x.members().nth(rng.gen_range(0..s)).expect("member");
                x.remove(g, v);
            } else if u >= 1.0 - u_x {
                let v = common.nth(rng.gen_range(0..a)).expect("common neighbour");
                x.add(g, v);
            }
            y = bd.step_with(y, u);
            debug_assert!(x.is_consistent(g));
            let gap = x.size() as i64 - y as i64;
            if gap < 0 {
                report.violations += 1;
            }
            min_gap = min_gap.min(gap);
        }
        report.mean_final_clique_size += x.size() as f64;
        report.mean_final_walk_size += y as f64;
    }
    if trials > 0 {
        report.mean_final_clique_size /= trials as f64;
        report.mean_final_walk_size /= trials as f64;
    }
    report.min_gap = if min_gap == i64::MAX { 0 } else { min_gap };
    Ok(report)
}
