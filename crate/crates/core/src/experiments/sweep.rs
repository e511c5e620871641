use super::plan::{
    graph_seed, trial_seed, Cell, CellKind, ExperimentPlan, HamiltonianChoice, LogZChoice,
    SCHEMA_VERSION,
};
use crate::analytics::expected_census;
use crate::chains::{
    run_greedy, run_metropolis, run_st, ChainConfig, CliqueState, Dynamics, Ladder, Thinning,
};
use crate::error::{Error, Result};
use crate::exact::{census_of, partition_functions, DEFAULT_BUDGET};
use crate::graph::PlantedGraph;
use crate::hamiltonian::{log_sum_exp, GibbsContext, HamiltonianSpec};
use crate::rng::PRNG_ALGORITHM;
use rayon::prelude::*;
use serde::Serialize;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::time::Instant;

/// Environment variable overriding the worker count.
pub const THREADS_ENV: &str = "PCLAB_THREADS";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialRow {
    pub cell: usize,
    pub trial: usize,
    pub seed: u64,
    pub graph_seed: u64,
    pub steps_run: u64,
    pub first_hit_size: Option<u64>,
    pub first_hit_overlap: Option<u64>,
    pub final_size: usize,
    pub final_overlap: usize,
    pub final_temp_index: usize,
    pub removals: u64,
    pub topk_overlap: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellSummary {
    pub cell: Cell,
    pub trials: usize,
    pub size_target: usize,
    pub overlap_target: usize,
    pub size_hits: usize,
    pub overlap_hits: usize,
    pub size_hit_fraction: f64,
    pub overlap_hit_fraction: f64,
    /// Median over trials that hit; censored trials are excluded, not imputed.
    pub median_first_hit_size: Option<f64>,
    pub median_first_hit_overlap: Option<f64>,
    pub censored_size: usize,
    pub censored_overlap: usize,
    pub mean_final_size: f64,
    pub mean_final_overlap: f64,
    pub mean_topk_overlap: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepResult {
    pub schema_version: u32,
    pub name: String,
    pub config_hash: String,
    pub prng: &'static str,
    pub master_seed: u64,
    pub cells: Vec<CellSummary>,
    pub trials: Vec<TrialRow>,
    /// Not written to the deterministic outputs.
    #[serde(skip)]
    pub wall_clock_seconds: f64,
    #[serde(skip)]
    pub threads: usize,
}

fn median(mut v: Vec<u64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_unstable();
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m] as f64
    } else {
        (v[m - 1] as f64 + v[m] as f64) / 2.0
    })
}

fn targets(plan: &ExperimentPlan, n: usize) -> (usize, usize) {
    let l = crate::log2n(n);
    (
        ((1.0 + plan.eps) * l).ceil() as usize,
        (plan.gamma * l).ceil() as usize,
    )
}

fn hamiltonian(plan: &ExperimentPlan, n: usize) -> Result<HamiltonianSpec> {
    match &plan.hamiltonian {
        HamiltonianChoice::Identity => HamiltonianSpec::identity(n),
        HamiltonianChoice::Values(v) => HamiltonianSpec::custom(v.clone(), n),
    }
}

/// `ln sum_{q,r} E[W_{q,r}] e^{beta h_q}`.
pub fn expected_log_partition(n: usize, k: usize, ctx: &GibbsContext) -> f64 {
    let mut terms = Vec::new();
    for q in 0..=n {
        for r in q.saturating_sub(n - k)..=q.min(k) {
            if let Ok(l) = expected_census(n as u64, k as u64, q as u64, r as u64) {
                terms.push(l + ctx.log_weight(q));
            }
        }
    }
    log_sum_exp(terms)
}

fn build_ladder(plan: &ExperimentPlan, g: &PlantedGraph, h: &HamiltonianSpec) -> Result<Ladder> {
    let n = g.n();
    let betas: Vec<f64> = plan
        .ladder
        .iter()
        .map(|b| {
            b.resolve(n)
                .ok_or_else(|| Error::InvalidParameter("ladder entries must be finite".into()))
        })
        .collect::<Result<_>>()?;
    let log_z = match &plan.ladder_log_z {
        LogZChoice::Values(v) => v.clone(),
        LogZChoice::Expected => betas
            .iter()
            .map(|&b| {
                Ok(expected_log_partition(
                    n,
                    g.k(),
                    &GibbsContext::new(b, h.clone())?,
                ))
            })
            .collect::<Result<_>>()?,
        LogZChoice::Exact => {
            let c = census_of(g, DEFAULT_BUDGET)?;
            betas
                .iter()
                .map(|&b| Ok(partition_functions(&c, &GibbsContext::new(b, h.clone())?).log_z))
                .collect::<Result<_>>()?
        }
    };
    Ladder::new(betas, log_z, plan.level_move_prob, h.clone())
}

fn run_trial(plan: &ExperimentPlan, cell: &Cell, trial: usize) -> Result<TrialRow> {
    let seed = trial_seed(plan.master_seed, cell.index, trial);
    let gseed = graph_seed(plan.master_seed, cell.n, cell.k, trial);
    let g = PlantedGraph::generate(cell.n, cell.k, gseed)?;
    let (_, topk_overlap) = g.top_k_degrees();
    let mut row = TrialRow {
        cell: cell.index,
        trial,
        seed,
        graph_seed: gseed,
        steps_run: 0,
        first_hit_size: None,
        first_hit_overlap: None,
        final_size: 0,
        final_overlap: 0,
        final_temp_index: 0,
        removals: 0,
        topk_overlap,
    };
    let dynamics = match cell.kind {
        CellKind::TopK => {
            row.final_size = cell.k;
            row.final_overlap = topk_overlap;
            return Ok(row);
        }
        CellKind::Chain(d) => d,
    };
    let (st, ot) = targets(plan, cell.n);
    let mut cfg = ChainConfig::new(dynamics, plan.steps, seed).with_thinning(Thinning::Off);
    cfg.size_target = Some(st);
    cfg.overlap_target = Some(ot);
    cfg.stop_at_target = plan.stop_at_target;
    let h = hamiltonian(plan, cell.n)?;
    let start = CliqueState::empty(cell.n);
    let rec = match dynamics {
        Dynamics::Metropolis => {
            let beta = cell
                .beta
                .and_then(|b| b.resolve(cell.n))
                .expect("validated beta");
            run_metropolis(&g, &GibbsContext::new(beta, h)?, start, &cfg)?
        }
        Dynamics::Greedy => run_greedy(&g, start, &cfg)?,
        Dynamics::SimulatedTempering => run_st(&g, &build_ladder(plan, &g, &h)?, start, 0, &cfg)?,
        d => {
            return Err(Error::InvalidParameter(format!(
                "{d:?} is not a graph dynamics"
            )))
        }
    };
    row.steps_run = rec.steps_run;
    row.first_hit_size = rec.first_hit_size;
    row.first_hit_overlap = rec.first_hit_overlap;
    row.final_size = rec.final_state.size();
    row.final_overlap = rec.final_state.pc_overlap();
    row.final_temp_index = rec.final_temp_index;
    row.removals = rec.removals_count;
    Ok(row)
}

fn summarise(plan: &ExperimentPlan, cell: &Cell, rows: &[TrialRow]) -> CellSummary {
    let (size_target, overlap_target) = targets(plan, cell.n);
    let t = rows.len();
    let hits_s: Vec<u64> = rows.iter().filter_map(|r| r.first_hit_size).collect();
    let hits_o: Vec<u64> = rows.iter().filter_map(|r| r.first_hit_overlap).collect();
    let mean = |f: &dyn Fn(&TrialRow) -> usize| {
        if t == 0 {
            0.0
        } else {
            rows.iter().map(f).sum::<usize>() as f64 / t as f64
        }
    };
    let frac = |h: usize| if t == 0 { 0.0 } else { h as f64 / t as f64 };
    CellSummary {
        cell: cell.clone(),
        trials: t,
        size_target,
        overlap_target,
        size_hits: hits_s.len(),
        overlap_hits: hits_o.len(),
        size_hit_fraction: frac(hits_s.len()),
        overlap_hit_fraction: frac(hits_o.len()),
        censored_size: t - hits_s.len(),
        censored_overlap: t - hits_o.len(),
        median_first_hit_size: median(hits_s),
        median_first_hit_overlap: median(hits_o),
        mean_final_size: mean(&|r| r.final_size),
        mean_final_overlap: mean(&|r| r.final_overlap),
        mean_topk_overlap: mean(&|r| r.topk_overlap),
    }
}

pub fn resolve_threads(plan_threads: usize) -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .unwrap_or(plan_threads)
}

/// Runs every `(cell, trial)` pair on `threads` workers (0 = all cores).
/// Results are merged by `(cell, trial)`, so they do not depend on the
/// worker count.
pub fn execute(plan: &ExperimentPlan, threads: usize) -> Result<SweepResult> {
    plan.validate()?;
    let started = Instant::now();
    let cells = plan.cells();
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..plan.trials).map(move |t| (c, t)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let rows: Vec<TrialRow> = pool.install(|| {
        jobs.par_iter()
            .map(|&(c, t)| run_trial(plan, &cells[c], t))
            .collect::<Result<Vec<_>>>()
    })?;
    let summaries = cells
        .iter()
        .map(|cell| {
            let lo = cell.index * plan.trials;
            summarise(plan, cell, &rows[lo..lo + plan.trials])
        })
        .collect();
    Ok(SweepResult {
        schema_version: SCHEMA_VERSION,
        name: plan.name.clone(),
        config_hash: plan.config_hash(),
        prng: PRNG_ALGORITHM,
        master_seed: plan.master_seed,
        cells: summaries,
        trials: rows,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        threads: pool.current_num_threads(),
    })
}

fn opt<T: std::fmt::Display>(x: Option<T>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}

/// Output files of a sweep directory.
pub struct SweepFiles {
    trials: BufWriter<File>,
    cells: BufWriter<File>,
    summary: BufWriter<File>,
    timing: BufWriter<File>,
}

impl SweepFiles {
    /// Creates (truncating) every output file up front.
    pub fn create(dir: &std::path::Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        let open = |name: &str| -> Result<BufWriter<File>> {
            Ok(BufWriter::new(File::create(dir.join(name))?))
        };
        Ok(Self {
            trials: open("trials.csv")?,
            cells: open("cells.csv")?,
            summary: open("summary.json")?,
            timing: open("timing.json")?,
        })
    }

    pub fn write(mut self, plan: &ExperimentPlan, res: &SweepResult) -> Result<()> {
        let hash = &res.config_hash;
        let labels: Vec<(String, String)> = res
            .cells
            .iter()
            .map(|c| {
                (
                    c.cell.kind.label().to_string(),
                    c.cell.beta.map(|b| b.label()).unwrap_or_default(),
                )
            })
            .collect();
        writeln!(
            self.trials,
            "cell,trial,n,k,dynamics,beta,seed,graph_seed,config_hash,steps_run,first_hit_size,first_hit_overlap,final_size,final_overlap,final_temp_index,removals,topk_overlap"
        )?;
        for r in &res.trials {
            let c = &res.cells[r.cell].cell;
            let (kind, beta) = &labels[r.cell];
            writeln!(
                self.trials,
                "{},{},{},{},{kind},{beta},{},{},{hash},{},{},{},{},{},{},{},{}",
                r.cell,
                r.trial,
                c.n,
                c.k,
                r.seed,
                r.graph_seed,
                r.steps_run,
                opt(r.first_hit_size),
                opt(r.first_hit_overlap),
                r.final_size,
                r.final_overlap,
                r.final_temp_index,
                r.removals,
                r.topk_overlap
            )?;
        }
        writeln!(
            self.cells,
            "cell,n,k,dynamics,beta,trials,size_target,overlap_target,size_hit_fraction,overlap_hit_fraction,median_first_hit_size,median_first_hit_overlap,censored_size,censored_overlap,mean_final_size,mean_final_overlap,mean_topk_overlap,master_seed,config_hash"
        )?;
        for s in &res.cells {
            let (kind, beta) = &labels[s.cell.index];
            writeln!(
                self.cells,
                "{},{},{},{kind},{beta},{},{},{},{},{},{},{},{},{},{},{},{},{},{hash}",
                s.cell.index,
                s.cell.n,
                s.cell.k,
                s.trials,
                s.size_target,
                s.overlap_target,
                s.size_hit_fraction,
                s.overlap_hit_fraction,
                opt(s.median_first_hit_size),
                opt(s.median_first_hit_overlap),
                s.censored_size,
                s.censored_overlap,
                s.mean_final_size,
                s.mean_final_overlap,
                s.mean_topk_overlap,
                res.master_seed
            )?;
        }
        let summary = serde_json::json!({
            "schema_version": res.schema_version,
            "name": res.name,
            "config_hash": res.config_hash,
            "prng": res.prng,
            "master_seed": res.master_seed,
            "plan": plan,
            "cells": res.cells,
        });
        serde_json::to_writer_pretty(&mut self.summary, &summary)?;
        writeln!(self.summary)?;
        let timing = serde_json::json!({
            "schema_version": res.schema_version,
            "config_hash": res.config_hash,
            "threads": res.threads,
            "wall_clock_seconds": res.wall_clock_seconds,
        });
        serde_json::to_writer_pretty(&mut self.timing, &timing)?;
        writeln!(self.timing)?;
        for w in [
            &mut self.trials,
            &mut self.cells,
            &mut self.summary,
            &mut self.timing,
        ] {
            w.flush()?;
        }
        Ok(())
    }
}

/// Validates, opens the outputs (failing before any compute if they cannot
/// be written), runs the sweep and writes `trials.csv`, `cells.csv`,
/// `summary.json` and `timing.json`.
pub fn run_sweep(plan: &ExperimentPlan) -> Result<SweepResult> {
    plan.validate()?;
    let files = SweepFiles::create(&plan.out_dir)?;
    let res = execute(plan, resolve_threads(plan.threads))?;
    files.write(plan, &res)?;
    Ok(res)
}
