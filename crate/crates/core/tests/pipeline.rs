//! End-to-end sweep runs from a plan file on disk.

use pclab::chains::{run_metropolis, run_st, ChainConfig, CliqueState, Dynamics, Ladder, Thinning};
use pclab::experiments::{graph_seed, run_sweep, ExperimentPlan};
use pclab::{GibbsContext, HamiltonianSpec, PlantedGraph};
use std::collections::HashMap;
use std::path::Path;

fn write_plan(dir: &Path, seed: u64) -> ExperimentPlan {
    let text = format!(
        r#"
schema_version = 1
name = "pipeline"
master_seed = {seed}
out_dir = "{}"
threads = 1
n = [40, 64]
alpha = 0.5
dynamics = ["metropolis", "greedy", "st", "top_k"]
beta = [0, "ln_n"]
ladder = [0, 0.5, 1.0]
ladder_log_z = "exact"
steps = 5000
trials = 3
"#,
        dir.join("out").display()
    );
    let path = dir.join("plan.toml");
    std::fs::write(&path, text).unwrap();
    ExperimentPlan::load(&path).unwrap()
}

fn read(dir: &Path, f: &str) -> String {
    std::fs::read_to_string(dir.join("out").join(f)).unwrap()
}

#[test]
fn sweep_writes_every_file_and_is_reproducible() {
    let d = tempfile::tempdir().unwrap();
    let plan = write_plan(d.path(), 5);
    let res = run_sweep(&plan).unwrap();
    // 2 sizes x (2 betas x metropolis + greedy + st + top_k)
    assert_eq!(res.cells.len(), 2 * 5);
    assert_eq!(res.trials.len(), 2 * 5 * 3);
    for f in ["trials.csv", "cells.csv", "summary.json", "timing.json"] {
        assert!(d.path().join("out").join(f).exists(), "{f} missing");
    }
    let trials = read(d.path(), "trials.csv");
    assert_eq!(trials.lines().count(), 1 + res.trials.len());
    assert!(trials.lines().skip(1).all(|l| l.contains(&res.config_hash)));
    let summary: serde_json::Value = serde_json::from_str(&read(d.path(), "summary.json")).unwrap();
    assert_eq!(summary["config_hash"], res.config_hash.as_str());
    assert_eq!(summary["master_seed"], 5);

    let first = (
        trials,
        read(d.path(), "cells.csv"),
        read(d.path(), "summary.json"),
    );
    run_sweep(&plan).unwrap();
    let again = (
        read(d.path(), "trials.csv"),
        read(d.path(), "cells.csv"),
        read(d.path(), "summary.json"),
    );
    assert_eq!(first, again);

    let other = write_plan(d.path(), 6);
    run_sweep(&other).unwrap();
    assert_ne!(first.0, read(d.path(), "trials.csv"));
}

#[test]
fn graphs_are_shared_across_dynamics() {
    let d = tempfile::tempdir().unwrap();
    let plan = write_plan(d.path(), 11);
    let res = run_sweep(&plan).unwrap();
    let mut by_key: HashMap<(usize, usize), u64> = HashMap::new();
    for t in &res.trials {
        let c = &res.cells[t.cell].cell;
        assert_eq!(
            t.graph_seed,
            graph_seed(plan.master_seed, c.n, c.k, t.trial)
        );
        let prev = *by_key.entry((c.n, t.trial)).or_insert(t.graph_seed);
        assert_eq!(prev, t.graph_seed);
    }
    let seeds: std::collections::HashSet<u64> = res.trials.iter().map(|t| t.seed).collect();
    assert_eq!(
        seeds.len(),
        res.trials.len(),
        "trial seeds must be distinct"
    );
}

#[test]
fn trajectories_are_reproducible_and_well_formed() {
    let g = PlantedGraph::generate(64, 8, 3).unwrap();
    let h = HamiltonianSpec::identity(64).unwrap();
    let ctx = GibbsContext::new(1.0, h.clone()).unwrap();
    let cfg = ChainConfig::new(Dynamics::Metropolis, 20_000, 17)
        .with_log_targets(64, 0.0, 0.5)
        .unwrap()
        .with_thinning(Thinning::Every(100));
    let a = run_metropolis(&g, &ctx, CliqueState::empty(64), &cfg).unwrap();
    let b = run_metropolis(&g, &ctx, CliqueState::empty(64), &cfg).unwrap();
    let (mut ca, mut cb) = (Vec::new(), Vec::new());
    a.write_csv(&mut ca).unwrap();
    b.write_csv(&mut cb).unwrap();
    assert_eq!(ca, cb);
    let text = String::from_utf8(ca).unwrap();
    assert_eq!(text.lines().next(), Some("step,size,overlap,temp_index"));
    let steps: Vec<u64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert!(steps.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(*steps.last().unwrap(), a.steps_run);

    let ladder = Ladder::new(vec![0.0, 0.5, 1.0], vec![0.0, 2.0, 4.5], 0.5, h).unwrap();
    let st_cfg = ChainConfig::new(Dynamics::SimulatedTempering, 20_000, 17)
        .with_thinning(Thinning::Every(50));
    let s = run_st(&g, &ladder, CliqueState::empty(64), 0, &st_cfg).unwrap();
    assert!(s.points.iter().all(|p| p.temp_index <= 2));
    assert!(s.final_state.is_consistent(&g));
}
