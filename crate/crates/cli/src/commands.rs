use crate::{BottleneckKind, Cli, Command, GraphArgs, ModelArgs, RunArgs, RunDynamics};
use pclab::chains::{
    run_birth_death_1d, run_birth_death_2d, run_greedy, run_metropolis, run_st, ChainConfig,
    CliqueState, Dynamics, Ladder, Thinning,
};
use pclab::exact::{
    bottleneck_ratio_intersection, bottleneck_ratio_large_clique, census_of, compute_gateways,
    enumerate_cliques, expected_hitting_time, partition_functions,
};
use pclab::experiments::{
    execute, expected_log_partition, k_from_alpha, resolve_threads, run_verify, BetaSpec,
    ExperimentPlan, SweepFiles,
};
use pclab::rng::{derive_seed, stream, PRNG_ALGORITHM};
use pclab::{analytics, Error, GibbsContext, HamiltonianSpec, PlantedGraph, Result};
use serde_json::json;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

const DEFAULT_SEED: u64 = 1;

pub fn dispatch(cli: &Cli) -> Result<()> {
    let seed = cli.seed.unwrap_or(DEFAULT_SEED);
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Generate { graph } => {
            let g = load_graph(graph, seed)?;
            with_output(out, |w| g.write_text(w))
        }
        Command::Run(args) => run(cli, args, seed),
        Command::Sweep { threads } => sweep(cli, *threads),
        Command::Census { graph, budget } => {
            let g = load_graph(graph, seed)?;
            let c = census_of(&g, *budget)?;
            with_output(out, |w| c.write_csv(w))
        }
        Command::Bottleneck { kind } => bottleneck(kind, seed, out),
        Command::Gateways { graph, q, budget } => {
            let g = load_graph(graph, seed)?;
            let idx = enumerate_cliques(&g, None, *budget)?;
            let gw = compute_gateways(&idx, &g, *q)?;
            with_output(out, |w| {
                writeln!(w, "index,size,overlap,gateway,vertices")?;
                for (i, is) in gw.iter().enumerate() {
                    let vs: Vec<String> = idx.clique(i).iter().map(|v| v.to_string()).collect();
                    writeln!(
                        w,
                        "{i},{},{},{},{}",
                        idx.size(i),
                        idx.overlap(i),
                        u8::from(*is),
                        vs.join(" ")
                    )?;
                }
                Ok(())
            })
        }
        Command::HittingTime {
            graph,
            model,
            target_size,
            target_overlap,
            budget,
        } => {
            let g = load_graph(graph, seed)?;
            let ctx = context(model, g.n())?;
            let idx = enumerate_cliques(&g, None, *budget)?;
            let (ts, to) = match (target_size, target_overlap) {
                (None, None) => return invalid("give --target-size and/or --target-overlap"),
                (s, o) => (s.unwrap_or(usize::MAX), o.unwrap_or(usize::MAX)),
            };
            let t = expected_hitting_time(&idx, &g, &ctx, idx.empty_index(), |i| {
                idx.size(i) >= ts || idx.overlap(i) >= to
            })?;
            let report = json!({
                "n": g.n(), "k": g.k(), "seed": g.seed(), "beta": ctx.beta,
                "target_size": target_size, "target_overlap": target_overlap,
                "states": idx.len(), "expected_steps": t,
            });
            write_json(out, &report)
        }
        Command::Verify { fixtures } => {
            let suites = run_verify(fixtures)?;
            let mut all = true;
            for s in &suites {
                println!(
                    "{} {}: {}",
                    if s.passed { "PASS" } else { "FAIL" },
                    s.name,
                    s.detail
                );
                all &= s.passed;
            }
            if let Some(p) = out {
                write_json(Some(p), &serde_json::to_value(&suites)?)?;
            }
            if all {
                Ok(())
            } else {
                Err(Error::InvalidState("invariant suite failed".into()))
            }
        }
        Command::Predict {
            alpha,
            rho,
            gamma,
            n,
            k,
            q_max,
        } => match (alpha, rho, gamma, n, k) {
            (Some(a), Some(r), Some(g), None, None) => {
                let e = analytics::asymptotic_exponent(*a, *r, *g);
                with_output(out, |w| Ok(writeln!(w, "{e}")?))
            }
            (None, None, None, Some(n), Some(k)) => {
                let t = analytics::MomentTable::build(*n, *k, *q_max)?;
                with_output(out, |w| t.write_csv(w, true))
            }
            _ => invalid("predict takes either --alpha --rho --gamma or --n --k [--q-max]"),
        },
    }
}

fn invalid<T>(msg: &str) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}

fn with_output(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            f(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            f(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn write_json(path: Option<&Path>, v: &serde_json::Value) -> Result<()> {
    with_output(path, |mut w| {
        serde_json::to_writer_pretty(&mut w, v)?;
        writeln!(w)?;
        Ok(())
    })
}

fn load_graph(a: &GraphArgs, seed: u64) -> Result<PlantedGraph> {
    if let Some(p) = &a.graph {
        return PlantedGraph::read_text(io::BufReader::new(File::open(p)?));
    }
    let n =
        a.n.ok_or_else(|| Error::InvalidParameter("--n is required".into()))?;
    let k = match (a.k, a.alpha) {
        (Some(k), _) => k,
        (None, Some(al)) => k_from_alpha(n, al),
        (None, None) => 0,
    };
    PlantedGraph::generate(n, k, seed)
}

fn hamiltonian(spec: Option<&str>, n: usize) -> Result<HamiltonianSpec> {
    match spec {
        None | Some("identity") => HamiltonianSpec::identity(n),
        Some(list) => HamiltonianSpec::custom(parse_list(list)?, n),
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("not a number: `{x}`")))
        })
        .collect()
}

fn resolve_beta(s: &str, n: usize) -> Result<Option<f64>> {
    Ok(BetaSpec::parse(s)?.resolve(n))
}

fn context(m: &ModelArgs, n: usize) -> Result<GibbsContext> {
    let beta = resolve_beta(&m.beta, n)?
        .ok_or_else(|| Error::InvalidParameter("beta must be finite here".into()))?;
    GibbsContext::new(beta, hamiltonian(m.hamiltonian.as_deref(), n)?)
}

fn bottleneck(kind: &BottleneckKind, seed: u64, out: Option<&Path>) -> Result<()> {
    match kind {
        BottleneckKind::Intersection {
            graph,
            model,
            r,
            budget,
        } => {
            let g = load_graph(graph, seed)?;
            let ctx = context(model, g.n())?;
            let c = census_of(&g, *budget)?;
            let pf = partition_functions(&c, &ctx);
            let ratio = bottleneck_ratio_intersection(&pf, *r);
            write_json(
                out,
                &json!({
                    "n": g.n(), "k": g.k(), "seed": g.seed(), "beta": ctx.beta, "r": r,
                    "log_ratio": finite_or_str(ratio),
                    "log_z": pf.log_z,
                    "cliques": c.total,
                }),
            )
        }
        BottleneckKind::LargeClique {
            graph,
            model,
            q,
            p,
            r,
            budget,
        } => {
            let g = load_graph(graph, seed)?;
            let ctx = context(model, g.n())?;
            let idx = enumerate_cliques(&g, None, *budget)?;
            let rep = bottleneck_ratio_large_clique(&idx, &g, &ctx, *q, *p, *r)?;
            write_json(
                out,
                &json!({
                    "q": rep.q, "p": rep.p, "r": rep.r,
                    "log_ratio": finite_or_str(rep.log_ratio),
                    "size_b": rep.size_b, "size_a": rep.size_a,
                    "claims_verified": rep.claims_verified,
                    "claims": rep.claims,
                    "n": g.n(), "k": g.k(), "seed": g.seed(), "beta": ctx.beta,
                }),
            )
        }
    }
}

/// JSON has no infinities; write them as strings.
fn finite_or_str(x: f64) -> serde_json::Value {
    if x.is_finite() {
        json!(x)
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

fn sweep(cli: &Cli, threads: Option<usize>) -> Result<()> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| Error::InvalidParameter("sweep needs --config <file>".into()))?;
    let mut plan = ExperimentPlan::load(path)?;
    if let Some(s) = cli.seed {
        plan.master_seed = s;
    }
    if let Some(o) = &cli.out {
        plan.out_dir = o.clone();
    }
    if let Some(t) = threads {
        plan.threads = t;
    }
    plan.validate()?;
    let files = SweepFiles::create(&plan.out_dir)?;
    let res = execute(&plan, resolve_threads(plan.threads))?;
    files.write(&plan, &res)?;
    eprintln!(
        "{} cells x {} trials -> {} ({:.1}s)",
        res.cells.len(),
        plan.trials,
        plan.out_dir.display(),
        res.wall_clock_seconds
    );
    Ok(())
}

/// `run` options merged from --config (TOML keys named like the flags,
/// with `-` or `_`) and the command line, flags winning.
fn merged_run_args(cli: &Cli, args: &RunArgs) -> Result<RunArgs> {
    let mut a = args.clone();
    let Some(path) = &cli.config else {
        return Ok(a);
    };
    let text = std::fs::read_to_string(path)?;
    let table: toml_table::Table = toml_table::parse(&text)?;
    for (key, value) in table {
        let key = key.replace('-', "_");
        let s = value.clone();
        let num = || {
            s.parse::<f64>()
                .map_err(|_| Error::Parse(format!("{key}: not a number")))
        };
        let int = || {
            s.parse::<u64>()
                .map_err(|_| Error::Parse(format!("{key}: not an integer")))
        };
        match key.as_str() {
            "n" => a.graph.n = a.graph.n.or(Some(int()? as usize)),
            "k" => a.graph.k = a.graph.k.or(Some(int()? as usize)),
            "alpha" => a.graph.alpha = a.graph.alpha.or(Some(num()?)),
            "graph" => a.graph.graph = a.graph.graph.clone().or(Some(s.clone().into())),
            "dynamics" => {
                if a.dynamics.is_none() {
                    a.dynamics = Some(match Dynamics::parse(&s)? {
                        Dynamics::Metropolis => RunDynamics::Metropolis,
                        Dynamics::Greedy => RunDynamics::Greedy,
                        Dynamics::SimulatedTempering => RunDynamics::St,
                        Dynamics::BirthDeath1d => RunDynamics::Bd1d,
                        Dynamics::BirthDeath2d => RunDynamics::Bd2d,
                    })
                }
            }
            "beta" => a.beta = a.beta.clone().or(Some(s.clone())),
            "hamiltonian" => a.hamiltonian = a.hamiltonian.clone().or(Some(s.clone())),
            "steps" => a.steps = a.steps.or(Some(int()?)),
            "eps" => a.eps = a.eps.or(Some(num()?)),
            "gamma" => a.gamma = a.gamma.or(Some(num()?)),
            "ladder" => a.ladder = a.ladder.clone().or(Some(s.clone())),
            "ladder_log_z" => a.ladder_log_z = a.ladder_log_z.clone().or(Some(s.clone())),
            "a" | "level_move_prob" => a.a = a.a.or(Some(num()?)),
            "eta" => a.eta = a.eta.or(Some(num()?)),
            "start_size" => a.start_size = a.start_size.or(Some(int()? as usize)),
            "chain_seed" => a.chain_seed = a.chain_seed.or(Some(int()?)),
            "thin" => a.thin = a.thin.or(Some(int()?)),
            other => {
                return Err(Error::Parse(format!(
                    "unknown key `{other}` in {}",
                    path.display()
                )))
            }
        }
    }
    Ok(a)
}

/// Minimal flat `key = value` reader built on the `toml` crate.
mod toml_table {
    use pclab::{Error, Result};

    pub type Table = Vec<(String, String)>;

    pub fn parse(text: &str) -> Result<Table> {
        let v: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
        v.into_iter()
            .map(|(k, v)| {
                let s = match v {
                    toml::Value::String(s) => s,
                    toml::Value::Integer(i) => i.to_string(),
                    toml::Value::Float(f) => f.to_string(),
                    toml::Value::Boolean(b) => b.to_string(),
                    toml::Value::Array(items) => items
                        .iter()
                        .map(|x| match x {
                            toml::Value::String(s) => s.clone(),
                            other => other.to_string(),
                        })
                        .collect::<Vec<_>>()
                        .join(","),
                    other => return Err(Error::Parse(format!("{k}: unsupported value {other}"))),
                };
                Ok((k, s))
            })
            .collect()
    }
}

/// Builds the ladder; `g` is needed only for `--ladder-log-z exact`.
fn ladder_from(
    a: &RunArgs,
    n: usize,
    k: usize,
    g: Option<&PlantedGraph>,
    h: &HamiltonianSpec,
) -> Result<Ladder> {
    let text = a
        .ladder
        .as_deref()
        .ok_or_else(|| Error::InvalidParameter("--ladder is required".into()))?;
    let betas = text
        .split(',')
        .map(|b| {
            resolve_beta(b, n)?
                .ok_or_else(|| Error::InvalidParameter("ladder must be finite".into()))
        })
        .collect::<Result<Vec<f64>>>()?;
    let log_z = match a.ladder_log_z.as_deref().unwrap_or("expected") {
        "expected" => betas
            .iter()
            .map(|&b| {
                Ok(expected_log_partition(
                    n,
                    k,
                    &GibbsContext::new(b, h.clone())?,
                ))
            })
            .collect::<Result<Vec<_>>>()?,
        "exact" => {
            let g = g.ok_or_else(|| Error::InvalidParameter("exact log Z needs a graph".into()))?;
            let c = census_of(g, pclab::exact::DEFAULT_BUDGET)?;
            betas
                .iter()
                .map(|&b| Ok(partition_functions(&c, &GibbsContext::new(b, h.clone())?).log_z))
                .collect::<Result<Vec<_>>>()?
        }
        list => parse_list(list)?,
    };
    let ladder = Ladder::new(betas, log_z, a.a.unwrap_or(0.5), h.clone())?;
    if !ladder.z_hat_increasing() {
        eprintln!("warning: partition estimates are not increasing along the ladder");
    }
    Ok(ladder)
}

fn run(cli: &Cli, args: &RunArgs, seed: u64) -> Result<()> {
    let a = merged_run_args(cli, args)?;
    let dynamics = a.dynamics.unwrap_or(RunDynamics::Metropolis);
    let steps = a.steps.unwrap_or(100_000);
    let chain_seed = a
        .chain_seed
        .unwrap_or_else(|| derive_seed(seed, &[stream::START]));
    let thinning = match a.thin {
        None => Thinning::Auto,
        Some(0) => Thinning::Off,
        Some(k) => Thinning::Every(k),
    };
    let tag = match dynamics {
        RunDynamics::Metropolis => Dynamics::Metropolis,
        RunDynamics::Greedy => Dynamics::Greedy,
        RunDynamics::St => Dynamics::SimulatedTempering,
        RunDynamics::Bd1d => Dynamics::BirthDeath1d,
        RunDynamics::Bd2d => Dynamics::BirthDeath2d,
    };
    let n = match (&a.graph.graph, a.graph.n) {
        (Some(_), _) => None,
        (None, Some(n)) => Some(n),
        (None, None) => return invalid("--n or --graph is required"),
    };
    let beta_text = a.beta.clone().unwrap_or_else(|| "0".into());
    let mut cfg = ChainConfig::new(tag, steps, chain_seed).with_thinning(thinning);
    cfg.stop_at_target = !a.no_stop;

    let (csv, summary) = match dynamics {
        RunDynamics::Bd1d | RunDynamics::Bd2d => {
            let n = n.ok_or_else(|| Error::InvalidParameter("walks need --n".into()))?;
            let h = hamiltonian(a.hamiltonian.as_deref(), n)?;
            let eta = a.eta.unwrap_or(0.3);
            let start = a.start_size.unwrap_or(0);
            let rec = if dynamics == RunDynamics::Bd1d {
                let beta = resolve_beta(&beta_text, n)?
                    .ok_or_else(|| Error::InvalidParameter("beta must be finite".into()))?;
                run_birth_death_1d(n, &GibbsContext::new(beta, h)?, eta, start, &cfg)?
            } else {
                let k = a
                    .graph
                    .k
                    .or(a.graph.alpha.map(|al| k_from_alpha(n, al)))
                    .unwrap_or(0);
                let ladder = ladder_from(&a, n, k, None, &h)?;
                run_birth_death_2d(n, &ladder, eta, (start, 0), &cfg)?
            };
            let mut buf = Vec::new();
            rec.write_csv(&mut buf)?;
            let summary = json!({
                "schema_version": 1, "prng": PRNG_ALGORITHM, "seed": chain_seed,
                "config": cfg, "n": n, "eta": eta,
                "steps_run": rec.steps_run, "first_hit_zero": rec.first_hit_zero,
                "final_size": rec.final_size, "final_temp_index": rec.final_temp_index,
            });
            (buf, summary)
        }
        _ => {
            let g = load_graph(&a.graph, seed)?;
            let n = g.n();
            cfg = cfg.with_log_targets(n, a.eps.unwrap_or(0.0), a.gamma.unwrap_or(0.5))?;
            let h = hamiltonian(a.hamiltonian.as_deref(), n)?;
            let start = CliqueState::empty(n);
            let (rec, beta) = match dynamics {
                RunDynamics::Metropolis => match resolve_beta(&beta_text, n)? {
                    Some(b) => (
                        run_metropolis(&g, &GibbsContext::new(b, h)?, start, &cfg)?,
                        json!(b),
                    ),
                    None => {
                        cfg.dynamics = Dynamics::Greedy;
                        (run_greedy(&g, start, &cfg)?, json!("inf"))
                    }
                },
                RunDynamics::Greedy => (run_greedy(&g, start, &cfg)?, json!("inf")),
                _ => {
                    let ladder = ladder_from(&a, n, g.k(), Some(&g), &h)?;
                    let echo = json!(ladder.betas());
                    (run_st(&g, &ladder, start, 0, &cfg)?, echo)
                }
            };
            let mut buf = Vec::new();
            rec.write_csv(&mut buf)?;
            let summary = json!({
                "schema_version": 1, "prng": PRNG_ALGORITHM, "seed": chain_seed,
                "graph": {"n": n, "k": g.k(), "seed": g.seed(), "fingerprint": g.fingerprint()},
                "config": cfg, "beta": beta,
                "steps_run": rec.steps_run,
                "first_hit_size": rec.first_hit_size,
                "first_hit_overlap": rec.first_hit_overlap,
                "removals_count": rec.removals_count,
                "accepted_moves": rec.accepted_moves,
                "final_size": rec.final_state.size(),
                "final_overlap": rec.final_state.pc_overlap(),
                "final_temp_index": rec.final_temp_index,
            });
            (buf, summary)
        }
    };
    match &cli.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join("trajectory.csv"), &csv)?;
            write_json(Some(&dir.join("summary.json")), &summary)
        }
        None => write_json(None, &summary),
    }
}
