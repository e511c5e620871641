use pclab::exact::census_of;
use pclab::PlantedGraph;
use std::path::Path;
use std::process::{Command, Output};

fn pclab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pclab"))
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn verify_small_passes() {
    let o = pclab(&["verify", "--fixtures", "small"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.lines().count() >= 3);
    assert!(out.lines().all(|l| l.starts_with("PASS")));
}

#[test]
fn census_matches_library() {
    let o = pclab(&["census", "--n", "14", "--k", "3", "--seed", "7"]);
    assert_eq!(code(&o), 0);
    let g = PlantedGraph::generate(14, 3, 7).unwrap();
    let mut want = Vec::new();
    census_of(&g, 1 << 20)
        .unwrap()
        .write_csv(&mut want)
        .unwrap();
    assert_eq!(o.stdout, want);
    assert!(stdout(&o).starts_with("q,r,count\n"));
}

#[test]
fn generated_file_round_trips_through_census() {
    let d = tempfile::tempdir().unwrap();
    let file = d.path().join("g.txt");
    let f = file.to_str().unwrap();
    assert_eq!(
        code(&pclab(&[
            "generate", "--n", "12", "--k", "4", "--seed", "3", "--out", f
        ])),
        0
    );
    let a = pclab(&["census", "--graph", f]);
    let b = pclab(&["census", "--n", "12", "--k", "4", "--seed", "3"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn predict_exponent_and_table() {
    let o = pclab(&["predict", "--alpha", "0.5", "--rho", "2", "--gamma", "0"]);
    assert_eq!(code(&o), 0);
    let v: f64 = stdout(&o).trim().parse().unwrap();
    assert!(v.abs() < 1e-12);
    let t = pclab(&["predict", "--n", "20", "--k", "4", "--q-max", "3"]);
    assert_eq!(code(&t), 0);
    assert!(stdout(&t).starts_with("n,k,q,r,log_expected\n"));
    assert_eq!(code(&pclab(&["predict", "--alpha", "0.5"])), 1);
}

#[test]
fn exit_codes() {
    assert_eq!(code(&pclab(&["census", "--n", "10", "--bogus"])), 1);
    assert_eq!(code(&pclab(&["--help"])), 0);
    assert_eq!(code(&pclab(&["census", "--n", "40", "--budget", "10"])), 2);
    let unreachable = pclab(&[
        "hitting-time",
        "--n",
        "10",
        "--k",
        "3",
        "--target-overlap",
        "5",
    ]);
    assert_eq!(
        code(&unreachable),
        2,
        "{}",
        String::from_utf8_lossy(&unreachable.stderr)
    );
    assert_eq!(code(&pclab(&["run", "--n", "10", "--beta", "nonsense"])), 1);
}

#[test]
fn hitting_time_reports_a_finite_value() {
    let o = pclab(&[
        "hitting-time",
        "--n",
        "10",
        "--k",
        "3",
        "--seed",
        "2",
        "--beta",
        "1",
        "--target-overlap",
        "2",
    ]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["expected_steps"].as_f64().unwrap() > 0.0);
}

#[test]
fn run_writes_trajectory_and_summary() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("run");
    let o = pclab(&[
        "run",
        "--n",
        "64",
        "--k",
        "8",
        "--seed",
        "4",
        "--dynamics",
        "metropolis",
        "--beta",
        "ln_n",
        "--steps",
        "5000",
        "--thin",
        "10",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let traj = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert!(traj.starts_with("step,size,overlap,temp_index\n"));
    let s = json(&out.join("summary.json"));
    assert!(s["prng"].as_str().unwrap().starts_with("chacha8"));
    assert_eq!(s["graph"]["n"], 64);
    assert!(s["removals_count"].is_u64());

    // Same command, same bytes.
    let out2 = d.path().join("run2");
    pclab(&[
        "run",
        "--n",
        "64",
        "--k",
        "8",
        "--seed",
        "4",
        "--dynamics",
        "metropolis",
        "--beta",
        "ln_n",
        "--steps",
        "5000",
        "--thin",
        "10",
        "--out",
        out2.to_str().unwrap(),
    ]);
    assert_eq!(
        traj,
        std::fs::read_to_string(out2.join("trajectory.csv")).unwrap()
    );
}

#[test]
fn run_takes_defaults_from_config() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("run.toml");
    std::fs::write(
        &cfg,
        "n = 32\nk = 5\ndynamics = \"st\"\nladder = [0, 0.5, 1]\nsteps = 2000\n",
    )
    .unwrap();
    let out = d.path().join("o");
    let o = pclab(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s = json(&out.join("summary.json"));
    assert_eq!(s["config"]["dynamics"], "SIMULATED_TEMPERING");
    assert_eq!(s["graph"]["n"], 32);

    std::fs::write(&cfg, "n = 32\nsurprise = 1\n").unwrap();
    assert_eq!(code(&pclab(&["run", "--config", cfg.to_str().unwrap()])), 1);
}

#[test]
fn walks_run_without_a_graph() {
    let o = pclab(&[
        "run",
        "--n",
        "64",
        "--dynamics",
        "bd1d",
        "--beta",
        "1",
        "--start-size",
        "3",
        "--steps",
        "1000",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["steps_run"], 1000);
    let o = pclab(&[
        "run",
        "--n",
        "64",
        "--dynamics",
        "bd2d",
        "--ladder",
        "0,0.5",
        "--ladder-log-z",
        "0,1",
        "--steps",
        "1000",
        "--no-stop",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn sweep_from_config() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("plan.toml");
    std::fs::write(
        &cfg,
        "schema_version = 1\nmaster_seed = 1\nn = 32\nk = 5\ndynamics = [\"greedy\", \"top_k\"]\nsteps = 500\ntrials = 2\n",
    )
    .unwrap();
    let out = d.path().join("sweep");
    let o = pclab(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "9",
        "--threads",
        "1",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&out.join("summary.json"))["master_seed"], 9);
    assert_eq!(
        std::fs::read_to_string(out.join("trials.csv"))
            .unwrap()
            .lines()
            .count(),
        1 + 4
    );
    assert_eq!(code(&pclab(&["sweep"])), 1);
}

#[test]
fn bottleneck_reports() {
    let o = pclab(&[
        "bottleneck",
        "intersection",
        "--n",
        "12",
        "--k",
        "4",
        "--seed",
        "2",
        "--r",
        "2",
    ]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["log_ratio"].as_f64().unwrap() < 0.0);
    let o = pclab(&[
        "bottleneck",
        "large-clique",
        "--n",
        "12",
        "--k",
        "4",
        "--seed",
        "2",
        "--q",
        "4",
        "--p",
        "3",
        "--r",
        "2",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["claims_verified"], true);
}

#[test]
fn gateways_csv() {
    let o = pclab(&[
        "gateways", "--n", "10", "--k", "3", "--seed", "1", "--q", "3",
    ]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("index,size,overlap,gateway,vertices"));
    // The empty clique reaches a triangle.
    assert!(lines.next().unwrap().starts_with("0,0,0,1,"));
}
