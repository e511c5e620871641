use crate::chains::Dynamics;
use crate::error::{invalid, Error, Result};
use crate::rng::{derive_seed, stream};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const SCHEMA_VERSION: u32 = 1;

/// An inverse temperature that may scale with `n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaSpec {
    Value(f64),
    /// `c * ln n`.
    LnN(f64),
    Infinite,
}

impl BetaSpec {
    /// Accepts a number, `"inf"`, `"ln_n"`, `"<c>*ln_n"` or `"<c>ln_n"`.
    pub fn parse(s: &str) -> Result<Self> {
        let t: String = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .collect::<String>()
            .to_ascii_lowercase();
        if matches!(t.as_str(), "inf" | "+inf" | "infinity") {
            return Ok(BetaSpec::Infinite);
        }
        if let Some(head) = t.strip_suffix("ln_n").or_else(|| t.strip_suffix("ln(n)")) {
            let head = head.trim_end_matches('*');
            let c = if head.is_empty() {
                1.0
            } else {
                head.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad beta coefficient in `{s}`")))?
            };
            return Ok(BetaSpec::LnN(c));
        }
        t.parse::<f64>()
            .map(BetaSpec::Value)
            .map_err(|_| Error::Parse(format!("cannot read beta `{s}`")))
    }

    /// `None` for `+inf`.
    pub fn resolve(self, n: usize) -> Option<f64> {
        match self {
            BetaSpec::Value(b) => Some(b),
            BetaSpec::LnN(c) => Some(c * (n as f64).ln()),
            BetaSpec::Infinite => None,
        }
    }

    pub fn label(self) -> String {
        match self {
            BetaSpec::Value(b) => format!("{b}"),
            BetaSpec::LnN(1.0) => "ln_n".into(),
            BetaSpec::LnN(c) => format!("{c}*ln_n"),
            BetaSpec::Infinite => "inf".into(),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawNumOrStr {
    Num(f64),
    Str(String),
}

impl RawNumOrStr {
    fn beta(&self) -> Result<BetaSpec> {
        match self {
            RawNumOrStr::Num(x) => Ok(BetaSpec::Value(*x)),
            RawNumOrStr::Str(s) => BetaSpec::parse(s),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawHamiltonian {
    Name(String),
    Values(Vec<f64>),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawLogZ {
    Name(String),
    Values(Vec<f64>),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x],
            OneOrMany::Many(v) => v,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPlan {
    schema_version: u32,
    name: Option<String>,
    master_seed: u64,
    out_dir: Option<PathBuf>,
    threads: Option<usize>,
    n: OneOrMany<usize>,
    alpha: Option<OneOrMany<f64>>,
    k: Option<OneOrMany<usize>>,
    dynamics: OneOrMany<String>,
    beta: Option<OneOrMany<RawNumOrStr>>,
    ladder: Option<Vec<RawNumOrStr>>,
    ladder_log_z: Option<RawLogZ>,
    level_move_prob: Option<f64>,
    hamiltonian: Option<RawHamiltonian>,
    eps: Option<f64>,
    gamma: Option<f64>,
    steps: u64,
    trials: usize,
    stop_at_target: Option<bool>,
}

/// Which process a sweep cell runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CellKind {
    Chain(Dynamics),
    /// Degree heuristic only.
    TopK,
}

impl CellKind {
    fn parse(s: &str) -> Result<Self> {
        let t = s.to_ascii_lowercase().replace('-', "_");
        if t == "top_k" || t == "topk" || t == "top_k_degrees" {
            return Ok(CellKind::TopK);
        }
        match Dynamics::parse(&t)? {
            d @ (Dynamics::Metropolis | Dynamics::Greedy | Dynamics::SimulatedTempering) => {
                Ok(CellKind::Chain(d))
            }
            d => invalid(format!(
                "{d:?} runs on sizes only and cannot be swept over graphs"
            )),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            CellKind::Chain(Dynamics::Metropolis) => "metropolis",
            CellKind::Chain(Dynamics::Greedy) => "greedy",
            CellKind::Chain(Dynamics::SimulatedTempering) => "st",
            CellKind::Chain(_) => "other",
            CellKind::TopK => "top_k",
        }
    }

    fn uses_beta(self) -> bool {
        matches!(self, CellKind::Chain(Dynamics::Metropolis))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HamiltonianChoice {
    Identity,
    Values(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LogZChoice {
    /// `ln sum_{q,r} E[W_{q,r}] e^{beta h_q}` from the first-moment formula.
    Expected,
    /// Exact census of each trial's graph (small `n` only).
    Exact,
    Values(Vec<f64>),
}

/// A parsed, validated sweep description.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentPlan {
    pub schema_version: u32,
    pub name: String,
    pub master_seed: u64,
    #[serde(skip)]
    pub out_dir: PathBuf,
    #[serde(skip)]
    pub threads: usize,
    pub n: Vec<usize>,
    pub alpha: Vec<f64>,
    pub k: Vec<usize>,
    pub kinds: Vec<CellKind>,
    pub beta: Vec<BetaSpec>,
    pub ladder: Vec<BetaSpec>,
    pub ladder_log_z: LogZChoice,
    pub level_move_prob: f64,
    pub hamiltonian: HamiltonianChoice,
    pub eps: f64,
    pub gamma: f64,
    pub steps: u64,
    pub trials: usize,
    pub stop_at_target: bool,
}

/// One point of the grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cell {
    pub index: usize,
    pub n: usize,
    pub k: usize,
    pub kind: CellKind,
    pub beta: Option<BetaSpec>,
}

/// `k = floor(n^alpha)`, guarded against `powf` landing just below an
/// integer.
pub fn k_from_alpha(n: usize, alpha: f64) -> usize {
    ((n as f64).powf(alpha) + 1e-9).floor() as usize
}

impl ExperimentPlan {
    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawPlan = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if raw.schema_version != SCHEMA_VERSION {
            return invalid(format!(
                "schema_version {} not supported (expected {SCHEMA_VERSION})",
                raw.schema_version
            ));
        }
        let alpha = raw.alpha.map(OneOrMany::into_vec).unwrap_or_default();
        let k = raw.k.map(OneOrMany::into_vec).unwrap_or_default();
        let kinds = raw
            .dynamics
            .into_vec()
            .iter()
            .map(|s| CellKind::parse(s))
            .collect::<Result<Vec<_>>>()?;
        let beta = match raw.beta {
            Some(b) => b
                .into_vec()
                .iter()
                .map(RawNumOrStr::beta)
                .collect::<Result<Vec<_>>>()?,
            None => Vec::new(),
        };
        let ladder = match raw.ladder {
            Some(l) => l
                .iter()
                .map(RawNumOrStr::beta)
                .collect::<Result<Vec<_>>>()?,
            None => Vec::new(),
        };
        let ladder_log_z = match raw.ladder_log_z {
            None => LogZChoice::Expected,
            Some(RawLogZ::Name(s)) => match s.as_str() {
                "expected" => LogZChoice::Expected,
                "exact" => LogZChoice::Exact,
                other => {
                    return invalid(format!(
                        "ladder_log_z `{other}`: use expected, exact or a list"
                    ))
                }
            },
            Some(RawLogZ::Values(v)) => LogZChoice::Values(v),
        };
        let hamiltonian = match raw.hamiltonian {
            None => HamiltonianChoice::Identity,
            Some(RawHamiltonian::Name(s)) if s == "identity" => HamiltonianChoice::Identity,
            Some(RawHamiltonian::Name(s)) => {
                return invalid(format!("hamiltonian `{s}`: use \"identity\" or a list"))
            }
            Some(RawHamiltonian::Values(v)) => HamiltonianChoice::Values(v),
        };
        let plan = Self {
            schema_version: raw.schema_version,
            name: raw.name.unwrap_or_else(|| "sweep".into()),
            master_seed: raw.master_seed,
            out_dir: raw.out_dir.unwrap_or_else(|| PathBuf::from("out")),
            threads: raw.threads.unwrap_or(0),
            n: raw.n.into_vec(),
            alpha,
            k,
            kinds,
            beta,
            ladder,
            ladder_log_z,
            level_move_prob: raw.level_move_prob.unwrap_or(0.5),
            hamiltonian,
            eps: raw.eps.unwrap_or(0.0),
            gamma: raw.gamma.unwrap_or(0.5),
            steps: raw.steps,
            trials: raw.trials,
            stop_at_target: raw.stop_at_target.unwrap_or(true),
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n.is_empty() || self.n.contains(&0) {
            return invalid("n must list positive sizes");
        }
        if self.alpha.is_empty() == self.k.is_empty() {
            return invalid("give exactly one of `alpha` and `k`");
        }
        if self.alpha.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return invalid("alpha must lie in [0,1]");
        }
        for &n in &self.n {
            if let Some(&k) = self.k.iter().find(|&&k| k > n) {
                return invalid(format!("k = {k} exceeds n = {n}"));
            }
        }
        if self.kinds.is_empty() {
            return invalid("no dynamics selected");
        }
        if self.kinds.iter().any(|k| k.uses_beta()) && self.beta.is_empty() {
            return invalid("metropolis cells need `beta`");
        }
        if self.beta.contains(&BetaSpec::Infinite) {
            return invalid("beta = inf is the greedy dynamics; list \"greedy\" instead");
        }
        if self
            .kinds
            .contains(&CellKind::Chain(Dynamics::SimulatedTempering))
        {
            if self.ladder.is_empty() {
                return invalid("tempering cells need `ladder`");
            }
            if let LogZChoice::Values(v) = &self.ladder_log_z {
                if v.len() != self.ladder.len() {
                    return invalid("ladder_log_z must match the ladder length");
                }
            }
        }
        if !(self.level_move_prob > 0.0 && self.level_move_prob < 1.0) {
            return invalid("level_move_prob must lie in (0,1)");
        }
        if let HamiltonianChoice::Values(v) = &self.hamiltonian {
            if self.n.iter().any(|&n| v.len() != n + 1) {
                return invalid("an explicit hamiltonian needs exactly n+1 values for every n");
            }
        }
        if !(self.eps > -1.0 && self.gamma >= 0.0) {
            return invalid("need eps > -1 and gamma >= 0");
        }
        Ok(())
    }

    /// Grid cells in a fixed order: `n`, then `k`/`alpha`, then dynamics, then beta.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &n in &self.n {
            let ks: Vec<usize> = if self.alpha.is_empty() {
                self.k.clone()
            } else {
                self.alpha.iter().map(|&a| k_from_alpha(n, a)).collect()
            };
            for k in ks {
                for &kind in &self.kinds {
                    let betas: Vec<Option<BetaSpec>> = if kind.uses_beta() {
                        self.beta.iter().copied().map(Some).collect()
                    } else {
                        vec![None]
                    };
                    for beta in betas {
                        out.push(Cell {
                            index: out.len(),
                            n,
                            k,
                            kind,
                            beta,
                        });
                    }
                }
            }
        }
        out
    }

    /// SHA-256 of the canonical JSON form, first 16 hex digits.
    pub fn config_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let canonical = serde_json::to_string(self).expect("plan serialises");
        hex::encode(&Sha256::digest(canonical.as_bytes())[..8])
    }
}

/// Chain seed of `(cell, trial)`: `derive_seed(master, [cell, trial])`.
pub fn trial_seed(master: u64, cell: usize, trial: usize) -> u64 {
    derive_seed(master, &[cell as u64, trial as u64])
}

/// Graph seed of trial `t` at `(n, k)`: `derive_seed(master, [GRAPH, n, k, t])`.
/// Cells that share `(n, k)` see the same graphs, so dynamics are compared
/// on paired instances.
pub fn graph_seed(master: u64, n: usize, k: usize, trial: usize) -> u64 {
    derive_seed(master, &[stream::GRAPH, n as u64, k as u64, trial as u64])
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"
schema_version = 1
name = "t"
master_seed = 7
n = [64, 128]
alpha = 0.5
dynamics = ["metropolis", "greedy", "top_k"]
beta = [0, "ln_n", "0.5*ln_n"]
steps = 1000
trials = 3
"#;

    #[test]
    fn parses_and_expands() {
        let p = ExperimentPlan::from_toml(BASIC).unwrap();
        assert_eq!(
            p.beta,
            vec![BetaSpec::Value(0.0), BetaSpec::LnN(1.0), BetaSpec::LnN(0.5)]
        );
        let cells = p.cells();
        assert_eq!(cells.len(), 2 * (3 + 1 + 1));
        assert_eq!(cells[0].k, 8);
        assert_eq!(cells[5].n, 128);
        assert_eq!(cells[5].k, 11);
        assert!(cells.iter().enumerate().all(|(i, c)| c.index == i));
    }

    #[test]
    fn rejects_bad_plans() {
        assert!(ExperimentPlan::from_toml(
            &BASIC.replace("schema_version = 1", "schema_version = 2")
        )
        .is_err());
        assert!(ExperimentPlan::from_toml(&format!("{BASIC}\nbogus = 1\n")).is_err());
        assert!(
            ExperimentPlan::from_toml(&BASIC.replace("alpha = 0.5", "alpha = 0.5\nk = 3")).is_err()
        );
        assert!(ExperimentPlan::from_toml(&BASIC.replace("\"greedy\"", "\"bd1d\"")).is_err());
        assert!(ExperimentPlan::from_toml(&BASIC.replace("\"ln_n\"", "\"inf\"")).is_err());
        assert!(
            ExperimentPlan::from_toml(&BASIC.replace("dynamics = [", "dynamics = [\"st\", "))
                .is_err()
        );
    }

    #[test]
    fn beta_spec_parsing() {
        assert_eq!(BetaSpec::parse("20*ln_n").unwrap(), BetaSpec::LnN(20.0));
        assert_eq!(BetaSpec::parse("2 ln_n").unwrap(), BetaSpec::LnN(2.0));
        assert_eq!(BetaSpec::parse("inf").unwrap(), BetaSpec::Infinite);
        assert_eq!(BetaSpec::parse("1.5").unwrap(), BetaSpec::Value(1.5));
        assert!(BetaSpec::parse("hot").is_err());
        assert!((BetaSpec::LnN(2.0).resolve(100).unwrap() - 2.0 * 100f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn seeds_and_hash_are_stable() {
        let p = ExperimentPlan::from_toml(BASIC).unwrap();
        let q = ExperimentPlan::from_toml(BASIC).unwrap();
        assert_eq!(p.config_hash(), q.config_hash());
        let r = ExperimentPlan::from_toml(&BASIC.replace("steps = 1000", "steps = 1001")).unwrap();
        assert_ne!(p.config_hash(), r.config_hash());
        assert_ne!(trial_seed(1, 0, 1), trial_seed(1, 1, 0));
        assert_eq!(k_from_alpha(4096, 0.75), 512);
        assert_eq!(k_from_alpha(512, 0.75), 107);
        assert_eq!(k_from_alpha(256, 0.5), 16);
    }
}
