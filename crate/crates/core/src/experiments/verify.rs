use crate::chains::{check_dominance, CliqueState};
use crate::error::{invalid, Result};
use crate::exact::{census, enumerate_cliques, exact_stationary_and_balance, DEFAULT_STATE_LIMIT};
use crate::graph::PlantedGraph;
use crate::hamiltonian::{log_sum_exp, GibbsContext, HamiltonianSpec};
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Shipped fixture graphs `(n, k, seed)`.
pub const SMALL_FIXTURES: [(usize, usize, u64); 3] = [(10, 3, 1), (12, 4, 2), (14, 3, 7)];

/// Runs the detailed-balance, census and dominance suites on a named
/// fixture set (only `small` exists).
pub fn run_verify(fixtures: &str) -> Result<Vec<SuiteResult>> {
    if fixtures != "small" {
        return invalid(format!(
            "unknown fixture set `{fixtures}` (available: small)"
        ));
    }
    Ok(vec![detailed_balance()?, census_recount()?, dominance()?])
}

fn detailed_balance() -> Result<SuiteResult> {
    let mut worst_residual = 0.0f64;
    let mut worst_gibbs = 0.0f64;
    let mut unconverged = 0;
    for &(n, k, seed) in &SMALL_FIXTURES {
        let g = PlantedGraph::generate(n, k, seed)?;
        let idx = enumerate_cliques(&g, None, DEFAULT_STATE_LIMIT)?;
        for beta in [0.0, 1.0, (n as f64).ln()] {
            let ctx = GibbsContext::new(beta, HamiltonianSpec::identity(n)?)?;
            let rep = exact_stationary_and_balance(&idx, &g, &ctx, DEFAULT_STATE_LIMIT)?;
            unconverged += usize::from(!rep.converged);
            worst_residual = worst_residual.max(rep.residual);
            let logs: Vec<f64> = (0..idx.len())
                .map(|i| ctx.log_weight(idx.size(i)))
                .collect();
            let z = log_sum_exp(logs.iter().copied());
            for (p, l) in rep.pi.iter().zip(&logs) {
                worst_gibbs = worst_gibbs.max((p - (l - z).exp()).abs());
            }
        }
    }
    Ok(SuiteResult {
        name: "detailed_balance",
        passed: worst_residual <= 1e-12 && worst_gibbs < 1e-10 && unconverged == 0,
        detail: format!("max residual {worst_residual:.3e}, max |pi - gibbs| {worst_gibbs:.3e}"),
    })
}

fn census_recount() -> Result<SuiteResult> {
    let mut mismatches = 0usize;
    let mut total = 0u64;
    for &(n, k, seed) in &SMALL_FIXTURES {
        let g = PlantedGraph::generate(n, k, seed)?;
        let c = census(&enumerate_cliques(&g, None, DEFAULT_STATE_LIMIT)?, &g)?;
        let mut table = vec![vec![0u64; k + 1]; n + 1];
        for mask in 0u32..(1 << n) {
            let vs: Vec<usize> = (0..n).filter(|&v| mask >> v & 1 == 1).collect();
            let clique = vs
                .iter()
                .enumerate()
                .all(|(i, &u)| vs[i + 1..].iter().all(|&v| g.has_edge(u, v)));
            if clique {
                table[vs.len()][vs.iter().filter(|&&v| g.is_planted(v)).count()] += 1;
            }
        }
        for (q, row) in table.iter().enumerate() {
            for (r, &w) in row.iter().enumerate() {
                mismatches += usize::from(c.get(q, r) != w);
            }
        }
        total += c.total;
    }
    Ok(SuiteResult {
        name: "census",
        passed: mismatches == 0,
        detail: format!(
            "{total} cliques over {} fixtures, {mismatches} mismatched cells",
            SMALL_FIXTURES.len()
        ),
    })
}

fn dominance() -> Result<SuiteResult> {
    let k64 = PlantedGraph::complete(64);
    let a = check_dominance(
        &k64,
        &GibbsContext::new(0.0, HamiltonianSpec::identity(64)?)?,
        0.3,
        &CliqueState::empty(64),
        10_000,
        3,
        1,
    )?;
    let g = PlantedGraph::generate(256, 16, 11)?;
    let b = check_dominance(
        &g,
        &GibbsContext::new(0.0, HamiltonianSpec::identity(256)?)?,
        0.5,
        &CliqueState::empty(256),
        10_000,
        3,
        2,
    )?;
    Ok(SuiteResult {
        name: "dominance",
        passed: a.passed() && b.passed(),
        detail: format!(
            "K64: {} ({} violations); G(256,1/2,16): {} ({} violations)",
            a.status(),
            a.violations,
            b.status(),
            b.violations
        ),
    })
}
