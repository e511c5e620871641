//! Expansion check: every small clique `C` must satisfy
//! `|A(C)| >= n / (20 * 2^|C|)` for `|C| <= floor((1 - eta) * log2 n)`.
//!
//! Only cliques are checked (the dynamics never visits other vertex sets).
//! Exhaustive mode enumerates every clique up to the size ceiling by
//! depth-first extension; if the node budget runs out it falls back to
//! sampling and says so in the report.

use super::{PlantedGraph, VertexSet};
use crate::error::{invalid, Result};
use crate::log2n;
use rand::Rng;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExpansionMode {
    /// Enumerate every clique up to the ceiling. Falls back to
    /// `fallback_samples` random greedy cliques when `node_budget` is hit.
    Exhaustive {
        node_budget: u64,
        fallback_samples: u64,
    },
    /// Grow `samples` cliques by uniform random extension from the empty set
    /// and check every prefix.
    Sampled { samples: u64, seed: u64 },
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ExpansionViolation {
    pub clique: Vec<usize>,
    pub common_neighbors: usize,
    pub required: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExpansionReport {
    pub n: usize,
    pub eta: f64,
    pub max_size: usize,
    /// "exhaustive", "sampled", or "sampled-fallback".
    pub mode: &'static str,
    /// Whether every clique up to `max_size` was examined.
    pub complete: bool,
    /// The search stopped after `max_violations` violations.
    pub stopped_early: bool,
    pub cliques_checked: u64,
    pub violation_count: u64,
    /// At most `max_violations` (or 100 when unlimited) retained examples.
    pub violations: Vec<ExpansionViolation>,
    /// Minimum of `|A(C)| * 2^|C| / n` over checked cliques.
    pub min_ratio: f64,
    pub min_ratio_clique: Vec<usize>,
    /// Per size: (cliques checked, violations).
    pub by_size: Vec<(u64, u64)>,
}

impl ExpansionReport {
    pub fn passed(&self) -> bool {
        self.violation_count == 0
    }
}

/// Size ceiling `floor((1 - eta) * log2 n)`.
pub fn expansion_ceiling(n: usize, eta: f64) -> usize {
    ((1.0 - eta) * log2n(n) + 1e-9).floor().max(0.0) as usize
}

struct Checker<'g> {
    g: &'g PlantedGraph,
    max_size: usize,
    max_violations: Option<u64>,
    report: ExpansionReport,
}

impl Checker<'_> {
    /// Records one clique; returns false when the search should stop.
    fn check(&mut self, clique: &VertexSet, common: usize) -> bool {
        let size = clique.len();
        let n = self.g.n() as f64;
        let scale = 2f64.powi(size as i32);
        let required = n / (20.0 * scale);
        let ratio = common as f64 * scale / n;
        let r = &mut self.report;
        r.cliques_checked += 1;
        r.by_size[size].0 += 1;
        if ratio < r.min_ratio {
            r.min_ratio = ratio;
            r.min_ratio_clique = clique.to_vec();
        }
        if (common as f64) < required {
            r.violation_count += 1;
            r.by_size[size].1 += 1;
            let keep = self.max_violations.unwrap_or(100) as usize;
            if r.violations.len() < keep {
                r.violations.push(ExpansionViolation {
                    clique: clique.to_vec(),
                    common_neighbors: common,
                    required,
                });
            }
            if let Some(m) = self.max_violations {
                if r.violation_count >= m {
                    r.stopped_early = true;
                    return false;
                }
            }
        }
        true
    }
}

/// Runs the expansion check.
///
/// `max_violations` stops the search once that many violations are found
/// (the report is then marked `stopped_early` and incomplete).
pub fn check_expansion(
    g: &PlantedGraph,
    eta: f64,
    mode: ExpansionMode,
    max_violations: Option<u64>,
) -> Result<ExpansionReport> {
    if g.n() < 2 {
        return invalid("expansion check needs n >= 2");
    }
    if !(eta > 0.0 && eta < 1.0) {
        return invalid(format!("eta={eta} must lie in (0,1)"));
    }
    match mode {
        ExpansionMode::Sampled { samples: 0, .. }
        | ExpansionMode::Exhaustive {
            fallback_samples: 0,
            ..
        } => return invalid("sample budget must be positive"),
        ExpansionMode::Exhaustive { node_budget: 0, .. } => {
            return invalid("node budget must be positive")
        }
        _ => {}
    }
    let max_size = expansion_ceiling(g.n(), eta);
    let fresh = |mode: &'static str| ExpansionReport {
        n: g.n(),
        eta,
        max_size,
        mode,
        complete: false,
        stopped_early: false,
        cliques_checked: 0,
        violation_count: 0,
        violations: Vec::new(),
        min_ratio: f64::INFINITY,
        min_ratio_clique: Vec::new(),
        by_size: vec![(0, 0); max_size + 1],
    };
    match mode {
        ExpansionMode::Exhaustive {
            node_budget,
            fallback_samples,
        } => {
            let mut ck = Checker {
                g,
                max_size,
                max_violations,
                report: fresh("exhaustive"),
            };
            let mut nodes = 0u64;
            let mut clique = VertexSet::empty(g.n());
            let common = VertexSet::full(g.n());
            match dfs(&mut ck, &mut clique, &common, 0, &mut nodes, node_budget) {
                Walk::Done => {
                    ck.report.complete = true;
                    Ok(ck.report)
                }
                Walk::Stopped => Ok(ck.report),
                Walk::OutOfBudget => {
                    let mut ck = Checker {
                        g,
                        max_size,
                        max_violations,
                        report: fresh("sampled-fallback"),
                    };
                    sample(&mut ck, fallback_samples, g.seed());
                    Ok(ck.report)
                }
            }
        }
        ExpansionMode::Sampled { samples, seed } => {
            let mut ck = Checker {
                g,
                max_size,
                max_violations,
                report: fresh("sampled"),
            };
            sample(&mut ck, samples, seed);
            Ok(ck.report)
        }
    }
}

enum Walk {
    Done,
    Stopped,
    OutOfBudget,
}

/// `common` is `A(clique)`; children extend only by larger indices so each
/// clique is visited once.
fn dfs(
    ck: &mut Checker<'_>,
    clique: &mut VertexSet,
    common: &VertexSet,
    min_next: usize,
    nodes: &mut u64,
    budget: u64,
) -> Walk {
    *nodes += 1;
    if *nodes > budget {
        return Walk::OutOfBudget;
    }
    if !ck.check(clique, common.len()) {
        return Walk::Stopped;
    }
    if clique.len() == ck.max_size {
        return Walk::Done;
    }
    let candidates: Vec<usize> = common.iter().filter(|&v| v >= min_next).collect();
    let mut child = common.clone();
    for v in candidates {
        child.words_mut().copy_from_slice(common.words());
        child.intersect_with(ck.g.row(v));
        clique.insert(v);
        let res = dfs(ck, clique, &child, v + 1, nodes, budget);
        clique.remove(v);
        match res {
            Walk::Done => {}
            other => return other,
        }
    }
    Walk::Done
}

fn sample(ck: &mut Checker<'_>, samples: u64, seed: u64) {
    let mut rng = crate::rng::prng(seed);
    let n = ck.g.n();
    for _ in 0..samples {
        let mut clique = VertexSet::empty(n);
        let mut common = VertexSet::full(n);
        loop {
            if !ck.check(&clique, common.len()) {
                return;
            }
            if clique.len() == ck.max_size || common.is_empty() {
                break;
            }
            let v = common
                .nth(rng.gen_range(0..common.len()))
                .expect("nonempty");
            clique.insert(v);
            common.intersect_with(ck.g.row(v));
        }
    }
}
