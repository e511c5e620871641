use super::enumerate::{for_each_clique, StateSpaceIndex};
use crate::error::{Error, Result};
use crate::graph::PlantedGraph;
use crate::hamiltonian::{log_sum_exp, GibbsContext};
use serde::Serialize;
use std::io::Write;

/// Exact table `W[q][r]` of cliques by size and planted overlap.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CliqueCensus {
    pub n: usize,
    pub k: usize,
    /// `counts[q][r]` for `q <= max clique size`, `r <= min(q, k)`.
    pub counts: Vec<Vec<u64>>,
    pub total: u64,
    pub fingerprint: String,
}

impl CliqueCensus {
    fn empty(g: &PlantedGraph) -> Self {
        Self {
            n: g.n(),
            k: g.k(),
            counts: Vec::new(),
            total: 0,
            fingerprint: g.fingerprint(),
        }
    }

    fn add(&mut self, q: usize, r: usize) {
        while self.counts.len() <= q {
            let len = self.counts.len().min(self.k) + 1;
            self.counts.push(vec![0; len]);
        }
        self.counts[q][r] += 1;
        self.total += 1;
    }

    pub fn get(&self, q: usize, r: usize) -> u64 {
        self.counts
            .get(q)
            .and_then(|row| row.get(r))
            .copied()
            .unwrap_or(0)
    }

    pub fn max_size(&self) -> usize {
        self.counts.len().saturating_sub(1)
    }

    /// CSV `q,r,count` over every cell with `r <= min(q, k)`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "q,r,count")?;
        for (q, row) in self.counts.iter().enumerate() {
            for (r, c) in row.iter().enumerate() {
                writeln!(w, "{q},{r},{c}")?;
            }
        }
        Ok(())
    }
}

/// Census of an already enumerated, untruncated index.
pub fn census(idx: &StateSpaceIndex, g: &PlantedGraph) -> Result<CliqueCensus> {
    if !idx.is_complete() {
        return Err(Error::InvalidState(
            "census needs an untruncated clique index".into(),
        ));
    }
    if idx.n() != g.n() {
        return Err(Error::InvalidState(
            "index was built for a different graph".into(),
        ));
    }
    let mut c = CliqueCensus::empty(g);
    for i in 0..idx.len() {
        c.add(idx.size(i), idx.overlap(i));
    }
    Ok(c)
}

/// Streaming census that never stores the cliques.
pub fn census_of(g: &PlantedGraph, budget: usize) -> Result<CliqueCensus> {
    let mut c = CliqueCensus::empty(g);
    let planted = g.planted();
    for_each_clique(g, None, budget, |set, q| {
        c.add(q, set.intersection_len(planted));
    })?;
    Ok(c)
}

/// Log-domain partition sums of a census at one temperature.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PartitionFunctions {
    pub log_z: f64,
    /// `log Z_{q,*}` indexed by `q`.
    pub by_size: Vec<f64>,
    /// `log Z_{*,r}` indexed by `r` in `0..=k`.
    pub by_overlap: Vec<f64>,
    /// `log Z_{*,<=r}`.
    pub by_overlap_cumulative: Vec<f64>,
}

pub fn partition_functions(c: &CliqueCensus, ctx: &GibbsContext) -> PartitionFunctions {
    let cell = |q: usize, r: usize| {
        let w = c.get(q, r);
        if w == 0 {
            f64::NEG_INFINITY
        } else {
            (w as f64).ln() + ctx.log_weight(q)
        }
    };
    let by_size: Vec<f64> = (0..c.counts.len())
        .map(|q| log_sum_exp((0..c.counts[q].len()).map(|r| cell(q, r))))
        .collect();
    let by_overlap: Vec<f64> = (0..=c.k)
        .map(|r| log_sum_exp((r..c.counts.len()).map(|q| cell(q, r))))
        .collect();
    let mut by_overlap_cumulative = Vec::with_capacity(by_overlap.len());
    let mut acc = f64::NEG_INFINITY;
    for &z in &by_overlap {
        acc = log_sum_exp([acc, z]);
        by_overlap_cumulative.push(acc);
    }
    PartitionFunctions {
        log_z: log_sum_exp(by_size.iter().copied()),
        by_size,
        by_overlap,
        by_overlap_cumulative,
    }
}

/// `log Z_{*,r} - log Z_{*,<=r}`; `-inf` when no clique has overlap `r`.
pub fn bottleneck_ratio_intersection(pf: &PartitionFunctions, r: usize) -> f64 {
    match (pf.by_overlap.get(r), pf.by_overlap_cumulative.get(r)) {
        (Some(&num), Some(&den)) => num - den,
        _ => f64::NEG_INFINITY,
    }
}
