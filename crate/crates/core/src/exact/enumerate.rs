use crate::error::{Error, Result};
use crate::graph::{PlantedGraph, VertexSet};
use std::collections::HashMap;

/// Outcome of a streaming enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnumerationStats {
    pub cliques: usize,
    /// False when `max_size` cut off larger cliques.
    pub complete: bool,
    pub max_clique_size: usize,
}

/// Visits every clique (including ∅) exactly once in depth-first order,
/// extending only by common neighbours of higher index. Fails with
/// `BudgetExceeded` once more than `budget` cliques have been visited.
pub fn for_each_clique(
    g: &PlantedGraph,
    max_size: Option<usize>,
    budget: usize,
    mut f: impl FnMut(&VertexSet, usize),
) -> Result<EnumerationStats> {
    let n = g.n();
    let mut stats = EnumerationStats {
        cliques: 0,
        complete: true,
        max_clique_size: 0,
    };
    let mut clique = VertexSet::empty(n);
    let cand = VertexSet::full(n);
    let cap = max_size.unwrap_or(n);
    walk(g, &mut clique, 0, &cand, cap, budget, &mut stats, &mut f)?;
    Ok(stats)
}

#[allow(clippy::too_many_arguments)]
fn walk(
    g: &PlantedGraph,
    clique: &mut VertexSet,
    size: usize,
    cand: &VertexSet,
    cap: usize,
    budget: usize,
    stats: &mut EnumerationStats,
    f: &mut impl FnMut(&VertexSet, usize),
) -> Result<()> {
    stats.cliques += 1;
    if stats.cliques > budget {
        return Err(Error::BudgetExceeded { budget });
    }
    stats.max_clique_size = stats.max_clique_size.max(size);
    f(clique, size);
    if size == cap {
        if !cand.is_empty() {
            stats.complete = false;
        }
        return Ok(());
    }
    for v in cand.iter() {
        let mut next = cand.clone();
        next.intersect_with(g.row(v));
        clear_through(&mut next, v);
        clique.insert(v);
        walk(g, clique, size + 1, &next, cap, budget, stats, f)?;
        clique.remove(v);
    }
    Ok(())
}

/// Clears bits `0..=v`.
fn clear_through(set: &mut VertexSet, v: usize) {
    let w = set.words_mut();
    let word = v >> 6;
    for x in &mut w[..word] {
        *x = 0;
    }
    let bit = v & 63;
    w[word] &= if bit == 63 { 0 } else { !0u64 << (bit + 1) };
}

/// All cliques of a graph in deterministic order, with a reverse map.
#[derive(Clone, Debug)]
pub struct StateSpaceIndex {
    n: usize,
    cliques: Vec<VertexSet>,
    sizes: Vec<u32>,
    overlaps: Vec<u32>,
    map: HashMap<VertexSet, usize>,
    complete: bool,
}

/// Enumerates and indexes every clique of size at most `max_size`.
pub fn enumerate_cliques(
    g: &PlantedGraph,
    max_size: Option<usize>,
    budget: usize,
) -> Result<StateSpaceIndex> {
    let mut cliques = Vec::new();
    let mut sizes = Vec::new();
    let mut overlaps = Vec::new();
    let stats = for_each_clique(g, max_size, budget, |c, s| {
        cliques.push(c.clone());
        sizes.push(s as u32);
        overlaps.push(c.intersection_len(g.planted()) as u32);
    })?;
    let map = cliques
        .iter()
        .enumerate()
        .map(|(i, c)| (c.clone(), i))
        .collect();
    Ok(StateSpaceIndex {
        n: g.n(),
        cliques,
        sizes,
        overlaps,
        map,
        complete: stats.complete,
    })
}

impl StateSpaceIndex {
    pub fn len(&self) -> usize {
        self.cliques.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cliques.is_empty()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// False if a size cap cut off larger cliques.
    pub fn is_complete(&self) -> bool {
        self.complete
    }

    pub fn clique(&self, i: usize) -> &VertexSet {
        &self.cliques[i]
    }

    pub fn cliques(&self) -> &[VertexSet] {
        &self.cliques
    }

    #[inline]
    pub fn size(&self, i: usize) -> usize {
        self.sizes[i] as usize
    }

    #[inline]
    pub fn overlap(&self, i: usize) -> usize {
        self.overlaps[i] as usize
    }

    pub fn index_of(&self, c: &VertexSet) -> Option<usize> {
        self.map.get(c).copied()
    }

    /// Index of ∅ (always 0).
    pub fn empty_index(&self) -> usize {
        0
    }

    pub fn max_size(&self) -> usize {
        self.sizes.iter().copied().max().unwrap_or(0) as usize
    }

    /// Indices of cliques differing from clique `i` by one vertex, ordered by
    /// the flipped vertex.
    pub fn neighbors(&self, g: &PlantedGraph, i: usize) -> Vec<usize> {
        let c = &self.cliques[i];
        let mut out = Vec::new();
        let mut y = c.clone();
        for v in 0..self.n {
            if c.contains(v) || g.extends(c, v) {
                y.toggle(v);
                if let Some(&j) = self.map.get(&y) {
                    out.push(j);
                }
                y.toggle(v);
            }
        }
        out
    }

    /// Clique adjacency graph in CSR form.
    pub fn adjacency(&self, g: &PlantedGraph) -> CliqueGraph {
        let mut offsets = Vec::with_capacity(self.len() + 1);
        let mut targets = Vec::new();
        offsets.push(0);
        for i in 0..self.len() {
            targets.extend(self.neighbors(g, i));
            offsets.push(targets.len());
        }
        CliqueGraph { offsets, targets }
    }
}

/// Undirected one-vertex-flip graph over an index.
#[derive(Clone, Debug)]
pub struct CliqueGraph {
    offsets: Vec<usize>,
    targets: Vec<usize>,
}

impl CliqueGraph {
    #[inline]
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.targets[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
