use super::enumerate::{CliqueGraph, StateSpaceIndex};
use crate::error::{invalid, Result};
use crate::graph::PlantedGraph;
use std::collections::VecDeque;

/// Membership vector of `Psi_q`: clique `C` is a `q`-gateway iff a size-`q`
/// clique is reachable from `C` through cliques of size at least `|C|`.
///
/// One reverse BFS per threshold `t = 0..=q`, seeded at the size-`q` cliques
/// and confined to sizes `>= t`, marks the gateways of size `t`.
pub fn compute_gateways(idx: &StateSpaceIndex, g: &PlantedGraph, q: usize) -> Result<Vec<bool>> {
    if !idx.is_complete() {
        return invalid("gateways need the full clique space");
    }
    if q > idx.max_size() {
        return invalid(format!(
            "q = {q} exceeds the clique number {}",
            idx.max_size()
        ));
    }
    Ok(gateways_with(idx, &idx.adjacency(g), q))
}

pub(crate) fn gateways_with(idx: &StateSpaceIndex, adj: &CliqueGraph, q: usize) -> Vec<bool> {
    let len = idx.len();
    let mut out = vec![false; len];
    let seeds: Vec<usize> = (0..len).filter(|&i| idx.size(i) == q).collect();
    let mut seen = vec![u32::MAX; len];
    let mut queue = VecDeque::new();
    for t in 0..=q {
        let stamp = t as u32;
        queue.clear();
        for &s in &seeds {
            seen[s] = stamp;
            queue.push_back(s);
        }
        while let Some(i) = queue.pop_front() {
            if idx.size(i) == t {
                out[i] = true;
            }
            for &j in adj.neighbors(i) {
                if seen[j] != stamp && idx.size(j) >= t {
                    seen[j] = stamp;
                    queue.push_back(j);
                }
            }
        }
    }
    out
}
