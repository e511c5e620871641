use super::enumerate::StateSpaceIndex;
use super::gateways::gateways_with;
use crate::error::{invalid, Result};
use crate::graph::PlantedGraph;
use crate::hamiltonian::{log_sum_exp, GibbsContext};
use serde::Serialize;
use std::collections::VecDeque;

/// Three structural facts about the `(A, B)` pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ClaimsAB {
    /// No clique of `A \ B` is adjacent to a clique outside `A`.
    pub interior_closed: bool,
    /// Every size-`q` clique lies outside both `A` and `B`.
    pub large_cliques_outside: bool,
    /// Every overlap-`r` clique lies outside `A` or inside `B`.
    pub overlap_r_guarded: bool,
}

impl ClaimsAB {
    pub fn all(&self) -> bool {
        self.interior_closed && self.large_cliques_outside && self.overlap_r_guarded
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LargeCliqueBottleneck {
    pub q: usize,
    pub p: usize,
    pub r: usize,
    /// `log Z(B) - log Z(A)`.
    pub log_ratio: f64,
    pub log_z_a: f64,
    pub log_z_b: f64,
    pub size_a: usize,
    pub size_b: usize,
    pub claims: ClaimsAB,
    pub claims_verified: bool,
    #[serde(skip)]
    pub in_a: Vec<bool>,
    #[serde(skip)]
    pub in_b: Vec<bool>,
}

/// Builds `B = (Psi_q ∩ Omega_{p,<r}) ∪ Omega_{<q,r}` and `A`, the cliques
/// reachable from ∅ by paths whose only possible `B` member is the last one,
/// and returns the restricted partition ratio.
pub fn bottleneck_ratio_large_clique(
    idx: &StateSpaceIndex,
    g: &PlantedGraph,
    ctx: &GibbsContext,
    q: usize,
    p: usize,
    r: usize,
) -> Result<LargeCliqueBottleneck> {
    if p > q {
        return invalid(format!("need p <= q, got p={p}, q={q}"));
    }
    if !idx.is_complete() {
        return invalid("bottleneck needs the full clique space");
    }
    let adj = idx.adjacency(g);
    let len = idx.len();
    let psi = if q <= idx.max_size() {
        gateways_with(idx, &adj, q)
    } else {
        vec![false; len]
    };
    let in_b: Vec<bool> = (0..len)
        .map(|i| {
            let (s, o) = (idx.size(i), idx.overlap(i));
            (psi[i] && s == p && o < r) || (s < q && o == r)
        })
        .collect();

    let mut in_a = vec![false; len];
    let root = idx.empty_index();
    in_a[root] = true;
    let mut queue = VecDeque::from([root]);
    while let Some(i) = queue.pop_front() {
        if in_b[i] {
            continue;
        }
        for &j in adj.neighbors(i) {
            if !in_a[j] {
                in_a[j] = true;
                queue.push_back(j);
            }
        }
    }

    let interior_closed = (0..len)
        .filter(|&i| in_a[i] && !in_b[i])
        .all(|i| adj.neighbors(i).iter().all(|&j| in_a[j]));
    let large_cliques_outside = (0..len)
        .filter(|&i| idx.size(i) == q)
        .all(|i| !in_a[i] && !in_b[i]);
    let overlap_r_guarded = (0..len)
        .filter(|&i| idx.overlap(i) == r)
        .all(|i| !in_a[i] || in_b[i]);
    let claims = ClaimsAB {
        interior_closed,
        large_cliques_outside,
        overlap_r_guarded,
    };

    let log_z = |member: &[bool]| {
        log_sum_exp(
            (0..len)
                .filter(|&i| member[i])
                .map(|i| ctx.log_weight(idx.size(i))),
        )
    };
    let log_z_a = log_z(&in_a);
    let log_z_b = log_z(&in_b);
    Ok(LargeCliqueBottleneck {
        q,
        p,
        r,
        log_ratio: log_z_b - log_z_a,
        log_z_a,
        log_z_b,
        size_a: in_a.iter().filter(|&&b| b).count(),
        size_b: in_b.iter().filter(|&&b| b).count(),
        claims,
        claims_verified: claims.all(),
        in_a,
        in_b,
    })
}
