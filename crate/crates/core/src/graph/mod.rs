//! Planted-clique random graphs.
//!
//! A [`PlantedGraph`] is `G(n, 1/2)` with a uniformly chosen `k`-subset
//! completed into a clique. Adjacency is a dense bit-matrix stored row-major
//! with a fixed word stride, so common-neighbour queries are word-wise ANDs.

mod expansion;
mod io;
mod vertex_set;

pub use expansion::{
    check_expansion, expansion_ceiling, ExpansionMode, ExpansionReport, ExpansionViolation,
};
pub use vertex_set::VertexSet;

use crate::error::{invalid, Result};
use crate::rng;
use rand::seq::index::sample;
use rand::RngCore;
use vertex_set::words_for;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlantedGraph {
    n: usize,
    seed: u64,
    stride: usize,
    adj: Vec<u64>,
    planted: VertexSet,
}

impl PlantedGraph {
    /// Samples `G(n, 1/2, k)` from `seed`.
    ///
    /// The planted set is drawn first with `rand::seq::index::sample`, then one
    /// bit per unordered pair `u < v` is consumed in lexicographic order from
    /// the same stream (64 bits per `next_u64`). Planted pairs are forced to 1
    /// after the draw, so the underlying `G(n, 1/2)` bits are always consumed.
    pub fn generate(n: usize, k: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return invalid("n must be positive");
        }
        if k > n {
            return invalid(format!("planted size k={k} exceeds n={n}"));
        }
        let mut rng = rng::prng(seed);
        let mut planted_idx = sample(&mut rng, n, k).into_vec();
        planted_idx.sort_unstable();
        let planted = VertexSet::from_indices(n, planted_idx);

        let stride = words_for(n);
        let mut adj = vec![0u64; n * stride];
        let mut buf = 0u64;
        let mut left = 0u32;
        for u in 0..n {
            for v in (u + 1)..n {
                if left == 0 {
                    buf = rng.next_u64();
                    left = 64;
                }
                let bit = buf & 1;
                buf >>= 1;
                left -= 1;
                if bit == 1 {
                    set_edge(&mut adj, stride, u, v);
                }
            }
        }
        let members = planted.to_vec();
        for (i, &u) in members.iter().enumerate() {
            for &v in &members[i + 1..] {
                set_edge(&mut adj, stride, u, v);
            }
        }
        Ok(Self {
            n,
            seed,
            stride,
            adj,
            planted,
        })
    }

    /// Builds a graph from an explicit edge list (fixtures and I/O).
    ///
    /// Planted pairs are added as edges if missing. `seed` is informational.
    pub fn from_edges(
        n: usize,
        planted: &[usize],
        edges: &[(usize, usize)],
        seed: u64,
    ) -> Result<Self> {
        if n == 0 {
            return invalid("n must be positive");
        }
        let stride = words_for(n);
        let mut adj = vec![0u64; n * stride];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return invalid(format!("edge ({u},{v}) out of range for n={n}"));
            }
            if u == v {
                return invalid(format!("self-loop at vertex {u}"));
            }
            set_edge(&mut adj, stride, u, v);
        }
        if let Some(&bad) = planted.iter().find(|&&v| v >= n) {
            return invalid(format!("planted vertex {bad} out of range"));
        }
        let planted = VertexSet::from_indices(n, planted.iter().copied());
        let members = planted.to_vec();
        for (i, &u) in members.iter().enumerate() {
            for &v in &members[i + 1..] {
                set_edge(&mut adj, stride, u, v);
            }
        }
        Ok(Self {
            n,
            seed,
            stride,
            adj,
            planted,
        })
    }

    /// The complete graph `K_n` with every vertex planted.
    pub fn complete(n: usize) -> Self {
        Self::from_edges(n, &(0..n).collect::<Vec<_>>(), &[], 0).expect("n > 0")
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.planted.len()
    }

    #[inline]
    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline]
    pub fn planted(&self) -> &VertexSet {
        &self.planted
    }

    #[inline]
    pub fn is_planted(&self, v: usize) -> bool {
        self.planted.contains(v)
    }

    /// Neighbourhood bitset of `v`.
    #[inline]
    pub fn row(&self, v: usize) -> &[u64] {
        &self.adj[v * self.stride..(v + 1) * self.stride]
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.row(u)[v >> 6] >> (v & 63) & 1 == 1
    }

    pub fn degree(&self, v: usize) -> usize {
        self.row(v).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn edge_count(&self) -> usize {
        (0..self.n).map(|v| self.degree(v)).sum::<usize>() / 2
    }

    /// `true` iff every pair in `set` is adjacent.
    pub fn is_clique(&self, set: &VertexSet) -> bool {
        set.iter().all(|u| {
            self.row(u)
                .iter()
                .zip(set.words())
                .enumerate()
                .all(|(i, (r, s))| {
                    let own = if u >> 6 == i { 1u64 << (u & 63) } else { 0 };
                    s & !own & !r == 0
                })
        })
    }

    /// `true` iff `clique ∪ {v}` is a clique, assuming `clique` is one and
    /// `v ∉ clique`.
    #[inline]
    pub fn extends(&self, clique: &VertexSet, v: usize) -> bool {
        clique.is_subset_of(self.row(v))
    }

    /// `A(U) = { v ∉ U : U ⊆ N(v) }`: AND of the rows of `U`, minus `U`.
    pub fn common_neighbors(&self, u: &VertexSet) -> VertexSet {
        let mut out = VertexSet::full(self.n);
        for v in u.iter() {
            out.intersect_with(self.row(v));
        }
        out.subtract(u.words());
        out
    }

    /// The `k` highest-degree vertices (ties to the lower index) and their
    /// overlap with the planted set.
    pub fn top_k_degrees(&self) -> (VertexSet, usize) {
        let k = self.k();
        let mut order: Vec<(usize, usize)> = (0..self.n).map(|v| (self.degree(v), v)).collect();
        order.sort_unstable_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        let top = VertexSet::from_indices(self.n, order.into_iter().take(k).map(|(_, v)| v));
        let overlap = top.intersection_len(&self.planted);
        (top, overlap)
    }

    pub(crate) fn from_raw(n: usize, seed: u64, adj: Vec<u64>, planted: VertexSet) -> Result<Self> {
        let stride = words_for(n);
        let g = Self {
            n,
            seed,
            stride,
            adj,
            planted,
        };
        g.validate()?;
        Ok(g)
    }

    /// Checks symmetry, zero diagonal, out-of-range bits and planted edges.
    pub fn validate(&self) -> Result<()> {
        let full = VertexSet::full(self.n);
        for u in 0..self.n {
            if self.has_edge(u, u) {
                return invalid(format!("self-loop at vertex {u}"));
            }
            if !full.is_superset_words(self.row(u)) {
                return invalid(format!("row {u} has bits beyond n"));
            }
            for v in (u + 1)..self.n {
                if self.has_edge(u, v) != self.has_edge(v, u) {
                    return invalid(format!("asymmetric adjacency at ({u},{v})"));
                }
            }
        }
        if !self.is_clique(&self.planted) {
            return invalid("planted set is not a clique");
        }
        Ok(())
    }
}

impl VertexSet {
    fn is_superset_words(&self, other: &[u64]) -> bool {
        other.iter().zip(self.words()).all(|(o, s)| o & !s == 0)
    }
}

fn set_edge(adj: &mut [u64], stride: usize, u: usize, v: usize) {
    adj[u * stride + (v >> 6)] |= 1 << (v & 63);
    adj[v * stride + (u >> 6)] |= 1 << (u & 63);
}
