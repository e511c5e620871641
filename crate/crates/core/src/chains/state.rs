use crate::error::{Error, Result};
use crate::graph::{PlantedGraph, VertexSet};
use serde::Serialize;

/// Current clique with cached size and planted overlap.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct CliqueState {
    members: VertexSet,
    size: usize,
    pc_overlap: usize,
}

impl CliqueState {
    pub fn empty(n: usize) -> Self {
        Self {
            members: VertexSet::empty(n),
            size: 0,
            pc_overlap: 0,
        }
    }

    /// Fails with `InvalidState` if `members` is not a clique of `g`.
    pub fn new(g: &PlantedGraph, members: VertexSet) -> Result<Self> {
        if members.universe() != g.n() {
            return Err(Error::InvalidState(format!(
                "vertex set over {} vertices, graph has {}",
                members.universe(),
                g.n()
            )));
        }
        if !g.is_clique(&members) {
            return Err(Error::InvalidState(format!(
                "start set {members:?} is not a clique"
            )));
        }
        let size = members.len();
        let pc_overlap = members.intersection_len(g.planted());
        Ok(Self {
            members,
            size,
            pc_overlap,
        })
    }

    pub fn from_vertices(g: &PlantedGraph, vertices: &[usize]) -> Result<Self> {
        if let Some(&v) = vertices.iter().find(|&&v| v >= g.n()) {
            return Err(Error::InvalidState(format!("vertex {v} out of range")));
        }
        Self::new(g, VertexSet::from_indices(g.n(), vertices.iter().copied()))
    }

    #[inline]
    pub fn members(&self) -> &VertexSet {
        &self.members
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn pc_overlap(&self) -> usize {
        self.pc_overlap
    }

    #[inline]
    pub fn contains(&self, v: usize) -> bool {
        self.members.contains(v)
    }

    #[inline]
    pub(crate) fn add(&mut self, g: &PlantedGraph, v: usize) {
        self.members.insert(v);
        self.size += 1;
        self.pc_overlap += g.is_planted(v) as usize;
    }

    #[inline]
    pub(crate) fn remove(&mut self, g: &PlantedGraph, v: usize) {
        self.members.remove(v);
        self.size -= 1;
        self.pc_overlap -= g.is_planted(v) as usize;
    }

    /// Recomputes every cached quantity and checks the clique property.
    pub fn is_consistent(&self, g: &PlantedGraph) -> bool {
        g.is_clique(&self.members)
            && self.size == self.members.len()
            && self.pc_overlap == self.members.intersection_len(g.planted())
    }
}
