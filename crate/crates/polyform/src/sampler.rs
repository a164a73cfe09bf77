//! Spanning-tree sampling of cross edges: shuffle the cross-edge list under
//! a seeded RNG, then greedily accept edges that join distinct part
//! components (randomized Kruskal over part supernodes).

use crate::hetgraph::{HeteroVisibilityGraph, NodeId};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SampleError {
    #[error("part supergraph is disconnected; unreachable parts: {0:?}")]
    Disconnected(Vec<usize>),
}

/// Cross-edge subset forming a spanning tree over parts, plus the seed that
/// produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledGraph {
    pub selected_cross: Vec<(NodeId, NodeId)>,
    pub seed: u64,
}

struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            self.parent[x] = self.find(self.parent[x]);
        }
        self.parent[x]
    }

    fn union(&mut self, x: usize, y: usize) -> bool {
        let (rx, ry) = (self.find(x), self.find(y));
        if rx == ry {
            return false;
        }
        match self.rank[rx].cmp(&self.rank[ry]) {
            std::cmp::Ordering::Less => self.parent[rx] = ry,
            std::cmp::Ordering::Greater => self.parent[ry] = rx,
            std::cmp::Ordering::Equal => {
                self.parent[ry] = rx;
                self.rank[rx] += 1;
            }
        }
        true
    }
}

/// Deterministic given (graph, seed). Errors when the part supergraph is
/// disconnected, naming the parts unreachable from part 0.
pub fn sample_spanning_tree(
    g: &HeteroVisibilityGraph,
    seed: u64,
) -> Result<SampledGraph, SampleError> {
    let num_parts = g.num_parts();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = g.cross_edges.clone();
    edges.shuffle(&mut rng);
    let mut uf = UnionFind::new(num_parts);
    let mut selected = Vec::with_capacity(num_parts.saturating_sub(1));
    for (a, b) in edges {
        let (pa, pb) = (g.nodes[a.0].part, g.nodes[b.0].part);
        if uf.union(pa, pb) {
            selected.push((a, b));
            if selected.len() + 1 == num_parts {
                break;
            }
        }
    }
    if selected.len() + 1 != num_parts {
        let root0 = uf.find(0);
        let unreachable: Vec<usize> = (1..num_parts).filter(|&p| uf.find(p) != root0).collect();
        return Err(SampleError::Disconnected(unreachable));
    }
    Ok(SampledGraph {
        selected_cross: selected,
        seed,
    })
}

/// Same nodes and inner edges as the base; cross edges replaced by the
/// spanning-tree subset.
pub fn reduced_graph(base: &HeteroVisibilityGraph, s: &SampledGraph) -> HeteroVisibilityGraph {
    base.with_cross_edges(s.selected_cross.clone())
}
