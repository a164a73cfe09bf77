//! Heterogeneous visibility graph: directed inner edges tracing each ring,
//! undirected cross edges joining mutually visible vertices of different
//! parts, and the inverse transform back to a multipolygon.

use crate::geometry::{
    point_in_ring, signed_area, visible, GeometryError, Multipolygon, Point, Polygon, Ring,
};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("inner edges do not form disjoint simple cycles: {0}")]
    BrokenInnerCycles(String),
    #[error("reconstructed hole (starting at node {0}) is contained in no exterior ring")]
    OrphanHole(usize),
    #[error("graph JSON: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EdgeType {
    Inner,
    Cross,
}

impl std::fmt::Display for EdgeType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EdgeType::Inner => "inner",
            EdgeType::Cross => "cross",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PartKind {
    Exterior,
    Hole,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphNode {
    pub coords: Point,
    pub part: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartInfo {
    pub kind: PartKind,
    pub polygon: usize,
}

/// G(V, E, X, φ): nodes carry coordinates and part membership, inner edges
/// are directed, cross edges are stored once as unordered pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeteroVisibilityGraph {
    pub nodes: Vec<GraphNode>,
    pub inner_edges: Vec<(NodeId, NodeId)>,
    pub cross_edges: Vec<(NodeId, NodeId)>,
    pub parts: Vec<PartInfo>,
}

impl HeteroVisibilityGraph {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_parts(&self) -> usize {
        self.parts.len()
    }

    /// In-neighbors of `i` with edge types: inner edges only along their
    /// direction, cross edges from both sides.
    pub fn in_neighbors(&self, i: NodeId) -> Vec<(NodeId, EdgeType)> {
        let mut out = Vec::new();
        for &(src, dst) in &self.inner_edges {
            if dst == i {
                out.push((src, EdgeType::Inner));
            }
        }
        for &(a, b) in &self.cross_edges {
            if a == i {
                out.push((b, EdgeType::Cross));
            } else if b == i {
                out.push((a, EdgeType::Cross));
            }
        }
        out
    }

    /// In-neighbor lists for every node, computed in one pass.
    pub fn in_neighbor_table(&self) -> Vec<Vec<(NodeId, EdgeType)>> {
        let mut table = vec![Vec::new(); self.nodes.len()];
        for &(src, dst) in &self.inner_edges {
            table[dst.0].push((src, EdgeType::Inner));
        }
        for &(a, b) in &self.cross_edges {
            table[a.0].push((b, EdgeType::Cross));
            table[b.0].push((a, EdgeType::Cross));
        }
        table
    }

    pub fn coords(&self, i: NodeId) -> Point {
        self.nodes[i.0].coords
    }

    /// Same nodes and inner edges, cross edges replaced wholesale.
    pub fn with_cross_edges(&self, cross: Vec<(NodeId, NodeId)>) -> HeteroVisibilityGraph {
        HeteroVisibilityGraph {
            nodes: self.nodes.clone(),
            inner_edges: self.inner_edges.clone(),
            cross_edges: cross,
            parts: self.parts.clone(),
        }
    }
}

/// Cross edges grouped by the unordered pair of parts they join.
#[derive(Debug, Clone, PartialEq)]
pub struct PartSupergraph {
    pub num_parts: usize,
    pub superedges: BTreeMap<(usize, usize), Vec<(NodeId, NodeId)>>,
}

/// Build the heterogeneous visibility graph. Node order follows the input:
/// polygons in order, exterior ring then holes, vertices in stored order.
pub fn build_graph(mp: &Multipolygon) -> Result<HeteroVisibilityGraph, GraphError> {
    mp.validate()?;
    let mut nodes = Vec::new();
    let mut inner_edges = Vec::new();
    let mut parts = Vec::new();
    for (pi, poly) in mp.polygons.iter().enumerate() {
        for (ri, ring) in poly.rings().enumerate() {
            let part = parts.len();
            parts.push(PartInfo {
                kind: if ri == 0 {
                    PartKind::Exterior
                } else {
                    PartKind::Hole
                },
                polygon: pi,
            });
            let base = nodes.len();
            let n = ring.len();
            for v in &ring.vertices {
                nodes.push(GraphNode { coords: *v, part });
            }
            for k in 0..n {
                inner_edges.push((NodeId(base + k), NodeId(base + (k + 1) % n)));
            }
        }
    }
    let mut cross_edges = Vec::new();
    for i in 0..nodes.len() {
        for j in (i + 1)..nodes.len() {
            if nodes[i].part == nodes[j].part {
                continue;
            }
            if visible(nodes[i].coords, nodes[j].coords, mp)? {
                cross_edges.push((NodeId(i), NodeId(j)));
            }
        }
    }
    Ok(HeteroVisibilityGraph {
        nodes,
        inner_edges,
        cross_edges,
        parts,
    })
}

pub fn part_supergraph(g: &HeteroVisibilityGraph) -> PartSupergraph {
    let mut superedges: BTreeMap<(usize, usize), Vec<(NodeId, NodeId)>> = BTreeMap::new();
    for &(a, b) in &g.cross_edges {
        let (pa, pb) = (g.nodes[a.0].part, g.nodes[b.0].part);
        let key = (pa.min(pb), pa.max(pb));
        superedges.entry(key).or_default().push((a, b));
    }
    PartSupergraph {
        num_parts: g.parts.len(),
        superedges,
    }
}

/// Invert the graph transform: follow inner cycles to recover rings,
/// classify by orientation, assign holes to containing exteriors.
/// Cross edges carry no shape information and are ignored.
pub fn reconstruct_multipolygon(g: &HeteroVisibilityGraph) -> Result<Multipolygon, GraphError> {
    let n = g.nodes.len();
    let mut next = vec![None; n];
    for &(src, dst) in &g.inner_edges {
        if next[src.0].replace(dst).is_some() {
            return Err(GraphError::BrokenInnerCycles(format!(
                "node {} has multiple outgoing inner edges",
                src.0
            )));
        }
    }
    let mut visited = vec![false; n];
    let mut exteriors: Vec<(usize, Ring)> = Vec::new();
    let mut holes: Vec<(usize, Ring)> = Vec::new();
    for start in 0..n {
        if visited[start] {
            continue;
        }
        let mut cycle = Vec::new();
        let mut cur = start;
        loop {
            if visited[cur] {
                return Err(GraphError::BrokenInnerCycles(format!(
                    "cycle through node {cur} revisits a consumed node"
                )));
            }
            visited[cur] = true;
            cycle.push(g.nodes[cur].coords);
            cur = match next[cur] {
                Some(NodeId(k)) => k,
                None => {
                    return Err(GraphError::BrokenInnerCycles(format!(
                        "node {cur} has no outgoing inner edge"
                    )))
                }
            };
            if cur == start {
                break;
            }
        }
        let ring = Ring::new(cycle);
        let area = signed_area(&ring)?;
        if area > 0.0 {
            exteriors.push((start, ring));
        } else {
            holes.push((start, ring));
        }
    }
    let mut polygons: Vec<Polygon> = exteriors
        .iter()
        .map(|(_, r)| Polygon::new(r.clone(), vec![]))
        .collect();
    for (start, hole) in holes {
        let probe = hole.vertices[0];
        let owner = exteriors
            .iter()
            .position(|(_, ext)| point_in_ring(probe, ext))
            .ok_or(GraphError::OrphanHole(start))?;
        polygons[owner].holes.push(hole);
    }
    Ok(Multipolygon::new(polygons))
}

/// Normalize ring starts and part ordering so structural equality means
/// "same multipolygon": rings start at their lexicographically smallest
/// vertex, holes sort by start vertex, polygons sort by boundary start.
pub fn canonical_form(mp: &Multipolygon) -> Multipolygon {
    let key = |p: &Point| (p.x, p.y);
    let mut polygons: Vec<Polygon> = mp
        .polygons
        .iter()
        .map(|p| {
            let boundary = p.boundary.rotated_to_min_start();
            let mut holes: Vec<Ring> = p.holes.iter().map(|h| h.rotated_to_min_start()).collect();
            holes.sort_by(|a, b| {
                key(&a.vertices[0])
                    .partial_cmp(&key(&b.vertices[0]))
                    .expect("finite coordinates")
            });
            Polygon::new(boundary, holes)
        })
        .collect();
    polygons.sort_by(|a, b| {
        key(&a.boundary.vertices[0])
            .partial_cmp(&key(&b.boundary.vertices[0]))
            .expect("finite coordinates")
    });
    Multipolygon::new(polygons)
}

// ---------------------------------------------------------------------------
// JSON export
// ---------------------------------------------------------------------------

pub fn graph_to_json(g: &HeteroVisibilityGraph) -> String {
    let nodes: Vec<_> = g
        .nodes
        .iter()
        .enumerate()
        .map(
            |(i, n)| serde_json::json!({"id": i, "x": n.coords.x, "y": n.coords.y, "part": n.part}),
        )
        .collect();
    let parts: Vec<_> = g
        .parts
        .iter()
        .map(|p| {
            serde_json::json!({
                "kind": match p.kind { PartKind::Exterior => "exterior", PartKind::Hole => "hole" },
                "polygon": p.polygon,
            })
        })
        .collect();
    serde_json::json!({
        "nodes": nodes,
        "inner_edges": g.inner_edges.iter().map(|(a, b)| [a.0, b.0]).collect::<Vec<_>>(),
        "cross_edges": g.cross_edges.iter().map(|(a, b)| [a.0, b.0]).collect::<Vec<_>>(),
        "parts": parts,
    })
    .to_string()
}

pub fn graph_from_json(text: &str) -> Result<HeteroVisibilityGraph, GraphError> {
    #[derive(Deserialize)]
    struct NodeJson {
        id: usize,
        x: f64,
        y: f64,
        part: usize,
    }
    #[derive(Deserialize)]
    struct PartJson {
        kind: String,
        polygon: usize,
    }
    #[derive(Deserialize)]
    struct GraphJson {
        nodes: Vec<NodeJson>,
        inner_edges: Vec<[usize; 2]>,
        cross_edges: Vec<[usize; 2]>,
        parts: Vec<PartJson>,
    }
    let gj: GraphJson =
        serde_json::from_str(text).map_err(|e| GraphError::Format(e.to_string()))?;
    let n = gj.nodes.len();
    let mut nodes = vec![None; n];
    for nj in gj.nodes {
        if nj.id >= n {
            return Err(GraphError::Format(format!(
                "node id {} out of range",
                nj.id
            )));
        }
        nodes[nj.id] = Some(GraphNode {
            coords: Point::new(nj.x, nj.y),
            part: nj.part,
        });
    }
    let nodes: Vec<GraphNode> = nodes
        .into_iter()
        .collect::<Option<_>>()
        .ok_or_else(|| GraphError::Format("missing node id".into()))?;
    let check = |(a, b): (usize, usize)| -> Result<(NodeId, NodeId), GraphError> {
        if a >= n || b >= n {
            return Err(GraphError::Format(format!("edge ({a},{b}) out of range")));
        }
        Ok((NodeId(a), NodeId(b)))
    };
    let parts = gj
        .parts
        .iter()
        .map(|p| {
            Ok(PartInfo {
                kind: match p.kind.as_str() {
                    "exterior" => PartKind::Exterior,
                    "hole" => PartKind::Hole,
                    other => return Err(GraphError::Format(format!("bad part kind '{other}'"))),
                },
                polygon: p.polygon,
            })
        })
        .collect::<Result<Vec<_>, GraphError>>()?;
    Ok(HeteroVisibilityGraph {
        nodes,
        inner_edges: gj
            .inner_edges
            .into_iter()
            .map(|[a, b]| check((a, b)))
            .collect::<Result<_, _>>()?,
        cross_edges: gj
            .cross_edges
            .into_iter()
            .map(|[a, b]| check((a, b)))
            .collect::<Result<_, _>>()?,
        parts,
    })
}
