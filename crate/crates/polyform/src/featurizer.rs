//! Two-hop path enumeration and the rotation/translation-invariant
//! five-tuple representation (d_ij, d_jk, theta, type_ij, type_jk), plus
//! the constructive inverse that rebuilds a graph from tuples.

use crate::geometry::Point;
use crate::hetgraph::{EdgeType, HeteroVisibilityGraph, NodeId};
use std::cmp::Ordering;
use std::collections::BTreeSet;
use thiserror::Error;

/// Consistency tolerance when a node is placed from two different paths.
pub const EPS_REC: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum FeaturizeError {
    #[error("degenerate geometry: coincident nodes {0} and {1}")]
    CoincidentNodes(usize, usize),
    #[error("tuples do not reach all nodes: {placed} of {total} placed")]
    InsufficientConnectivity { placed: usize, total: usize },
    #[error("inconsistent tuples: node {node} placed at conflicting positions ({dev:.3e} apart)")]
    Inconsistent { node: usize, dev: f64 },
    #[error("no tuples to reconstruct from")]
    Empty,
}

/// Path v_i <- v_j <- v_k converging on the head node i.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TwoHopPath {
    pub head: NodeId,
    pub mid: NodeId,
    pub tail: NodeId,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoHopTuple {
    pub d_ij: f64,
    pub d_jk: f64,
    /// Signed angle at v_j from ray v_j->v_i to ray v_j->v_k, positive
    /// clockwise, wrapped to [-pi, pi).
    pub theta: f64,
    pub type_ij: EdgeType,
    pub type_jk: EdgeType,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PathType {
    II,
    IC,
    CI,
    CC,
}

impl PathType {
    pub const ALL: [PathType; 4] = [PathType::II, PathType::IC, PathType::CI, PathType::CC];

    pub fn of(type_ij: EdgeType, type_jk: EdgeType) -> PathType {
        match (type_ij, type_jk) {
            (EdgeType::Inner, EdgeType::Inner) => PathType::II,
            (EdgeType::Inner, EdgeType::Cross) => PathType::IC,
            (EdgeType::Cross, EdgeType::Inner) => PathType::CI,
            (EdgeType::Cross, EdgeType::Cross) => PathType::CC,
        }
    }

    pub fn index(self) -> usize {
        match self {
            PathType::II => 0,
            PathType::IC => 1,
            PathType::CI => 2,
            PathType::CC => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PathType::II => "inner-inner",
            PathType::IC => "inner-cross",
            PathType::CI => "cross-inner",
            PathType::CC => "cross-cross",
        }
    }
}

impl TwoHopTuple {
    pub fn path_type(&self) -> PathType {
        PathType::of(self.type_ij, self.type_jk)
    }

    /// Total order on tuple values, independent of node ids.
    pub fn cmp_values(&self, other: &TwoHopTuple) -> Ordering {
        (self.path_type(), self.d_ij, self.d_jk, self.theta)
            .partial_cmp(&(other.path_type(), other.d_ij, other.d_jk, other.theta))
            .expect("finite tuple components")
    }
}

/// One path together with its tuple: the unit the network consumes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathRecord {
    pub path: TwoHopPath,
    pub tuple: TwoHopTuple,
}

/// Tuple multiset for a whole graph, with node count retained for
/// per-head grouping in message passing.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphTuples {
    pub num_nodes: usize,
    pub records: Vec<PathRecord>,
}

/// Wrap an angle to [-pi, pi); exact +pi maps to -pi.
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut x = (a + std::f64::consts::PI).rem_euclid(two_pi) - std::f64::consts::PI;
    if x >= std::f64::consts::PI {
        x = -std::f64::consts::PI;
    }
    x
}

/// All paths i <- j <- k: j an in-neighbor of i, k an in-neighbor of j,
/// excluding the backtrack k = i.
pub fn enumerate_two_hop(g: &HeteroVisibilityGraph, i: NodeId) -> Vec<TwoHopPath> {
    let mut out = Vec::new();
    for (j, _) in g.in_neighbors(i) {
        for (k, _) in g.in_neighbors(j) {
            if k != i {
                out.push(TwoHopPath {
                    head: i,
                    mid: j,
                    tail: k,
                });
            }
        }
    }
    out
}

/// Edge type between j (source side) and i (destination side) under the
/// traversal rule: inner edges only along their direction, cross both ways.
fn edge_type_between(g: &HeteroVisibilityGraph, src: NodeId, dst: NodeId) -> Option<EdgeType> {
    if g.inner_edges.contains(&(src, dst)) {
        return Some(EdgeType::Inner);
    }
    if g.cross_edges.contains(&(src, dst)) || g.cross_edges.contains(&(dst, src)) {
        return Some(EdgeType::Cross);
    }
    None
}

pub fn tuple_of(
    g: &HeteroVisibilityGraph,
    path: &TwoHopPath,
) -> Result<TwoHopTuple, FeaturizeError> {
    let (vi, vj, vk) = (g.coords(path.head), g.coords(path.mid), g.coords(path.tail));
    let d_ij = vi.dist(&vj);
    let d_jk = vj.dist(&vk);
    if d_ij == 0.0 {
        return Err(FeaturizeError::CoincidentNodes(path.head.0, path.mid.0));
    }
    if d_jk == 0.0 {
        return Err(FeaturizeError::CoincidentNodes(path.mid.0, path.tail.0));
    }
    let a = Point::new(vi.x - vj.x, vi.y - vj.y);
    let b = Point::new(vk.x - vj.x, vk.y - vj.y);
    let ccw = (a.x * b.y - a.y * b.x).atan2(a.x * b.x + a.y * b.y);
    let theta = wrap_angle(-ccw);
    let type_ij = edge_type_between(g, path.mid, path.head).expect("path edge j->i must exist");
    let type_jk = edge_type_between(g, path.tail, path.mid).expect("path edge k->j must exist");
    Ok(TwoHopTuple {
        d_ij,
        d_jk,
        theta,
        type_ij,
        type_jk,
    })
}

/// Tuples for every node's two-hop paths, computed in one sweep.
pub fn tuple_multiset(g: &HeteroVisibilityGraph) -> Result<GraphTuples, FeaturizeError> {
    let table = g.in_neighbor_table();
    let mut records = Vec::new();
    for i in 0..g.num_nodes() {
        for &(j, type_ij) in &table[i] {
            for &(k, type_jk) in &table[j.0] {
                if k.0 == i {
                    continue;
                }
                let path = TwoHopPath {
                    head: NodeId(i),
                    mid: j,
                    tail: k,
                };
                let (vi, vj, vk) = (g.coords(path.head), g.coords(path.mid), g.coords(path.tail));
                let d_ij = vi.dist(&vj);
                let d_jk = vj.dist(&vk);
                if d_ij == 0.0 {
                    return Err(FeaturizeError::CoincidentNodes(i, j.0));
                }
                if d_jk == 0.0 {
                    return Err(FeaturizeError::CoincidentNodes(j.0, k.0));
                }
                let a = Point::new(vi.x - vj.x, vi.y - vj.y);
                let b = Point::new(vk.x - vj.x, vk.y - vj.y);
                let ccw = (a.x * b.y - a.y * b.x).atan2(a.x * b.x + a.y * b.y);
                records.push(PathRecord {
                    path,
                    tuple: TwoHopTuple {
                        d_ij,
                        d_jk,
                        theta: wrap_angle(-ccw),
                        type_ij,
                        type_jk,
                    },
                });
            }
        }
    }
    Ok(GraphTuples {
        num_nodes: g.num_nodes(),
        records,
    })
}

// ---------------------------------------------------------------------------
// Reconstruction from tuples (graph up to a global rigid motion)
// ---------------------------------------------------------------------------

/// Local-frame coordinates of v_k: origin at v_j, positive x-axis along the
/// ray from v_i through v_j.
pub fn tail_local_coords(tuple: &TwoHopTuple) -> (f64, f64) {
    (
        -tuple.d_jk * tuple.theta.cos(),
        tuple.d_jk * tuple.theta.sin(),
    )
}

/// Rebuild a graph from path tuples. Seeds the first path at the origin and
/// breadth-first expands over paths whose (i, j) or (j, k) ends are already
/// placed. The result equals the source up to a global rigid motion.
pub fn reconstruct_from_tuples(
    tuples: &GraphTuples,
) -> Result<HeteroVisibilityGraph, FeaturizeError> {
    let n = tuples.num_nodes;
    let records = &tuples.records;
    let first = records.first().ok_or(FeaturizeError::Empty)?;
    let mut pos: Vec<Option<Point>> = vec![None; n];

    // Seed: v_j at origin, v_i at (-d_ij, 0); local frame equals global.
    pos[first.path.mid.0] = Some(Point::new(0.0, 0.0));
    pos[first.path.head.0] = Some(Point::new(-first.tuple.d_ij, 0.0));

    let mut placed = 2usize;
    let mut progress = true;
    while progress && placed < n {
        progress = false;
        for rec in records {
            let (i, j, k) = (rec.path.head.0, rec.path.mid.0, rec.path.tail.0);
            let t = &rec.tuple;
            match (pos[i], pos[j], pos[k]) {
                (Some(vi), Some(vj), None) => {
                    let d = vi.dist(&vj);
                    if d == 0.0 {
                        return Err(FeaturizeError::CoincidentNodes(i, j));
                    }
                    // unit x-axis of the local frame: direction v_i -> v_j
                    let ux = (vj.x - vi.x) / d;
                    let uy = (vj.y - vi.y) / d;
                    let (xk, yk) = tail_local_coords(t);
                    pos[k] = Some(Point::new(
                        vj.x + xk * ux - yk * uy,
                        vj.y + xk * uy + yk * ux,
                    ));
                    placed += 1;
                    progress = true;
                }
                (None, Some(vj), Some(vk)) => {
                    // invert: local angle of k is pi - theta; global angle of
                    // the j->k ray fixes the frame rotation
                    let alpha = std::f64::consts::PI - t.theta;
                    let gamma = (vk.y - vj.y).atan2(vk.x - vj.x);
                    let rho = gamma - alpha;
                    pos[i] = Some(Point::new(
                        vj.x - t.d_ij * rho.cos(),
                        vj.y - t.d_ij * rho.sin(),
                    ));
                    placed += 1;
                    progress = true;
                }
                _ => {}
            }
        }
    }
    if placed < n {
        return Err(FeaturizeError::InsufficientConnectivity { placed, total: n });
    }

    // Consistency: every tuple must agree with the placed coordinates.
    for rec in records {
        let (i, j, k) = (rec.path.head.0, rec.path.mid.0, rec.path.tail.0);
        let (vi, vj, vk) = (pos[i].unwrap(), pos[j].unwrap(), pos[k].unwrap());
        let d = vi.dist(&vj);
        let ux = (vj.x - vi.x) / d;
        let uy = (vj.y - vi.y) / d;
        let (xk, yk) = tail_local_coords(&rec.tuple);
        let expect = Point::new(vj.x + xk * ux - yk * uy, vj.y + xk * uy + yk * ux);
        let dev = expect.dist(&vk);
        if dev > EPS_REC {
            return Err(FeaturizeError::Inconsistent { node: k, dev });
        }
    }

    // Rebuild edges with types; inner edges keep their direction.
    let mut inner: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut cross: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut add = |src: usize, dst: usize, ty: EdgeType| match ty {
        EdgeType::Inner => {
            inner.insert((src, dst));
        }
        EdgeType::Cross => {
            cross.insert((src.min(dst), src.max(dst)));
        }
    };
    for rec in records {
        let (i, j, k) = (rec.path.head.0, rec.path.mid.0, rec.path.tail.0);
        add(j, i, rec.tuple.type_ij);
        add(k, j, rec.tuple.type_jk);
    }

    // Part membership is recoverable from inner cycles.
    let mut part = vec![usize::MAX; n];
    let mut next = vec![None; n];
    for &(s, d) in &inner {
        next[s] = Some(d);
    }
    let mut num_parts = 0;
    for start in 0..n {
        if part[start] != usize::MAX {
            continue;
        }
        let mut cur = start;
        loop {
            part[cur] = num_parts;
            cur = match next[cur] {
                Some(x) => x,
                None => break,
            };
            if cur == start {
                break;
            }
        }
        num_parts += 1;
    }

    Ok(HeteroVisibilityGraph {
        nodes: (0..n)
            .map(|i| crate::hetgraph::GraphNode {
                coords: pos[i].unwrap(),
                part: part[i],
            })
            .collect(),
        inner_edges: inner
            .into_iter()
            .map(|(a, b)| (NodeId(a), NodeId(b)))
            .collect(),
        cross_edges: cross
            .into_iter()
            .map(|(a, b)| (NodeId(a), NodeId(b)))
            .collect(),
        parts: vec![
            crate::hetgraph::PartInfo {
                kind: crate::hetgraph::PartKind::Exterior,
                polygon: 0,
            };
            num_parts
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Multipolygon, Point, Polygon, Ring};
    use crate::hetgraph::build_graph;

    fn unit_square_mp() -> Multipolygon {
        Multipolygon::new(vec![Polygon::new(
            Ring::new(vec![
                Point::new(0.0, 0.0),
                Point::new(1.0, 0.0),
                Point::new(1.0, 1.0),
                Point::new(0.0, 1.0),
            ]),
            vec![],
        )])
    }

    #[test]
    fn square_node_has_one_path() {
        let g = build_graph(&unit_square_mp()).unwrap();
        let paths = enumerate_two_hop(&g, NodeId(2));
        assert_eq!(paths.len(), 1);
        assert_eq!(
            paths[0],
            TwoHopPath {
                head: NodeId(2),
                mid: NodeId(1),
                tail: NodeId(0)
            }
        );
    }

    #[test]
    fn triangle_each_node_one_path() {
        let tri = Multipolygon::new(vec![Polygon::new(
            Ring::new(vec![
                Point::new(0.0, 0.0),
                Point::new(2.0, 0.0),
                Point::new(1.0, 2.0),
            ]),
            vec![],
        )]);
        let g = build_graph(&tri).unwrap();
        for i in 0..3 {
            assert_eq!(enumerate_two_hop(&g, NodeId(i)).len(), 1);
        }
    }

    #[test]
    fn square_tuple_values() {
        let g = build_graph(&unit_square_mp()).unwrap();
        let t = tuple_of(
            &g,
            &TwoHopPath {
                head: NodeId(2),
                mid: NodeId(1),
                tail: NodeId(0),
            },
        )
        .unwrap();
        assert!((t.d_ij - 1.0).abs() < 1e-12);
        assert!((t.d_jk - 1.0).abs() < 1e-12);
        assert!((t.theta + std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        assert_eq!(t.type_ij, EdgeType::Inner);
        assert_eq!(t.type_jk, EdgeType::Inner);

        // Lemma check: local-frame formulas recover the true v_k.
        let (xk, yk) = tail_local_coords(&t);
        // frame at v_j=(1,0), x-axis along v_i->v_j = (0,-1), y-axis (1,0)
        let vk = Point::new(1.0 + yk, 0.0 - xk);
        assert!(vk.dist(&Point::new(0.0, 0.0)) < 1e-12);
    }

    #[test]
    fn collinear_angles() {
        // k beyond j opposite i: rays coincide -> theta = 0
        let g = HeteroVisibilityGraph {
            nodes: vec![
                crate::hetgraph::GraphNode {
                    coords: Point::new(0.0, 0.0),
                    part: 0,
                },
                crate::hetgraph::GraphNode {
                    coords: Point::new(1.0, 0.0),
                    part: 0,
                },
                crate::hetgraph::GraphNode {
                    coords: Point::new(2.0, 0.0),
                    part: 0,
                },
            ],
            inner_edges: vec![],
            cross_edges: vec![],
            parts: vec![],
        };
        let path = TwoHopPath {
            head: NodeId(0),
            mid: NodeId(1),
            tail: NodeId(2),
        };
        // rays v_j->v_i = (-1,0), v_j->v_k = (1,0): opposite -> theta = -pi
        let mut g2 = g.clone();
        g2.inner_edges = vec![(NodeId(1), NodeId(0)), (NodeId(2), NodeId(1))];
        let t = tuple_of(&g2, &path).unwrap();
        assert_eq!(t.theta, -std::f64::consts::PI);

        // k back on the same side as i but further: rays coincide -> 0
        g2.nodes[2].coords = Point::new(-1.0, 0.0);
        let t = tuple_of(&g2, &path).unwrap();
        assert_eq!(t.theta, 0.0);
    }

    #[test]
    fn unit_square_multiset() {
        let g = build_graph(&unit_square_mp()).unwrap();
        let ts = tuple_multiset(&g).unwrap();
        assert_eq!(ts.records.len(), 4);
        for rec in &ts.records {
            assert!((rec.tuple.d_ij - 1.0).abs() < 1e-12);
            assert!((rec.tuple.theta + std::f64::consts::FRAC_PI_2).abs() < 1e-12);
            assert_eq!(rec.tuple.path_type(), PathType::II);
        }
    }

    #[test]
    fn multiset_invariant_under_rigid_motion() {
        use crate::geometry::{apply_transform, RigidTransform};
        let mp = unit_square_mp();
        let g = build_graph(&mp).unwrap();
        let base = tuple_multiset(&g).unwrap();
        let t = RigidTransform::new(1.234, -3.0, 9.5);
        let gt = build_graph(&apply_transform(&mp, &t)).unwrap();
        let moved = tuple_multiset(&gt).unwrap();
        assert_eq!(base.records.len(), moved.records.len());
        for (a, b) in base.records.iter().zip(&moved.records) {
            assert_eq!(a.path, b.path);
            assert!((a.tuple.d_ij - b.tuple.d_ij).abs() < 1e-9);
            assert!((a.tuple.d_jk - b.tuple.d_jk).abs() < 1e-9);
            assert!((a.tuple.theta - b.tuple.theta).abs() < 1e-9);
        }
    }

    #[test]
    fn mirror_negates_theta() {
        let mp = unit_square_mp();
        let g = build_graph(&mp).unwrap();
        let base = tuple_multiset(&g).unwrap();
        // reflect node coordinates across the x-axis, keeping edges fixed
        let mut gm = g.clone();
        for node in &mut gm.nodes {
            node.coords = Point::new(node.coords.x, -node.coords.y);
        }
        let mir = tuple_multiset(&gm).unwrap();
        for (a, b) in base.records.iter().zip(&mir.records) {
            assert_eq!(a.path, b.path);
            let want = wrap_angle(-a.tuple.theta);
            assert!((b.tuple.theta - want).abs() < 1e-12);
        }
    }

    #[test]
    fn reconstruct_square_from_tuples() {
        let g = build_graph(&unit_square_mp()).unwrap();
        let ts = tuple_multiset(&g).unwrap();
        let rec = reconstruct_from_tuples(&ts).unwrap();
        assert_eq!(rec.num_nodes(), 4);
        assert_eq!(rec.inner_edges.len(), 4);
        // pairwise distances preserved (rigid motion invariant check)
        for i in 0..4 {
            for j in (i + 1)..4 {
                let d0 = g.coords(NodeId(i)).dist(&g.coords(NodeId(j)));
                let d1 = rec.coords(NodeId(i)).dist(&rec.coords(NodeId(j)));
                assert!((d0 - d1).abs() < 1e-9, "pair ({i},{j}): {d0} vs {d1}");
            }
        }
    }

    #[test]
    fn reconstruct_donut_preserves_edge_types() {
        let mp = Multipolygon::new(vec![Polygon::new(
            Ring::new(vec![
                Point::new(0.0, 0.0),
                Point::new(4.0, 0.0),
                Point::new(4.0, 4.0),
                Point::new(0.0, 4.0),
            ]),
            vec![Ring::new(vec![
                Point::new(1.0, 1.0),
                Point::new(1.0, 3.0),
                Point::new(3.0, 3.0),
                Point::new(3.0, 1.0),
            ])],
        )]);
        let g = build_graph(&mp).unwrap();
        let ts = tuple_multiset(&g).unwrap();
        let rec = reconstruct_from_tuples(&ts).unwrap();
        assert_eq!(rec.inner_edges, g.inner_edges);
        let mut want: Vec<(usize, usize)> = g
            .cross_edges
            .iter()
            .map(|&(a, b)| (a.0.min(b.0), a.0.max(b.0)))
            .collect();
        want.sort_unstable();
        let got: Vec<(usize, usize)> = rec.cross_edges.iter().map(|&(a, b)| (a.0, b.0)).collect();
        assert_eq!(got, want);
        for i in 0..g.num_nodes() {
            for j in (i + 1)..g.num_nodes() {
                let d0 = g.coords(NodeId(i)).dist(&g.coords(NodeId(j)));
                let d1 = rec.coords(NodeId(i)).dist(&rec.coords(NodeId(j)));
                assert!((d0 - d1).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn path_count_identity() {
        let mp = Multipolygon::new(vec![Polygon::new(
            Ring::new(vec![
                Point::new(0.0, 0.0),
                Point::new(4.0, 0.0),
                Point::new(4.0, 4.0),
                Point::new(0.0, 4.0),
            ]),
            vec![Ring::new(vec![
                Point::new(1.0, 1.0),
                Point::new(1.0, 3.0),
                Point::new(3.0, 3.0),
                Point::new(3.0, 1.0),
            ])],
        )]);
        let g = build_graph(&mp).unwrap();
        let total: usize = (0..g.num_nodes())
            .map(|i| enumerate_two_hop(&g, NodeId(i)).len())
            .sum();
        assert_eq!(tuple_multiset(&g).unwrap().records.len(), total);
    }

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(std::f64::consts::PI), -std::f64::consts::PI);
        assert!(
            (wrap_angle(3.0 * std::f64::consts::PI / 2.0) + std::f64::consts::FRAC_PI_2).abs()
                < 1e-12
        );
        assert_eq!(wrap_angle(0.0), 0.0);
    }
}
