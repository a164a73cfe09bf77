//! Independent oracles shared by the integration and acceptance tests.
//! These deliberately re-derive results from first principles rather than
//! calling the library's optimized paths.

#![allow(dead_code)]

use polyform::geometry::{Multipolygon, Point};
use polyform::hetgraph::{HeteroVisibilityGraph, NodeId};

/// Brute-force segment intersection on the open segment p-q against every
/// boundary segment, with no bounding-box prefilter. Mirrors the visibility
/// definition: proper crossings, interior vertex touches, and collinear
/// overlaps all block.
pub fn visible_oracle(p: Point, q: Point, mp: &Multipolygon) -> bool {
    let eps = 1e-9;
    let cross =
        |o: Point, a: Point, b: Point| (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
    let on_open_segment = |a: Point, b: Point, t: Point| {
        cross(a, b, t).abs() <= eps
            && t.x >= a.x.min(b.x) - eps
            && t.x <= a.x.max(b.x) + eps
            && t.y >= a.y.min(b.y) - eps
            && t.y <= a.y.max(b.y) + eps
            && t != a
            && t != b
    };
    for ring in mp.rings() {
        for (a, b) in ring.segments() {
            // shared endpoints do not block on their own
            let shares = |t: Point| t == a || t == b;
            let d1 = cross(p, q, a);
            let d2 = cross(p, q, b);
            let d3 = cross(a, b, p);
            let d4 = cross(a, b, q);
            if d1.abs() > eps
                && d2.abs() > eps
                && d3.abs() > eps
                && d4.abs() > eps
                && (d1 > 0.0) != (d2 > 0.0)
                && (d3 > 0.0) != (d4 > 0.0)
            {
                return false; // proper crossing
            }
            // segment endpoint strictly inside the sightline
            if on_open_segment(p, q, a) && !shares(a) || on_open_segment(p, q, b) && !shares(b) {
                return false;
            }
            if !shares(p) && on_open_segment(a, b, p) || !shares(q) && on_open_segment(a, b, q) {
                return false;
            }
            // endpoint of the sightline touching the segment interior, or
            // full collinear overlap, are both caught above; the remaining
            // case is two collinear segments sharing more than a point
            if d1.abs() <= eps && d2.abs() <= eps {
                // both collinear: overlap iff projections intersect in more
                // than an endpoint
                let (lo1, hi1) = minmax_proj(p, q, a, b);
                let (lo2, hi2) = minmax_proj(a, b, a, b);
                let lo = lo1.max(lo2);
                let hi = hi1.min(hi2);
                if hi - lo > eps {
                    return false;
                }
            }
        }
    }
    true
}

fn minmax_proj(p: Point, q: Point, axis_a: Point, axis_b: Point) -> (f64, f64) {
    let dx = axis_b.x - axis_a.x;
    let dy = axis_b.y - axis_a.y;
    let proj = |t: Point| (t.x - axis_a.x) * dx + (t.y - axis_a.y) * dy;
    let (a, b) = (proj(p), proj(q));
    (a.min(b), a.max(b))
}

/// Count two-hop paths v_i <- v_j <- v_k by direct double loop over an
/// adjacency list built from the edge arrays, independent of the
/// featurizer's traversal.
pub fn two_hop_count_oracle(g: &HeteroVisibilityGraph) -> usize {
    let n = g.nodes.len();
    // in_adj[i] = nodes j such that the step j -> i is traversable
    let mut in_adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(a, b) in &g.inner_edges {
        in_adj[b.0].push(a.0);
    }
    for &(a, b) in &g.cross_edges {
        in_adj[b.0].push(a.0);
        in_adj[a.0].push(b.0);
    }
    let mut count = 0;
    for i in 0..n {
        for &j in &in_adj[i] {
            for &k in &in_adj[j] {
                if k != i {
                    count += 1;
                }
            }
        }
    }
    count
}

/// Brute-force classification metrics from the confusion matrix, written
/// separately from `metrics::evaluate`.
pub struct MetricsOracle {
    pub acc: f64,
    pub weighted_precision: f64,
    pub weighted_f1: f64,
    pub weighted_auc: Option<f64>,
    pub confusion: Vec<Vec<usize>>,
}

pub fn metrics_oracle(scores: &[Vec<f64>], labels: &[usize]) -> MetricsOracle {
    let k = scores[0].len();
    let n = labels.len();
    let pred = |row: &Vec<f64>| {
        let mut best = 0;
        for c in 1..k {
            if row[c] > row[best] {
                best = c;
            }
        }
        best
    };
    let mut confusion = vec![vec![0usize; k]; k];
    for (row, &y) in scores.iter().zip(labels) {
        confusion[y][pred(row)] += 1;
    }
    let mut correct = 0;
    let mut w_prec = 0.0;
    let mut w_f1 = 0.0;
    for c in 0..k {
        correct += confusion[c][c];
        let support: usize = confusion[c].iter().sum();
        if support == 0 {
            continue;
        }
        let tp = confusion[c][c] as f64;
        let fp: usize = (0..k).filter(|&t| t != c).map(|t| confusion[t][c]).sum();
        let fn_: usize = (0..k).filter(|&p| p != c).map(|p| confusion[c][p]).sum();
        let prec = if tp + fp as f64 > 0.0 {
            tp / (tp + fp as f64)
        } else {
            0.0
        };
        let rec = tp / (tp + fn_ as f64);
        let f1 = if prec + rec > 0.0 {
            2.0 * prec * rec / (prec + rec)
        } else {
            0.0
        };
        w_prec += (support as f64 / n as f64) * prec;
        w_f1 += (support as f64 / n as f64) * f1;
    }
    let present = (0..k)
        .filter(|&c| confusion[c].iter().sum::<usize>() > 0)
        .count();
    let weighted_auc = if present < 2 {
        None
    } else {
        let mut total = 0.0;
        for c in 0..k {
            let support: usize = confusion[c].iter().sum();
            if support == 0 {
                continue;
            }
            // O(n^2) pair counting, ties worth 1/2 — definitionally the
            // Mann-Whitney statistic
            let mut wins = 0.0;
            let mut pairs = 0.0;
            for i in 0..n {
                if labels[i] != c {
                    continue;
                }
                for j in 0..n {
                    if labels[j] == c {
                        continue;
                    }
                    pairs += 1.0;
                    if scores[i][c] > scores[j][c] {
                        wins += 1.0;
                    } else if scores[i][c] == scores[j][c] {
                        wins += 0.5;
                    }
                }
            }
            total += (support as f64 / n as f64) * if pairs > 0.0 { wins / pairs } else { 0.5 };
        }
        Some(total)
    };
    MetricsOracle {
        acc: correct as f64 / n as f64,
        weighted_precision: w_prec,
        weighted_f1: w_f1,
        weighted_auc,
        confusion,
    }
}

/// Best rigid (rotation + translation, no reflection) alignment of `from`
/// onto `to`; returns the RMS residual. 2D Kabsch via the closed form.
pub fn rigid_rms(from: &[Point], to: &[Point]) -> f64 {
    assert_eq!(from.len(), to.len());
    let n = from.len() as f64;
    let cf = centroid(from);
    let ct = centroid(to);
    // cross-covariance terms
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syx = 0.0;
    let mut syy = 0.0;
    for (f, t) in from.iter().zip(to) {
        let fx = f.x - cf.x;
        let fy = f.y - cf.y;
        let tx = t.x - ct.x;
        let ty = t.y - ct.y;
        sxx += fx * tx;
        sxy += fx * ty;
        syx += fy * tx;
        syy += fy * ty;
    }
    // optimal rotation angle: atan2(sxy - syx, sxx + syy)
    let angle = (sxy - syx).atan2(sxx + syy);
    let (s, c) = angle.sin_cos();
    let mut sq = 0.0;
    for (f, t) in from.iter().zip(to) {
        let fx = f.x - cf.x;
        let fy = f.y - cf.y;
        let rx = c * fx - s * fy;
        let ry = s * fx + c * fy;
        let dx = rx - (t.x - ct.x);
        let dy = ry - (t.y - ct.y);
        sq += dx * dx + dy * dy;
    }
    (sq / n).sqrt()
}

fn centroid(pts: &[Point]) -> Point {
    let n = pts.len() as f64;
    Point::new(
        pts.iter().map(|p| p.x).sum::<f64>() / n,
        pts.iter().map(|p| p.y).sum::<f64>() / n,
    )
}

pub fn node_coords(g: &HeteroVisibilityGraph) -> Vec<Point> {
    (0..g.nodes.len()).map(|i| g.coords(NodeId(i))).collect()
}
