//! Classification metrics and message-count benchmarking.

use crate::featurizer::enumerate_two_hop;
use crate::hetgraph::{HeteroVisibilityGraph, NodeId};
use crate::sampler::{reduced_graph, SampledGraph};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub acc: f64,
    pub weighted_precision: f64,
    pub weighted_f1: f64,
    /// None when only one class appears in the labels.
    pub weighted_auc: Option<f64>,
    /// confusion[true][pred]
    pub confusion: Vec<Vec<usize>>,
}

/// Support-weighted precision, F1, and one-vs-rest ROC AUC (midrank ties).
/// Predictions are per-row argmax of `logits`; AUC uses the raw scores.
pub fn evaluate(logits: &Array2<f64>, labels: &[usize]) -> EvalReport {
    assert_eq!(
        logits.nrows(),
        labels.len(),
        "logits/labels length mismatch"
    );
    let k = logits.ncols();
    let n = labels.len();
    let preds: Vec<usize> = logits
        .rows()
        .into_iter()
        .map(|row| argmax_first(row.iter().copied()))
        .collect();
    let mut confusion = vec![vec![0usize; k]; k];
    for (&y, &p) in labels.iter().zip(&preds) {
        confusion[y][p] += 1;
    }
    let support: Vec<usize> = (0..k).map(|c| confusion[c].iter().sum()).collect();
    let acc = (0..k).map(|c| confusion[c][c]).sum::<usize>() as f64 / n as f64;

    let mut w_prec = 0.0;
    let mut w_f1 = 0.0;
    for c in 0..k {
        if support[c] == 0 {
            continue;
        }
        let tp = confusion[c][c] as f64;
        let pred_c: usize = (0..k).map(|t| confusion[t][c]).sum();
        let prec = if pred_c > 0 { tp / pred_c as f64 } else { 0.0 };
        let rec = tp / support[c] as f64;
        let f1 = if prec + rec > 0.0 {
            2.0 * prec * rec / (prec + rec)
        } else {
            0.0
        };
        let w = support[c] as f64 / n as f64;
        w_prec += w * prec;
        w_f1 += w * f1;
    }

    let classes_present = support.iter().filter(|&&s| s > 0).count();
    let weighted_auc = if classes_present < 2 {
        None
    } else {
        let mut total = 0.0;
        for c in 0..k {
            if support[c] == 0 {
                continue;
            }
            let scores: Vec<f64> = (0..n).map(|i| logits[(i, c)]).collect();
            let positives: Vec<bool> = labels.iter().map(|&y| y == c).collect();
            let w = support[c] as f64 / n as f64;
            total += w * binary_auc(&scores, &positives);
        }
        Some(total)
    };

    EvalReport {
        acc,
        weighted_precision: w_prec,
        weighted_f1: w_f1,
        weighted_auc,
        confusion,
    }
}

/// First maximal index; ties break toward the lower class.
pub fn argmax_first(scores: impl Iterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, v) in scores.enumerate() {
        if v > best_v {
            best = i;
            best_v = v;
        }
    }
    best
}

/// Mann-Whitney AUC: (rank-sum of positives − n_pos(n_pos+1)/2) / (n_pos·n_neg),
/// with midranks for tied scores.
fn binary_auc(scores: &[f64], positives: &[bool]) -> f64 {
    let n = scores.len();
    let n_pos = positives.iter().filter(|&&p| p).count();
    let n_neg = n - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return 0.5;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("finite scores"));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = midrank;
        }
        i = j + 1;
    }
    let rank_sum: f64 = (0..n).filter(|&i| positives[i]).map(|i| ranks[i]).sum();
    (rank_sum - n_pos as f64 * (n_pos as f64 + 1.0) / 2.0) / (n_pos as f64 * n_neg as f64)
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct MessageCounts {
    pub one_hop: usize,
    pub two_hop_full: usize,
    pub two_hop_reduced: usize,
}

impl std::ops::AddAssign for MessageCounts {
    fn add_assign(&mut self, rhs: MessageCounts) {
        self.one_hop += rhs.one_hop;
        self.two_hop_full += rhs.two_hop_full;
        self.two_hop_reduced += rhs.two_hop_reduced;
    }
}

/// One-hop = directed edge incidences: each inner edge once (it is only
/// traversable along its direction), each cross edge twice. Two-hop counts
/// are the number of two-hop paths on the full and reduced graphs.
pub fn count_messages(g: &HeteroVisibilityGraph, reduced: Option<&SampledGraph>) -> MessageCounts {
    let total_paths = |g: &HeteroVisibilityGraph| {
        (0..g.nodes.len())
            .map(|i| enumerate_two_hop(g, NodeId(i)).len())
            .sum()
    };
    let one_hop = g.inner_edges.len() + 2 * g.cross_edges.len();
    let two_hop_full: usize = total_paths(g);
    let two_hop_reduced = match reduced {
        Some(s) => total_paths(&reduced_graph(g, s)),
        None => two_hop_full,
    };
    MessageCounts {
        one_hop,
        two_hop_full,
        two_hop_reduced,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{parse_multipolygon, Multipolygon, Point, Polygon, Ring};
    use crate::hetgraph::build_graph;
    use crate::sampler::sample_spanning_tree;
    use ndarray::array;

    fn one_hot(labels: &[usize], k: usize) -> Array2<f64> {
        let mut m = Array2::zeros((labels.len(), k));
        for (i, &y) in labels.iter().enumerate() {
            m[(i, y)] = 1.0;
        }
        m
    }

    #[test]
    fn perfect_predictions_score_one() {
        let labels = [0, 1, 2, 0, 1, 2];
        let r = evaluate(&one_hot(&labels, 3), &labels);
        assert_eq!(r.acc, 1.0);
        assert_eq!(r.weighted_precision, 1.0);
        assert_eq!(r.weighted_f1, 1.0);
        assert_eq!(r.weighted_auc, Some(1.0));
        for (t, row) in r.confusion.iter().enumerate() {
            assert_eq!(
                row.iter().sum::<usize>(),
                labels.iter().filter(|&&y| y == t).count()
            );
        }
    }

    // Hand-worked: preds [1,1,0,0], labels [1,0,0,0].
    // confusion[true][pred]: [[2,1],[0,1]].
    // class 0: prec 2/2 = 1, rec 2/3, f1 = 0.8, support 3.
    // class 1: prec 1/2, rec 1/1, f1 = 2/3, support 1.
    // acc 3/4; weighted prec = (3·1 + 1·0.5)/4 = 0.875;
    // weighted f1 = (3·0.8 + 1·(2/3))/4 = 0.7666...
    #[test]
    fn hand_worked_binary_case() {
        let logits = array![[0.1, 0.9], [0.2, 0.8], [0.7, 0.3], [0.6, 0.4]];
        let labels = [1, 0, 0, 0];
        let r = evaluate(&logits, &labels);
        assert_eq!(r.acc, 0.75);
        assert!((r.weighted_precision - 0.875).abs() < 1e-12);
        assert!((r.weighted_f1 - (3.0 * 0.8 + 2.0 / 3.0) / 4.0).abs() < 1e-12);
        assert_eq!(r.confusion, vec![vec![2, 1], vec![0, 1]]);
    }

    #[test]
    fn single_class_auc_is_undefined() {
        let labels = [0, 0, 0];
        let r = evaluate(&one_hot(&labels, 2), &labels);
        assert_eq!(r.acc, 1.0);
        assert!(r.weighted_auc.is_none());
    }

    #[test]
    fn random_scores_give_half_auc() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let n = 4000;
        let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
        let mut logits = Array2::zeros((n, 2));
        for i in 0..n {
            logits[(i, 0)] = rng.gen::<f64>();
            logits[(i, 1)] = rng.gen::<f64>();
        }
        let auc = evaluate(&logits, &labels).weighted_auc.unwrap();
        assert!((auc - 0.5).abs() < 0.05, "auc {auc}");
    }

    #[test]
    fn midrank_ties_match_hand_value() {
        // scores [1,1,0,0], labels [1,0,1,0]: positives get midranks 3.5 and 1.5
        // → auc = (5 − 3) / 4 = 0.5
        assert_eq!(
            binary_auc(&[1.0, 1.0, 0.0, 0.0], &[true, false, true, false]),
            0.5
        );
        // all tied: auc 0.5 exactly
        assert_eq!(
            binary_auc(&[2.0; 6], &[true, true, false, false, true, false]),
            0.5
        );
    }

    #[test]
    fn unit_square_message_counts() {
        let g = build_graph(&parse_multipolygon("POLYGON ((0 0, 1 0, 1 1, 0 1, 0 0))").unwrap())
            .unwrap();
        let c = count_messages(&g, None);
        assert_eq!(c.one_hop, 4);
        assert_eq!(c.two_hop_full, 4);
        assert_eq!(c.two_hop_reduced, 4);
    }

    #[test]
    fn donut_reduction_shrinks_two_hop() {
        let outer = Ring::new(vec![
            Point::new(0.0, 0.0),
            Point::new(4.0, 0.0),
            Point::new(4.0, 4.0),
            Point::new(0.0, 4.0),
        ]);
        let hole = Ring::new(vec![
            Point::new(1.0, 1.0),
            Point::new(1.0, 3.0),
            Point::new(3.0, 3.0),
            Point::new(3.0, 1.0),
        ]);
        let mp = Multipolygon::new(vec![Polygon::new(outer, vec![hole])]);
        let g = build_graph(&mp).unwrap();
        let s = sample_spanning_tree(&g, 0).unwrap();
        let c = count_messages(&g, Some(&s));
        assert!(c.two_hop_reduced < c.two_hop_full);
        assert!(c.two_hop_reduced <= c.two_hop_full);
        assert_eq!(c.one_hop, g.inner_edges.len() + 2 * g.cross_edges.len());
    }
}
