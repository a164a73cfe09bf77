//! The multipolygon network: per-path-type message stacks, a shared
//! geo-embedding stack, learnable path-type scalars, two-hop summation,
//! layer-concatenated readout, and a classifier head. Forward and backward
//! are hand-written and exact.

use crate::featurizer::GraphTuples;
use crate::nn::layers::{DenseStack, Mode, StackCache};
use ndarray::{s, Array1, Array2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::cmp::Ordering;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("readout width {got} does not match head input {want}")]
    WidthMismatch { got: usize, want: usize },
    #[error("non-finite loss")]
    NonFiniteLoss,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ModelConfig {
    pub hidden: usize,
    pub geo_dim: usize,
    pub num_layers: usize,
    pub num_classes: usize,
}

impl ModelConfig {
    pub fn new(hidden: usize, num_layers: usize, num_classes: usize) -> Self {
        ModelConfig {
            hidden,
            geo_dim: hidden,
            num_layers,
            num_classes,
        }
    }
}

/// One message-passing layer: Psi per path type, the geo stack, and the
/// path-type scalar weights.
#[derive(Debug, Clone, PartialEq)]
pub struct GnnLayer {
    pub psi: Vec<DenseStack>,
    pub geo: DenseStack,
    pub w: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub layers: Vec<GnnLayer>,
    pub head: DenseStack,
}

impl Model {
    pub fn init(config: ModelConfig, seed: u64) -> Model {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = config.hidden;
        let psi_in = 3 * h + config.geo_dim;
        let layers = (0..config.num_layers)
            .map(|_| GnnLayer {
                psi: (0..4)
                    .map(|_| DenseStack::init(&mut rng, psi_in, &[h, h, h, h], true))
                    .collect(),
                geo: DenseStack::init_norm_affine(&mut rng, 3, config.geo_dim),
                w: Array1::ones(4),
            })
            .collect();
        let head = DenseStack::init(
            &mut rng,
            config.num_layers * h,
            &[h, h, h, config.num_classes],
            true,
        );
        Model {
            config,
            layers,
            head,
        }
    }

    pub fn zeros_like(&self) -> Model {
        Model {
            config: self.config.clone(),
            layers: self
                .layers
                .iter()
                .map(|l| GnnLayer {
                    psi: l.psi.iter().map(|s| s.zeros_like()).collect(),
                    geo: l.geo.zeros_like(),
                    w: Array1::zeros(4),
                })
                .collect(),
            head: self.head.zeros_like(),
        }
    }

    pub fn trainable_slices(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for layer in &mut self.layers {
            for psi in &mut layer.psi {
                out.append(&mut psi.trainable_slices());
            }
            out.append(&mut layer.geo.trainable_slices());
            out.push(layer.w.as_slice_mut().expect("contiguous"));
        }
        out.append(&mut self.head.trainable_slices());
        out
    }

    pub fn state_slices(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for layer in &mut self.layers {
            for psi in &mut layer.psi {
                out.append(&mut psi.state_slices());
            }
            out.append(&mut layer.geo.state_slices());
            out.push(layer.w.as_slice_mut().expect("contiguous"));
        }
        out.append(&mut self.head.state_slices());
        out
    }

    pub fn num_params(&mut self) -> usize {
        self.trainable_slices().iter().map(|s| s.len()).sum()
    }

    /// |w| per path type normalized to sum to 1 within each layer, plus the
    /// model-wide aggregate.
    pub fn interaction_weights(&self) -> (Vec<[f64; 4]>, [f64; 4]) {
        let mut per_layer = Vec::new();
        let mut total = [0.0; 4];
        for layer in &self.layers {
            let abs: Vec<f64> = layer.w.iter().map(|w| w.abs()).collect();
            let sum: f64 = abs.iter().sum();
            let mut rel = [0.0; 4];
            for t in 0..4 {
                rel[t] = if sum > 0.0 { abs[t] / sum } else { 0.25 };
                total[t] += abs[t];
            }
            per_layer.push(rel);
        }
        let tsum: f64 = total.iter().sum();
        let agg = if tsum > 0.0 {
            [
                total[0] / tsum,
                total[1] / tsum,
                total[2] / tsum,
                total[3] / tsum,
            ]
        } else {
            [0.25; 4]
        };
        (per_layer, agg)
    }
}

// ---------------------------------------------------------------------------
// Forward
// ---------------------------------------------------------------------------

pub struct LayerTrace {
    /// (sample, record) pairs in global row order: grouped by path type,
    /// then by sample, then canonical within the sample.
    rows: Vec<(usize, usize)>,
    /// Half-open global row ranges per path type.
    type_ranges: [(usize, usize); 4],
    geo_cache: StackCache,
    psi_cache: Vec<Option<StackCache>>,
    pub psi_out: Vec<Array2<f64>>,
}

pub struct BatchTrace {
    pub layers: Vec<LayerTrace>,
    /// One readout row per sample, width num_layers * hidden.
    pub readouts: Array2<f64>,
}

/// Compare two path records by content: tuple values first, then the current
/// embeddings of the three endpoints. Node ids never enter the key, so the
/// order (and therefore every floating-point sum) is stable under node
/// relabeling.
fn canonical_order(tuples: &GraphTuples, h: &Array2<f64>) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..tuples.records.len()).collect();
    idx.sort_by(|&a, &b| {
        let ra = &tuples.records[a];
        let rb = &tuples.records[b];
        let c = ra.tuple.cmp_values(&rb.tuple);
        if c != Ordering::Equal {
            return c;
        }
        for (na, nb) in [
            (ra.path.head.0, rb.path.head.0),
            (ra.path.mid.0, rb.path.mid.0),
            (ra.path.tail.0, rb.path.tail.0),
        ] {
            let va = h.row(na);
            let vb = h.row(nb);
            for (x, y) in va.iter().zip(vb.iter()) {
                match x.partial_cmp(y).expect("finite embeddings") {
                    Ordering::Equal => continue,
                    other => return other,
                }
            }
        }
        Ordering::Equal
    });
    idx
}

/// Run the message-passing layers over a batch of samples jointly. Batch
/// normalization statistics cover every path row in the batch, matching
/// the running statistics used at inference. Node embeddings start at
/// zero; each sample's readout concatenates its per-layer message sums.
pub fn gnn_forward_batch(model: &mut Model, batch: &[&GraphTuples], mode: Mode) -> BatchTrace {
    let h_dim = model.config.hidden;
    let num_layers = model.layers.len();
    let offsets: Vec<usize> = batch
        .iter()
        .scan(0usize, |acc, t| {
            let o = *acc;
            *acc += t.num_nodes;
            Some(o)
        })
        .collect();
    let total_nodes: usize = batch.iter().map(|t| t.num_nodes).sum();
    let mut h_prev: Array2<f64> = Array2::zeros((total_nodes, h_dim));
    let mut traces = Vec::with_capacity(num_layers);
    let mut readouts: Array2<f64> = Array2::zeros((batch.len(), num_layers * h_dim));
    for (l, layer) in model.layers.iter_mut().enumerate() {
        // canonical order per sample, then the global row layout:
        // type-major, sample within type, canonical within sample
        let mut rows: Vec<(usize, usize)> = Vec::new();
        let mut type_ranges = [(0usize, 0usize); 4];
        let orders: Vec<Vec<usize>> = batch
            .iter()
            .enumerate()
            .map(|(si, t)| {
                let view = h_prev.slice(s![offsets[si]..offsets[si] + t.num_nodes, ..]);
                canonical_order(t, &view.to_owned())
            })
            .collect();
        for t in 0..4 {
            let start = rows.len();
            for (si, tuples) in batch.iter().enumerate() {
                for &r in &orders[si] {
                    if tuples.records[r].tuple.path_type().index() == t {
                        rows.push((si, r));
                    }
                }
            }
            type_ranges[t] = (start, rows.len());
        }
        let p = rows.len();
        let mut geo_in = Array2::zeros((p, 3));
        for (row, &(si, r)) in rows.iter().enumerate() {
            let t = &batch[si].records[r].tuple;
            geo_in[[row, 0]] = t.d_ij;
            geo_in[[row, 1]] = t.d_jk;
            geo_in[[row, 2]] = t.theta;
        }
        let (geo_out, geo_cache) = if p > 0 {
            layer.geo.forward(&geo_in, mode)
        } else {
            (
                Array2::zeros((0, model.config.geo_dim)),
                StackCache { layers: vec![] },
            )
        };
        let mut h_next = Array2::zeros((total_nodes, h_dim));
        let mut psi_cache_all = Vec::with_capacity(4);
        let mut psi_out_all = Vec::with_capacity(4);
        for t in 0..4 {
            let (start, end) = type_ranges[t];
            let n_rows = end - start;
            if n_rows == 0 {
                psi_cache_all.push(None);
                psi_out_all.push(Array2::zeros((0, h_dim)));
                continue;
            }
            let mut psi_in = Array2::zeros((n_rows, 3 * h_dim + model.config.geo_dim));
            for (local, &(si, r)) in rows[start..end].iter().enumerate() {
                let rec = &batch[si].records[r];
                let off = offsets[si];
                psi_in
                    .slice_mut(s![local, 0..h_dim])
                    .assign(&h_prev.row(off + rec.path.head.0));
                psi_in
                    .slice_mut(s![local, h_dim..2 * h_dim])
                    .assign(&h_prev.row(off + rec.path.mid.0));
                psi_in
                    .slice_mut(s![local, 2 * h_dim..3 * h_dim])
                    .assign(&h_prev.row(off + rec.path.tail.0));
                psi_in
                    .slice_mut(s![local, 3 * h_dim..])
                    .assign(&geo_out.row(start + local));
            }
            let (out, cache) = layer.psi[t].forward(&psi_in, mode);
            let w = layer.w[t];
            // scatter messages to head nodes, and accumulate each sample's
            // readout segment in the same canonical row order
            for (local, &(si, r)) in rows[start..end].iter().enumerate() {
                let head = offsets[si] + batch[si].records[r].path.head.0;
                let msg = out.row(local);
                let mut dst = h_next.row_mut(head);
                dst.zip_mut_with(&msg, |d, &m| *d += w * m);
                let mut seg = readouts.slice_mut(s![si, l * h_dim..(l + 1) * h_dim]);
                seg.zip_mut_with(&msg, |d, &m| *d += w * m);
            }
            psi_cache_all.push(Some(cache));
            psi_out_all.push(out);
        }
        traces.push(LayerTrace {
            rows,
            type_ranges,
            geo_cache,
            psi_cache: psi_cache_all,
            psi_out: psi_out_all,
        });
        h_prev = h_next;
    }
    BatchTrace {
        layers: traces,
        readouts,
    }
}

/// Single-sample forward; readout is row 0 of the batch trace.
pub fn gnn_forward(model: &mut Model, tuples: &GraphTuples, mode: Mode) -> BatchTrace {
    gnn_forward_batch(model, &[tuples], mode)
}

/// Backward through the message-passing layers, given the gradient of the
/// loss with respect to every sample's readout.
pub fn gnn_backward_batch(
    model: &Model,
    batch: &[&GraphTuples],
    trace: &BatchTrace,
    d_readouts: &Array2<f64>,
    grads: &mut Model,
) {
    let h_dim = model.config.hidden;
    let num_layers = model.layers.len();
    let offsets: Vec<usize> = batch
        .iter()
        .scan(0usize, |acc, t| {
            let o = *acc;
            *acc += t.num_nodes;
            Some(o)
        })
        .collect();
    let total_nodes: usize = batch.iter().map(|t| t.num_nodes).sum();
    // gradient flowing into each node's h^{(l)} from layer l+1
    let mut carry: Array2<f64> = Array2::zeros((total_nodes, h_dim));
    for l in (0..num_layers).rev() {
        let layer = &model.layers[l];
        let glayer = &mut grads.layers[l];
        let tr = &trace.layers[l];
        let p = tr.rows.len();
        let mut d_geo_out = Array2::zeros((p, model.config.geo_dim));
        let mut d_h_prev: Array2<f64> = Array2::zeros((total_nodes, h_dim));
        for t in 0..4 {
            let (start, end) = tr.type_ranges[t];
            let n_rows = end - start;
            if n_rows == 0 {
                continue;
            }
            let w = layer.w[t];
            // d_message per row = carry[head] + that sample's readout segment
            let mut d_msg = Array2::zeros((n_rows, h_dim));
            for (local, &(si, r)) in tr.rows[start..end].iter().enumerate() {
                let head = offsets[si] + batch[si].records[r].path.head.0;
                let mut row = d_msg.row_mut(local);
                row.assign(&carry.row(head));
                row += &d_readouts.slice(s![si, l * h_dim..(l + 1) * h_dim]);
            }
            // w * psi_out -> gradient of the scalar and of the psi output
            glayer.w[t] += (&d_msg * &tr.psi_out[t]).sum();
            let d_psi_out = &d_msg * w;
            let cache = tr.psi_cache[t].as_ref().expect("trace for nonempty type");
            let d_psi_in = layer.psi[t].backward(cache, &d_psi_out, &mut glayer.psi[t]);
            for (local, &(si, r)) in tr.rows[start..end].iter().enumerate() {
                let rec = &batch[si].records[r];
                let off = offsets[si];
                let row = d_psi_in.row(local);
                d_h_prev
                    .row_mut(off + rec.path.head.0)
                    .zip_mut_with(&row.slice(s![0..h_dim]), |d, &g| *d += g);
                d_h_prev
                    .row_mut(off + rec.path.mid.0)
                    .zip_mut_with(&row.slice(s![h_dim..2 * h_dim]), |d, &g| *d += g);
                d_h_prev
                    .row_mut(off + rec.path.tail.0)
                    .zip_mut_with(&row.slice(s![2 * h_dim..3 * h_dim]), |d, &g| *d += g);
                d_geo_out
                    .row_mut(start + local)
                    .zip_mut_with(&row.slice(s![3 * h_dim..]), |d, &g| *d += g);
            }
        }
        if p > 0 {
            layer
                .geo
                .backward(&tr.geo_cache, &d_geo_out, &mut glayer.geo);
        }
        carry = d_h_prev;
    }
}

// ---------------------------------------------------------------------------
// Head, loss, and whole-model passes
// ---------------------------------------------------------------------------

pub fn softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    out
}

/// Mean cross-entropy and its gradient with respect to the logits.
pub fn cross_entropy(logits: &Array2<f64>, labels: &[usize]) -> (f64, Array2<f64>) {
    let probs = softmax_rows(logits);
    let n = labels.len() as f64;
    let mut loss = 0.0;
    let mut d = probs.clone();
    for (i, &y) in labels.iter().enumerate() {
        loss -= probs[[i, y]].max(1e-300).ln();
        d[[i, y]] -= 1.0;
    }
    (loss / n, d / n)
}

/// Inference-mode logits for one sample.
pub fn predict_one(model: &Model, tuples: &GraphTuples) -> Result<Array1<f64>, ModelError> {
    let mut m = model.clone();
    let trace = gnn_forward(&mut m, tuples, Mode::Infer);
    let readout = trace.readouts.row(0).to_owned();
    let want = m.head.layers[0].affine.w.ncols();
    if readout.len() != want {
        return Err(ModelError::WidthMismatch {
            got: readout.len(),
            want,
        });
    }
    let x = readout.insert_axis(Axis(0));
    let (logits, _) = m.head.forward(&x, Mode::Infer);
    Ok(logits.row(0).to_owned())
}

/// Inference-mode logits for a batch of samples. Inference normalizes with
/// running statistics, so results are independent of batch composition.
pub fn predict_batch(model: &Model, samples: &[GraphTuples]) -> Result<Array2<f64>, ModelError> {
    let mut m = model.clone();
    let refs: Vec<&GraphTuples> = samples.iter().collect();
    let trace = gnn_forward_batch(&mut m, &refs, Mode::Infer);
    let (logits, _) = m.head.forward(&trace.readouts, Mode::Infer);
    Ok(logits)
}

/// One training-mode forward+backward over a batch: returns the mean
/// cross-entropy and accumulates gradients for every parameter.
pub fn batch_loss_and_grads(
    model: &mut Model,
    batch: &[&GraphTuples],
    labels: &[usize],
    grads: &mut Model,
) -> Result<f64, ModelError> {
    assert_eq!(batch.len(), labels.len());
    let trace = gnn_forward_batch(model, batch, Mode::Train);
    let (logits, head_cache) = model.head.forward(&trace.readouts, Mode::Train);
    let (loss, d_logits) = cross_entropy(&logits, labels);
    if !loss.is_finite() {
        return Err(ModelError::NonFiniteLoss);
    }
    let d_readouts = model.head.backward(&head_cache, &d_logits, &mut grads.head);
    gnn_backward_batch(model, batch, &trace, &d_readouts, grads);
    Ok(loss)
}

/// Path-type tallies of a tuple multiset, one count per [`PathType`].
pub fn path_type_counts(tuples: &GraphTuples) -> [usize; 4] {
    let mut counts = [0; 4];
    for r in &tuples.records {
        counts[r.tuple.path_type().index()] += 1;
    }
    counts
}
