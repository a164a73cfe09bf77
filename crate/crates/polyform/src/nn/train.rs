//! Adam training with plateau learning-rate reduction, early stopping, and
//! optional per-epoch spanning-tree resampling of cross edges.

use crate::featurizer::{tuple_multiset, FeaturizeError, GraphTuples};
use crate::hetgraph::HeteroVisibilityGraph;
use crate::nn::model::{
    batch_loss_and_grads, cross_entropy, predict_batch, Model, ModelConfig, ModelError,
};
use crate::sampler::{reduced_graph, sample_spanning_tree, SampleError};
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Featurize(#[from] FeaturizeError),
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error("empty dataset")]
    EmptyDataset,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub early_stop_patience: usize,
    pub plateau_patience: usize,
    pub plateau_factor: f64,
    /// Per-epoch spanning-tree resampling of cross edges.
    pub sampling: bool,
    pub model_seed: u64,
    pub sample_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 1e-3,
            batch_size: 64,
            max_epochs: 200,
            early_stop_patience: 30,
            plateau_patience: 10,
            plateau_factor: 0.5,
            sampling: true,
            model_seed: 0,
            sample_seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_acc: f64,
    pub lr: f64,
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub diverged: bool,
}

/// A labeled graph ready for training.
#[derive(Debug, Clone)]
pub struct TrainSample {
    pub graph: HeteroVisibilityGraph,
    pub label: usize,
}

pub struct Adam {
    pub lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(model: &mut Model, lr: f64) -> Adam {
        let shapes: Vec<usize> = model.trainable_slices().iter().map(|s| s.len()).collect();
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn step(&mut self, model: &mut Model, grads: &mut Model) {
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        let params = model.trainable_slices();
        let gslices = grads.trainable_slices();
        for (((p, g), m), v) in params
            .into_iter()
            .zip(gslices)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            for i in 0..p.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                let mhat = m[i] / bc1;
                let vhat = v[i] / bc2;
                p[i] -= self.lr * mhat / (vhat.sqrt() + self.eps);
            }
        }
    }
}

fn zero_grads(grads: &mut Model) {
    for s in grads.state_slices() {
        s.fill(0.0);
    }
}

/// Tuples for one epoch: resampled under `seed` when sampling is enabled,
/// the full graph otherwise.
fn featurize_epoch(
    samples: &[TrainSample],
    sampling: bool,
    seed: u64,
) -> Result<Vec<GraphTuples>, TrainError> {
    samples
        .iter()
        .map(|s| {
            if sampling && s.graph.num_parts() > 1 {
                let tree = sample_spanning_tree(&s.graph, seed)?;
                Ok(tuple_multiset(&reduced_graph(&s.graph, &tree))?)
            } else {
                Ok(tuple_multiset(&s.graph)?)
            }
        })
        .collect()
}

fn eval_loss_acc(
    model: &Model,
    tuples: &[GraphTuples],
    labels: &[usize],
) -> Result<(f64, f64), TrainError> {
    let logits = predict_batch(model, tuples)?;
    let (loss, _) = cross_entropy(&logits, labels);
    let correct = argmax_rows(&logits)
        .iter()
        .zip(labels)
        .filter(|(p, y)| *p == *y)
        .count();
    Ok((loss, correct as f64 / labels.len() as f64))
}

pub fn argmax_rows(logits: &Array2<f64>) -> Vec<usize> {
    logits
        .rows()
        .into_iter()
        .map(|row| crate::metrics::argmax_first(row.iter().copied()))
        .collect()
}

/// Full training run. Returns the best-validation-loss model and the
/// per-epoch report. On divergence (non-finite loss) training stops and the
/// report is flagged; the returned model is the last finite best.
pub fn train(
    model_config: &ModelConfig,
    config: &TrainConfig,
    train_set: &[TrainSample],
    val_set: &[TrainSample],
) -> Result<(Model, TrainReport), TrainError> {
    if train_set.is_empty() || val_set.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let mut model = Model::init(model_config.clone(), config.model_seed);
    let mut grads = model.zeros_like();
    let mut adam = Adam::new(&mut model, config.lr);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.model_seed.wrapping_add(0x9e3779b9));

    // evaluation featurization is fixed across epochs
    let val_tuples = featurize_epoch(val_set, config.sampling, config.sample_seed)?;
    let val_labels: Vec<usize> = val_set.iter().map(|s| s.label).collect();
    let full_train_tuples = if config.sampling {
        None
    } else {
        Some(featurize_epoch(train_set, false, 0)?)
    };

    let mut best_val_loss = f64::INFINITY;
    let mut best_epoch = 0;
    let mut best_model = model.clone();
    let mut epochs_since_best = 0usize;
    let mut epochs_since_plateau = 0usize;
    let mut report = Vec::new();
    let mut diverged = false;

    for epoch in 0..config.max_epochs {
        let epoch_tuples_owned;
        let epoch_tuples: &[GraphTuples] = match &full_train_tuples {
            Some(t) => t,
            None => {
                epoch_tuples_owned = featurize_epoch(
                    train_set,
                    true,
                    config.sample_seed.wrapping_add(epoch as u64),
                )?;
                &epoch_tuples_owned
            }
        };
        let mut order: Vec<usize> = (0..train_set.len()).collect();
        order.shuffle(&mut shuffle_rng);

        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        let mut failed = false;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<&GraphTuples> = chunk.iter().map(|&i| &epoch_tuples[i]).collect();
            let labels: Vec<usize> = chunk.iter().map(|&i| train_set[i].label).collect();
            zero_grads(&mut grads);
            match batch_loss_and_grads(&mut model, &batch, &labels, &mut grads) {
                Ok(loss) => {
                    epoch_loss += loss;
                    batches += 1;
                    adam.step(&mut model, &mut grads);
                }
                Err(ModelError::NonFiniteLoss) => {
                    failed = true;
                    break;
                }
                Err(e) => return Err(e.into()),
            }
        }
        if failed {
            diverged = true;
            break;
        }
        let train_loss = epoch_loss / batches.max(1) as f64;
        let (val_loss, val_acc) = eval_loss_acc(&model, &val_tuples, &val_labels)?;
        report.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
            val_acc,
            lr: adam.lr,
        });
        if !val_loss.is_finite() {
            diverged = true;
            break;
        }

        if val_loss < best_val_loss {
            best_val_loss = val_loss;
            best_epoch = epoch;
            best_model = model.clone();
            epochs_since_best = 0;
            epochs_since_plateau = 0;
        } else {
            epochs_since_best += 1;
            epochs_since_plateau += 1;
        }
        if epochs_since_plateau > config.plateau_patience {
            adam.lr *= config.plateau_factor;
            epochs_since_plateau = 0;
        }
        if epochs_since_best >= config.early_stop_patience {
            break;
        }
    }

    Ok((
        best_model,
        TrainReport {
            epochs: report,
            best_epoch,
            best_val_loss,
            diverged,
        },
    ))
}
