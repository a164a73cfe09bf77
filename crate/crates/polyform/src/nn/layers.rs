//! Dense layers with hand-written backward passes: affine, batch
//! normalization over the row (batch) dimension, and ReLU, composed into
//! stacks of (affine, norm?, relu?) triples.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Affine {
    /// (out, in)
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl Affine {
    pub fn init(rng: &mut ChaCha8Rng, in_dim: usize, out_dim: usize) -> Self {
        let bound = (1.0 / in_dim as f64).sqrt();
        Affine {
            w: Array2::from_shape_fn((out_dim, in_dim), |_| rng.gen_range(-bound..bound)),
            b: Array1::zeros(out_dim),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Affine {
            w: Array2::zeros(self.w.raw_dim()),
            b: Array1::zeros(self.b.raw_dim()),
        }
    }

    pub fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        x.dot(&self.w.t()) + &self.b
    }

    /// Accumulates parameter gradients into `grad` and returns d_input.
    pub fn backward(&self, x: &Array2<f64>, d_out: &Array2<f64>, grad: &mut Affine) -> Array2<f64> {
        grad.w += &d_out.t().dot(x);
        grad.b += &d_out.sum_axis(Axis(0));
        d_out.dot(&self.w)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm {
    pub gamma: Array1<f64>,
    pub beta: Array1<f64>,
    pub running_mean: Array1<f64>,
    pub running_var: Array1<f64>,
}

#[derive(Debug, Clone)]
pub struct BnCache {
    pub x_hat: Array2<f64>,
    pub inv_std: Array1<f64>,
}

impl BatchNorm {
    pub fn new(dim: usize) -> Self {
        BatchNorm {
            gamma: Array1::ones(dim),
            beta: Array1::zeros(dim),
            running_mean: Array1::zeros(dim),
            running_var: Array1::ones(dim),
        }
    }

    pub fn zeros_like(&self) -> Self {
        BatchNorm {
            gamma: Array1::zeros(self.gamma.raw_dim()),
            beta: Array1::zeros(self.beta.raw_dim()),
            running_mean: Array1::zeros(self.running_mean.raw_dim()),
            running_var: Array1::zeros(self.running_var.raw_dim()),
        }
    }

    pub fn forward_train(&mut self, x: &Array2<f64>) -> (Array2<f64>, BnCache) {
        let n = x.nrows() as f64;
        let mean = x.mean_axis(Axis(0)).expect("nonempty batch");
        let centered = x - &mean;
        let var = centered.mapv(|v| v * v).mean_axis(Axis(0)).unwrap();
        let inv_std = var.mapv(|v| 1.0 / (v + BN_EPS).sqrt());
        let x_hat = &centered * &inv_std;
        let y = &x_hat * &self.gamma + &self.beta;
        let unbiased = if x.nrows() > 1 {
            var.mapv(|v| v * n / (n - 1.0))
        } else {
            var.clone()
        };
        self.running_mean = &self.running_mean * (1.0 - BN_MOMENTUM) + &mean * BN_MOMENTUM;
        self.running_var = &self.running_var * (1.0 - BN_MOMENTUM) + &unbiased * BN_MOMENTUM;
        (y, BnCache { x_hat, inv_std })
    }

    pub fn forward_infer(&self, x: &Array2<f64>) -> Array2<f64> {
        let inv_std = self.running_var.mapv(|v| 1.0 / (v + BN_EPS).sqrt());
        (x - &self.running_mean) * inv_std * &self.gamma + &self.beta
    }

    pub fn backward(
        &self,
        cache: &BnCache,
        d_out: &Array2<f64>,
        grad: &mut BatchNorm,
    ) -> Array2<f64> {
        let n = d_out.nrows() as f64;
        grad.beta += &d_out.sum_axis(Axis(0));
        grad.gamma += &(d_out * &cache.x_hat).sum_axis(Axis(0));
        let d_xhat = d_out * &self.gamma;
        let sum_dxhat = d_xhat.sum_axis(Axis(0));
        let sum_dxhat_xhat = (&d_xhat * &cache.x_hat).sum_axis(Axis(0));
        let mut d_x = &d_xhat * n - &sum_dxhat - &cache.x_hat * &sum_dxhat_xhat;
        d_x = d_x * &cache.inv_std / n;
        d_x
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub affine: Affine,
    pub bn: Option<BatchNorm>,
    pub relu: bool,
}

#[derive(Debug, Clone)]
pub struct LayerCache {
    pub input: Array2<f64>,
    pub bn: Option<BnCache>,
    /// Pre-ReLU activations, kept only when the layer applies ReLU.
    pub pre_relu: Option<Array2<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseStack {
    pub layers: Vec<DenseLayer>,
}

#[derive(Debug, Clone)]
pub struct StackCache {
    pub layers: Vec<LayerCache>,
}

impl DenseStack {
    /// Stack of (in -> dims[0] -> ... -> dims.last()); every layer except the
    /// last gets batchnorm + ReLU when `norm_hidden` is set.
    pub fn init(rng: &mut ChaCha8Rng, in_dim: usize, dims: &[usize], norm_hidden: bool) -> Self {
        let mut layers = Vec::with_capacity(dims.len());
        let mut prev = in_dim;
        for (i, &d) in dims.iter().enumerate() {
            let last = i + 1 == dims.len();
            layers.push(DenseLayer {
                affine: Affine::init(rng, prev, d),
                bn: if norm_hidden && !last {
                    Some(BatchNorm::new(d))
                } else {
                    None
                },
                relu: norm_hidden && !last,
            });
            prev = d;
        }
        DenseStack { layers }
    }

    /// Single affine + batchnorm, no activation.
    pub fn init_norm_affine(rng: &mut ChaCha8Rng, in_dim: usize, out_dim: usize) -> Self {
        DenseStack {
            layers: vec![DenseLayer {
                affine: Affine::init(rng, in_dim, out_dim),
                bn: Some(BatchNorm::new(out_dim)),
                relu: false,
            }],
        }
    }

    pub fn zeros_like(&self) -> Self {
        DenseStack {
            layers: self
                .layers
                .iter()
                .map(|l| DenseLayer {
                    affine: l.affine.zeros_like(),
                    bn: l.bn.as_ref().map(|bn| bn.zeros_like()),
                    relu: l.relu,
                })
                .collect(),
        }
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().map(|l| l.affine.b.len()).unwrap_or(0)
    }

    pub fn forward(&mut self, x: &Array2<f64>, mode: Mode) -> (Array2<f64>, StackCache) {
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut cur = x.clone();
        for layer in &mut self.layers {
            let input = cur;
            cur = layer.affine.forward(&input);
            let bn_cache = match (&mut layer.bn, mode) {
                (Some(bn), Mode::Train) => {
                    let (y, c) = bn.forward_train(&cur);
                    cur = y;
                    Some(c)
                }
                (Some(bn), Mode::Infer) => {
                    cur = bn.forward_infer(&cur);
                    None
                }
                (None, _) => None,
            };
            let pre_relu = if layer.relu {
                let pre = cur.clone();
                cur.mapv_inplace(|v| v.max(0.0));
                Some(pre)
            } else {
                None
            };
            caches.push(LayerCache {
                input,
                bn: bn_cache,
                pre_relu,
            });
        }
        (cur, StackCache { layers: caches })
    }

    /// Training-mode backward; accumulates into `grad`, returns d_input.
    pub fn backward(
        &self,
        cache: &StackCache,
        d_out: &Array2<f64>,
        grad: &mut DenseStack,
    ) -> Array2<f64> {
        let mut d = d_out.clone();
        for ((layer, lcache), glayer) in self
            .layers
            .iter()
            .zip(&cache.layers)
            .zip(&mut grad.layers)
            .rev()
        {
            if let Some(pre) = &lcache.pre_relu {
                d.zip_mut_with(pre, |g, &p| {
                    if p <= 0.0 {
                        *g = 0.0;
                    }
                });
            }
            if let Some(bn) = &layer.bn {
                let bn_cache = lcache.bn.as_ref().expect("train-mode cache");
                d = bn.backward(bn_cache, &d, glayer.bn.as_mut().expect("grad mirror"));
            }
            d = layer.affine.backward(&lcache.input, &d, &mut glayer.affine);
        }
        d
    }

    /// Trainable parameter slices in declaration order.
    pub fn trainable_slices(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for layer in &mut self.layers {
            out.push(layer.affine.w.as_slice_mut().expect("contiguous"));
            out.push(layer.affine.b.as_slice_mut().expect("contiguous"));
            if let Some(bn) = &mut layer.bn {
                out.push(bn.gamma.as_slice_mut().expect("contiguous"));
                out.push(bn.beta.as_slice_mut().expect("contiguous"));
            }
        }
        out
    }

    /// All state slices (parameters plus running statistics).
    pub fn state_slices(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for layer in &mut self.layers {
            out.push(layer.affine.w.as_slice_mut().expect("contiguous"));
            out.push(layer.affine.b.as_slice_mut().expect("contiguous"));
            if let Some(bn) = &mut layer.bn {
                out.push(bn.gamma.as_slice_mut().expect("contiguous"));
                out.push(bn.beta.as_slice_mut().expect("contiguous"));
                out.push(bn.running_mean.as_slice_mut().expect("contiguous"));
                out.push(bn.running_var.as_slice_mut().expect("contiguous"));
            }
        }
        out
    }
}
