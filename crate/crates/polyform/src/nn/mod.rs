//! Trainable network over two-hop tuple features: dense substrate with
//! hand-written gradients, the heterogeneous message-passing model,
//! checkpointing, and the training loop.

pub mod checkpoint;
pub mod layers;
pub mod model;
pub mod train;

pub use layers::{DenseStack, Mode};
pub use model::{Model, ModelConfig};
pub use train::{train, TrainConfig, TrainReport};
