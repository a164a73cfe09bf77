//! Multipolygon representation learning: heterogeneous visibility graphs,
//! spanning-tree cross-edge sampling, rotation/translation-invariant
//! two-hop tuple features, and a trainable heterogeneous message-passing
//! network for multipolygon classification.

pub mod cli;
pub mod data;
pub mod featurizer;
pub mod geometry;
pub mod hetgraph;
pub mod metrics;
pub mod nn;
pub mod sampler;
