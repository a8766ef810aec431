//! Attributed network embedding by modeling context co-occurrence.
//!
//! The pipeline: random-walk context generation with subsampling, sparse
//! co-occurrence statistics, a per-window attribute convolution pooled into
//! node embeddings, and a three-part objective (positive graph likelihood,
//! contextually negative sampling, attribute reconstruction) optimized with
//! Adam. An evaluation harness covers link prediction, node classification,
//! and node clustering.

pub mod config;
pub mod cooccur;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod gradcheck;
pub mod graph;
pub mod objective;
pub mod rng;
pub mod trainer;
pub mod sampler;
