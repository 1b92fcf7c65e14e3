//! Counter-speech retrieval.
//!
//! Given a supporting debate speech and a pool of opposing speeches on the
//! same motion, score every candidate by how likely it was recorded as a
//! direct rebuttal, then measure ranking quality (top-1 accuracy and MRR).
//!
//! The numerical kernels (term vectors, divergences, mutual information,
//! embedding distances and the exact transport solver) are generic over a
//! [`Scalar`] float type. The experiment pipeline runs in `f64`; the aliases
//! below name the concrete instantiations.

pub mod corpus;
pub mod embeddings;
pub mod eval;
pub mod pipeline;
pub mod scalar;
pub mod scorers;
pub mod textproc;
pub mod transport;
pub mod tuning;

pub use scalar::Scalar;

/// Score type used by rankings and reports.
pub type Score = f64;

pub type TermVector64 = textproc::TermVector<f64>;
pub type TermVector32 = textproc::TermVector<f32>;
pub type EmbeddingTable64 = embeddings::EmbeddingTable<f64>;
pub type EmbeddingTable32 = embeddings::EmbeddingTable<f32>;
pub type WordDistribution64 = embeddings::WordDistribution<f64>;
pub type WordDistribution32 = embeddings::WordDistribution<f32>;
pub type TransportProblem64 = transport::TransportProblem<f64>;
pub type TransportProblem32 = transport::TransportProblem<f32>;
pub type TransportPlan64 = transport::TransportPlan<f64>;
pub type TransportPlan32 = transport::TransportPlan<f32>;
