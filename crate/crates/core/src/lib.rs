//! Exhaustive pairwise-constraint propagation for constrained spectral
//! clustering and cross-modal ranking.
//!
//! The pipeline: load or synthesize a dataset, build a k-NN affinity graph,
//! encode must-link / cannot-link constraints as a matrix Z, propagate them
//! over the graph (single-source or across two sources), then either adjust
//! the graph weights and spectrally cluster, or read the propagated scores
//! as cross-modal correlations and rank.

pub mod clustering;
pub mod constraints;
pub mod dataset;
pub mod error;
pub mod graph;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod propagation;
pub mod retrieval;
pub mod sparse;

pub use clustering::{
    AdjustMode, AdjustedAffinity, ClusterMethod, ClusterParams, Partition, SpectralEmbedding,
};
pub use constraints::{ConstraintMatrix, PairwiseConstraint};
pub use dataset::{Dataset, KernelMatrix, KernelSpec};
pub use error::{Error, Result};
pub use graph::{KnnGraph, NormalizedAffinity};
pub use metrics::EvaluationReport;
pub use propagation::{
    Direction, PropagatedConstraints, PropagationParams, Solver,
};
pub use retrieval::{RankingDirection, RankingResult, SourceTag};
