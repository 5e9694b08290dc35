//! Sparse mutual similarity graphs from k-nearest-neighbor tables, with self-tuned local scales.
//!
//! The pipeline is:
//!
//! ```text
//! PointSet ─► build_knn ─► compute_scales ─► affinity_rows ─► threshold_row ─► mutualize
//!                                                                               │
//!                         metrics (ACC / ARI / E%) ◄── spectral_cluster ◄── ReducedGraph
//! ```
//!
//! Each point gets a local scale σ_p estimated from a histogram of its
//! neighbor distances: the histogram shares one Freedman–Diaconis bin width
//! across all points and is smoothed with a rank-weighted moving average.
//! Affinities `exp(-d²/(σ_p σ_q))` are then thresholded per row at `μ ± s`
//! and only edges accepted by both endpoints survive.
//!
//! Nothing in the reduction needs tuning; `k_max` only bounds the candidate
//! neighborhood and defaults to `min(N - 1, 50)`.

pub mod cli;
pub mod data;
mod error;
pub mod graph_io;
pub mod knn;
pub mod metrics;
pub mod pairs;
pub mod reduce;
pub mod scale;
pub mod spectral;

pub use data::{gen_synthetic, load_csv, save_csv, PointSet, Seed, Synthetic};
pub use error::{Error, Result};
pub use knn::{build_knn, default_k_max, NeighborTable};
pub use metrics::{acc, ari, edge_percentage, pair_counts, PairCounts};
pub use pairs::{export_pairs, PairSet};
pub use reduce::{
    affinity, affinity_rows, mutual_knn_graph, mutualize, reduce_graph, reduce_table, reduce_with_scales, threshold_row,
    ReducedGraph, RowThreshold,
};
pub use scale::{compute_scales, fd_bin_width, local_scale_row, mwa_smooth, Histogram, LocalScales};
pub use spectral::{embed, kmeans, laplacian, spectral_cluster, ClusterResult, Embedding};
