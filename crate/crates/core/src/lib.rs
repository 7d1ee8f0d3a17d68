//! Personalized PageRank and graph diffusion estimation on undirected graphs.
//!
//! The main estimator combines a forward local push from the source with
//! random walks started at the target, relying on the reversibility
//! `d_s pi_s[t] = d_t pi_t[s]` of walks on undirected graphs:
//!
//! - [`graph`]: compressed weighted adjacency and edge-list loading.
//! - [`push`]: forward local push with residual bookkeeping.
//! - [`walk`]: geometric and fixed-length walk samplers over reproducible streams.
//! - [`bippr`]: the bidirectional estimator and its parameter choices.
//! - [`mc`]: plain Monte Carlo baseline.
//! - [`mstp`]: multi-level push, transition-probability and diffusion estimators.
//! - [`exact`]: dense power-iteration oracles.

pub mod bippr;
pub mod error;
pub mod exact;
pub mod generators;
pub mod graph;
pub mod mc;
pub mod mstp;
pub mod push;
pub mod walk;

pub use bippr::{
    chernoff_c, choose_r_max, estimate_ppr, num_walks, significance_delta, BipprConfig, BipprParams, PprEstimate,
    PreparedSource,
};
pub use error::{Error, Result};
pub use graph::{Graph, GraphBuilder, NodeId};
pub use mc::{mc_estimate, mc_num_walks};
pub use mstp::{
    approximate_mstp, bidir_mstp, estimate_diffusion, heat_kernel_weights, pagerank_weights, DiffusionFamily,
    DiffusionWeights, MstpState, WalkSharing,
};
pub use push::{approximate_pagerank, push_from_distribution, PushResult, SparseVector};
pub use walk::{sample_fixed_walk, sample_geometric_walk, RandomStream, WalkRecord};
