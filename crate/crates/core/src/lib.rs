//! Clustering of the component series of a multivariate time series by the
//! energy distance between their lagged joint distributions.
//!
//! The pipeline is: build a [`TimeSeriesPanel`], turn it into a
//! [`DissimilarityMatrix`] with [`joint_dissimilarity_matrix`] (or
//! [`bivariate_sum_dissimilarity_matrix`], or one of the [`baselines`]),
//! agglomerate with generalized Ward linkage via [`agglomerate`], then
//! [`cut`] at a known number of clusters or pick one with [`select_k`].
//!
//! [`simgen`] reproduces the nonlinear, ARMA and VAR simulation designs and
//! [`eval`] scores clusterings against their ground truth.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod embedding;
pub mod energy;
pub mod error;
pub mod eval;
pub mod hclust;
pub mod numeric;
pub mod simgen;

pub use baselines::{baseline_dissimilarity_matrix, BaselineMethod, BaselineSpec};
pub use embedding::{
    bivariate_sum_dissimilarity_matrix, joint_dissimilarity_matrix, lag_embed, log_growth,
    normalize, pair_embed_bivariate, DissimilarityMatrix, TimeSeriesPanel,
};
pub use energy::{
    closed_form_laplace_vs_normal, closed_form_normal, energy_distance_gaussian_kernel,
    energy_distance_quadrature_1d, energy_distance_vstat, EmpiricalCF, EnergyConstants,
    QuadratureGrid, Sample,
};
pub use error::{Error, Result};
pub use eval::{run_experiment, similarity_index, ExperimentReport, KMode, Method};
pub use hclust::{agglomerate, cut, select_k, silhouette, Dendrogram, Merge, Partition, SilhouetteReport};
pub use simgen::{build_experiment, GroundTruth, Scenario, SimSpec};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
