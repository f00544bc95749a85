//! Affine bases learned from optimizer samples: one global SVD basis, or a
//! partition into clusters by K-means or K-SVD with a basis per cluster.

mod cluster;
mod samples;

pub use cluster::{
    kmeans, kmeans_with_cap, ksvd, ksvd_cost, ksvd_from_kmeans, ksvd_with_cap, random_partition,
    trailing_singular_cost, ClusterModel, DEFAULT_ITERATION_CAP,
};
pub use samples::{reassign_distance, svd_basis, SampleSet};
