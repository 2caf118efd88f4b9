//! Oversampling: k-NN search, SMOTE interpolation, k-means clustering and the
//! SMOTE-KMEANS clean-and-balance pipeline.

mod kmeans;
mod knn;
mod pipeline;
mod smote;

pub use kmeans::{count_distinct_rows, default_cluster_count, kmeans_fit, kmeans_fit_best, wcss, KMeansModel, KMeansParams};
pub use knn::{knn_indices, squared_distance};
pub use pipeline::{
    filter_noise, smote_kmeans_resample, smote_resample, NoiseFilterOutcome, ParentPair, Provenance, ResampleResult,
    SmoteKmeansConfig,
};
pub use smote::{smote_deficit, smote_generate, smote_interpolate, SmoteConfig, SyntheticSample};
