//! Fuzzy c-means image segmentation: standard FCM, a modified FCM with local
//! and non-local patch dissimilarities, possibilistic c-means and fuzzy
//! possibilistic c-means, together with a phantom generator and overlap
//! metrics for scoring segmentations against ground truth.
//!
//! ```
//! use fuzzyseg::{run_fcm, Dataset, SolverParams};
//!
//! let data = Dataset::from_scalars(&[0.0, 1.0, 9.0, 10.0]).unwrap();
//! let result = run_fcm(&data, &SolverParams::default()).unwrap();
//! assert!(result.converged);
//! assert_eq!(result.labels[0], result.labels[1]);
//! assert_ne!(result.labels[1], result.labels[2]);
//! ```

// Parameter checks are written `!(x > y)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod clustering;
pub mod distance;
pub mod error;
pub mod imageio;
pub mod metrics;
pub mod mfcm;
pub mod model;
pub mod phantom;
pub mod pipeline;

pub use clustering::{
    fcm_centers, fcm_memberships, fcm_objective, fpcm_centers, fpcm_memberships, fpcm_objective,
    fpcm_typicalities, pcm_eta, pcm_memberships, pcm_objective, run_fcm, run_fcm_observed, run_fpcm,
    run_fpcm_observed, run_pcm, run_pcm_observed, EtaMode, FpcmParams, IterationState, PcmParams,
    PcmResult,
};
pub use distance::{
    euclidean_sq, fit_covariance, local_weights, mahalanobis_sq, mixed_distance, mixed_distance_terms,
    nonlocal_weights,
    CovarianceModel, Metric, NonLocalConfig,
};
pub use error::{Error, ErrorKind, Result};
pub use metrics::{defuzzify, evaluate, evaluate_with, match_clusters, BinaryMask, EvalReport, SimilarityIndex};
pub use mfcm::{mfcm_memberships, precompute_weights, run_mfcm, run_mfcm_observed, MfcmParams, WeightTables};
pub use model::{
    Centroids, Dataset, GrayImage, Matrix, MembershipMatrix, NormKind, SegmentationResult, SolverParams,
    TypicalityMatrix,
};
pub use phantom::{generate, Noise, PhantomSpec, Shape};
pub use pipeline::{segment_image, Algorithm, Outcome, RunConfig};
