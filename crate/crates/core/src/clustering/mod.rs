//! Alternating-update solvers over a [`Dataset`]: fuzzy c-means, possibilistic
//! c-means and fuzzy possibilistic c-means.
//!
//! [`Dataset`]: crate::model::Dataset

mod fcm;
mod fpcm;
mod pcm;

pub use fcm::{fcm_centers, fcm_memberships, fcm_objective, run_fcm, run_fcm_observed};
pub use fpcm::{
    fpcm_centers, fpcm_memberships, fpcm_objective, fpcm_typicalities, run_fpcm,
    run_fpcm_observed, FpcmParams,
};
pub use pcm::{
    pcm_eta, pcm_memberships, pcm_objective, run_pcm, run_pcm_observed, EtaMode, PcmParams,
    PcmResult,
};

use crate::model::{Centroids, Matrix};

/// Snapshot handed to solver observers after every iteration.
#[derive(Debug)]
pub struct IterationState<'a> {
    /// 1-based iteration number.
    pub iteration: usize,
    pub membership: &'a Matrix,
    pub typicality: Option<&'a Matrix>,
    pub centroids: &'a Centroids,
    pub objective: f64,
    pub max_change: f64,
}

/// Fuzzy partition of one point from its squared distances to every cluster:
/// `u_i = [Σ_j (d_i²/d_j²)^{1/(m-1)}]^{-1}`. Zero distances take all the
/// membership, split equally.
pub(crate) fn partition_column(dist_sq: &[f64], exponent: f64, out: &mut [f64]) {
    let zeros = dist_sq.iter().filter(|&&d| d == 0.0).count();
    if zeros > 0 {
        let share = 1.0 / zeros as f64;
        for (o, &d) in out.iter_mut().zip(dist_sq) {
            *o = if d == 0.0 { share } else { 0.0 };
        }
        return;
    }
    for (o, &di) in out.iter_mut().zip(dist_sq) {
        let total: f64 = dist_sq.iter().map(|&dj| (di / dj).powf(exponent)).sum();
        *o = 1.0 / total;
    }
}

/// Squared distances, cluster-major `c × n`.
pub(crate) fn distance_table(
    data: &crate::model::Dataset,
    centers: &Centroids,
    metric: &crate::distance::Metric,
) -> Matrix {
    let (c, n) = (centers.len(), data.len());
    let mut d = Matrix::zeros(c, n);
    for (i, v) in centers.iter().enumerate() {
        for (k, x) in data.points().enumerate() {
            d.set(i, k, metric.distance_sq(x, v));
        }
    }
    d
}

/// Applies [`partition_column`] to every column of a distance table.
pub(crate) fn partition_from_distances(dist: &Matrix, m: f64) -> Matrix {
    let (c, n) = dist.shape();
    let exponent = 1.0 / (m - 1.0);
    let mut u = Matrix::zeros(c, n);
    let mut col = vec![0.0; c];
    let mut out = vec![0.0; c];
    for k in 0..n {
        for (i, slot) in col.iter_mut().enumerate() {
            *slot = dist.get(i, k);
        }
        partition_column(&col, exponent, &mut out);
        for (i, &v) in out.iter().enumerate() {
            u.set(i, k, v);
        }
    }
    u
}
