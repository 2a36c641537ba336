//! Modified FCM for images: the FCM loop with the point-to-center distance
//! replaced by the mixed local / non-local dissimilarity.
//!
//! Both weight kernels depend only on the image, so they are computed once per
//! run and stored densely per pixel. The non-local table holds up to
//! `(2r_s+1)² - 1` entries per pixel (120 at the default `r_s = 5`), which is
//! the dominant memory cost: about 1.5 KB per pixel.

use rayon::prelude::*;

use crate::clustering::IterationState;
use crate::clustering::{fcm_centers, partition_column};
use crate::distance::{
    local_term, local_weights_unchecked, mix, nonlocal_term, nonlocal_weights_padded,
    NonLocalConfig, PaddedImage,
};
use crate::error::{Error, Result};
use crate::model::{
    argmax_labels, init_membership, max_change, Centroids, Dataset, GrayImage, Matrix,
    MembershipMatrix, SegmentationResult, SolverParams,
};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MfcmParams {
    pub base: SolverParams,
    pub nl: NonLocalConfig,
}

impl MfcmParams {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        self.nl.validate()
    }
}

/// Per-pixel sparse rows in compressed layout.
#[derive(Debug, Clone, PartialEq)]
struct SparseRows {
    offsets: Vec<usize>,
    indices: Vec<u32>,
    weights: Vec<f64>,
}

impl SparseRows {
    fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let total = rows.iter().map(Vec::len).sum();
        let mut offsets = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        offsets.push(0);
        for row in rows {
            for (k, w) in row {
                indices.push(k as u32);
                weights.push(w);
            }
            offsets.push(indices.len());
        }
        Self {
            offsets,
            indices,
            weights,
        }
    }

    fn row(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[j]..self.offsets[j + 1];
        self.indices[range.clone()]
            .iter()
            .zip(&self.weights[range])
            .map(|(&k, &w)| (k as usize, w))
    }
}

/// Local and non-local weights of every pixel of one image.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTables {
    width: usize,
    height: usize,
    config: NonLocalConfig,
    local: SparseRows,
    nonlocal: SparseRows,
}

impl WeightTables {
    pub fn len(&self) -> usize {
        self.local.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn config(&self) -> &NonLocalConfig {
        &self.config
    }

    pub fn local(&self, j: usize) -> Vec<(usize, f64)> {
        self.local.row(j).collect()
    }

    pub fn nonlocal(&self, j: usize) -> Vec<(usize, f64)> {
        self.nonlocal.row(j).collect()
    }

    /// Mixed distance of pixel `j` to a scalar center, from the stored weights.
    pub fn mixed_distance(&self, image: &GrayImage, j: usize, center: f64) -> f64 {
        let x = image.intensities();
        mix(
            local_term(x, self.local.row(j), center),
            nonlocal_term(x, self.nonlocal.row(j), center),
            self.config.lambda,
        )
    }

    fn check_image(&self, image: &GrayImage) -> Result<()> {
        if (self.width, self.height) != (image.width(), image.height()) {
            return Err(Error::invalid(format!(
                "weight tables were built for {}x{}, image is {}x{}",
                self.width,
                self.height,
                image.width(),
                image.height()
            )));
        }
        Ok(())
    }
}

pub fn precompute_weights(image: &GrayImage, cfg: &NonLocalConfig) -> Result<WeightTables> {
    cfg.validate()?;
    if image.len() > u32::MAX as usize {
        return Err(Error::invalid("image too large for weight tables"));
    }
    let padded = PaddedImage::new(image, cfg.patch_radius);
    let (local, nonlocal): (Vec<_>, Vec<_>) = (0..image.len())
        .into_par_iter()
        .map(|j| {
            (
                local_weights_unchecked(image, j, cfg.neighborhood_radius),
                nonlocal_weights_padded(image, &padded, j, cfg),
            )
        })
        .unzip();
    Ok(WeightTables {
        width: image.width(),
        height: image.height(),
        config: *cfg,
        local: SparseRows::from_rows(local),
        nonlocal: SparseRows::from_rows(nonlocal),
    })
}

/// Mixed distances of every pixel to every center, `c × n`.
fn mixed_distance_table(image: &GrayImage, v: &Centroids, weights: &WeightTables) -> Matrix {
    let c = v.len();
    let n = image.len();
    let columns: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            v.iter()
                .map(|center| weights.mixed_distance(image, j, center[0]))
                .collect()
        })
        .collect();
    let mut d = Matrix::zeros(c, n);
    for (j, col) in columns.iter().enumerate() {
        for (i, &value) in col.iter().enumerate() {
            d.set(i, j, value);
        }
    }
    d
}

fn memberships_from_table(d: &Matrix, m: f64) -> Matrix {
    let (c, n) = d.shape();
    let exponent = 1.0 / (m - 1.0);
    let columns: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|k| {
            let dist: Vec<f64> = d.column(k).collect();
            let mut out = vec![0.0; c];
            partition_column(&dist, exponent, &mut out);
            out
        })
        .collect();
    let mut u = Matrix::zeros(c, n);
    for (k, col) in columns.iter().enumerate() {
        for (i, &value) in col.iter().enumerate() {
            u.set(i, k, value);
        }
    }
    u
}

/// FCM membership update with the mixed dissimilarity substituted for `d²`.
pub fn mfcm_memberships(
    image: &GrayImage,
    v: &Centroids,
    params: &MfcmParams,
    weights: &WeightTables,
) -> Result<MembershipMatrix> {
    params.validate()?;
    weights.check_image(image)?;
    if v.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: v.dim(),
        });
    }
    let d = mixed_distance_table(image, v, weights);
    Ok(MembershipMatrix::from_matrix_unchecked(
        memberships_from_table(&d, params.base.m),
    ))
}

pub fn run_mfcm(image: &GrayImage, params: &MfcmParams) -> Result<SegmentationResult> {
    run_mfcm_observed(image, params, |_| {})
}

/// [`run_mfcm`] with a callback after every iteration. The recorded objective
/// `Σ u^m d_mixed` is a surrogate and need not decrease monotonically.
pub fn run_mfcm_observed<F>(
    image: &GrayImage,
    params: &MfcmParams,
    mut observe: F,
) -> Result<SegmentationResult>
where
    F: FnMut(&IterationState<'_>),
{
    params.validate()?;
    let base = &params.base;
    base.validate_for(image.len())?;
    let weights = precompute_weights(image, &params.nl)?;
    let data = Dataset::from_image(image);

    let mut u = init_membership(base.clusters, image.len(), base.seed)?.into_matrix();
    let mut centers = fcm_centers(&u, &data, base.m)?;
    let mut trace = Vec::new();
    let mut converged = false;

    for iteration in 1..=base.max_iter {
        centers = fcm_centers(&u, &data, base.m)?;
        let d = mixed_distance_table(image, &centers, &weights);
        let next = memberships_from_table(&d, base.m);
        let objective: f64 = next
            .as_slice()
            .iter()
            .zip(d.as_slice())
            .map(|(uv, dv)| uv.powf(base.m) * dv)
            .sum();
        let change = max_change(&u, &next)?;
        trace.push(objective);
        observe(&IterationState {
            iteration,
            membership: &next,
            typicality: None,
            centroids: &centers,
            objective,
            max_change: change,
        });
        u = next;
        if change <= base.epsilon {
            converged = true;
            break;
        }
    }

    Ok(SegmentationResult {
        labels: argmax_labels(&u),
        membership: MembershipMatrix::from_matrix_unchecked(u),
        typicality: None,
        centroids: centers,
        iterations: trace.len(),
        objective_trace: trace,
        converged,
    })
}
