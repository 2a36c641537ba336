//! Dissimilarity measures: squared Euclidean, Mahalanobis, and the mixed
//! local / non-local pixel dissimilarity used by the modified FCM.
//!
//! The local weight kernel is a spatial Gaussian over the `(2r_l+1)²`
//! neighborhood (center excluded, clipped at the image border) with
//! `σ_s = r_l`. It ignores intensities.
//!
//! The non-local weights are classical non-local-means patch weights,
//! `exp(-‖P(k) - P(j)‖² / h²)` over a `(2r_s+1)²` search window (center
//! excluded, clipped), normalized to sum to one. Patches are `(2r_p+1)²`
//! intensity blocks with symmetric mirror padding at the border, and the patch
//! distance is the plain sum of squared differences.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::{Dataset, GrayImage, NormKind};

pub fn euclidean_sq(x: &[f64], v: &[f64]) -> Result<f64> {
    if x.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: v.len(),
        });
    }
    Ok(euclidean_sq_unchecked(x, v))
}

#[inline]
pub(crate) fn euclidean_sq_unchecked(x: &[f64], v: &[f64]) -> f64 {
    x.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Sample statistics of a dataset and the A-norm weight matrix derived from them.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceModel {
    pub means: Vec<f64>,
    /// Row-major `p × p`; the `A` of the A-norm.
    pub inverse_covariance: Vec<f64>,
    pub variances: Vec<f64>,
    /// Row-major `p × p` Pearson correlations.
    pub correlations: Vec<f64>,
}

impl CovarianceModel {
    /// Unit-variance, uncorrelated model; its A-norm is the Euclidean norm.
    pub fn identity(dim: usize) -> Self {
        let mut eye = vec![0.0; dim * dim];
        for i in 0..dim {
            eye[i * dim + i] = 1.0;
        }
        Self {
            means: vec![0.0; dim],
            inverse_covariance: eye.clone(),
            variances: vec![1.0; dim],
            correlations: eye,
        }
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }
}

/// Fits means, unbiased variances and correlations, then inverts the
/// covariance `A_ij = ρ_ij σ_i σ_j`.
pub fn fit_covariance(data: &Dataset) -> Result<CovarianceModel> {
    let n = data.len();
    let p = data.dim();
    if n < 2 {
        return Err(Error::invalid("covariance needs at least two points"));
    }
    let mut means = vec![0.0; p];
    for x in data.points() {
        for (m, v) in means.iter_mut().zip(x) {
            *m += v;
        }
    }
    means.iter_mut().for_each(|m| *m /= n as f64);

    let mut cov = vec![0.0; p * p];
    for x in data.points() {
        for a in 0..p {
            let da = x[a] - means[a];
            for b in 0..p {
                cov[a * p + b] += da * (x[b] - means[b]);
            }
        }
    }
    let divisor = (n - 1) as f64;
    cov.iter_mut().for_each(|c| *c /= divisor);

    let variances: Vec<f64> = (0..p).map(|a| cov[a * p + a]).collect();
    if variances.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::SingularCovariance);
    }
    let sigmas: Vec<f64> = variances.iter().map(|v| v.sqrt()).collect();
    let mut correlations = vec![0.0; p * p];
    for a in 0..p {
        for b in 0..p {
            correlations[a * p + b] = if a == b {
                1.0
            } else {
                cov[a * p + b] / (sigmas[a] * sigmas[b])
            };
        }
    }

    let assembled = DMatrix::from_fn(p, p, |a, b| correlations[a * p + b] * sigmas[a] * sigmas[b]);
    let inverse = assembled
        .try_inverse()
        .ok_or(Error::SingularCovariance)?;
    if inverse.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularCovariance);
    }
    let mut inverse_covariance = vec![0.0; p * p];
    for a in 0..p {
        for b in 0..p {
            inverse_covariance[a * p + b] = 0.5 * (inverse[(a, b)] + inverse[(b, a)]);
        }
    }
    // near-singular inputs invert to garbage that is no longer positive definite
    if (0..p).any(|a| !(inverse_covariance[a * p + a] > 0.0)) {
        return Err(Error::SingularCovariance);
    }

    Ok(CovarianceModel {
        means,
        inverse_covariance,
        variances,
        correlations,
    })
}

pub fn mahalanobis_sq(x: &[f64], y: &[f64], model: &CovarianceModel) -> Result<f64> {
    let p = model.dim();
    for len in [x.len(), y.len()] {
        if len != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                found: len,
            });
        }
    }
    Ok(mahalanobis_sq_unchecked(x, y, model))
}

fn mahalanobis_sq_unchecked(x: &[f64], y: &[f64], model: &CovarianceModel) -> f64 {
    let p = model.dim();
    let mut total = 0.0;
    for a in 0..p {
        let da = x[a] - y[a];
        for b in 0..p {
            total += model.inverse_covariance[a * p + b] * da * (x[b] - y[b]);
        }
    }
    total.max(0.0)
}

/// A resolved point-to-center distance.
#[derive(Debug, Clone, PartialEq)]
pub enum Metric {
    Euclidean,
    Mahalanobis(CovarianceModel),
}

impl Metric {
    /// Resolves a norm selector against a dataset. A singular covariance falls
    /// back to the Euclidean norm.
    pub fn for_data(kind: NormKind, data: &Dataset) -> Self {
        match kind {
            NormKind::Euclidean => Metric::Euclidean,
            NormKind::Mahalanobis => match fit_covariance(data) {
                Ok(model) => Metric::Mahalanobis(model),
                Err(_) => Metric::Euclidean,
            },
        }
    }

    /// Squared distance. Inputs must share the metric's dimension.
    pub fn distance_sq(&self, x: &[f64], v: &[f64]) -> f64 {
        match self {
            Metric::Euclidean => euclidean_sq_unchecked(x, v),
            Metric::Mahalanobis(model) => mahalanobis_sq_unchecked(x, v, model),
        }
    }

    pub(crate) fn check_dim(&self, dim: usize) -> Result<()> {
        match self {
            Metric::Mahalanobis(model) if model.dim() != dim => Err(Error::DimensionMismatch {
                expected: model.dim(),
                found: dim,
            }),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonLocalConfig {
    /// `r_l`: the local neighborhood is the `(2r_l+1)²` window.
    pub neighborhood_radius: usize,
    /// `r_s`: the non-local search window is `(2r_s+1)²`.
    pub search_radius: usize,
    /// `r_p`: patches are `(2r_p+1)²`.
    pub patch_radius: usize,
    /// Filtering bandwidth of the patch weights.
    pub h: f64,
    /// Weight of the non-local term; `0` is purely local.
    pub lambda: f64,
}

impl Default for NonLocalConfig {
    fn default() -> Self {
        Self {
            neighborhood_radius: 2,
            search_radius: 5,
            patch_radius: 2,
            h: 0.1,
            lambda: 0.5,
        }
    }
}

impl NonLocalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.neighborhood_radius < 1 {
            return Err(Error::invalid("neighborhood radius must be at least 1"));
        }
        if self.search_radius < self.neighborhood_radius {
            return Err(Error::invalid(
                "search radius must be at least the neighborhood radius",
            ));
        }
        if !(self.h > 0.0) || !self.h.is_finite() {
            return Err(Error::invalid(format!("h must be > 0, got {}", self.h)));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::invalid(format!(
                "lambda must lie in [0, 1], got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

/// Pixel indices of the `(2r+1)²` window around `j`, clipped to the image,
/// center excluded, in row-major order.
fn window(image: &GrayImage, j: usize, radius: usize) -> impl Iterator<Item = (usize, isize, isize)> + '_ {
    let (cx, cy) = image.coords(j);
    let (w, h) = (image.width(), image.height());
    let x0 = cx.saturating_sub(radius);
    let x1 = (cx + radius).min(w - 1);
    let y0 = cy.saturating_sub(radius);
    let y1 = (cy + radius).min(h - 1);
    (y0..=y1)
        .flat_map(move |y| (x0..=x1).map(move |x| (x, y)))
        .filter(move |&(x, y)| (x, y) != (cx, cy))
        .map(move |(x, y)| {
            (
                y * w + x,
                x as isize - cx as isize,
                y as isize - cy as isize,
            )
        })
}

/// Spatial Gaussian weights over the local neighborhood of `j`.
pub fn local_weights(image: &GrayImage, j: usize, cfg: &NonLocalConfig) -> Result<Vec<(usize, f64)>> {
    image.check_index(j)?;
    cfg.validate()?;
    Ok(local_weights_unchecked(image, j, cfg.neighborhood_radius))
}

pub(crate) fn local_weights_unchecked(image: &GrayImage, j: usize, radius: usize) -> Vec<(usize, f64)> {
    let sigma_sq = (radius * radius) as f64;
    window(image, j, radius)
        .map(|(k, dx, dy)| {
            let s2 = (dx * dx + dy * dy) as f64;
            (k, (-s2 / (2.0 * sigma_sq)).exp())
        })
        .collect()
}

/// Maps any integer coordinate into `[0, n)` by symmetric reflection
/// (`-1 → 0`, `n → n-1`).
fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let mut r = i.rem_euclid(period);
    if r >= n {
        r = period - 1 - r;
    }
    r as usize
}

/// Image copy mirror-padded by the patch radius so patch reads need no bounds checks.
pub(crate) struct PaddedImage {
    pad: usize,
    stride: usize,
    data: Vec<f64>,
}

impl PaddedImage {
    pub(crate) fn new(image: &GrayImage, pad: usize) -> Self {
        let (w, h) = (image.width(), image.height());
        let stride = w + 2 * pad;
        let rows = h + 2 * pad;
        let mut data = Vec::with_capacity(stride * rows);
        for py in 0..rows {
            let y = reflect(py as isize - pad as isize, h);
            for px in 0..stride {
                let x = reflect(px as isize - pad as isize, w);
                data.push(image.get(x, y));
            }
        }
        Self { pad, stride, data }
    }

    /// Sum of squared differences between the patches centered at `a` and `b`.
    pub(crate) fn patch_distance_sq(&self, a: (usize, usize), b: (usize, usize)) -> f64 {
        let size = 2 * self.pad + 1;
        let mut total = 0.0;
        for dy in 0..size {
            let ra = (a.1 + dy) * self.stride + a.0;
            let rb = (b.1 + dy) * self.stride + b.0;
            for dx in 0..size {
                let d = self.data[ra + dx] - self.data[rb + dx];
                total += d * d;
            }
        }
        total
    }
}

/// Normalized non-local-means weights of every pixel in the search window of `j`.
pub fn nonlocal_weights(
    image: &GrayImage,
    j: usize,
    cfg: &NonLocalConfig,
) -> Result<Vec<(usize, f64)>> {
    image.check_index(j)?;
    cfg.validate()?;
    let padded = PaddedImage::new(image, cfg.patch_radius);
    Ok(nonlocal_weights_padded(image, &padded, j, cfg))
}

pub(crate) fn nonlocal_weights_padded(
    image: &GrayImage,
    padded: &PaddedImage,
    j: usize,
    cfg: &NonLocalConfig,
) -> Vec<(usize, f64)> {
    let center = image.coords(j);
    let h_sq = cfg.h * cfg.h;
    let distances: Vec<(usize, f64)> = window(image, j, cfg.search_radius)
        .map(|(k, _, _)| (k, padded.patch_distance_sq(center, image.coords(k))))
        .collect();
    // Shifting by the smallest distance rescales every raw weight by the same
    // factor, which normalization cancels; it keeps the sum from underflowing.
    let floor = distances
        .iter()
        .map(|&(_, d)| d)
        .fold(f64::INFINITY, f64::min);
    let mut weights: Vec<(usize, f64)> = distances
        .into_iter()
        .map(|(k, d)| (k, (-(d - floor) / h_sq).exp()))
        .collect();
    let total: f64 = weights.iter().map(|&(_, w)| w).sum();
    weights.iter_mut().for_each(|(_, w)| *w /= total);
    weights
}

/// Local term: normalized weighted average of `(x_k - center)²` over the neighborhood.
pub(crate) fn local_term<I>(intensities: &[f64], weights: I, center: f64) -> f64
where
    I: IntoIterator<Item = (usize, f64)>,
{
    let mut num = 0.0;
    let mut den = 0.0;
    for (k, w) in weights {
        let d = intensities[k] - center;
        num += w * d * d;
        den += w;
    }
    num / den
}

/// Non-local term: weights are already normalized.
pub(crate) fn nonlocal_term<I>(intensities: &[f64], weights: I, center: f64) -> f64
where
    I: IntoIterator<Item = (usize, f64)>,
{
    weights
        .into_iter()
        .map(|(k, w)| {
            let d = intensities[k] - center;
            w * d * d
        })
        .sum()
}

pub(crate) fn mix(local: f64, nonlocal: f64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        local
    } else if lambda == 1.0 {
        nonlocal
    } else {
        (1.0 - lambda) * local + lambda * nonlocal
    }
}

/// `(1-λ)·d_l² + λ·d_nl²` for pixel `j` against a scalar center.
pub fn mixed_distance(image: &GrayImage, j: usize, center: f64, cfg: &NonLocalConfig) -> Result<f64> {
    let local = local_weights(image, j, cfg)?;
    let nonlocal = nonlocal_weights(image, j, cfg)?;
    let x = image.intensities();
    Ok(mix(
        local_term(x, local.iter().copied(), center),
        nonlocal_term(x, nonlocal.iter().copied(), center),
        cfg.lambda,
    ))
}

/// Both terms of the mixed distance, for callers that need the endpoints.
pub fn mixed_distance_terms(
    image: &GrayImage,
    j: usize,
    center: f64,
    cfg: &NonLocalConfig,
) -> Result<(f64, f64)> {
    let local = local_weights(image, j, cfg)?;
    let nonlocal = nonlocal_weights(image, j, cfg)?;
    let x = image.intensities();
    Ok((local_term(x, local.iter().copied(), center), nonlocal_term(x, nonlocal.iter().copied(), center)))
}
