//! Domain types shared by every solver, plus random partition initialization
//! and the membership-change convergence test.
//!
//! All matrices are stored cluster-major: row `i` holds cluster `i`, column `k`
//! holds data point (pixel) `k`. Pixels are indexed in row-major order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Column-sum tolerance for fuzzy partitions.
pub const PARTITION_TOLERANCE: f64 = 1e-9;

/// A 2D grayscale image with intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    intensities: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, intensities: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("image width and height must be at least 1"));
        }
        let expected = width
            .checked_mul(height)
            .ok_or_else(|| Error::invalid("image dimensions overflow"))?;
        if intensities.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: intensities.len(),
            });
        }
        if let Some(bad) = intensities.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid(format!("intensity {bad} outside [0, 1]")));
        }
        Ok(Self {
            width,
            height,
            intensities,
        })
    }

    /// Builds an image from 8-bit samples, dividing each by 255.
    pub fn from_u8(width: usize, height: usize, samples: &[u8]) -> Result<Self> {
        Self::new(
            width,
            height,
            samples.iter().map(|&b| f64::from(b) / 255.0).collect(),
        )
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width.saturating_mul(height)])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.intensities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intensities.is_empty()
    }

    pub fn intensities(&self) -> &[f64] {
        &self.intensities
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.intensities[y * self.width + x]
    }

    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index % self.width, index / self.width)
    }

    /// Quantizes to 8 bits (round to nearest).
    pub fn to_u8(&self) -> Vec<u8> {
        self.intensities
            .iter()
            .map(|v| (v * 255.0).round().clamp(0.0, 255.0) as u8)
            .collect()
    }

    pub(crate) fn check_index(&self, index: usize) -> Result<()> {
        if index < self.len() {
            Ok(())
        } else {
            Err(Error::OutOfBounds {
                index,
                len: self.len(),
            })
        }
    }
}

/// `n` feature vectors of dimension `dim`, stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    values: Vec<f64>,
}

impl Dataset {
    pub fn new(dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("feature dimension must be at least 1"));
        }
        if !values.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim * (values.len() / dim + 1),
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("dataset contains non-finite values"));
        }
        Ok(Self { dim, values })
    }

    /// One-dimensional dataset, one point per scalar.
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Self::new(1, values.to_vec())
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.len(),
            });
        }
        Self::new(dim, rows.concat())
    }

    /// Pixel intensities as a `p = 1` dataset.
    pub fn from_image(image: &GrayImage) -> Self {
        Self {
            dim: 1,
            values: image.intensities().to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.dim)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Dense `rows × cols` matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch {
                expected: cols,
                found: bad.len(),
            });
        }
        Self::from_vec(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.cols + col] = value;
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn column(&self, col: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.rows).map(move |r| self.get(r, col))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn column_sums(&self) -> Vec<f64> {
        (0..self.cols).map(|k| self.column(k).sum()).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|i| self.row(i).iter().sum()).collect()
    }

    /// Builds a `rows × cols` matrix from per-column vectors of length `rows`.
    pub(crate) fn from_columns(rows: usize, columns: &[Vec<f64>]) -> Self {
        let cols = columns.len();
        let mut m = Self::zeros(rows, cols);
        for (k, col) in columns.iter().enumerate() {
            debug_assert_eq!(col.len(), rows);
            for (i, &v) in col.iter().enumerate() {
                m.data[i * cols + k] = v;
            }
        }
        m
    }
}

impl AsRef<Matrix> for Matrix {
    fn as_ref(&self) -> &Matrix {
        self
    }
}

/// Fuzzy c-partition `U`: entries in `[0, 1]`, every column sums to one.
#[derive(Debug, Clone, PartialEq)]
pub struct MembershipMatrix(Matrix);

impl MembershipMatrix {
    pub fn new(values: Matrix) -> Result<Self> {
        if values.as_slice().iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid("membership entries must lie in [0, 1]"));
        }
        if let Some((k, s)) = values
            .column_sums()
            .into_iter()
            .enumerate()
            .find(|(_, s)| (s - 1.0).abs() > PARTITION_TOLERANCE)
        {
            return Err(Error::invalid(format!(
                "membership column {k} sums to {s}, expected 1"
            )));
        }
        Ok(Self(values))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub(crate) fn from_matrix_unchecked(values: Matrix) -> Self {
        Self(values)
    }

    pub fn clusters(&self) -> usize {
        self.0.rows()
    }

    pub fn points(&self) -> usize {
        self.0.cols()
    }

    pub fn get(&self, cluster: usize, point: usize) -> f64 {
        self.0.get(cluster, point)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }
}

impl AsRef<Matrix> for MembershipMatrix {
    fn as_ref(&self) -> &Matrix {
        &self.0
    }
}

/// Possibilistic matrix `T` of the fuzzy-possibilistic model: every row sums to one
/// over the data points.
#[derive(Debug, Clone, PartialEq)]
pub struct TypicalityMatrix(Matrix);

impl TypicalityMatrix {
    pub fn new(values: Matrix) -> Result<Self> {
        if values.as_slice().iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid("typicality entries must lie in [0, 1]"));
        }
        if let Some((i, s)) = values
            .row_sums()
            .into_iter()
            .enumerate()
            .find(|(_, s)| (s - 1.0).abs() > PARTITION_TOLERANCE)
        {
            return Err(Error::invalid(format!(
                "typicality row {i} sums to {s}, expected 1"
            )));
        }
        Ok(Self(values))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub(crate) fn from_matrix_unchecked(values: Matrix) -> Self {
        Self(values)
    }

    pub fn get(&self, cluster: usize, point: usize) -> f64 {
        self.0.get(cluster, point)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }
}

impl AsRef<Matrix> for TypicalityMatrix {
    fn as_ref(&self) -> &Matrix {
        &self.0
    }
}

/// `c` cluster prototypes of dimension `dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Centroids {
    dim: usize,
    values: Vec<f64>,
}

impl Centroids {
    pub fn new(dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 || values.is_empty() || !values.len().is_multiple_of(dim) {
            return Err(Error::invalid(
                "centroids need at least one center of positive dimension",
            ));
        }
        Ok(Self { dim, values })
    }

    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Self::new(1, values.to_vec())
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::invalid("centroids must share one dimension"));
        }
        Self::new(dim, rows.concat())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn center(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.dim)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormKind {
    #[default]
    Euclidean,
    Mahalanobis,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverParams {
    pub clusters: usize,
    /// Fuzzifier, strictly greater than one.
    pub m: f64,
    pub epsilon: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub norm: NormKind,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            clusters: 2,
            m: 2.0,
            epsilon: 1e-5,
            max_iter: 100,
            seed: 1,
            norm: NormKind::Euclidean,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if self.clusters < 2 {
            return Err(Error::invalid(format!(
                "cluster count must be at least 2, got {}",
                self.clusters
            )));
        }
        if !(self.m > 1.0) || !self.m.is_finite() {
            return Err(Error::invalid(format!(
                "fuzzifier m must be finite and > 1, got {}",
                self.m
            )));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::invalid(format!(
                "epsilon must be > 0, got {}",
                self.epsilon
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter must be positive"));
        }
        Ok(())
    }

    pub(crate) fn validate_for(&self, n: usize) -> Result<()> {
        self.validate()?;
        if n < self.clusters {
            return Err(Error::invalid(format!(
                "need at least {} points for {} clusters, got {n}",
                self.clusters, self.clusters
            )));
        }
        Ok(())
    }
}

/// Output shared by the FCM, MFCM and FPCM solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationResult {
    pub membership: MembershipMatrix,
    pub typicality: Option<TypicalityMatrix>,
    pub centroids: Centroids,
    pub labels: Vec<usize>,
    pub iterations: usize,
    pub objective_trace: Vec<f64>,
    pub converged: bool,
}

impl SegmentationResult {
    pub fn final_objective(&self) -> Option<f64> {
        self.objective_trace.last().copied()
    }
}

/// Random fuzzy partition: each column is `c` uniform draws normalized to sum one.
pub fn init_membership(c: usize, n: usize, seed: u64) -> Result<MembershipMatrix> {
    if c < 2 {
        return Err(Error::invalid(format!(
            "cluster count must be at least 2, got {c}"
        )));
    }
    if n < c {
        return Err(Error::invalid(format!(
            "need at least {c} points for {c} clusters, got {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut columns = Vec::with_capacity(n);
    for _ in 0..n {
        // (0, 1] so no column can be all zeros
        let mut col: Vec<f64> = (0..c).map(|_| 1.0 - rng.gen::<f64>()).collect();
        let total: f64 = col.iter().sum();
        col.iter_mut().for_each(|v| *v /= total);
        columns.push(col);
    }
    Ok(MembershipMatrix(Matrix::from_columns(c, &columns)))
}

/// Largest absolute entry-wise change between two matrices of the same shape.
pub fn max_change(prev: &Matrix, next: &Matrix) -> Result<f64> {
    if prev.shape() != next.shape() {
        return Err(Error::invalid(format!(
            "matrix shapes differ: {:?} vs {:?}",
            prev.shape(),
            next.shape()
        )));
    }
    Ok(prev
        .as_slice()
        .iter()
        .zip(next.as_slice())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// True when no entry moved by more than `epsilon` (inclusive).
pub fn converged<A, B>(prev: &A, next: &B, epsilon: f64) -> Result<bool>
where
    A: AsRef<Matrix> + ?Sized,
    B: AsRef<Matrix> + ?Sized,
{
    Ok(max_change(prev.as_ref(), next.as_ref())? <= epsilon)
}

/// Per-column argmax; ties resolve to the lowest cluster index.
pub fn argmax_labels(values: &Matrix) -> Vec<usize> {
    (0..values.cols())
        .map(|k| {
            let mut best = 0;
            let mut best_value = values.get(0, k);
            for i in 1..values.rows() {
                let v = values.get(i, k);
                if v > best_value {
                    best = i;
                    best_value = v;
                }
            }
            best
        })
        .collect()
}
