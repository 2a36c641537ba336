//! Hard labels from fuzzy partitions, cluster-to-reference matching, and the
//! overlap indices used to score a segmentation against a reference mask.
//!
//! Similarity defaults to the Dice coefficient `2·tp / (2·tp + fp + fn)`;
//! Jaccard `tp / (tp + fp + fn)` is available through [`SimilarityIndex`].
//! False positive and false negative ratios are normalized by the size of the
//! reference object. All three are reported in percent.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{argmax_labels, Matrix};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("mask width and height must be at least 1"));
        }
        if bits.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: width * height,
                found: bits.len(),
            });
        }
        Ok(Self { width, height, bits })
    }

    /// Mask that is `true` where `labels[k]` belongs to `object_clusters`.
    pub fn from_labels(
        width: usize,
        height: usize,
        labels: &[usize],
        object_clusters: &[usize],
    ) -> Result<Self> {
        Self::new(
            width,
            height,
            labels.iter().map(|l| object_clusters.contains(l)).collect(),
        )
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SimilarityIndex {
    #[default]
    Dice,
    Jaccard,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalReport {
    pub similarity: f64,
    pub false_positive_ratio: f64,
    pub false_negative_ratio: f64,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

pub const CSV_HEADER: &str = "algo,similarity,fpr,fnr,tp,fp,fn,tn";

impl EvalReport {
    /// `key=value` lines, one per field.
    pub fn to_key_value(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "similarity={:.4}", self.similarity);
        let _ = writeln!(s, "false_positive_ratio={:.4}", self.false_positive_ratio);
        let _ = writeln!(s, "false_negative_ratio={:.4}", self.false_negative_ratio);
        let _ = writeln!(s, "tp={}", self.tp);
        let _ = writeln!(s, "fp={}", self.fp);
        let _ = writeln!(s, "fn={}", self.fn_);
        let _ = writeln!(s, "tn={}", self.tn);
        s
    }

    /// One row under [`CSV_HEADER`], without a trailing newline.
    pub fn to_csv_row(&self, algo: &str) -> String {
        format!(
            "{algo},{:.4},{:.4},{:.4},{},{},{},{}",
            self.similarity,
            self.false_positive_ratio,
            self.false_negative_ratio,
            self.tp,
            self.fp,
            self.fn_,
            self.tn
        )
    }
}

/// Per-point argmax, ties to the lowest cluster index.
pub fn defuzzify<U: AsRef<Matrix> + ?Sized>(u: &U) -> Vec<usize> {
    argmax_labels(u.as_ref())
}

/// Clusters to call "object" so that pixel agreement with `gt` is maximal.
///
/// Clusters partition the pixels, so each one contributes independently to
/// the agreement count: a cluster is object exactly when more of its pixels lie
/// inside the reference object than outside. Exact ties go to background.
pub fn match_clusters(labels: &[usize], gt: &BinaryMask, c: usize) -> Result<Vec<usize>> {
    if labels.len() != gt.len() {
        return Err(Error::DimensionMismatch {
            expected: gt.len(),
            found: labels.len(),
        });
    }
    let mut inside = vec![0usize; c];
    let mut outside = vec![0usize; c];
    for (&l, &g) in labels.iter().zip(gt.bits()) {
        if l >= c {
            return Err(Error::invalid(format!("label {l} exceeds cluster count {c}")));
        }
        if g {
            inside[l] += 1;
        } else {
            outside[l] += 1;
        }
    }
    Ok((0..c).filter(|&i| inside[i] > outside[i]).collect())
}

pub fn evaluate(seg: &BinaryMask, gt: &BinaryMask) -> Result<EvalReport> {
    evaluate_with(seg, gt, SimilarityIndex::Dice)
}

pub fn evaluate_with(seg: &BinaryMask, gt: &BinaryMask, index: SimilarityIndex) -> Result<EvalReport> {
    if (seg.width, seg.height) != (gt.width, gt.height) {
        return Err(Error::DimensionMismatch {
            expected: gt.len(),
            found: seg.len(),
        });
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (&s, &g) in seg.bits().iter().zip(gt.bits()) {
        match (s, g) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    let object = tp + fn_;
    if object == 0 {
        return Err(Error::InvalidReference(
            "reference mask has no object pixels".into(),
        ));
    }
    let similarity = match index {
        SimilarityIndex::Dice => 100.0 * (2 * tp) as f64 / (2 * tp + fp + fn_) as f64,
        SimilarityIndex::Jaccard => 100.0 * tp as f64 / (tp + fp + fn_) as f64,
    };
    Ok(EvalReport {
        similarity,
        false_positive_ratio: 100.0 * fp as f64 / object as f64,
        false_negative_ratio: 100.0 * fn_ as f64 / object as f64,
        tp,
        fp,
        fn_,
        tn,
    })
}
