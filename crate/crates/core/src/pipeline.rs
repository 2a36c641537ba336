//! Run configuration and a single entry point that dispatches an image to any
//! of the four solvers, plus the phantom benchmark loop.

use std::fmt;
use std::str::FromStr;

use crate::clustering::{run_fcm_observed, run_fpcm_observed, run_pcm_observed, EtaMode, FpcmParams, IterationState, PcmParams};
use crate::distance::NonLocalConfig;
use crate::error::{Error, Result};
use crate::metrics::{evaluate, match_clusters, BinaryMask, EvalReport};
use crate::mfcm::{run_mfcm_observed, MfcmParams};
use crate::model::{Dataset, GrayImage, Matrix, NormKind, SolverParams};
use crate::phantom::{generate, PhantomSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Fcm,
    Mfcm,
    Pcm,
    Fpcm,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Fcm, Algorithm::Mfcm, Algorithm::Pcm, Algorithm::Fpcm];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Fcm => "fcm",
            Algorithm::Mfcm => "mfcm",
            Algorithm::Pcm => "pcm",
            Algorithm::Fpcm => "fpcm",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::invalid(format!("unknown algorithm `{s}`")))
    }
}

/// Every tunable of a segmentation run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub clusters: usize,
    pub m: f64,
    pub eta_exp: f64,
    pub epsilon: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub lambda: f64,
    pub r_l: usize,
    pub r_s: usize,
    pub r_p: usize,
    pub h: f64,
    pub k: f64,
    pub norm: NormKind,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Fcm,
            clusters: 2,
            m: 2.0,
            eta_exp: 2.0,
            epsilon: 1e-5,
            max_iter: 100,
            seed: 1,
            lambda: 0.5,
            r_l: 2,
            r_s: 5,
            r_p: 2,
            h: 0.1,
            k: 1.0,
            norm: NormKind::Euclidean,
        }
    }
}

impl RunConfig {
    pub fn solver_params(&self) -> SolverParams {
        SolverParams {
            clusters: self.clusters,
            m: self.m,
            epsilon: self.epsilon,
            max_iter: self.max_iter,
            seed: self.seed,
            norm: self.norm,
        }
    }

    pub fn nonlocal(&self) -> NonLocalConfig {
        NonLocalConfig {
            neighborhood_radius: self.r_l,
            search_radius: self.r_s,
            patch_radius: self.r_p,
            h: self.h,
            lambda: self.lambda,
        }
    }

    pub fn mfcm_params(&self) -> MfcmParams {
        MfcmParams {
            base: self.solver_params(),
            nl: self.nonlocal(),
        }
    }

    pub fn pcm_params(&self) -> PcmParams {
        PcmParams {
            base: self.solver_params(),
            eta_mode: EtaMode::FixedFromInit,
            k: self.k,
        }
    }

    pub fn fpcm_params(&self) -> FpcmParams {
        FpcmParams {
            base: self.solver_params(),
            eta_exp: self.eta_exp,
        }
    }

    /// Checks the parameters the selected algorithm actually uses.
    pub fn validate(&self) -> Result<()> {
        match self.algorithm {
            Algorithm::Fcm => self.solver_params().validate(),
            Algorithm::Mfcm => self.mfcm_params().validate(),
            Algorithm::Pcm => self.pcm_params().validate(),
            Algorithm::Fpcm => self.fpcm_params().validate(),
        }
    }
}

/// What every solver reports back to the caller.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub algorithm: Algorithm,
    pub clusters: usize,
    /// `c × n`; PCM columns are not normalized.
    pub membership: Matrix,
    pub labels: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
    pub objective: Option<f64>,
}

pub fn segment_image(image: &GrayImage, config: &RunConfig) -> Result<Outcome> {
    segment_image_observed(image, config, |_| {})
}

pub fn segment_image_observed<F>(image: &GrayImage, config: &RunConfig, observe: F) -> Result<Outcome>
where
    F: FnMut(&IterationState<'_>),
{
    config.validate()?;
    let data = Dataset::from_image(image);
    let (membership, labels, iterations, converged, objective) = match config.algorithm {
        Algorithm::Pcm => {
            let r = run_pcm_observed(&data, &config.pcm_params(), observe)?;
            let objective = r.objective_trace.last().copied();
            (r.membership, r.labels, r.iterations, r.converged, objective)
        }
        alg => {
            let r = match alg {
                Algorithm::Fcm => run_fcm_observed(&data, &config.solver_params(), observe)?,
                Algorithm::Mfcm => run_mfcm_observed(image, &config.mfcm_params(), observe)?,
                _ => run_fpcm_observed(&data, &config.fpcm_params(), observe)?,
            };
            let objective = r.final_objective();
            (r.membership.into_matrix(), r.labels, r.iterations, r.converged, objective)
        }
    };
    Ok(Outcome {
        algorithm: config.algorithm,
        clusters: config.clusters,
        membership,
        labels,
        iterations,
        converged,
        objective,
    })
}

/// Segments, maps clusters to object/background against `gt`, and scores.
pub fn score_against(outcome: &Outcome, gt: &BinaryMask) -> Result<EvalReport> {
    let object = match_clusters(&outcome.labels, gt, outcome.clusters)?;
    let seg = BinaryMask::from_labels(gt.width(), gt.height(), &outcome.labels, &object)?;
    evaluate(&seg, gt)
}

/// One benchmark cell.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRow {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub report: EvalReport,
    pub iterations: usize,
}

/// Runs every `(algorithm, seed)` cell. The seed replaces both the phantom
/// noise seed and the solver seed. Rows come back algorithm-major in the
/// order given, independent of how cells are scheduled.
pub fn run_benchmark(
    spec: &PhantomSpec,
    base: &RunConfig,
    algorithms: &[Algorithm],
    seeds: &[u64],
) -> Result<Vec<BenchmarkRow>> {
    use rayon::prelude::*;

    let cells: Vec<(Algorithm, u64)> = algorithms
        .iter()
        .flat_map(|&a| seeds.iter().map(move |&s| (a, s)))
        .collect();
    cells
        .par_iter()
        .map(|&(algorithm, seed)| {
            let (image, gt) = generate(&PhantomSpec {
                seed,
                ..spec.clone()
            })?;
            let config = RunConfig {
                algorithm,
                seed,
                ..base.clone()
            };
            let outcome = segment_image(&image, &config)?;
            let report = score_against(&outcome, &gt)?;
            Ok(BenchmarkRow {
                algorithm,
                seed,
                report,
                iterations: outcome.iterations,
            })
        })
        .collect()
}

/// Per-algorithm mean of the three percent indices and the pixel counts.
pub fn mean_report(rows: &[&BenchmarkRow]) -> Option<EvalReport> {
    if rows.is_empty() {
        return None;
    }
    let n = rows.len() as f64;
    let mean = |f: &dyn Fn(&EvalReport) -> f64| rows.iter().map(|r| f(&r.report)).sum::<f64>() / n;
    let count = |f: &dyn Fn(&EvalReport) -> usize| {
        (rows.iter().map(|r| f(&r.report) as f64).sum::<f64>() / n).round() as usize
    };
    Some(EvalReport {
        similarity: mean(&|r| r.similarity),
        false_positive_ratio: mean(&|r| r.false_positive_ratio),
        false_negative_ratio: mean(&|r| r.false_negative_ratio),
        tp: count(&|r| r.tp),
        fp: count(&|r| r.fp),
        fn_: count(&|r| r.fn_),
        tn: count(&|r| r.tn),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantom::Noise;

    fn halves() -> (GrayImage, BinaryMask) {
        let (w, h) = (10, 6);
        let bits: Vec<bool> = (0..w * h).map(|k| k % w >= w / 2).collect();
        let values = bits.iter().map(|&b| if b { 0.8 } else { 0.2 }).collect();
        (
            GrayImage::new(w, h, values).unwrap(),
            BinaryMask::new(w, h, bits).unwrap(),
        )
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert!("kmeans".parse::<Algorithm>().is_err());
    }

    #[test]
    fn every_algorithm_separates_halves() {
        let (image, gt) = halves();
        for algorithm in Algorithm::ALL {
            let config = RunConfig {
                algorithm,
                r_s: 3,
                r_p: 1,
                ..RunConfig::default()
            };
            let outcome = segment_image(&image, &config).unwrap();
            assert_eq!(outcome.membership.shape(), (2, 60));
            let report = score_against(&outcome, &gt).unwrap();
            assert_eq!(report.similarity, 100.0, "{algorithm}");
        }
    }

    #[test]
    fn validation_is_per_algorithm() {
        let bad_h = RunConfig {
            h: 0.0,
            ..RunConfig::default()
        };
        assert!(bad_h.validate().is_ok());
        assert!(RunConfig {
            algorithm: Algorithm::Mfcm,
            ..bad_h
        }
        .validate()
        .is_err());
        assert!(RunConfig {
            clusters: 1,
            ..RunConfig::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn benchmark_rows_are_ordered() {
        let mut spec = PhantomSpec::two_disk(Noise::Gaussian { sigma: 0.05 }, 0);
        spec.width = 32;
        spec.height = 32;
        spec.objects = vec![crate::phantom::Shape::Disk {
            cx: 16.0,
            cy: 16.0,
            radius: 8.0,
        }];
        let rows = run_benchmark(&spec, &RunConfig::default(), &[Algorithm::Fpcm, Algorithm::Fcm], &[3, 1]).unwrap();
        let keys: Vec<(Algorithm, u64)> = rows.iter().map(|r| (r.algorithm, r.seed)).collect();
        assert_eq!(
            keys,
            vec![(Algorithm::Fpcm, 3), (Algorithm::Fpcm, 1), (Algorithm::Fcm, 3), (Algorithm::Fcm, 1)]
        );
        let fcm: Vec<&BenchmarkRow> = rows.iter().filter(|r| r.algorithm == Algorithm::Fcm).collect();
        let mean = mean_report(&fcm).unwrap();
        assert!((mean.similarity - (fcm[0].report.similarity + fcm[1].report.similarity) / 2.0).abs() < 1e-12);
    }
}
