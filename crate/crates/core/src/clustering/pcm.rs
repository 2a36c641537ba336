use crate::distance::Metric;
use crate::error::{Error, Result};
use crate::model::{argmax_labels, max_change, Centroids, Dataset, Matrix, SolverParams};

use super::fcm::{check_centers, check_fuzzifier, check_shape, fcm_centers, run_fcm};
use super::{distance_table, IterationState};

/// When the possibilistic scales `η_i` are estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EtaMode {
    /// Once, from the initializing FCM partition.
    #[default]
    FixedFromInit,
    /// Again after every center update.
    PerIteration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcmParams {
    pub base: SolverParams,
    pub eta_mode: EtaMode,
    /// Multiplier on the estimated scales.
    pub k: f64,
}

impl Default for PcmParams {
    fn default() -> Self {
        Self {
            base: SolverParams::default(),
            eta_mode: EtaMode::FixedFromInit,
            k: 1.0,
        }
    }
}

impl PcmParams {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        check_k(self.k)
    }
}

fn check_k(k: f64) -> Result<()> {
    if k > 0.0 && k.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("scale factor K must be > 0, got {k}")))
    }
}

/// Output of [`run_pcm`]. Membership columns are not normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct PcmResult {
    /// `c × n`, entries in `(0, 1]`.
    pub membership: Matrix,
    pub centroids: Centroids,
    pub eta: Vec<f64>,
    pub labels: Vec<usize>,
    pub iterations: usize,
    pub objective_trace: Vec<f64>,
    pub converged: bool,
}

/// Fuzzy intra-cluster distance estimate
/// `η_i = K · Σ_k u_ik^m d_ik² / Σ_k u_ik^m`.
pub fn pcm_eta<U: AsRef<Matrix> + ?Sized>(
    u: &U,
    data: &Dataset,
    v: &Centroids,
    m: f64,
    k: f64,
    metric: &Metric,
) -> Result<Vec<f64>> {
    let u = u.as_ref();
    check_shape(u, data)?;
    check_centers(data, v, metric)?;
    check_k(k)?;
    if u.rows() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: v.len(),
            found: u.rows(),
        });
    }
    let d = distance_table(data, v, metric);
    eta_from_distances(u, &d, m, k)
}

fn eta_from_distances(u: &Matrix, d: &Matrix, m: f64, k: f64) -> Result<Vec<f64>> {
    (0..u.rows())
        .map(|i| {
            let mut num = 0.0;
            let mut den = 0.0;
            for (uv, dv) in u.row(i).iter().zip(d.row(i)) {
                let w = uv.powf(m);
                num += w * dv;
                den += w;
            }
            if !(den > 0.0) {
                return Err(Error::EmptyCluster { cluster: i });
            }
            let eta = k * num / den;
            if eta > 0.0 && eta.is_finite() {
                Ok(eta)
            } else {
                Err(Error::DegenerateEta { cluster: i })
            }
        })
        .collect()
}

/// `u_ij = 1 / (1 + (d_ij²/η_i)^{1/(m-1)})`.
pub fn pcm_memberships(
    data: &Dataset,
    v: &Centroids,
    eta: &[f64],
    m: f64,
    metric: &Metric,
) -> Result<Matrix> {
    check_fuzzifier(m)?;
    check_centers(data, v, metric)?;
    if eta.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: v.len(),
            found: eta.len(),
        });
    }
    if let Some(bad) = eta.iter().find(|e| !(**e > 0.0)) {
        return Err(Error::invalid(format!("every eta must be > 0, got {bad}")));
    }
    let d = distance_table(data, v, metric);
    Ok(memberships_from_distances(&d, eta, m))
}

fn memberships_from_distances(d: &Matrix, eta: &[f64], m: f64) -> Matrix {
    let exponent = 1.0 / (m - 1.0);
    let (c, n) = d.shape();
    let mut u = Matrix::zeros(c, n);
    for (i, &e) in eta.iter().enumerate() {
        for k in 0..n {
            let ratio = d.get(i, k) / e;
            let value = 1.0 / (1.0 + ratio.powf(exponent));
            // the open lower bound survives underflow for remote points
            u.set(i, k, value.max(f64::MIN_POSITIVE));
        }
    }
    u
}

/// `Σ_i Σ_j u_ij^m d_ij² + Σ_i η_i Σ_j (1 - u_ij)^m`.
pub fn pcm_objective(
    u: &Matrix,
    v: &Centroids,
    eta: &[f64],
    data: &Dataset,
    m: f64,
    metric: &Metric,
) -> Result<f64> {
    check_shape(u, data)?;
    check_centers(data, v, metric)?;
    if u.rows() != v.len() || eta.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: v.len(),
            found: u.rows().min(eta.len()),
        });
    }
    let d = distance_table(data, v, metric);
    Ok(objective_from_distances(u, &d, eta, m))
}

fn objective_from_distances(u: &Matrix, d: &Matrix, eta: &[f64], m: f64) -> f64 {
    let mut fit = 0.0;
    let mut penalty = 0.0;
    for (i, &e) in eta.iter().enumerate() {
        let mut row_penalty = 0.0;
        for (uv, dv) in u.row(i).iter().zip(d.row(i)) {
            fit += uv.powf(m) * dv;
            row_penalty += (1.0 - uv).powf(m);
        }
        penalty += e * row_penalty;
    }
    fit + penalty
}

pub fn run_pcm(data: &Dataset, params: &PcmParams) -> Result<PcmResult> {
    run_pcm_observed(data, params, |_| {})
}

/// Possibilistic c-means started from a converged FCM partition.
pub fn run_pcm_observed<F>(data: &Dataset, params: &PcmParams, mut observe: F) -> Result<PcmResult>
where
    F: FnMut(&IterationState<'_>),
{
    params.validate()?;
    let base = &params.base;
    let metric = Metric::for_data(base.norm, data);
    let init = run_fcm(data, base)?;
    let mut u = init.membership.into_matrix();
    let mut centers = init.centroids;
    let d0 = distance_table(data, &centers, &metric);
    let mut eta = eta_from_distances(&u, &d0, base.m, params.k)?;

    let mut trace = Vec::new();
    let mut converged = false;
    for iteration in 1..=base.max_iter {
        let d = distance_table(data, &centers, &metric);
        let next = memberships_from_distances(&d, &eta, base.m);
        centers = fcm_centers(&next, data, base.m)?;
        let d_next = distance_table(data, &centers, &metric);
        if params.eta_mode == EtaMode::PerIteration {
            eta = eta_from_distances(&next, &d_next, base.m, params.k)?;
        }
        let objective = objective_from_distances(&next, &d_next, &eta, base.m);
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

    Ok(PcmResult {
        labels: argmax_labels(&u),
        membership: u,
        centroids: centers,
        eta,
        iterations: trace.len(),
        objective_trace: trace,
        converged,
    })
}
