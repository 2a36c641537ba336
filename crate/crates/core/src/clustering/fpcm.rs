use crate::distance::Metric;
use crate::error::{Error, Result};
use crate::model::{
    argmax_labels, init_membership, max_change, Centroids, Dataset, Matrix, MembershipMatrix,
    SegmentationResult, SolverParams, TypicalityMatrix,
};

use super::fcm::{check_centers, check_shape, fcm_centers, fcm_memberships, weighted_centers};
use super::{distance_table, partition_from_distances, IterationState};

#[derive(Debug, Clone, PartialEq)]
pub struct FpcmParams {
    pub base: SolverParams,
    /// Typicality exponent, strictly greater than one.
    pub eta_exp: f64,
}

impl Default for FpcmParams {
    fn default() -> Self {
        Self {
            base: SolverParams::default(),
            eta_exp: 2.0,
        }
    }
}

impl FpcmParams {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        check_eta_exp(self.eta_exp)
    }
}

fn check_eta_exp(eta_exp: f64) -> Result<()> {
    if eta_exp > 1.0 && eta_exp.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "typicality exponent must be finite and > 1, got {eta_exp}"
        )))
    }
}

/// Same update as [`fcm_memberships`].
pub fn fpcm_memberships(
    data: &Dataset,
    v: &Centroids,
    m: f64,
    metric: &Metric,
) -> Result<MembershipMatrix> {
    fcm_memberships(data, v, m, metric)
}

/// Row-wise typicalities `t_ik = [Σ_j (D_ik/D_ij)^{2/(η-1)}]^{-1}`, the sum
/// running over data points. Points at zero distance from a center share that
/// row equally.
pub fn fpcm_typicalities(
    data: &Dataset,
    v: &Centroids,
    eta_exp: f64,
    metric: &Metric,
) -> Result<TypicalityMatrix> {
    check_eta_exp(eta_exp)?;
    check_centers(data, v, metric)?;
    let d = distance_table(data, v, metric);
    Ok(TypicalityMatrix::from_matrix_unchecked(
        typicalities_from_distances(&d, eta_exp),
    ))
}

fn typicalities_from_distances(d: &Matrix, eta_exp: f64) -> Matrix {
    let exponent = 1.0 / (eta_exp - 1.0);
    let (c, n) = d.shape();
    let mut t = Matrix::zeros(c, n);
    for i in 0..c {
        let row = d.row(i);
        let zeros = row.iter().filter(|&&x| x == 0.0).count();
        if zeros > 0 {
            let share = 1.0 / zeros as f64;
            for (k, &x) in row.iter().enumerate() {
                t.set(i, k, if x == 0.0 { share } else { 0.0 });
            }
            continue;
        }
        // Σ_j (D_ik/D_ij)^q = D_ik^q · Σ_j D_ij^{-q}; scaling every term by the
        // row minimum keeps the O(n) form free of overflow.
        let floor = row.iter().copied().fold(f64::INFINITY, f64::min);
        let scaled: Vec<f64> = row.iter().map(|&x| (floor / x).powf(exponent)).collect();
        let total: f64 = scaled.iter().sum();
        for (k, s) in scaled.iter().enumerate() {
            t.set(i, k, s / total);
        }
    }
    t
}

/// `v_i = Σ_k (u_ik^m + t_ik^η) x_k / Σ_k (u_ik^m + t_ik^η)`.
pub fn fpcm_centers<U, T>(u: &U, t: &T, data: &Dataset, m: f64, eta_exp: f64) -> Result<Centroids>
where
    U: AsRef<Matrix> + ?Sized,
    T: AsRef<Matrix> + ?Sized,
{
    let (u, t) = (u.as_ref(), t.as_ref());
    check_shape(u, data)?;
    if t.shape() != u.shape() {
        return Err(Error::invalid(format!(
            "membership {:?} and typicality {:?} shapes differ",
            u.shape(),
            t.shape()
        )));
    }
    weighted_centers(
        |i, k| u.get(i, k).powf(m) + t.get(i, k).powf(eta_exp),
        u.rows(),
        data,
    )
}

/// `J_{m,η} = Σ_i Σ_k (u_ik^m + t_ik^η) D_ik²`.
pub fn fpcm_objective<U, T>(
    u: &U,
    t: &T,
    v: &Centroids,
    data: &Dataset,
    m: f64,
    eta_exp: f64,
    metric: &Metric,
) -> Result<f64>
where
    U: AsRef<Matrix> + ?Sized,
    T: AsRef<Matrix> + ?Sized,
{
    let (u, t) = (u.as_ref(), t.as_ref());
    check_shape(u, data)?;
    check_centers(data, v, metric)?;
    if t.shape() != u.shape() || u.rows() != v.len() {
        return Err(Error::invalid("membership, typicality and centers disagree in shape"));
    }
    let d = distance_table(data, v, metric);
    Ok(objective_from_distances(u, t, &d, m, eta_exp))
}

fn objective_from_distances(u: &Matrix, t: &Matrix, d: &Matrix, m: f64, eta_exp: f64) -> f64 {
    u.as_slice()
        .iter()
        .zip(t.as_slice())
        .zip(d.as_slice())
        .map(|((uv, tv), dv)| (uv.powf(m) + tv.powf(eta_exp)) * dv)
        .sum()
}

pub fn run_fpcm(data: &Dataset, params: &FpcmParams) -> Result<SegmentationResult> {
    run_fpcm_observed(data, params, |_| {})
}

/// Fuzzy possibilistic c-means; convergence is tested on the membership matrix.
pub fn run_fpcm_observed<F>(
    data: &Dataset,
    params: &FpcmParams,
    mut observe: F,
) -> Result<SegmentationResult>
where
    F: FnMut(&IterationState<'_>),
{
    params.validate()?;
    let base = &params.base;
    base.validate_for(data.len())?;
    let metric = Metric::for_data(base.norm, data);
    let mut u = init_membership(base.clusters, data.len(), base.seed)?.into_matrix();
    let mut centers = fcm_centers(&u, data, base.m)?;
    let mut t = Matrix::zeros(base.clusters, data.len());
    let mut trace = Vec::new();
    let mut converged = false;

    for iteration in 1..=base.max_iter {
        let d = distance_table(data, &centers, &metric);
        let next = partition_from_distances(&d, base.m);
        t = typicalities_from_distances(&d, params.eta_exp);
        centers = fpcm_centers(&next, &t, data, base.m, params.eta_exp)?;
        let d_next = distance_table(data, &centers, &metric);
        let objective = objective_from_distances(&next, &t, &d_next, base.m, params.eta_exp);
        let change = max_change(&u, &next)?;
        trace.push(objective);
        observe(&IterationState {
            iteration,
            membership: &next,
            typicality: Some(&t),
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
        typicality: Some(TypicalityMatrix::from_matrix_unchecked(t)),
        centroids: centers,
        iterations: trace.len(),
        objective_trace: trace,
        converged,
    })
}
