use crate::distance::Metric;
use crate::error::{Error, Result};
use crate::model::{
    argmax_labels, init_membership, max_change, Centroids, Dataset, Matrix, MembershipMatrix,
    SegmentationResult, SolverParams,
};

use super::{distance_table, partition_from_distances, IterationState};

pub(crate) fn check_shape(weights: &Matrix, data: &Dataset) -> Result<()> {
    if weights.cols() != data.len() {
        return Err(Error::DimensionMismatch {
            expected: data.len(),
            found: weights.cols(),
        });
    }
    if weights.rows() == 0 {
        return Err(Error::invalid("at least one cluster is required"));
    }
    Ok(())
}

pub(crate) fn check_fuzzifier(m: f64) -> Result<()> {
    if m > 1.0 && m.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("fuzzifier must be finite and > 1, got {m}")))
    }
}

/// Weighted means `v_i = Σ_k w_ik x_k / Σ_k w_ik` in fixed point order.
///
/// Accumulated relative to the first point, so identical points give back
/// exactly that point.
pub(crate) fn weighted_centers(
    weight: impl Fn(usize, usize) -> f64,
    clusters: usize,
    data: &Dataset,
) -> Result<Centroids> {
    let p = data.dim();
    let origin = data.point(0);
    let mut values = vec![0.0; clusters * p];
    for i in 0..clusters {
        let mut total = 0.0;
        let acc = &mut values[i * p..(i + 1) * p];
        for (k, x) in data.points().enumerate() {
            let w = weight(i, k);
            total += w;
            for ((a, xv), ov) in acc.iter_mut().zip(x).zip(origin) {
                *a += w * (xv - ov);
            }
        }
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::EmptyCluster { cluster: i });
        }
        for (a, ov) in acc.iter_mut().zip(origin) {
            *a = ov + *a / total;
        }
    }
    Centroids::new(p, values)
}

/// Center update `v_i = Σ_k u_ik^m x_k / Σ_k u_ik^m`.
///
/// Accepts any `c × n` weight matrix, so the possibilistic solver reuses it
/// with its unconstrained memberships.
pub fn fcm_centers<U: AsRef<Matrix> + ?Sized>(u: &U, data: &Dataset, m: f64) -> Result<Centroids> {
    let u = u.as_ref();
    check_shape(u, data)?;
    weighted_centers(|i, k| u.get(i, k).powf(m), u.rows(), data)
}

/// Membership update `u_ik = [Σ_j (d_ik/d_jk)^{2/(m-1)}]^{-1}`, with the
/// zero-distance rule.
pub fn fcm_memberships(
    data: &Dataset,
    v: &Centroids,
    m: f64,
    metric: &Metric,
) -> Result<MembershipMatrix> {
    check_fuzzifier(m)?;
    check_centers(data, v, metric)?;
    let d = distance_table(data, v, metric);
    Ok(MembershipMatrix::from_matrix_unchecked(
        partition_from_distances(&d, m),
    ))
}

pub(crate) fn check_centers(data: &Dataset, v: &Centroids, metric: &Metric) -> Result<()> {
    if v.dim() != data.dim() {
        return Err(Error::DimensionMismatch {
            expected: data.dim(),
            found: v.dim(),
        });
    }
    metric.check_dim(data.dim())
}

/// `J_m(U, V) = Σ_k Σ_i u_ik^m ‖x_k - v_i‖²`.
pub fn fcm_objective<U: AsRef<Matrix> + ?Sized>(
    u: &U,
    v: &Centroids,
    data: &Dataset,
    m: f64,
    metric: &Metric,
) -> Result<f64> {
    let u = u.as_ref();
    check_shape(u, data)?;
    check_centers(data, v, metric)?;
    if u.rows() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: v.len(),
            found: u.rows(),
        });
    }
    let d = distance_table(data, v, metric);
    Ok(weighted_sum(u, &d, m))
}

pub(crate) fn weighted_sum(u: &Matrix, dist: &Matrix, m: f64) -> f64 {
    u.as_slice()
        .iter()
        .zip(dist.as_slice())
        .map(|(uv, dv)| uv.powf(m) * dv)
        .sum()
}

pub fn run_fcm(data: &Dataset, params: &SolverParams) -> Result<SegmentationResult> {
    run_fcm_observed(data, params, |_| {})
}

/// [`run_fcm`] with a callback after every iteration.
pub fn run_fcm_observed<F>(
    data: &Dataset,
    params: &SolverParams,
    mut observe: F,
) -> Result<SegmentationResult>
where
    F: FnMut(&IterationState<'_>),
{
    params.validate_for(data.len())?;
    let metric = Metric::for_data(params.norm, data);
    let mut u = init_membership(params.clusters, data.len(), params.seed)?.into_matrix();
    let mut centers = fcm_centers(&u, data, params.m)?;
    let mut trace = Vec::new();
    let mut converged = false;

    for iteration in 1..=params.max_iter {
        centers = fcm_centers(&u, data, params.m)?;
        let dist = distance_table(data, &centers, &metric);
        let next = partition_from_distances(&dist, params.m);
        let objective = weighted_sum(&next, &dist, params.m);
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
        if change <= params.epsilon {
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
