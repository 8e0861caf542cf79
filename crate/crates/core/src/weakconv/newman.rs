//! Newman's inequality: |psi_joint(t) - prod psi_j(t_j)| is at most
//! (1/2) sum_{j != h} |t_j t_h| Cov(X_j, X_h) for associated vectors.

use num_complex::Complex64;
use serde::Serialize;

use crate::conditions::scaling::floor_nt;
use crate::error::{precondition, Error, Result};
use crate::model::{IndexRange, SequenceModel};
use crate::scalar::Real;

use super::ecf::{column_cf, mean_phase};
use super::fdd::check_fdd_grid;
use super::{mc_coordinates, ReplicateEnsemble};

/// Slack per cf comparison is CF_SLACK_FACTOR / sqrt(R).
pub const CF_SLACK_FACTOR: f64 = 6.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NewmanPoint {
    pub t: Vec<f64>,
    pub gap: f64,
    /// Population gap, when the model is Gaussian.
    pub exact_gap: Option<f64>,
    pub bound: f64,
    pub slack: f64,
    pub verdict: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NewmanReport {
    pub k: usize,
    #[serde(rename = "R")]
    pub replicates: usize,
    pub seed: u64,
    pub points: Vec<NewmanPoint>,
    pub verdict: bool,
}

/// (1/2) sum_{j != h} |t_j t_h| c_jh.
pub fn newman_bound(cov: &[Vec<f64>], t: &[f64]) -> f64 {
    let mut s = 0.0;
    for (j, tj) in t.iter().enumerate() {
        for (h, th) in t.iter().enumerate() {
            if j != h {
                s += (tj * th).abs() * cov[j][h];
            }
        }
    }
    0.5 * s
}

/// |exp(-t'Ct/2) - prod exp(-c_jj t_j^2 / 2)| for a centered Gaussian vector.
pub fn gaussian_newman_gap(cov: &[Vec<f64>], t: &[f64]) -> f64 {
    let mut quad = 0.0;
    let mut diag = 0.0;
    for (j, tj) in t.iter().enumerate() {
        diag += cov[j][j] * tj * tj;
        for (h, th) in t.iter().enumerate() {
            quad += tj * th * cov[j][h];
        }
    }
    ((-0.5 * quad).exp() - (-0.5 * diag).exp()).abs()
}

fn covariance_matrix(model: &SequenceModel, k: usize) -> Result<Vec<Vec<f64>>> {
    (1..=k)
        .map(|j| (1..=k).map(|h| model.covariance_at(j, h)).collect())
        .collect()
}

/// Joint-versus-product cf gap of (X_1, ..., X_k) at each point, from one
/// shared ensemble, against the exact covariance bound.
pub fn newman_verify(model: &SequenceModel, k: usize, points: &[Vec<f64>], replicates: usize, seed: u64) -> Result<NewmanReport> {
    model.require_associated()?;
    if points.iter().any(|t| t.len() != k) {
        return Err(Error::Dimension(format!("evaluation points must have {k} coordinates")));
    }
    let cov = covariance_matrix(model, k)?;
    let ens: ReplicateEnsemble<f64> = mc_coordinates(model, k, replicates, seed)?;
    let cols = (0..k).map(|j| ens.column(j)).collect::<Result<Vec<_>>>()?;
    let slack = CF_SLACK_FACTOR / (replicates as f64).sqrt();
    let points = points
        .iter()
        .map(|t| {
            let joint = mean_phase(ens.rows().map(|row| row.iter().zip(t).map(|(x, tj)| tj * x).sum()), replicates);
            let product: Complex64 = cols.iter().zip(t).map(|(c, &tj)| column_cf(c, tj)).product();
            let gap = (joint - product).norm();
            let bound = newman_bound(&cov, t);
            NewmanPoint {
                t: t.clone(),
                gap,
                exact_gap: model.is_gaussian().then(|| gaussian_newman_gap(&cov, t)),
                bound,
                slack,
                verdict: gap <= bound + slack,
            }
        })
        .collect::<Vec<_>>();
    Ok(NewmanReport {
        k,
        replicates,
        seed,
        verdict: points.iter().all(|p| p.verdict),
        points,
    })
}

/// |psi_hat_Z(t) - prod_j psi_hat_{Z_j}(t u_j)| with Z = sum u_j Z_j and
/// Z_j the increments Y_n(t_j) - Y_n(t_{j-1}) of an fdd ensemble.
pub fn increment_decoupling_gap<T: Real>(ensemble: &ReplicateEnsemble<T>, u: &[f64], t: f64) -> Result<f64> {
    if ensemble.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    if u.len() != ensemble.k {
        return Err(Error::Dimension(format!(
            "{} weights for {} increments",
            u.len(),
            ensemble.k
        )));
    }
    let k = ensemble.k;
    let incs: Vec<Vec<f64>> = ensemble
        .rows()
        .map(|row| (0..k).map(|j| row[j].as_f64() - if j == 0 { 0.0 } else { row[j - 1].as_f64() }).collect())
        .collect();
    let scale: Vec<f64> = u.iter().map(|uj| t * uj).collect();
    let joint = mean_phase(
        incs.iter().map(|z| z.iter().zip(&scale).map(|(x, s)| s * x).sum()),
        ensemble.replicates,
    );
    let product: Complex64 = (0..k)
        .map(|j| mean_phase(incs.iter().map(|z| scale[j] * z[j]), ensemble.replicates))
        .product();
    Ok((joint - product).norm())
}

/// Exact Newman bound for the weighted increments of Y_n on `grid` at t.
pub fn increment_newman_bound(model: &SequenceModel, n: usize, grid: &[f64], u: &[f64], t: f64) -> Result<f64> {
    if u.len() != grid.len() {
        return Err(Error::Dimension(format!("{} weights for {} grid points", u.len(), grid.len())));
    }
    let ends = check_fdd_grid(n, grid)?;
    let var = model.window_variance_exact(0, n)?;
    if var <= 0.0 {
        return precondition(format!("s_n = 0 at n = {n}"));
    }
    debug_assert_eq!(ends, grid.iter().map(|&g| floor_nt(n, g)).collect::<Vec<_>>());
    let ranges: Vec<IndexRange> = ends
        .iter()
        .enumerate()
        .map(|(j, &e)| {
            let start = if j == 0 { 0 } else { ends[j - 1] };
            IndexRange::new(start + 1, e - start)
        })
        .collect();
    let cov = ranges
        .iter()
        .map(|a| ranges.iter().map(|b| Ok(model.range_covariance(*a, *b)? / var)).collect())
        .collect::<Result<Vec<Vec<f64>>>>()?;
    let tu: Vec<f64> = u.iter().map(|uj| t * uj).collect();
    Ok(newman_bound(&cov, &tu))
}
