//! Finite-dimensional distributions of Y_n(t) = S_[nt] / s_n.

use serde::Serialize;

use crate::conditions::scaling::floor_nt;
use crate::conditions::ScalingFunction;
use crate::error::{precondition, Error, Result};
use crate::model::SequenceModel;
use crate::path::PathSampler;
use crate::scalar::Real;

use super::{check_replicates, simulate_rows, Design, Provenance, ReplicateEnsemble};

pub(crate) fn check_fdd_grid(n: usize, grid: &[f64]) -> Result<Vec<usize>> {
    if grid.is_empty() {
        return precondition("empty time grid");
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return precondition("time grid must be strictly increasing");
    }
    if grid[0].is_nan() || grid[0] <= 0.0 || grid[grid.len() - 1] > 1.0 {
        return precondition("time grid must lie in (0, 1]");
    }
    let ends: Vec<usize> = grid.iter().map(|&t| floor_nt(n, t)).collect();
    if ends[0] < 1 {
        return precondition(format!("n t_1 = {} < 1", n as f64 * grid[0]));
    }
    Ok(ends)
}

/// R rows of (Y_n(t_1), ..., Y_n(t_k)), normalized by the exact s_n.
pub fn fdd_ensemble<T: Real>(
    model: &SequenceModel,
    n: usize,
    grid: &[f64],
    replicates: usize,
    seed: u64,
) -> Result<ReplicateEnsemble<T>> {
    check_replicates(replicates, 2)?;
    let ends = check_fdd_grid(n, grid)?;
    let var = model.window_variance_exact(0, n)?;
    if var <= 0.0 {
        return Err(Error::ZeroVariance(format!("s_n = 0 at n = {n}")));
    }
    let sd = var.sqrt();
    let last = ends[ends.len() - 1];
    let sampler = PathSampler::new(model, 0, last)?;
    let k = grid.len();
    let values = simulate_rows(&sampler, replicates, seed, k, |xs, out| {
        let mut acc = 0.0;
        let mut from = 0;
        for &end in &ends {
            acc += xs[from..end].iter().sum::<f64>();
            from = end;
            out.push(T::of(acc / sd));
        }
    });
    Ok(ReplicateEnsemble {
        replicates,
        k,
        values,
        columns: grid.iter().map(|t| format!("t={t}")).collect(),
        provenance: Provenance {
            model: model.kind_name().into(),
            design: Design::Fdd { n, grid: grid.to_vec() },
            seed,
        },
    })
}

/// Empirical covariance of the fdd coordinates against a(t_j) ∧ a(t_h).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FddCovarianceReport {
    pub grid: Vec<f64>,
    pub empirical: Vec<Vec<f64>>,
    pub target: Vec<Vec<f64>>,
    pub max_deviation: f64,
    #[serde(rename = "R")]
    pub replicates: usize,
}

impl FddCovarianceReport {
    /// Smallest off-diagonal empirical covariance.
    pub fn min_offdiagonal(&self) -> f64 {
        let k = self.grid.len();
        (0..k)
            .flat_map(|j| (0..k).filter(move |&h| h != j).map(move |h| (j, h)))
            .map(|(j, h)| self.empirical[j][h])
            .fold(f64::INFINITY, f64::min)
    }
}

/// Target M_jh = min(a(t_j), a(t_h)).
pub fn fdd_target(a: &ScalingFunction, grid: &[f64]) -> Result<Vec<Vec<f64>>> {
    let at = grid.iter().map(|&t| a.eval(t)).collect::<Result<Vec<_>>>()?;
    Ok(at.iter().map(|&x| at.iter().map(|&y| x.min(y)).collect()).collect())
}

pub fn fdd_covariance_check<T: Real>(ensemble: &ReplicateEnsemble<T>, a: &ScalingFunction) -> Result<FddCovarianceReport> {
    let Design::Fdd { grid, .. } = &ensemble.provenance.design else {
        return Err(Error::Dimension("ensemble was not built on a time grid".into()));
    };
    for t in grid {
        if !a.grid.iter().any(|g| (g - t).abs() <= 1e-12) {
            return Err(Error::Dimension(format!("grid point {t} is not on the scaling grid")));
        }
    }
    if ensemble.replicates < 2 {
        return Err(Error::EmptyEnsemble);
    }
    let target = fdd_target(a, grid)?;
    let cols = (0..ensemble.k).map(|j| ensemble.column(j)).collect::<Result<Vec<_>>>()?;
    let r = ensemble.replicates as f64;
    let means: Vec<f64> = cols.iter().map(|c| c.iter().sum::<f64>() / r).collect();
    let empirical: Vec<Vec<f64>> = (0..ensemble.k)
        .map(|j| {
            (0..ensemble.k)
                .map(|h| {
                    cols[j]
                        .iter()
                        .zip(&cols[h])
                        .map(|(x, y)| (x - means[j]) * (y - means[h]))
                        .sum::<f64>()
                        / (r - 1.0)
                })
                .collect()
        })
        .collect();
    let max_deviation = empirical
        .iter()
        .flatten()
        .zip(target.iter().flatten())
        .map(|(e, t)| (e - t).abs())
        .fold(0.0, f64::max);
    Ok(FddCovarianceReport {
        grid: grid.clone(),
        empirical,
        target,
        max_deviation,
        replicates: ensemble.replicates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Family, VarianceRule};
    use crate::sums::Window;
    use crate::weakconv::mc_normalized_sums;

    #[test]
    fn single_point_is_the_normalized_sum() {
        let m = SequenceModel::ar1(0.3, 1.0);
        let a: ReplicateEnsemble<f64> = fdd_ensemble(&m, 64, &[1.0], 50, 9).unwrap();
        let b: ReplicateEnsemble<f64> = mc_normalized_sums(&m, Window::new(0, 64), 50, 9).unwrap();
        assert_eq!(a.values, b.values);
    }

    #[test]
    fn increments_telescope() {
        let m = SequenceModel::iid(Family::Rademacher);
        let e: ReplicateEnsemble<f64> = fdd_ensemble(&m, 100, &[0.25, 0.5, 1.0], 20, 4).unwrap();
        for row in e.rows() {
            let z: Vec<f64> = (0..3).map(|j| row[j] - if j == 0 { 0.0 } else { row[j - 1] }).collect();
            let mut acc = 0.0;
            for j in 0..3 {
                acc += z[j];
                assert!((acc - row[j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn grid_violations() {
        let m = SequenceModel::iid(Family::Normal);
        for grid in [vec![], vec![0.0, 1.0], vec![0.5, 0.5], vec![0.5, 1.5], vec![0.001, 1.0]] {
            assert!(fdd_ensemble::<f64>(&m, 100, &grid, 10, 1).is_err(), "{grid:?}");
        }
    }

    #[test]
    fn targets() {
        let a = ScalingFunction::identity(&[0.25, 0.5, 1.0]).unwrap();
        let t = fdd_target(&a, &[0.25, 0.5, 1.0]).unwrap();
        assert_eq!(t, vec![vec![0.25, 0.25, 0.25], vec![0.25, 0.5, 0.5], vec![0.25, 0.5, 1.0]]);
        let one = ScalingFunction::identity(&[1.0]).unwrap();
        assert_eq!(fdd_target(&one, &[1.0]).unwrap(), vec![vec![1.0]]);
    }

    #[test]
    fn linear_variance_matches_squared_time_change() {
        let m = SequenceModel::independent(Family::Normal, VarianceRule::Linear { scale: 1.0 });
        let grid = [0.25, 0.5, 1.0];
        let e: ReplicateEnsemble<f64> = fdd_ensemble(&m, 1024, &grid, 4000, 21).unwrap();
        let a = ScalingFunction::analytic(&grid, "t^2", |t| t * t).unwrap();
        let rep = fdd_covariance_check(&e, &a).unwrap();
        assert!(rep.max_deviation < 0.07, "{rep:?}");
    }

    #[test]
    fn mismatched_grid_rejected() {
        let m = SequenceModel::iid(Family::Normal);
        let e: ReplicateEnsemble<f64> = fdd_ensemble(&m, 100, &[0.3, 1.0], 10, 1).unwrap();
        let a = ScalingFunction::identity(&[0.25, 1.0]).unwrap();
        assert!(matches!(fdd_covariance_check(&e, &a), Err(Error::Dimension(_))));
    }
}
