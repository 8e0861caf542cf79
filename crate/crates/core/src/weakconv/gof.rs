//! Goodness of fit of a scalar ensemble against N(0, sd^2).

use crate::error::{Error, Result};
use crate::law::normal_cdf;
use crate::scalar::Real;

use super::ReplicateEnsemble;

/// Asymptotic 5% Kolmogorov-Smirnov critical value, relaxed by 1.5.
pub fn ks_cutoff(replicates: usize) -> f64 {
    1.5 * 1.36 / (replicates as f64).sqrt()
}

fn sorted_uniforms(values: &[f64], sd: f64) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    if sd.is_nan() || sd <= 0.0 {
        return Err(Error::Precondition(format!("reference sd = {sd} must be positive")));
    }
    let mut u: Vec<f64> = values.iter().map(|&x| normal_cdf(x / sd)).collect();
    u.sort_by(f64::total_cmp);
    Ok(u)
}

/// sup_x |F_R(x) - Phi(x / sd)|.
pub fn ks_statistic(values: &[f64], sd: f64) -> Result<f64> {
    let u = sorted_uniforms(values, sd)?;
    let r = u.len() as f64;
    Ok(u.iter().enumerate().fold(0.0f64, |d, (i, &ui)| {
        let i = i as f64;
        d.max((i + 1.0) / r - ui).max(ui - i / r)
    }))
}

/// W^2 = 1/(12R) + sum (u_(i) - (2i-1)/(2R))^2.
pub fn cvm_statistic(values: &[f64], sd: f64) -> Result<f64> {
    let u = sorted_uniforms(values, sd)?;
    let r = u.len() as f64;
    let sum: f64 = u
        .iter()
        .enumerate()
        .map(|(i, &ui)| (ui - (2.0 * i as f64 + 1.0) / (2.0 * r)).powi(2))
        .sum();
    Ok(1.0 / (12.0 * r) + sum)
}

/// Kolmogorov-Smirnov distance of a scalar ensemble to N(0, 1).
pub fn ks_to_normal<T: Real>(ensemble: &ReplicateEnsemble<T>) -> Result<f64> {
    ks_statistic(&ensemble.scalar()?, 1.0)
}

/// Cramer-von Mises W^2 of a scalar ensemble against N(0, 1).
pub fn cvm_to_normal<T: Real>(ensemble: &ReplicateEnsemble<T>) -> Result<f64> {
    cvm_statistic(&ensemble.scalar()?, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::law::normal_quantile;

    fn plotting_positions(r: usize) -> ReplicateEnsemble<f64> {
        ReplicateEnsemble::from_sample((1..=r).map(|i| normal_quantile((i as f64 - 0.5) / r as f64)).collect())
    }

    #[test]
    fn plotting_positions_are_closest() {
        let e = plotting_positions(100);
        assert!((ks_to_normal(&e).unwrap() - 0.005).abs() < 1e-12);
        assert!((cvm_to_normal(&e).unwrap() - 1.0 / 1200.0).abs() < 1e-12);
    }

    #[test]
    fn all_zero_sample() {
        let e = ReplicateEnsemble::from_sample(vec![0.0f64; 50]);
        assert_eq!(ks_to_normal(&e).unwrap(), 0.5);
        // 1/600 + sum over i of (0.5 - (2i-1)/100)^2
        let oracle = 1.0 / 600.0 + (1..=50).map(|i| (0.5 - (2 * i - 1) as f64 / 100.0).powi(2)).sum::<f64>();
        let w2 = cvm_to_normal(&e).unwrap();
        assert!((w2 - oracle).abs() < 1e-12 && w2 > 0.05);
    }

    #[test]
    fn empty_and_multicolumn_rejected() {
        let e = ReplicateEnsemble::<f64>::from_sample(vec![]);
        assert!(matches!(ks_to_normal(&e), Err(Error::EmptyEnsemble)));
        assert!(matches!(cvm_to_normal(&e), Err(Error::EmptyEnsemble)));
        let two = ReplicateEnsemble::from_rows(vec![vec![0.0f64, 1.0]]).unwrap();
        assert!(matches!(ks_to_normal(&two), Err(Error::Dimension(_))));
    }

    #[test]
    fn cutoff_value() {
        assert!((ks_cutoff(2000) - 0.045_614).abs() < 1e-5);
    }
}
