//! Monte-Carlo checks of the Gaussian limit of S'_n / s'_n, of Newman's
//! inequality, and of finite-dimensional invariance principles.
//!
//! Every ensemble is a pure function of (model, design, R, seed): replicate
//! `r` draws from its own stream, so results do not depend on the number of
//! worker threads.

pub mod ecf;
pub mod fdd;
pub mod gof;
pub mod newman;

pub use ecf::{ecf, ecf_scalar, CharFunctionEstimate, DEFAULT_CF_GRID};
pub use fdd::{fdd_covariance_check, fdd_ensemble, FddCovarianceReport};
pub use gof::{cvm_statistic, cvm_to_normal, ks_cutoff, ks_statistic, ks_to_normal};
pub use newman::{
    gaussian_newman_gap, increment_decoupling_gap, increment_newman_bound, newman_bound, newman_verify, NewmanPoint,
    NewmanReport, CF_SLACK_FACTOR,
};

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::conditions::fmt_real;
use crate::error::{precondition, Error, Result};
use crate::model::SequenceModel;
use crate::path::PathSampler;
use crate::rng::replicate_rng;
use crate::scalar::Real;
use crate::sums::Window;

/// What an ensemble row holds.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "design", rename_all = "kebab-case")]
pub enum Design {
    /// S'_n / s'_n over the window.
    NormalizedSum { p: usize, n: usize },
    /// (Y_n(t_1), ..., Y_n(t_k)).
    Fdd { n: usize, grid: Vec<f64> },
    /// (X_1, ..., X_k), unnormalized.
    Coordinates { k: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub model: String,
    #[serde(flatten)]
    pub design: Design,
    pub seed: u64,
}

/// R independent rows of k values, row-major.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateEnsemble<T> {
    pub replicates: usize,
    pub k: usize,
    pub values: Vec<T>,
    pub columns: Vec<String>,
    pub provenance: Provenance,
}

impl<T: Real> ReplicateEnsemble<T> {
    /// Ensemble from explicit rows; provenance is left as a 1-column design.
    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let k = rows.first().map_or(1, Vec::len);
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::Dimension("rows of unequal length".into()));
        }
        Ok(Self {
            replicates: rows.len(),
            k,
            columns: default_columns(k),
            values: rows.into_iter().flatten().collect(),
            provenance: Provenance {
                model: "data".into(),
                design: Design::Coordinates { k },
                seed: 0,
            },
        })
    }

    /// Scalar ensemble from a sample.
    pub fn from_sample(sample: Vec<T>) -> Self {
        Self {
            replicates: sample.len(),
            k: 1,
            columns: default_columns(1),
            values: sample,
            provenance: Provenance {
                model: "data".into(),
                design: Design::Coordinates { k: 1 },
                seed: 0,
            },
        }
    }

    pub fn is_empty(&self) -> bool {
        self.replicates == 0
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.values[i * self.k..(i + 1) * self.k]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.values.chunks(self.k.max(1)).take(self.replicates)
    }

    /// Column j widened to f64.
    pub fn column(&self, j: usize) -> Result<Vec<f64>> {
        if j >= self.k {
            return Err(Error::Dimension(format!("column {j} of a {}-column ensemble", self.k)));
        }
        Ok(self.rows().map(|r| r[j].as_f64()).collect())
    }

    /// The single column of a scalar ensemble.
    pub fn scalar(&self) -> Result<Vec<f64>> {
        if self.replicates == 0 {
            return Err(Error::EmptyEnsemble);
        }
        if self.k != 1 {
            return Err(Error::Dimension(format!("expected a scalar ensemble, got {} columns", self.k)));
        }
        self.column(0)
    }

    /// Replace the model label recorded in the provenance.
    pub fn labeled(mut self, model: impl Into<String>) -> Self {
        self.provenance.model = model.into();
        self
    }

    /// One row per replicate: `replicate,<columns...>`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["replicate".to_string()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header)?;
        for (i, row) in self.rows().enumerate() {
            let mut rec = vec![i.to_string()];
            rec.extend(row.iter().map(|x| fmt_real(x.as_f64())));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn default_columns(k: usize) -> Vec<String> {
    (1..=k).map(|j| format!("x{j}")).collect()
}

/// Outcome of one fixed-cutoff check, as written to reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub statistic: String,
    pub value: f64,
    pub cutoff: f64,
    pub verdict: bool,
    #[serde(rename = "R")]
    pub replicates: usize,
    pub seed: u64,
}

impl CheckRecord {
    /// Verdict is `value <= cutoff`.
    pub fn new(statistic: impl Into<String>, value: f64, cutoff: f64, replicates: usize, seed: u64) -> Self {
        Self {
            statistic: statistic.into(),
            value,
            cutoff,
            verdict: value <= cutoff,
            replicates,
            seed,
        }
    }
}

pub(crate) fn check_replicates(replicates: usize, min: usize) -> Result<()> {
    if replicates < min {
        return precondition(format!("R = {replicates} replicates, need at least {min}"));
    }
    Ok(())
}

/// Rows `row(path)` for replicates 0..R, each drawn on its own stream.
pub(crate) fn simulate_rows<T: Real>(
    sampler: &PathSampler,
    replicates: usize,
    seed: u64,
    k: usize,
    row: impl Fn(&[f64], &mut Vec<T>) + Sync,
) -> Vec<T> {
    let rows: Vec<Vec<T>> = (0..replicates as u64)
        .into_par_iter()
        .map_init(
            || vec![0.0; sampler.len()],
            |buf, rep| {
                let mut rng = replicate_rng(seed, rep);
                sampler.fill(&mut rng, buf);
                let mut out = Vec::with_capacity(k);
                row(buf, &mut out);
                out
            },
        )
        .collect();
    rows.into_iter().flatten().collect()
}

/// R independent draws of S'_n / s'_n with the exact s'_n.
pub fn mc_normalized_sums<T: Real>(
    model: &SequenceModel,
    window: Window,
    replicates: usize,
    seed: u64,
) -> Result<ReplicateEnsemble<T>> {
    check_replicates(replicates, 2)?;
    let var = model.window_variance_exact(window.p, window.n)?;
    if var <= 0.0 {
        return Err(Error::ZeroVariance(format!("s'_n = 0 for window p={}, n={}", window.p, window.n)));
    }
    let sd = var.sqrt();
    let sampler = PathSampler::new(model, window.p, window.n)?;
    let values = simulate_rows(&sampler, replicates, seed, 1, |xs, out| {
        out.push(T::of(xs.iter().sum::<f64>() / sd));
    });
    Ok(ReplicateEnsemble {
        replicates,
        k: 1,
        values,
        columns: vec!["s_over_sd".into()],
        provenance: Provenance {
            model: model.kind_name().into(),
            design: Design::NormalizedSum { p: window.p, n: window.n },
            seed,
        },
    })
}

/// R independent draws of (X_1, ..., X_k).
pub fn mc_coordinates<T: Real>(model: &SequenceModel, k: usize, replicates: usize, seed: u64) -> Result<ReplicateEnsemble<T>> {
    check_replicates(replicates, 2)?;
    if k == 0 {
        return precondition("need at least one coordinate");
    }
    let sampler = PathSampler::new(model, 0, k)?;
    let values = simulate_rows(&sampler, replicates, seed, k, |xs, out| {
        out.extend(xs.iter().map(|&x| T::of(x)));
    });
    Ok(ReplicateEnsemble {
        replicates,
        k,
        values,
        columns: default_columns(k),
        provenance: Provenance {
            model: model.kind_name().into(),
            design: Design::Coordinates { k },
            seed,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Family, VarianceRule};

    #[test]
    fn normalized_sums_shape_and_mean() {
        let m = SequenceModel::iid(Family::Normal);
        let r = 20_000;
        let e: ReplicateEnsemble<f64> = mc_normalized_sums(&m, Window::new(50, 50), r, 7).unwrap();
        assert_eq!((e.replicates, e.k, e.values.len()), (r, 1, r));
        assert!(e.values.iter().all(|x| x.is_finite()));
        let mean = e.values.iter().sum::<f64>() / r as f64;
        assert!(mean.abs() < 3.0 / (r as f64).sqrt());
        let var = e.values.iter().map(|x| x * x).sum::<f64>() / r as f64;
        assert!((var - 1.0).abs() < 0.05);
    }

    #[test]
    fn normalized_sums_errors() {
        let zero = SequenceModel::independent(Family::Normal, VarianceRule::Constant { value: 0.0 });
        assert!(matches!(
            mc_normalized_sums::<f64>(&zero, Window::new(0, 10), 10, 1),
            Err(Error::ZeroVariance(_))
        ));
        let m = SequenceModel::iid(Family::Normal);
        assert!(mc_normalized_sums::<f64>(&m, Window::new(0, 10), 1, 1).is_err());
    }

    #[test]
    fn regeneration_is_bit_identical_and_precision_generic() {
        let m = SequenceModel::ar1(0.5, 0.75);
        let a: ReplicateEnsemble<f64> = mc_normalized_sums(&m, Window::new(3, 40), 100, 11).unwrap();
        let b: ReplicateEnsemble<f64> = mc_normalized_sums(&m, Window::new(3, 40), 100, 11).unwrap();
        assert_eq!(a, b);
        let c: ReplicateEnsemble<f32> = mc_normalized_sums(&m, Window::new(3, 40), 100, 11).unwrap();
        for (x, y) in a.values.iter().zip(&c.values) {
            assert_eq!(*x as f32, *y);
        }
    }

    #[test]
    fn csv_has_one_row_per_replicate() {
        let e = ReplicateEnsemble::from_rows(vec![vec![1.0f64, 2.0], vec![3.0, 4.0]]).unwrap();
        let mut buf = Vec::new();
        e.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], "replicate,x1,x2");
        assert!(lines[2].starts_with("1,3.0000000000000000e0,"));
    }
}
