//! Reproducible realizations of (X_{p+1}, ..., X_{p+n}).

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::law::unit_draw;
use crate::model::{CovarianceRule, IndexRange, SequenceModel};
use crate::rng::replicate_rng;
use crate::scalar::Real;

/// Relative diagonal jitter applied on a failed factorization.
pub const CHOLESKY_JITTER: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplePath<T> {
    /// Index of `values[0]`, i.e. p + 1.
    pub first: usize,
    pub values: Vec<T>,
    pub seed: u64,
    pub replicate: u64,
}

impl<T: Real> SamplePath<T> {
    /// Path with explicit values, for callers that already hold data.
    pub fn from_values(first: usize, values: Vec<T>) -> Self {
        Self {
            first,
            values,
            seed: 0,
            replicate: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Last covered index; `first - 1` for an empty path.
    pub fn last(&self) -> usize {
        self.first + self.values.len() - 1
    }

    /// Values at indices `range`, if covered.
    pub fn slice(&self, range: IndexRange) -> Option<&[T]> {
        if range.len == 0 {
            return Some(&[]);
        }
        if range.first < self.first || range.last() > self.last() {
            return None;
        }
        let off = range.first - self.first;
        Some(&self.values[off..off + range.len])
    }
}

/// How one replicate is drawn; computed once per (model, window).
#[derive(Debug, Clone)]
enum Plan {
    Independent { sds: Vec<f64>, family: crate::model::Family },
    Ar1 { phi: f64, stationary_sd: f64, innovation_sd: f64 },
    /// Lower-triangular factor of the covariance section.
    Factor(DMatrix<f64>),
    MovingAverage { coefficients: Vec<f64>, family: crate::model::Family, sd: f64 },
}

/// Draws paths of a fixed model over a fixed index range.
#[derive(Debug, Clone)]
pub struct PathSampler {
    first: usize,
    len: usize,
    plan: Plan,
}

impl PathSampler {
    pub fn new(model: &SequenceModel, p: usize, n: usize) -> Result<Self> {
        model.validate()?;
        let range = IndexRange::window(p, n);
        model.check_range(range)?;
        let plan = match model {
            SequenceModel::Independent { family, .. } => Plan::Independent {
                sds: (range.first..range.first + n)
                    .map(|k| model.variance_at(k).map(f64::sqrt))
                    .collect::<Result<_>>()?,
                family: *family,
            },
            SequenceModel::GaussianAssoc {
                covariance:
                    CovarianceRule::Ar1 {
                        phi,
                        innovation_variance,
                    },
            } => Plan::Ar1 {
                phi: *phi,
                stationary_sd: (innovation_variance / (1.0 - phi * phi)).sqrt(),
                innovation_sd: innovation_variance.sqrt(),
            },
            SequenceModel::GaussianAssoc { .. } => Plan::Factor(covariance_factor(model, range)?),
            SequenceModel::MaAssoc {
                coefficients,
                innovation,
                innovation_variance,
            } => Plan::MovingAverage {
                coefficients: coefficients.clone(),
                family: *innovation,
                sd: innovation_variance.sqrt(),
            },
        };
        Ok(Self {
            first: range.first,
            len: n,
            plan,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Fill `out` (length n) with one replicate in f64.
    pub fn fill<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.len);
        if self.len == 0 {
            return;
        }
        match &self.plan {
            Plan::Independent { sds, family } => {
                for (x, sd) in out.iter_mut().zip(sds) {
                    *x = sd * unit_draw(*family, rng);
                }
            }
            Plan::Ar1 {
                phi,
                stationary_sd,
                innovation_sd,
            } => {
                // Exact Cholesky factor of the stationary AR(1) section.
                let mut prev = stationary_sd * rng.sample::<f64, _>(StandardNormal);
                out[0] = prev;
                for x in out.iter_mut().skip(1) {
                    prev = phi * prev + innovation_sd * rng.sample::<f64, _>(StandardNormal);
                    *x = prev;
                }
            }
            Plan::Factor(l) => {
                let z: Vec<f64> = (0..self.len).map(|_| rng.sample(StandardNormal)).collect();
                for (i, x) in out.iter_mut().enumerate() {
                    *x = (0..=i).map(|j| l[(i, j)] * z[j]).sum();
                }
            }
            Plan::MovingAverage {
                coefficients,
                family,
                sd,
            } => {
                let q = coefficients.len();
                let eps: Vec<f64> = (0..self.len + q - 1).map(|_| sd * unit_draw(*family, rng)).collect();
                for (k, x) in out.iter_mut().enumerate() {
                    *x = coefficients
                        .iter()
                        .enumerate()
                        .map(|(i, a)| a * eps[k + q - 1 - i])
                        .sum();
                }
            }
        }
    }

    pub fn sample<T: Real>(&self, seed: u64, replicate: u64) -> SamplePath<T> {
        let mut rng = replicate_rng(seed, replicate);
        let mut buf = vec![0.0; self.len];
        self.fill(&mut rng, &mut buf);
        SamplePath {
            first: self.first,
            values: buf.into_iter().map(T::of).collect(),
            seed,
            replicate,
        }
    }
}

/// One realization of (X_{p+1}, ..., X_{p+n}); a pure function of its inputs.
pub fn gen_path<T: Real>(model: &SequenceModel, p: usize, n: usize, seed: u64, replicate: u64) -> Result<SamplePath<T>> {
    Ok(PathSampler::new(model, p, n)?.sample(seed, replicate))
}

/// Lower Cholesky factor of the section, with one jittered retry.
fn covariance_factor(model: &SequenceModel, range: IndexRange) -> Result<DMatrix<f64>> {
    let n = range.len;
    let mut cov = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let c = model.covariance_at(range.first + i, range.first + j)?;
            cov[(i, j)] = c;
            cov[(j, i)] = c;
        }
    }
    if let Some(ch) = cov.clone().cholesky() {
        return Ok(ch.unpack());
    }
    let max_diag = (0..n).map(|i| cov[(i, i)]).fold(0.0, f64::max);
    let jitter = CHOLESKY_JITTER * max_diag.max(f64::MIN_POSITIVE);
    for i in 0..n {
        cov[(i, i)] += jitter;
    }
    cov.cholesky()
        .map(|ch| ch.unpack())
        .ok_or(Error::NotPositiveSemidefinite(n))
}
