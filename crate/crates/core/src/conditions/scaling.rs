//! The time change a(t) = lim s^2_[nt] / s^2_n and its finite-n estimates.

use serde::Serialize;

use crate::error::{precondition, Error, Result};
use crate::model::{IndexRange, SequenceModel};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum ScalingSource {
    Analytic { label: String },
    Empirical { n: usize },
}

/// a(t) tabulated on a strictly increasing grid in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingFunction {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub source: ScalingSource,
}

impl ScalingFunction {
    pub fn analytic(grid: &[f64], label: impl Into<String>, a: impl Fn(f64) -> f64) -> Result<Self> {
        check_grid(grid)?;
        Ok(Self {
            grid: grid.to_vec(),
            values: grid.iter().map(|&t| a(t)).collect(),
            source: ScalingSource::Analytic { label: label.into() },
        })
    }

    /// a(t) = t, the limit under a constant-variance regime.
    pub fn identity(grid: &[f64]) -> Result<Self> {
        Self::analytic(grid, "t", |t| t)
    }

    /// a(t) on the grid, linear between grid points, with a(0) = 0.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if t == 0.0 {
            return Ok(0.0);
        }
        let (mut lo_t, mut lo_v) = (0.0, 0.0);
        for (&g, &v) in self.grid.iter().zip(&self.values) {
            if (t - g).abs() <= 1e-12 {
                return Ok(v);
            }
            if t < g {
                return Ok(lo_v + (v - lo_v) * (t - lo_t) / (g - lo_t));
            }
            lo_t = g;
            lo_v = v;
        }
        precondition(format!("t = {t} lies beyond the scaling grid"))
    }

    /// Largest decrease between consecutive grid values; zero when nondecreasing.
    pub fn max_decrease(&self) -> f64 {
        self.values.windows(2).map(|w| (w[0] - w[1]).max(0.0)).fold(0.0, f64::max)
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return precondition("empty time grid");
    }
    if grid.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return precondition("time grid points must lie in [0, 1]");
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return precondition("time grid must be strictly increasing");
    }
    Ok(())
}

/// [n t] with a guard against representation error just below an integer.
pub(crate) fn floor_nt(n: usize, t: f64) -> usize {
    ((n as f64) * t + 1e-9).floor() as usize
}

/// Exact-mode estimate a_hat(t) = s^2_[nt] / s^2_n.
pub fn scaling_ratio(model: &SequenceModel, n: usize, grid: &[f64]) -> Result<ScalingFunction> {
    check_grid(grid)?;
    let total = model.window_variance_exact(0, n)?;
    if total <= 0.0 {
        return Err(Error::ZeroVariance(format!("s_n^2 = 0 at n = {n}")));
    }
    let values = grid
        .iter()
        .map(|&t| Ok(model.window_variance_exact(0, floor_nt(n, t))? / total))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScalingFunction {
        grid: grid.to_vec(),
        values,
        source: ScalingSource::Empirical { n },
    })
}

/// Normalized variance of a two-interval sum against its scaling-limit value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairVarianceGap {
    /// Var(sum over ([ns1], [ns2]] + sum over ([nt1], [nt2]]) / s_n^2.
    pub normalized_variance: f64,
    /// (a(s2) - a(s1)) + (a(t2) - a(t1)).
    pub target: f64,
    /// 2 Cov(first, second) / s_n^2, the cross term that must vanish.
    pub cross_term: f64,
    pub gap: f64,
}

pub fn pair_variance_gap(model: &SequenceModel, n: usize, points: [f64; 4], a: &ScalingFunction) -> Result<PairVarianceGap> {
    let [s1, s2, t1, t2] = points;
    if !(0.0 <= s1 && s1 <= s2 && s2 <= t1 && t1 < t2 && t2 <= 1.0) {
        return precondition(format!("points must satisfy 0 <= s1 <= s2 <= t1 < t2 <= 1, got {points:?}"));
    }
    let total = model.window_variance_exact(0, n)?;
    if total <= 0.0 {
        return Err(Error::ZeroVariance(format!("s_n^2 = 0 at n = {n}")));
    }
    let interval = |lo: f64, hi: f64| {
        let a = floor_nt(n, lo);
        let b = floor_nt(n, hi);
        IndexRange::new(a + 1, b - a)
    };
    let first = interval(s1, s2);
    let second = interval(t1, t2);
    let v1 = model.range_covariance(first, first)?;
    let v2 = model.range_covariance(second, second)?;
    let c12 = model.range_covariance(first, second)?;
    let normalized_variance = (v1 + v2 + 2.0 * c12) / total;
    let target = (a.eval(s2)? - a.eval(s1)?) + (a.eval(t2)? - a.eval(t1)?);
    Ok(PairVarianceGap {
        normalized_variance,
        target,
        cross_term: 2.0 * c12 / total,
        gap: (normalized_variance - target).abs(),
    })
}
