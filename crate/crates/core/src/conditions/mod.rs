//! Convergence conditions for moving sums and the comparison between
//! regrouped (block) and raw-data statistics.
//!
//! Window statistics (Lyapounov A'_n, Lindeberg g_n, the UAN ratio) are
//! computed from exact second moments and closed-form, enumerated or
//! Monte-Carlo higher moments, see [`crate::law`]. Block statistics live in
//! [`blocks`]; the time change a(t) in [`scaling`].

pub mod blocks;
pub mod report;
pub mod scaling;

pub use blocks::{
    block_hypotheses, domination_check, hc_statistic, nonregrouped_statistics, regrouped_statistics, BlockHypotheses,
    Domination, DominationCheck, NonregroupedStatistics, RegroupedStatistics,
};
pub use report::{fmt_real, ConditionEntry, ConditionReport, EntryParams, DECAY_THRESHOLD, DEFAULT_THRESHOLD};
pub use scaling::{pair_variance_gap, scaling_ratio, PairVarianceGap, ScalingFunction, ScalingSource};

use serde::Serialize;

use crate::error::{precondition, Error, Result};
use crate::law::{Estimate, Law, Method, Tail};
use crate::model::{IndexRange, SequenceModel};
use crate::sums::{make_block_scheme, BlockRule, OffsetRule, Window};

/// How higher moments of block sums are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomentMode {
    /// Closed form or enumeration when available, Monte Carlo otherwise.
    #[default]
    Auto,
    MonteCarlo { replicates: usize, seed: u64 },
}

/// s'_n^2, or an error when it vanishes.
pub(crate) fn window_var(model: &SequenceModel, window: Window) -> Result<f64> {
    let v = model.window_variance_exact(window.p, window.n)?;
    if v <= 0.0 {
        return Err(Error::ZeroVariance(format!("s'_n = 0 for window p={}, n={}", window.p, window.n)));
    }
    Ok(v)
}

/// sum over `range` of `f(law of X_k)`; stationary models evaluate once.
pub(crate) fn sum_over_indices(model: &SequenceModel, range: IndexRange, f: impl Fn(&Law) -> Estimate) -> Result<Estimate> {
    if range.is_empty() {
        return Ok(Estimate::exact(0.0, Method::ClosedForm));
    }
    if model.autocovariance(0).is_some() {
        return Ok(f(&model.law_at(range.first)?).scale(range.len as f64));
    }
    let terms = (range.first..range.first + range.len)
        .map(|k| Ok(f(&model.law_at(k)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Estimate::sum(terms))
}

/// A'_n(delta) = s'_n^-(2+delta) sum E|X_k|^(2+delta).
pub fn lyapounov_moving(model: &SequenceModel, window: Window, delta: f64) -> Result<Estimate> {
    if delta.is_nan() || delta <= 0.0 {
        return precondition(format!("delta = {delta} must be positive"));
    }
    let s2 = window_var(model, window)?;
    let q = 2.0 + delta;
    let total = sum_over_indices(model, window.range(), |law| law.abs_moment(q))?;
    Ok(total.scale(s2.powf(-q / 2.0)))
}

/// g_n(eps) = s'_n^-2 sum E[X_k^2 1{|X_k| >= eps s'_n}].
pub fn lindeberg_moving(model: &SequenceModel, window: Window, eps: f64) -> Result<Estimate> {
    if eps.is_nan() || eps <= 0.0 {
        return precondition(format!("eps = {eps} must be positive"));
    }
    let s2 = window_var(model, window)?;
    let total = sum_over_indices(model, window.range(), |law| law.tail_second_moment(eps * s2.sqrt(), Tail::Closed))?;
    Ok(total.scale(1.0 / s2))
}

/// max_k sigma_k^2 / s'_n^2 over the window.
pub fn uan_ratio(model: &SequenceModel, window: Window) -> Result<f64> {
    let s2 = window_var(model, window)?;
    Ok(max_variance(model, window.range())? / s2)
}

pub(crate) fn max_variance(model: &SequenceModel, range: IndexRange) -> Result<f64> {
    if model.autocovariance(0).is_some() {
        return model.variance_at(range.first);
    }
    (range.first..range.first + range.len).try_fold(0.0f64, |acc, k| Ok(acc.max(model.variance_at(k)?)))
}

/// nu_hat = s_{n+p(n)} / s'_n.
pub fn remark_r1_ratio(model: &SequenceModel, window: Window) -> Result<f64> {
    let s2 = window_var(model, window)?;
    let full = model.window_variance_exact(0, window.n + window.p)?;
    Ok((full / s2).sqrt())
}

/// Inputs of a full condition report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionParams {
    pub n: usize,
    pub offset: OffsetRule,
    pub block_rule: BlockRule,
    pub delta: f64,
    pub eps: f64,
    /// Also evaluate at 4n and report decay ratios.
    pub trend: bool,
    pub moments: MomentMode,
}

/// Statistics expected to vanish as n grows, with their report names.
const VANISHING: &[&str] = &["lyapounov", "lindeberg", "uan", "h0", "ha_deviation", "hab", "hb", "hc"];

/// Every window, block and comparison statistic at n, and decay ratios
/// against 4n when `trend` is set.
pub fn condition_report(model: &SequenceModel, params: ConditionParams) -> Result<ConditionReport> {
    let mut report = single_size_report(model, params, params.n)?;
    if params.trend {
        let later = single_size_report(model, params, 4 * params.n)?;
        for name in VANISHING {
            let (Some(now), Some(then)) = (report.value(name), later.value(name)) else {
                continue;
            };
            let ratio = if now == 0.0 { 0.0 } else { then / now };
            let ell = report.get(name).and_then(|e| e.ell);
            report.push(ConditionEntry::new(
                format!("{name}_decay"),
                EntryParams {
                    n: params.n,
                    ell,
                    delta: Some(params.delta),
                    eps: Some(params.eps),
                },
                ratio,
                DECAY_THRESHOLD,
            )?);
        }
    }
    Ok(report)
}

fn single_size_report(model: &SequenceModel, params: ConditionParams, n: usize) -> Result<ConditionReport> {
    let window = params.offset.window(n);
    let scheme = make_block_scheme(n, params.block_rule)?;
    let base = EntryParams {
        n,
        ell: None,
        delta: None,
        eps: None,
    };
    let with_delta = EntryParams {
        delta: Some(params.delta),
        ..base
    };
    let with_eps = EntryParams {
        eps: Some(params.eps),
        ..base
    };
    let mut report = ConditionReport::new();
    report.push(ConditionEntry::from_estimate(
        "lyapounov",
        with_delta,
        lyapounov_moving(model, window, params.delta)?,
        DEFAULT_THRESHOLD,
    )?);
    report.push(ConditionEntry::from_estimate(
        "lindeberg",
        with_eps,
        lindeberg_moving(model, window, params.eps)?,
        DEFAULT_THRESHOLD,
    )?);
    report.push(ConditionEntry::new("uan", base, uan_ratio(model, window)?, DEFAULT_THRESHOLD)?);
    report.push(ConditionEntry::new(
        "remark_r1",
        base,
        remark_r1_ratio(model, window)?,
        f64::INFINITY,
    )?);
    report.extend(block_hypotheses(model, window, scheme)?.to_report(n, scheme.ell)?);
    report.push(ConditionEntry::from_estimate(
        "hc",
        EntryParams {
            ell: Some(scheme.ell),
            ..with_delta
        },
        hc_statistic(model, window, scheme, params.delta, params.moments)?,
        DEFAULT_THRESHOLD,
    )?);
    let regrouped = regrouped_statistics(model, window, scheme, params.delta, params.eps, params.moments)?;
    let raw = nonregrouped_statistics(model, window, scheme, params.delta, params.eps)?;
    report.extend(regrouped.to_report(n, scheme.ell, params.delta, params.eps)?);
    report.extend(raw.to_report(n, scheme.ell, params.delta, params.eps)?);
    report.extend(domination_check(&regrouped, &raw).to_report(n, scheme.ell, params.delta, params.eps)?);
    Ok(report)
}
