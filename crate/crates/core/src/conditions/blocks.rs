//! Block hypotheses and the regrouped versus raw-data statistics.
//!
//! Blocks are the consecutive segments of length ell inside the window
//! p+1..p+n; the trailing r indices form the remainder. T_j denotes the
//! sum over block j, with tau_j^2 = Var(T_j) and tau'^2 = sum_j tau_j^2.

use serde::Serialize;

use super::report::{ConditionEntry, ConditionReport, EntryParams, DEFAULT_THRESHOLD};
use super::{max_variance, sum_over_indices, window_var, MomentMode};
use crate::error::{precondition, Error, Result};
use crate::law::{Estimate, Law, Tail};
use crate::model::SequenceModel;
use crate::sums::{BlockScheme, Window};

fn check_scheme(window: Window, scheme: BlockScheme) -> Result<()> {
    if scheme.n() != window.n || scheme.ell == 0 {
        return precondition(format!(
            "block scheme (ell={}, m={}, r={}) does not fit window n = {}",
            scheme.ell, scheme.m, scheme.r, window.n
        ));
    }
    Ok(())
}

/// Block variances tau_j^2, in block order.
fn block_variances(model: &SequenceModel, window: Window, scheme: BlockScheme) -> Result<Vec<f64>> {
    if model.autocovariance(0).is_some() {
        let b = scheme.block_range(window, 1);
        return Ok(vec![model.range_covariance(b, b)?; scheme.m]);
    }
    (1..=scheme.m)
        .map(|j| {
            let b = scheme.block_range(window, j);
            model.range_covariance(b, b)
        })
        .collect()
}

/// sum_j f(law of T_j).
fn sum_over_blocks(
    model: &SequenceModel,
    window: Window,
    scheme: BlockScheme,
    f: impl Fn(&Law) -> Estimate,
) -> Result<Estimate> {
    if model.autocovariance(0).is_some() {
        let law = model.law_of_sum(scheme.block_range(window, 1))?;
        return Ok(f(&law).scale(scheme.m as f64));
    }
    let terms = (1..=scheme.m)
        .map(|j| Ok(f(&model.law_of_sum(scheme.block_range(window, j))?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Estimate::sum(terms))
}

fn abs_moment(law: &Law, q: f64, mode: MomentMode) -> Estimate {
    match mode {
        MomentMode::Auto => law.abs_moment(q),
        MomentMode::MonteCarlo { replicates, seed } => law.abs_moment_mc(q, replicates, seed),
    }
}

fn tail_moment(law: &Law, a: f64, mode: MomentMode) -> Estimate {
    match mode {
        MomentMode::Auto => law.tail_second_moment(a, Tail::Closed),
        MomentMode::MonteCarlo { replicates, seed } => law.tail_second_moment_mc(a, Tail::Closed, replicates, seed),
    }
}

/// Values of (L), (H0), (Ha), (Hab) and (Hb) at one window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlockHypotheses {
    /// ell / n
    pub l_ratio: f64,
    /// ell / s'_n^2
    pub h0: f64,
    /// (ell / s'_n^2) sum_j Var(Y_j), target 1
    pub ha: f64,
    /// Var(remainder) / s'_n^2
    pub hab: f64,
    /// C_1(n) = sup_j (ell / s'_n^2) Var(Y_j)
    pub hb: f64,
}

impl BlockHypotheses {
    pub fn to_report(&self, n: usize, ell: usize) -> Result<ConditionReport> {
        let p = EntryParams {
            n,
            ell: Some(ell),
            delta: None,
            eps: None,
        };
        let mut r = ConditionReport::new();
        r.push(ConditionEntry::new("l_ratio", p, self.l_ratio, DEFAULT_THRESHOLD)?);
        r.push(ConditionEntry::new("h0", p, self.h0, DEFAULT_THRESHOLD)?);
        r.push(ConditionEntry::new("ha", p, self.ha, f64::INFINITY)?);
        r.push(ConditionEntry::new("ha_deviation", p, (self.ha - 1.0).abs(), DEFAULT_THRESHOLD)?);
        r.push(ConditionEntry::new("hab", p, self.hab, DEFAULT_THRESHOLD)?);
        r.push(ConditionEntry::new("hb", p, self.hb, DEFAULT_THRESHOLD)?);
        Ok(r)
    }
}

pub fn block_hypotheses(model: &SequenceModel, window: Window, scheme: BlockScheme) -> Result<BlockHypotheses> {
    check_scheme(window, scheme)?;
    let s2 = window_var(model, window)?;
    let taus = block_variances(model, window, scheme)?;
    let rem = scheme.remainder_range(window);
    let rem_var = model.range_covariance(rem, rem)?;
    // (ell / s^2) Var(Y_j) = Var(T_j) / s^2 since Y_j = T_j / sqrt(ell).
    Ok(BlockHypotheses {
        l_ratio: scheme.ell as f64 / window.n as f64,
        h0: scheme.ell as f64 / s2,
        ha: taus.iter().sum::<f64>() / s2,
        hab: rem_var / s2,
        hb: taus.iter().copied().fold(0.0, f64::max) / s2,
    })
}

/// C_2(n) = s'_n^-(2+delta) sum_j E|T_j|^(2+delta).
pub fn hc_statistic(
    model: &SequenceModel,
    window: Window,
    scheme: BlockScheme,
    delta: f64,
    mode: MomentMode,
) -> Result<Estimate> {
    if delta.is_nan() || delta <= 0.0 {
        return precondition(format!("delta = {delta} must be positive"));
    }
    check_scheme(window, scheme)?;
    let s2 = window_var(model, window)?;
    let q = 2.0 + delta;
    let total = sum_over_blocks(model, window, scheme, |law| abs_moment(law, q, mode))?;
    Ok(total.scale(s2.powf(-q / 2.0)))
}

/// Statistics of the block sums T_j normalized by tau'_n.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegroupedStatistics {
    pub tau2: f64,
    pub s2: f64,
    pub ell: usize,
    pub delta: f64,
    pub eps: f64,
    /// A''_n(delta)
    pub lyapounov: Estimate,
    /// B''_n = eps^-2 max_j tau_j^2 / tau'^2
    pub uan: f64,
    /// L''_n(eps)
    pub lindeberg: Estimate,
}

impl RegroupedStatistics {
    pub fn to_report(&self, n: usize, ell: usize, delta: f64, eps: f64) -> Result<ConditionReport> {
        let p = EntryParams {
            n,
            ell: Some(ell),
            delta: Some(delta),
            eps: Some(eps),
        };
        let mut r = ConditionReport::new();
        r.push(ConditionEntry::from_estimate("regrouped_lyapounov", p, self.lyapounov, DEFAULT_THRESHOLD)?);
        r.push(ConditionEntry::new("regrouped_uan", p, self.uan, DEFAULT_THRESHOLD)?);
        r.push(ConditionEntry::from_estimate("regrouped_lindeberg", p, self.lindeberg, DEFAULT_THRESHOLD)?);
        Ok(r)
    }
}

pub fn regrouped_statistics(
    model: &SequenceModel,
    window: Window,
    scheme: BlockScheme,
    delta: f64,
    eps: f64,
    mode: MomentMode,
) -> Result<RegroupedStatistics> {
    if !(delta > 0.0 && eps > 0.0) {
        return precondition(format!("delta = {delta} and eps = {eps} must be positive"));
    }
    check_scheme(window, scheme)?;
    let s2 = model.window_variance_exact(window.p, window.n)?;
    let taus = block_variances(model, window, scheme)?;
    let tau2: f64 = taus.iter().sum();
    if tau2 <= 0.0 {
        return Err(Error::ZeroVariance("tau'_n = 0".into()));
    }
    let tau = tau2.sqrt();
    let q = 2.0 + delta;
    let max_tau2 = taus.iter().copied().fold(0.0, f64::max);
    let lyap = sum_over_blocks(model, window, scheme, |law| abs_moment(law, q, mode))?;
    let lind = sum_over_blocks(model, window, scheme, |law| tail_moment(law, eps * tau, mode))?;
    Ok(RegroupedStatistics {
        tau2,
        s2,
        ell: scheme.ell,
        delta,
        eps,
        lyapounov: lyap.scale(tau.powf(-q)),
        uan: max_tau2 / (eps * eps * tau2),
        lindeberg: lind.scale(1.0 / tau2),
    })
}

/// Raw-data counterparts carrying the ell powers of the block comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NonregroupedStatistics {
    pub s2: f64,
    pub ell: usize,
    pub delta: f64,
    pub eps: f64,
    /// A'_n(delta) = ell^(1+delta) s'^-(2+delta) sum E|X_j|^(2+delta)
    pub lyapounov: Estimate,
    /// B'_n = ell^2 max sigma_j^2 / (eps^2 s'^2)
    pub uan: f64,
    /// L'_n(eps) = (ell^2 / s'^2) sum E[X_j^2 1{|X_j| > eps s'}]
    pub lindeberg: Estimate,
    /// L'_n(eps / (2 ell)), the argument used as a sufficient condition.
    pub lindeberg_half: Estimate,
}

impl NonregroupedStatistics {
    pub fn to_report(&self, n: usize, ell: usize, delta: f64, eps: f64) -> Result<ConditionReport> {
        let p = EntryParams {
            n,
            ell: Some(ell),
            delta: Some(delta),
            eps: Some(eps),
        };
        let mut r = ConditionReport::new();
        r.push(ConditionEntry::from_estimate("raw_lyapounov", p, self.lyapounov, DEFAULT_THRESHOLD)?);
        r.push(ConditionEntry::new("raw_uan", p, self.uan, DEFAULT_THRESHOLD)?);
        r.push(ConditionEntry::from_estimate("raw_lindeberg", p, self.lindeberg, DEFAULT_THRESHOLD)?);
        r.push(ConditionEntry::from_estimate("raw_lindeberg_half", p, self.lindeberg_half, DEFAULT_THRESHOLD)?);
        Ok(r)
    }
}

fn raw_lindeberg(model: &SequenceModel, window: Window, ell: f64, s2: f64, eps: f64) -> Result<Estimate> {
    let sum = sum_over_indices(model, window.range(), |law| law.tail_second_moment(eps * s2.sqrt(), Tail::Open))?;
    Ok(sum.scale(ell * ell / s2))
}

pub fn nonregrouped_statistics(
    model: &SequenceModel,
    window: Window,
    scheme: BlockScheme,
    delta: f64,
    eps: f64,
) -> Result<NonregroupedStatistics> {
    if !(delta > 0.0 && eps > 0.0) {
        return precondition(format!("delta = {delta} and eps = {eps} must be positive"));
    }
    check_scheme(window, scheme)?;
    let s2 = window_var(model, window)?;
    let ell = scheme.ell as f64;
    let q = 2.0 + delta;
    let moments = sum_over_indices(model, window.range(), |law| law.abs_moment(q))?;
    let max_var = max_variance(model, window.range())?;
    Ok(NonregroupedStatistics {
        s2,
        ell: scheme.ell,
        delta,
        eps,
        lyapounov: moments.scale(ell.powf(1.0 + delta) * s2.powf(-q / 2.0)),
        uan: ell * ell * max_var / (eps * eps * s2),
        lindeberg: raw_lindeberg(model, window, ell, s2, eps)?,
        lindeberg_half: raw_lindeberg(model, window, ell, s2, eps / (2.0 * ell))?,
    })
}

/// One inequality lhs <= rhs with its verdict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Domination {
    pub lhs: f64,
    pub rhs: f64,
    /// Monte-Carlo allowance; zero when both sides are exact.
    pub slack: f64,
    pub holds: bool,
}

impl Domination {
    fn new(lhs: Estimate, rhs: Estimate) -> Self {
        let slack = 3.0 * (lhs.std_err + rhs.std_err);
        Self {
            lhs: lhs.value,
            rhs: rhs.value,
            slack,
            holds: lhs.value <= rhs.value + slack,
        }
    }
}

/// B'' <= (s'/tau')^2 B', A'' <= (s'/tau')^(2+delta) A', and
/// L''(eps) <= (s'/tau')^2 L'(eps / (2 ell)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DominationCheck {
    pub uan: Domination,
    pub lyapounov: Domination,
    pub lindeberg: Domination,
}

impl DominationCheck {
    pub fn all_hold(&self) -> bool {
        self.uan.holds && self.lyapounov.holds && self.lindeberg.holds
    }

    pub fn to_report(&self, n: usize, ell: usize, delta: f64, eps: f64) -> Result<ConditionReport> {
        let p = EntryParams {
            n,
            ell: Some(ell),
            delta: Some(delta),
            eps: Some(eps),
        };
        let mut r = ConditionReport::new();
        for (name, d) in [("bn_rs", self.uan), ("lyap_rs", self.lyapounov), ("lynder_o2", self.lindeberg)] {
            r.push(ConditionEntry::new(name, p, d.lhs, d.rhs + d.slack)?);
        }
        Ok(r)
    }
}

pub fn domination_check(regrouped: &RegroupedStatistics, raw: &NonregroupedStatistics) -> DominationCheck {
    let ratio2 = raw.s2 / regrouped.tau2;
    let exact = |v: f64| Estimate::exact(v, crate::law::Method::ClosedForm);
    DominationCheck {
        uan: Domination::new(exact(regrouped.uan), exact(ratio2 * raw.uan)),
        lyapounov: Domination::new(
            regrouped.lyapounov,
            raw.lyapounov.scale(ratio2.powf((2.0 + regrouped.delta) / 2.0)),
        ),
        lindeberg: Domination::new(regrouped.lindeberg, raw.lindeberg_half.scale(ratio2)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::law::normal_abs_moment;
    use crate::model::Family;
    use crate::sums::{make_block_scheme, BlockRule};

    fn scheme(n: usize, ell: usize) -> BlockScheme {
        make_block_scheme(n, BlockRule::Fixed(ell)).unwrap()
    }

    #[test]
    fn hypotheses_iid() {
        let m = SequenceModel::iid(Family::Normal);
        let h = block_hypotheses(&m, Window::new(0, 100), scheme(100, 10)).unwrap();
        assert_eq!((h.h0, h.ha, h.hab, h.hb, h.l_ratio), (0.1, 1.0, 0.0, 0.1, 0.1));
        let h = block_hypotheses(&m, Window::new(5, 10), scheme(10, 3)).unwrap();
        assert_eq!(h.hab, 0.1);
    }

    #[test]
    fn hypotheses_ar1() {
        let m = SequenceModel::ar1(0.5, 1.0);
        let h = block_hypotheses(&m, Window::new(0, 1000), scheme(1000, 10)).unwrap();
        assert!((0.7..=1.0).contains(&h.ha), "{h:?}");
        let h2 = block_hypotheses(&m, Window::new(0, 8000), scheme(8000, 20)).unwrap();
        assert!(h2.ha > h.ha);
        assert!(block_hypotheses(&m, Window::new(0, 100), scheme(99, 9)).is_err());
    }

    #[test]
    fn hc_gaussian_closed_form_and_mc() {
        let m = SequenceModel::iid(Family::Normal);
        let w = Window::new(0, 100);
        let sc = scheme(100, 10);
        let c2 = hc_statistic(&m, w, sc, 1.0, MomentMode::Auto).unwrap();
        let expect = 10.0 * 10f64.powf(1.5) * normal_abs_moment(3.0) / 1000.0;
        assert!((c2.value - expect).abs() < 1e-12);
        assert!((c2.value - 0.50463).abs() < 1e-5);
        let mc = hc_statistic(&m, w, sc, 1.0, MomentMode::MonteCarlo { replicates: 200_000, seed: 5 }).unwrap();
        assert!((mc.value - c2.value).abs() < 3.0 * mc.std_err, "{mc:?} vs {c2:?}");
        assert!(hc_statistic(&m, w, sc, -1.0, MomentMode::Auto).is_err());
    }

    #[test]
    fn hc_zero_variance_blocks() {
        // sigma_k^2 = 0 for k <= 10, 1 afterwards: the first block is degenerate.
        let m = SequenceModel::explicit_gaussian(
            (0..20)
                .map(|i| (0..20).map(|j| if i == j && i >= 10 { 1.0 } else { 0.0 }).collect())
                .collect(),
        );
        let sc = scheme(20, 10);
        let full = hc_statistic(&m, Window::new(0, 20), sc, 1.0, MomentMode::Auto).unwrap();
        let second_only = 10f64.powf(1.5) * normal_abs_moment(3.0) / 10f64.powf(1.5);
        assert!((full.value - second_only).abs() < 1e-12);
    }

    #[test]
    fn regrouped_examples() {
        let m = SequenceModel::iid(Family::Normal);
        let w = Window::new(0, 100);
        let sc = scheme(100, 10);
        let r = regrouped_statistics(&m, w, sc, 1.0, 1.0, MomentMode::Auto).unwrap();
        assert!((r.uan - 0.1).abs() < 1e-15);
        assert!((r.lyapounov.value - 0.50463).abs() < 1e-5);
        let rad = SequenceModel::iid(Family::Rademacher);
        let r = regrouped_statistics(&rad, w, sc, 1.0, 1.0, MomentMode::Auto).unwrap();
        // |T_j| <= 10 = eps tau' with eps = 1; the closed tail keeps only +-10.
        let r2 = regrouped_statistics(&rad, w, sc, 1.0, 1.01, MomentMode::Auto).unwrap();
        assert!(r.lindeberg.value > 0.0);
        assert_eq!(r2.lindeberg.value, 0.0);
    }

    #[test]
    fn nonregrouped_examples() {
        let m = SequenceModel::iid(Family::Normal);
        let r = nonregrouped_statistics(&m, Window::new(0, 100), scheme(100, 5), 1.0, 1.0).unwrap();
        assert!((r.uan - 0.25).abs() < 1e-15);
        let rad = SequenceModel::iid(Family::Rademacher);
        let r = nonregrouped_statistics(&rad, Window::new(0, 100), scheme(100, 2), 1.0, 1.0).unwrap();
        assert!((r.lyapounov.value - 0.4).abs() < 1e-15);
        assert_eq!(r.lindeberg.value, 0.0);
    }

    #[test]
    fn domination_examples() {
        for m in [SequenceModel::iid(Family::Normal), SequenceModel::ar1(0.5, 1.0)] {
            let (n, ell) = if matches!(m, SequenceModel::Independent { .. }) { (100, 10) } else { (1000, 10) };
            let w = Window::new(0, n);
            let sc = scheme(n, ell);
            let reg = regrouped_statistics(&m, w, sc, 1.0, 1.0, MomentMode::Auto).unwrap();
            let raw = nonregrouped_statistics(&m, w, sc, 1.0, 1.0).unwrap();
            let d = domination_check(&reg, &raw);
            assert!(d.all_hold(), "{m:?}: {d:?}");
            assert_eq!(d.uan.slack, 0.0);
        }
        // Zero remainder: (s'/tau')^2 = 1, so B'' <= B' directly.
        let m = SequenceModel::iid(Family::Normal);
        let sc = scheme(100, 10);
        let reg = regrouped_statistics(&m, Window::new(0, 100), sc, 1.0, 1.0, MomentMode::Auto).unwrap();
        let raw = nonregrouped_statistics(&m, Window::new(0, 100), sc, 1.0, 1.0).unwrap();
        assert_eq!(reg.tau2, raw.s2);
        assert!(reg.uan <= raw.uan);
    }
}
