//! Distributions of linear combinations of independent unit-variance draws.
//!
//! Absolute moments and truncated second moments are computed in closed
//! form for Gaussian laws, by exact enumeration for Rademacher sums, and by
//! seeded Monte Carlo otherwise. Each value carries its standard error
//! (zero when exact).

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use statrs::function::erf::{erfc, erfc_inv};
use statrs::function::factorial::ln_binomial;
use statrs::function::gamma::gamma;

use crate::model::Family;
use crate::rng::{replicate_rng, INTERNAL_STREAM_BASE};

/// Replicates for Monte-Carlo moment estimates.
pub const MC_MOMENT_REPLICATES: usize = 1_000_000;
const MC_MOMENT_SEED: u64 = 0x6d6f_6d65_6e74_7321;

/// Largest number of distinct Rademacher weights enumerated exactly.
const MAX_ENUMERATED_TERMS: usize = 20;

const SQRT_3: f64 = 1.732_050_807_568_877_2;

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

pub fn normal_quantile(p: f64) -> f64 {
    let x = -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p);
    if !x.is_finite() {
        return x;
    }
    // One Newton step; erfc_inv alone is good to ~1e-11.
    let d = normal_pdf(x);
    if d > 0.0 {
        x - (normal_cdf(x) - p) / d
    } else {
        x
    }
}

/// E|Z|^q for Z ~ N(0, 1).
pub fn normal_abs_moment(q: f64) -> f64 {
    2f64.powf(q / 2.0) * gamma((q + 1.0) / 2.0) / std::f64::consts::PI.sqrt()
}

/// E[X^2 1{|X| >= a}] for X ~ N(0, variance).
pub fn normal_tail_second_moment(variance: f64, a: f64) -> f64 {
    if variance <= 0.0 {
        return 0.0;
    }
    let sigma = variance.sqrt();
    let z = a.max(0.0) / sigma;
    2.0 * variance * (z * normal_pdf(z) + 1.0 - normal_cdf(z))
}

/// Whether a truncation `{|x| >= a}` or `{|x| > a}` is meant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Tail {
    Closed,
    Open,
}

impl Tail {
    fn keeps(self, x: f64, a: f64) -> bool {
        match self {
            Tail::Closed => x.abs() >= a,
            Tail::Open => x.abs() > a,
        }
    }
}

/// Ordered by how much it weakens a value: closed form < enumeration < Monte Carlo.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ClosedForm,
    Enumeration,
    MonteCarlo,
}

/// A computed expectation with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub std_err: f64,
    pub method: Method,
}

impl Estimate {
    pub fn exact(value: f64, method: Method) -> Self {
        Self {
            value,
            std_err: 0.0,
            method,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.method != Method::MonteCarlo
    }

    /// Sum of estimates. Standard errors add linearly since Monte-Carlo
    /// terms share a seed and may be correlated.
    pub fn sum(items: impl IntoIterator<Item = Estimate>) -> Estimate {
        let mut acc = Estimate::exact(0.0, Method::ClosedForm);
        for e in items {
            acc.value += e.value;
            acc.std_err += e.std_err;
            acc.method = acc.method.max(e.method);
        }
        acc
    }

    pub fn scale(self, c: f64) -> Estimate {
        Estimate {
            value: self.value * c,
            std_err: self.std_err * c.abs(),
            method: self.method,
        }
    }
}

/// Centered law with finite variance.
#[derive(Debug, Clone, PartialEq)]
pub enum Law {
    Gaussian { variance: f64 },
    /// sum_i w_i e_i with e_i iid unit-variance draws from `family`.
    Combination { weights: Vec<f64>, family: Family },
}

impl Law {
    /// Normal combinations collapse to a single Gaussian.
    pub fn combination(weights: Vec<f64>, family: Family) -> Self {
        match family {
            Family::Normal => Law::Gaussian {
                variance: weights.iter().map(|w| w * w).sum(),
            },
            _ => Law::Combination { weights, family },
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            Law::Gaussian { variance } => *variance,
            Law::Combination { weights, .. } => weights.iter().map(|w| w * w).sum(),
        }
    }

    /// E|X|^q, q > 0.
    pub fn abs_moment(&self, q: f64) -> Estimate {
        match self {
            Law::Gaussian { variance } => {
                Estimate::exact(variance.powf(q / 2.0) * normal_abs_moment(q), Method::ClosedForm)
            }
            Law::Combination { weights, family } => {
                if weights.is_empty() {
                    return Estimate::exact(0.0, Method::ClosedForm);
                }
                match family {
                    Family::Uniform if weights.len() == 1 => {
                        let b = SQRT_3 * weights[0].abs();
                        Estimate::exact(b.powf(q) / (q + 1.0), Method::ClosedForm)
                    }
                    Family::Rademacher => match rademacher_support(weights) {
                        Some(support) => Estimate::exact(
                            support.iter().map(|(x, p)| p * x.abs().powf(q)).sum(),
                            Method::Enumeration,
                        ),
                        None => self.monte_carlo(|x| x.abs().powf(q), MC_MOMENT_REPLICATES, MC_MOMENT_SEED),
                    },
                    _ => self.monte_carlo(|x| x.abs().powf(q), MC_MOMENT_REPLICATES, MC_MOMENT_SEED),
                }
            }
        }
    }

    /// E[X^2 1{|X| >= a}] (closed tail) or E[X^2 1{|X| > a}] (open tail).
    pub fn tail_second_moment(&self, a: f64, tail: Tail) -> Estimate {
        match self {
            Law::Gaussian { variance } => {
                Estimate::exact(normal_tail_second_moment(*variance, a), Method::ClosedForm)
            }
            Law::Combination { weights, family } => {
                if weights.is_empty() {
                    return Estimate::exact(0.0, Method::ClosedForm);
                }
                match family {
                    Family::Uniform if weights.len() == 1 => {
                        let b = SQRT_3 * weights[0].abs();
                        let a = a.max(0.0);
                        let v = if a >= b { 0.0 } else { (b.powi(3) - a.powi(3)) / (3.0 * b) };
                        Estimate::exact(v, Method::ClosedForm)
                    }
                    Family::Rademacher => match rademacher_support(weights) {
                        Some(support) => Estimate::exact(
                            support
                                .iter()
                                .filter(|(x, _)| tail.keeps(*x, a))
                                .map(|(x, p)| p * x * x)
                                .sum(),
                            Method::Enumeration,
                        ),
                        None => self.monte_carlo(
                            |x| if tail.keeps(x, a) { x * x } else { 0.0 },
                            MC_MOMENT_REPLICATES,
                            MC_MOMENT_SEED,
                        ),
                    },
                    _ => self.monte_carlo(
                        |x| if tail.keeps(x, a) { x * x } else { 0.0 },
                        MC_MOMENT_REPLICATES,
                        MC_MOMENT_SEED,
                    ),
                }
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Law::Gaussian { variance } => variance.sqrt() * rng.sample::<f64, _>(StandardNormal),
            Law::Combination { weights, family } => weights.iter().map(|w| w * unit_draw(*family, rng)).sum(),
        }
    }

    /// E|X|^q by Monte Carlo regardless of whether a closed form exists.
    pub fn abs_moment_mc(&self, q: f64, replicates: usize, seed: u64) -> Estimate {
        self.monte_carlo(|x| x.abs().powf(q), replicates, seed)
    }

    pub fn tail_second_moment_mc(&self, a: f64, tail: Tail, replicates: usize, seed: u64) -> Estimate {
        self.monte_carlo(|x| if tail.keeps(x, a) { x * x } else { 0.0 }, replicates, seed)
    }

    fn monte_carlo(&self, f: impl Fn(f64) -> f64, replicates: usize, seed: u64) -> Estimate {
        let mut rng = replicate_rng(seed, INTERNAL_STREAM_BASE);
        let r = replicates.max(2);
        let (mut mean, mut m2) = (0.0, 0.0);
        for i in 0..r {
            let y = f(self.sample(&mut rng));
            let delta = y - mean;
            mean += delta / (i + 1) as f64;
            m2 += delta * (y - mean);
        }
        let var = m2 / (r - 1) as f64;
        Estimate {
            value: mean,
            std_err: (var / r as f64).sqrt(),
            method: Method::MonteCarlo,
        }
    }
}

/// One draw from the unit-variance family.
pub fn unit_draw<R: Rng + ?Sized>(family: Family, rng: &mut R) -> f64 {
    match family {
        Family::Normal => rng.sample(StandardNormal),
        Family::Rademacher => {
            if rng.random::<bool>() {
                1.0
            } else {
                -1.0
            }
        }
        Family::Uniform => rng.random_range(-SQRT_3..SQRT_3),
    }
}

/// Atoms (value, probability) of sum_i w_i e_i with Rademacher e_i, when
/// the support is small enough to list.
fn rademacher_support(weights: &[f64]) -> Option<Vec<(f64, f64)>> {
    let len = weights.len();
    let w0 = weights[0].abs();
    if weights.iter().all(|w| w.abs() == w0) {
        // k plus signs out of len: value w0 (2k - len)
        let ln2 = std::f64::consts::LN_2;
        return Some(
            (0..=len as u64)
                .map(|k| {
                    let p = (ln_binomial(len as u64, k) - len as f64 * ln2).exp();
                    (w0 * (2.0 * k as f64 - len as f64), p)
                })
                .collect(),
        );
    }
    if len > MAX_ENUMERATED_TERMS {
        return None;
    }
    let p = 0.5f64.powi(len as i32);
    Some(
        (0u32..1 << len)
            .map(|mask| {
                let x: f64 = weights
                    .iter()
                    .enumerate()
                    .map(|(i, w)| if mask >> i & 1 == 1 { *w } else { -*w })
                    .sum();
                (x, p)
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson on [lo, hi].
    fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, steps: usize) -> f64 {
        let h = (hi - lo) / steps as f64;
        let mut s = f(lo) + f(hi);
        for i in 1..steps {
            let x = lo + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        s * h / 3.0
    }

    #[test]
    fn normal_third_absolute_moment_matches_quadrature() {
        let oracle = 2.0 * simpson(|x| x.powi(3) * normal_pdf(x), 0.0, 40.0, 200_000);
        assert!((normal_abs_moment(3.0) - oracle).abs() < 1e-10);
        assert!((normal_abs_moment(3.0) - 2.0 * (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn normal_tail_moment_matches_quadrature() {
        for &(var, a) in &[(1.0, 2.0), (4.0, 1.0), (0.5, 0.0), (2.0, 5.0)] {
            let sd: f64 = f64::sqrt(var);
            let oracle = 2.0 * simpson(|x| x * x * normal_pdf(x / sd) / sd, a, a + 40.0 * sd, 400_000);
            let got = normal_tail_second_moment(var, a);
            assert!((got - oracle).abs() < 1e-9, "var={var} a={a}: {got} vs {oracle}");
        }
        assert!((normal_tail_second_moment(1.0, 0.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cdf_and_quantile_are_inverse() {
        for &p in &[0.001, 0.025, 0.3, 0.5, 0.77, 0.999] {
            assert!((normal_cdf(normal_quantile(p)) - p).abs() < 1e-12);
        }
        // erfc itself carries ~1e-12 absolute error here.
        assert!((normal_cdf(1.959_963_984_540_054) - 0.975).abs() < 1e-11);
        assert!((normal_quantile(0.975) - 1.959_963_984_540_054).abs() < 1e-9);
    }

    #[test]
    fn rademacher_block_enumeration() {
        // Sum of 4 signs: values -4,-2,0,2,4 with 1,4,6,4,1 /16.
        let law = Law::combination(vec![1.0; 4], Family::Rademacher);
        let m3 = law.abs_moment(3.0);
        assert!(m3.is_exact());
        let expect = (2.0 * 64.0 + 8.0 * 8.0) / 16.0;
        assert!((m3.value - expect).abs() < 1e-12);
        let t = law.tail_second_moment(4.0, Tail::Closed).value;
        assert!((t - 2.0 * 16.0 / 16.0).abs() < 1e-12);
        assert_eq!(law.tail_second_moment(4.0, Tail::Open).value, 0.0);

        let unequal = Law::combination(vec![1.0, 2.0], Family::Rademacher);
        assert!((unequal.abs_moment(2.0).value - 5.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_single_closed_form() {
        let law = Law::combination(vec![1.0], Family::Uniform);
        assert!((law.abs_moment(2.0).value - 1.0).abs() < 1e-12);
        assert!((law.tail_second_moment(0.0, Tail::Closed).value - 1.0).abs() < 1e-12);
        assert_eq!(law.tail_second_moment(2.0, Tail::Closed).value, 0.0);
    }

    #[test]
    fn monte_carlo_fallback_within_error() {
        // Irwin-Hall-type sum of two unit uniforms has variance 2 and
        // E X^4 = 2 * 9/5 + 6 = 9.6.
        let law = Law::combination(vec![1.0, 1.0], Family::Uniform);
        let m = law.abs_moment(4.0);
        assert_eq!(m.method, Method::MonteCarlo);
        assert!((m.value - 9.6).abs() < 4.0 * m.std_err, "{m:?}");
        let m2 = law.abs_moment(2.0);
        assert!((m2.value - 2.0).abs() < 4.0 * m2.std_err);
    }
}
