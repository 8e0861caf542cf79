//! Surplus process P_t = u + c t - S_t observed at t_n = n t0, its ruin
//! time, and the ruin probability by exact simulation or by a Brownian
//! surrogate for the claim sum.
//!
//! Claims are X_j = mean + xi_j with (xi_j) a centered [`SequenceModel`].
//! The Brownian surrogate keeps the mean as a deterministic drift and
//! replaces the centered sum by s_N W(a(t)).

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conditions::{fmt_real, scaling_ratio};
use crate::error::{precondition, Error, Result};
use crate::model::{NamedModel, SequenceModel, VarianceRule};
use crate::path::PathSampler;
use crate::rng::replicate_rng;

/// Fewest replicates accepted by [`ruin_probability`].
pub const MIN_RUIN_REPLICATES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "process", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CountProcess {
    OnePerPeriod,
    /// Poisson(lambda t0) claims per period.
    Poisson { lambda: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurplusModel {
    pub u: f64,
    pub c: f64,
    pub t0: f64,
    pub claim_mean: f64,
    pub claims: SequenceModel,
    pub count: CountProcess,
}

impl SurplusModel {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| Err(Error::InvalidModel(format!("{what} = {v}")));
        if !(self.u >= 0.0 && self.u.is_finite()) {
            return bad("initial capital u", self.u);
        }
        if !(self.c >= 0.0 && self.c.is_finite()) {
            return bad("premium rate c", self.c);
        }
        if !(self.t0 > 0.0 && self.t0.is_finite()) {
            return bad("period length t0", self.t0);
        }
        if !(self.claim_mean >= 0.0 && self.claim_mean.is_finite()) {
            return bad("claim mean", self.claim_mean);
        }
        if let CountProcess::Poisson { lambda } = self.count {
            if !(lambda > 0.0 && lambda.is_finite()) {
                return bad("poisson rate lambda", lambda);
            }
        }
        self.claims.validate()
    }

    /// Same model with another initial capital.
    pub fn with_capital(&self, u: f64) -> Self {
        Self { u, ..self.clone() }
    }
}

/// Surplus P_{t_1}, ..., P_{t_N} of one replicate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurplusPath {
    pub t0: f64,
    pub values: Vec<f64>,
    pub seed: u64,
    pub replicate: u64,
}

impl SurplusPath {
    /// CSV dump: period, t, surplus.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["period", "t", "surplus"])?;
        for (i, p) in self.values.iter().enumerate() {
            let n = i + 1;
            w.write_record([n.to_string(), fmt_real(n as f64 * self.t0), fmt_real(*p)])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn check_horizon(horizon: usize) -> Result<()> {
    if horizon == 0 {
        return precondition("horizon must be at least one period");
    }
    Ok(())
}

/// Cumulative claims S_{t_1}, ..., S_{t_N} of one replicate. Capital and
/// premium do not enter, so replicates are coupled across (u, c).
fn claim_totals(model: &SurplusModel, horizon: usize, seed: u64, replicate: u64) -> Result<Vec<f64>> {
    let mut rng = replicate_rng(seed, replicate);
    let counts: Vec<usize> = match model.count {
        CountProcess::OnePerPeriod => vec![1; horizon],
        CountProcess::Poisson { lambda } => {
            let dist = Poisson::new(lambda * model.t0).map_err(|e| Error::InvalidModel(e.to_string()))?;
            (0..horizon).map(|_| dist.sample(&mut rng) as usize).collect()
        }
    };
    let total: usize = counts.iter().sum();
    let mut xi = vec![0.0; total];
    if total > 0 {
        PathSampler::new(&model.claims, 0, total)?.fill(&mut rng, &mut xi);
    }
    let mut acc = 0.0;
    let mut from = 0;
    Ok(counts
        .iter()
        .map(|&k| {
            acc += xi[from..from + k].iter().map(|x| model.claim_mean + x).sum::<f64>();
            from += k;
            acc
        })
        .collect())
}

fn surplus_from_totals(model: &SurplusModel, totals: &[f64]) -> Vec<f64> {
    totals
        .iter()
        .enumerate()
        .map(|(i, s)| model.u + model.c * (i + 1) as f64 * model.t0 - s)
        .collect()
}

/// Exact discrete-time surplus path of replicate `replicate`.
pub fn simulate_surplus(model: &SurplusModel, horizon: usize, seed: u64, replicate: u64) -> Result<SurplusPath> {
    model.validate()?;
    check_horizon(horizon)?;
    let totals = claim_totals(model, horizon, seed, replicate)?;
    Ok(SurplusPath {
        t0: model.t0,
        values: surplus_from_totals(model, &totals),
        seed,
        replicate,
    })
}

/// First (1-based) period with negative surplus.
pub fn ruin_time(path: &[f64]) -> Result<Option<usize>> {
    if path.is_empty() {
        return precondition("ruin time of an empty path");
    }
    Ok(path.iter().position(|&p| p < 0.0).map(|i| i + 1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuinMethod {
    ExactSim,
    BrownianApprox,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuinEstimate {
    pub method: RuinMethod,
    pub probability: f64,
    pub std_err: f64,
    #[serde(rename = "R")]
    pub replicates: usize,
    pub seed: u64,
    pub horizon: usize,
}

/// Mean drift and time-changed Brownian scale of the claim sum.
struct Surrogate {
    /// E S_{t_n}, n = 1..N.
    drift: Vec<f64>,
    /// a(t_n) with a(t_N) = 1.
    time: Vec<f64>,
    /// s_N.
    scale: f64,
}

fn brownian_surrogate(model: &SurplusModel, horizon: usize) -> Result<Surrogate> {
    let nf = horizon as f64;
    match model.count {
        CountProcess::OnePerPeriod => {
            let drift = (1..=horizon).map(|n| n as f64 * model.claim_mean).collect();
            let var = model.claims.window_variance_exact(0, horizon)?;
            if var <= 0.0 {
                return Ok(Surrogate {
                    drift,
                    time: vec![0.0; horizon],
                    scale: 0.0,
                });
            }
            let grid: Vec<f64> = (1..=horizon).map(|n| n as f64 / nf).collect();
            let a = scaling_ratio(&model.claims, horizon, &grid)?;
            if a.max_decrease() > 1e-12 {
                return precondition("partial-sum variances decrease; no Brownian time change exists");
            }
            Ok(Surrogate {
                drift,
                time: a.values,
                scale: var.sqrt(),
            })
        }
        CountProcess::Poisson { lambda } => {
            let sigma2 = match &model.claims {
                SequenceModel::Independent {
                    variance: VarianceRule::Constant { value },
                    ..
                } => *value,
                _ => return precondition("the compound-Poisson approximation needs iid claims with constant variance"),
            };
            let rate = lambda * model.t0;
            // Var S_t = lambda t E[X^2].
            let second = model.claim_mean * model.claim_mean + sigma2;
            Ok(Surrogate {
                drift: (1..=horizon).map(|n| n as f64 * rate * model.claim_mean).collect(),
                time: (1..=horizon).map(|n| n as f64 / nf).collect(),
                scale: (rate * nf * second).sqrt(),
            })
        }
    }
}

/// Fraction of R replicates ruined within `horizon` periods, with standard
/// error sqrt(p (1 - p) / R).
pub fn ruin_probability(
    model: &SurplusModel,
    horizon: usize,
    replicates: usize,
    seed: u64,
    method: RuinMethod,
) -> Result<RuinEstimate> {
    model.validate()?;
    check_horizon(horizon)?;
    if replicates < MIN_RUIN_REPLICATES {
        return precondition(format!("R = {replicates}, need at least {MIN_RUIN_REPLICATES}"));
    }
    let ruined: usize = match method {
        RuinMethod::ExactSim => (0..replicates as u64)
            .into_par_iter()
            .map(|rep| {
                let totals = claim_totals(model, horizon, seed, rep)?;
                Ok(usize::from(ruin_time(&surplus_from_totals(model, &totals))?.is_some()))
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .sum(),
        RuinMethod::BrownianApprox => {
            let sur = brownian_surrogate(model, horizon)?;
            (0..replicates as u64)
                .into_par_iter()
                .map(|rep| {
                    let mut rng = replicate_rng(seed, rep);
                    let (mut w, mut prev) = (0.0, 0.0);
                    let totals: Vec<f64> = sur
                        .drift
                        .iter()
                        .zip(&sur.time)
                        .map(|(d, &a)| {
                            w += (a - prev).max(0.0).sqrt() * rng.sample::<f64, _>(StandardNormal);
                            prev = a;
                            d + sur.scale * w
                        })
                        .collect();
                    usize::from(surplus_from_totals(model, &totals).iter().any(|&p| p < 0.0))
                })
                .sum()
        }
    };
    let r = replicates as f64;
    let p = ruined as f64 / r;
    Ok(RuinEstimate {
        method,
        probability: p,
        std_err: (p * (1.0 - p) / r).sqrt(),
        replicates,
        seed,
        horizon,
    })
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClaimsFile {
    #[serde(default)]
    mean: f64,
    model: serde_json::Value,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(default)]
    name: Option<String>,
    u: f64,
    c: f64,
    #[serde(default = "one")]
    t0: f64,
    count: CountProcess,
    claims: ClaimsFile,
    horizon: usize,
    #[serde(default, rename = "R")]
    replicates: Option<usize>,
    #[serde(default)]
    seed: Option<u64>,
}

fn one() -> f64 {
    1.0
}

/// A surplus model with its horizon and optional run parameters, read from JSON.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub claims_name: String,
    pub surplus: SurplusModel,
    pub horizon: usize,
    pub replicates: Option<usize>,
    pub seed: Option<u64>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ScenarioFile = serde_json::from_str(text).map_err(|e| Error::Schema {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        let claims = NamedModel::from_json(&file.claims.model.to_string()).map_err(|e| Error::Schema {
            line: 0,
            column: 0,
            message: format!("claims.model: {e}"),
        })?;
        let surplus = SurplusModel {
            u: file.u,
            c: file.c,
            t0: file.t0,
            claim_mean: file.claims.mean,
            claims: claims.model,
            count: file.count,
        };
        surplus.validate()?;
        check_horizon(file.horizon)?;
        Ok(Self {
            name: file.name.unwrap_or_else(|| "scenario".into()),
            claims_name: claims.name,
            surplus,
            horizon: file.horizon,
            replicates: file.replicates,
            seed: file.seed,
        })
    }

    /// Resolved scenario as JSON, for embedding in reports.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "name": self.name,
            "u": self.surplus.u,
            "c": self.surplus.c,
            "t0": self.surplus.t0,
            "count": self.surplus.count,
            "claims": {
                "mean": self.surplus.claim_mean,
                "model": NamedModel { name: self.claims_name.clone(), model: self.surplus.claims.clone() }.to_json(),
            },
            "horizon": self.horizon,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Family;

    fn deterministic(u: f64, c: f64, claim: f64) -> SurplusModel {
        SurplusModel {
            u,
            c,
            t0: 1.0,
            claim_mean: claim,
            claims: SequenceModel::independent(Family::Normal, VarianceRule::Constant { value: 0.0 }),
            count: CountProcess::OnePerPeriod,
        }
    }

    #[test]
    fn deterministic_paths() {
        let p = simulate_surplus(&deterministic(10.0, 0.0, 3.0), 5, 1, 0).unwrap();
        assert_eq!(p.values, vec![7.0, 4.0, 1.0, -2.0, -5.0]);
        assert_eq!(ruin_time(&p.values[..4]).unwrap(), Some(4));
        let q = simulate_surplus(&deterministic(1.0, 2.0, 0.0), 4, 1, 0).unwrap();
        assert_eq!(q.values, vec![3.0, 5.0, 7.0, 9.0]);
        assert_eq!(ruin_time(&q.values).unwrap(), None);
        assert!(ruin_time(&[]).is_err());
    }

    #[test]
    fn invalid_inputs() {
        let mut m = deterministic(1.0, 1.0, 1.0);
        assert!(simulate_surplus(&m, 0, 1, 0).is_err());
        m.t0 = 0.0;
        assert!(simulate_surplus(&m, 3, 1, 0).is_err());
        let ok = deterministic(1.0, 1.0, 1.0);
        assert!(ruin_probability(&ok, 3, 99, 1, RuinMethod::ExactSim).is_err());
    }

    #[test]
    fn poisson_total_mean() {
        let m = SurplusModel {
            count: CountProcess::Poisson { lambda: 3.0 },
            claims: SequenceModel::independent(Family::Uniform, VarianceRule::Constant { value: 0.25 }),
            ..deterministic(0.0, 0.0, 2.0)
        };
        let (n, r) = (5usize, 4000u64);
        let totals: Vec<f64> = (0..r).map(|rep| claim_totals(&m, n, 8, rep).unwrap()[n - 1]).collect();
        let mean = totals.iter().sum::<f64>() / r as f64;
        // Var = lambda N t0 E[X^2] = 15 * (4 + 0.25).
        let sd = (15.0f64 * 4.25).sqrt();
        assert!((mean - 30.0).abs() < 3.0 * sd / (r as f64).sqrt(), "{mean}");
    }

    #[test]
    fn symmetric_one_period() {
        let m = SurplusModel {
            claims: SequenceModel::iid(Family::Normal),
            ..deterministic(0.0, 0.0, 0.0)
        };
        let est = ruin_probability(&m, 1, 10_000, 5, RuinMethod::ExactSim).unwrap();
        assert!((est.probability - 0.5).abs() <= 3.0 * (0.25f64 / 1e4).sqrt());
        let huge = SurplusModel {
            claims: SequenceModel::iid(Family::Uniform),
            ..deterministic(1e6, 0.0, 1.0)
        };
        assert_eq!(ruin_probability(&huge, 10, 200, 5, RuinMethod::ExactSim).unwrap().probability, 0.0);
    }

    #[test]
    fn coupled_capital_monotone() {
        let m = SurplusModel {
            claims: SequenceModel::ar1(0.4, 1.0),
            ..deterministic(1.0, 0.8, 1.0)
        };
        for rep in 0..200 {
            let lo = ruin_time(&simulate_surplus(&m, 30, 4, rep).unwrap().values).unwrap();
            let hi = ruin_time(&simulate_surplus(&m.with_capital(2.5), 30, 4, rep).unwrap().values).unwrap();
            match (lo, hi) {
                (None, Some(_)) => panic!("more capital ruined earlier"),
                (Some(a), Some(b)) => assert!(b >= a),
                _ => {}
            }
        }
    }

    #[test]
    fn poisson_surrogate_needs_iid_claims() {
        let m = SurplusModel {
            count: CountProcess::Poisson { lambda: 2.0 },
            claims: SequenceModel::ar1(0.5, 1.0),
            ..deterministic(1.0, 1.0, 1.0)
        };
        assert!(ruin_probability(&m, 3, 100, 1, RuinMethod::BrownianApprox).is_err());
    }

    #[test]
    fn scenario_round_trip() {
        let text = r#"{
  "name": "compound",
  "u": 20, "c": 52, "t0": 1,
  "count": {"process": "poisson", "lambda": 50},
  "claims": {"mean": 1, "model": {"kind": "independent",
     "marginals": {"family": "uniform", "variance": {"rule": "constant", "value": 0.25}}}},
  "horizon": 20, "R": 10000, "seed": 3
}"#;
        let s = Scenario::from_json(text).unwrap();
        assert_eq!(s.surplus.count, CountProcess::Poisson { lambda: 50.0 });
        assert_eq!((s.horizon, s.replicates, s.seed), (20, Some(10000), Some(3)));
        let again = Scenario::from_json(&s.to_json().to_string()).unwrap();
        assert_eq!(again.surplus, s.surplus);
        assert!(matches!(Scenario::from_json("{\"u\": 1}"), Err(Error::Schema { .. })));
    }
}
