//! Sequence laws: marginal families, variance rules, covariance rules and
//! association certificates.
//!
//! Three kinds are supported. Independent sequences with per-index
//! variance rules, stationary or finite-horizon Gaussian sequences given
//! by a covariance rule, and finite moving averages of independent
//! innovations. Every kind exposes exact second moments, which the rest of
//! the crate relies on for normalizations.

use serde::{Deserialize, Serialize};

use crate::error::{precondition, Error, Result};
use crate::law::Law;

/// Unit-variance, centered marginal family. Scaled by `sigma_k` at use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Normal,
    /// Symmetric two-point law on {-1, +1}.
    Rademacher,
    /// Uniform on [-sqrt(3), sqrt(3)].
    Uniform,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Normal => "normal",
            Family::Rademacher => "rademacher",
            Family::Uniform => "uniform",
        }
    }
}

/// sigma^2_k as a function of the index k >= 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum VarianceRule {
    /// sigma^2_k = value
    Constant { value: f64 },
    /// sigma^2_k = scale * k
    Linear { scale: f64 },
    /// sigma^2_k = scale * ratio^k
    Geometric { scale: f64, ratio: f64 },
    /// sigma^2_k = scale * k^exponent
    Power { scale: f64, exponent: f64 },
}

impl VarianceRule {
    fn eval(&self, k: usize) -> f64 {
        let kf = k as f64;
        match *self {
            VarianceRule::Constant { value } => value,
            VarianceRule::Linear { scale } => scale * kf,
            VarianceRule::Geometric { scale, ratio } => scale * ratio.powf(kf),
            VarianceRule::Power { scale, exponent } => scale * kf.powf(exponent),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            VarianceRule::Constant { value } => value.is_finite() && value >= 0.0,
            VarianceRule::Linear { scale } => scale.is_finite() && scale >= 0.0,
            VarianceRule::Geometric { scale, ratio } => {
                scale.is_finite() && scale >= 0.0 && ratio.is_finite() && ratio > 0.0
            }
            VarianceRule::Power { scale, exponent } => {
                scale.is_finite() && scale >= 0.0 && exponent.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidModel(format!("variance rule {self:?} yields negative or non-finite variances")))
        }
    }

    fn is_constant(&self) -> bool {
        matches!(self, VarianceRule::Constant { .. })
    }
}

/// Covariance rule C(j, h) of a centered Gaussian sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum CovarianceRule {
    /// Stationary AR(1): C(j, h) = phi^|j-h| * innovation_variance / (1 - phi^2).
    Ar1 { phi: f64, innovation_variance: f64 },
    /// Finite-horizon covariance matrix, row `j-1` holds C(j, .).
    Explicit { matrix: Vec<Vec<f64>> },
}

/// A generative law for the sequence (X_k), k >= 1.
#[derive(Debug, Clone, PartialEq)]
pub enum SequenceModel {
    Independent {
        family: Family,
        variance: VarianceRule,
    },
    GaussianAssoc {
        covariance: CovarianceRule,
    },
    /// X_k = sum_i a_i eps_{k-i}, innovations indexed over all integers.
    MaAssoc {
        coefficients: Vec<f64>,
        innovation: Family,
        innovation_variance: f64,
    },
}

/// Outcome of rule-based association certification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Certificate {
    pub certified: bool,
    pub reason: String,
}

/// Contiguous 1-based index set `first..first+len`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexRange {
    pub first: usize,
    pub len: usize,
}

impl IndexRange {
    pub fn new(first: usize, len: usize) -> Self {
        Self { first, len }
    }

    /// Indices `p+1..=p+n` of a moving window.
    pub fn window(p: usize, n: usize) -> Self {
        Self { first: p + 1, len: n }
    }

    pub fn last(&self) -> usize {
        self.first + self.len - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

impl SequenceModel {
    pub fn iid(family: Family) -> Self {
        SequenceModel::Independent {
            family,
            variance: VarianceRule::Constant { value: 1.0 },
        }
    }

    pub fn independent(family: Family, variance: VarianceRule) -> Self {
        SequenceModel::Independent { family, variance }
    }

    /// Stationary AR(1) Gaussian sequence with the given innovation variance.
    pub fn ar1(phi: f64, innovation_variance: f64) -> Self {
        SequenceModel::GaussianAssoc {
            covariance: CovarianceRule::Ar1 {
                phi,
                innovation_variance,
            },
        }
    }

    pub fn explicit_gaussian(matrix: Vec<Vec<f64>>) -> Self {
        SequenceModel::GaussianAssoc {
            covariance: CovarianceRule::Explicit { matrix },
        }
    }

    pub fn moving_average(coefficients: Vec<f64>, innovation: Family, innovation_variance: f64) -> Self {
        SequenceModel::MaAssoc {
            coefficients,
            innovation,
            innovation_variance,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            SequenceModel::Independent { .. } => "independent",
            SequenceModel::GaussianAssoc { .. } => "gaussian-assoc",
            SequenceModel::MaAssoc { .. } => "ma-assoc",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SequenceModel::Independent { variance, .. } => variance.validate(),
            SequenceModel::GaussianAssoc { covariance } => match covariance {
                CovarianceRule::Ar1 {
                    phi,
                    innovation_variance,
                } => {
                    if !(phi.is_finite() && phi.abs() < 1.0) {
                        return Err(Error::InvalidModel(format!("ar1 phi = {phi} must lie in (-1, 1)")));
                    }
                    if !(innovation_variance.is_finite() && *innovation_variance > 0.0) {
                        return Err(Error::InvalidModel(format!(
                            "ar1 innovation_variance = {innovation_variance} must be positive"
                        )));
                    }
                    Ok(())
                }
                CovarianceRule::Explicit { matrix } => {
                    let d = matrix.len();
                    if d == 0 {
                        return Err(Error::InvalidModel("explicit covariance matrix is empty".into()));
                    }
                    for (j, row) in matrix.iter().enumerate() {
                        if row.len() != d {
                            return Err(Error::InvalidModel(format!(
                                "explicit covariance row {} has {} entries, expected {d}",
                                j + 1,
                                row.len()
                            )));
                        }
                        if row.iter().any(|x| !x.is_finite()) {
                            return Err(Error::InvalidModel(format!("explicit covariance row {} is not finite", j + 1)));
                        }
                        if row[j] < 0.0 {
                            return Err(Error::InvalidModel(format!("negative variance at index {}", j + 1)));
                        }
                        for (h, &c) in row.iter().enumerate() {
                            if c != matrix[h][j] {
                                return Err(Error::InvalidModel(format!(
                                    "explicit covariance is not symmetric at ({}, {})",
                                    j + 1,
                                    h + 1
                                )));
                            }
                        }
                    }
                    Ok(())
                }
            },
            SequenceModel::MaAssoc {
                coefficients,
                innovation_variance,
                ..
            } => {
                if coefficients.is_empty() || coefficients.iter().any(|a| !a.is_finite()) {
                    return Err(Error::InvalidModel("moving-average coefficients must be finite and nonempty".into()));
                }
                if !(innovation_variance.is_finite() && *innovation_variance > 0.0) {
                    return Err(Error::InvalidModel(format!(
                        "innovation_variance = {innovation_variance} must be positive"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Largest admissible index, for finite-horizon models.
    pub fn horizon(&self) -> Option<usize> {
        match self {
            SequenceModel::GaussianAssoc {
                covariance: CovarianceRule::Explicit { matrix },
            } => Some(matrix.len()),
            _ => None,
        }
    }

    fn check_index(&self, k: usize) -> Result<()> {
        if k == 0 {
            return precondition("indices start at 1");
        }
        match self.horizon() {
            Some(max) if k > max => Err(Error::IndexOutOfRange { index: k, max }),
            _ => Ok(()),
        }
    }

    pub(crate) fn check_range(&self, range: IndexRange) -> Result<()> {
        if range.is_empty() {
            return Ok(());
        }
        self.check_index(range.first)?;
        self.check_index(range.last())
    }

    /// Exact marginal variance sigma^2_k.
    pub fn variance_at(&self, k: usize) -> Result<f64> {
        self.check_index(k)?;
        let v = match self {
            SequenceModel::Independent { variance, .. } => variance.eval(k),
            SequenceModel::GaussianAssoc { .. } | SequenceModel::MaAssoc { .. } => self.stationary_or_explicit(k, k),
        };
        if !v.is_finite() {
            return Err(Error::InvalidModel(format!("sigma^2_{k} is not finite")));
        }
        Ok(v)
    }

    /// Exact Cov(X_j, X_h).
    pub fn covariance_at(&self, j: usize, h: usize) -> Result<f64> {
        self.check_index(j)?;
        self.check_index(h)?;
        match self {
            SequenceModel::Independent { .. } => {
                if j == h {
                    self.variance_at(j)
                } else {
                    Ok(0.0)
                }
            }
            _ => Ok(self.stationary_or_explicit(j, h)),
        }
    }

    fn stationary_or_explicit(&self, j: usize, h: usize) -> f64 {
        match self {
            SequenceModel::GaussianAssoc {
                covariance: CovarianceRule::Explicit { matrix },
            } => matrix[j - 1][h - 1],
            _ => self
                .autocovariance(j.abs_diff(h))
                .expect("stationary kinds have an autocovariance"),
        }
    }

    /// gamma(d) for the stationary kinds; `None` for non-stationary ones.
    pub fn autocovariance(&self, lag: usize) -> Option<f64> {
        match self {
            SequenceModel::GaussianAssoc {
                covariance:
                    CovarianceRule::Ar1 {
                        phi,
                        innovation_variance,
                    },
            } => Some(innovation_variance / (1.0 - phi * phi) * phi.powi(lag as i32)),
            SequenceModel::MaAssoc {
                coefficients,
                innovation_variance,
                ..
            } => {
                let q = coefficients.len();
                if lag >= q {
                    return Some(0.0);
                }
                let s: f64 = (0..q - lag).map(|i| coefficients[i] * coefficients[i + lag]).sum();
                Some(innovation_variance * s)
            }
            SequenceModel::Independent { variance, .. } if variance.is_constant() => {
                Some(if lag == 0 { variance.eval(1) } else { 0.0 })
            }
            _ => None,
        }
    }

    /// Cov(sum_{a in A} X_a, sum_{b in B} X_b), exact.
    pub fn range_covariance(&self, a: IndexRange, b: IndexRange) -> Result<f64> {
        if a.is_empty() || b.is_empty() {
            return Ok(0.0);
        }
        self.check_range(a)?;
        self.check_range(b)?;
        match self {
            SequenceModel::Independent { variance, .. } => {
                let lo = a.first.max(b.first);
                let hi = a.last().min(b.last());
                if lo > hi {
                    return Ok(0.0);
                }
                let s: f64 = (lo..=hi).map(|k| variance.eval(k)).sum();
                if s.is_finite() {
                    Ok(s)
                } else {
                    Err(Error::InvalidModel("window variance overflows".into()))
                }
            }
            SequenceModel::GaussianAssoc {
                covariance: CovarianceRule::Explicit { matrix },
            } => {
                let mut s = 0.0;
                for j in a.first..=a.last() {
                    let row = &matrix[j - 1];
                    s += row[b.first - 1..b.last()].iter().sum::<f64>();
                }
                Ok(s)
            }
            SequenceModel::GaussianAssoc {
                covariance:
                    CovarianceRule::Ar1 {
                        phi,
                        innovation_variance,
                    },
            } if a == b => {
                let v = innovation_variance / (1.0 - phi * phi);
                Ok(v * ar1_window_factor(*phi, a.len))
            }
            _ => Ok(self.lag_sum(a, b)),
        }
    }

    /// Stationary cross-sum via lag counting: sum_d gamma(d) #{(a, b): b - a = d}.
    fn lag_sum(&self, a: IndexRange, b: IndexRange) -> f64 {
        let (a0, a1) = (a.first as i64, a.last() as i64);
        let (b0, b1) = (b.first as i64, b.last() as i64);
        let max_lag = match self {
            SequenceModel::MaAssoc { coefficients, .. } => coefficients.len() as i64 - 1,
            _ => i64::MAX,
        };
        let d_lo = (b0 - a1).max(-max_lag);
        let d_hi = (b1 - a0).min(max_lag);
        let mut s = 0.0;
        for d in d_lo..=d_hi {
            let lo = a0.max(b0 - d);
            let hi = a1.min(b1 - d);
            if lo <= hi {
                let g = self.autocovariance(d.unsigned_abs() as usize).unwrap_or(0.0);
                s += g * (hi - lo + 1) as f64;
            }
        }
        s
    }

    /// s'_n^2 = Var(S'_n) for the window p+1..p+n.
    pub fn window_variance_exact(&self, p: usize, n: usize) -> Result<f64> {
        let w = IndexRange::window(p, n);
        self.range_covariance(w, w)
    }

    pub fn is_gaussian(&self) -> bool {
        match self {
            SequenceModel::Independent { family, .. } => *family == Family::Normal,
            SequenceModel::GaussianAssoc { .. } => true,
            SequenceModel::MaAssoc { innovation, .. } => *innovation == Family::Normal,
        }
    }

    /// Distribution of sum_{k in range} X_k.
    pub fn law_of_sum(&self, range: IndexRange) -> Result<Law> {
        self.check_range(range)?;
        match self {
            SequenceModel::Independent { family, variance } => {
                let weights = (range.first..range.first + range.len)
                    .map(|k| variance.eval(k).sqrt())
                    .collect();
                Ok(Law::combination(weights, *family))
            }
            SequenceModel::GaussianAssoc { .. } => Ok(Law::Gaussian {
                variance: self.range_covariance(range, range)?,
            }),
            SequenceModel::MaAssoc {
                coefficients,
                innovation,
                innovation_variance,
            } => {
                // Innovation eps_{first-q+1+t} enters the sum with weight
                // sum of a_i over i such that first <= t' + i <= last.
                let q = coefficients.len();
                let sd = innovation_variance.sqrt();
                let count = range.len + q - 1;
                let mut weights = vec![0.0; count];
                for k in 0..range.len {
                    for (i, a) in coefficients.iter().enumerate() {
                        weights[k + q - 1 - i] += a * sd;
                    }
                }
                weights.retain(|w| *w != 0.0);
                Ok(Law::combination(weights, *innovation))
            }
        }
    }

    /// Distribution of the single coordinate X_k.
    pub fn law_at(&self, k: usize) -> Result<Law> {
        self.law_of_sum(IndexRange::new(k, 1))
    }

    /// Rule-based association certificate.
    pub fn certify_association(&self) -> Certificate {
        match self {
            SequenceModel::Independent { .. } => Certificate {
                certified: true,
                reason: "independent families are associated".into(),
            },
            SequenceModel::GaussianAssoc { covariance } => {
                let nonneg = match covariance {
                    CovarianceRule::Ar1 { phi, .. } => *phi >= 0.0,
                    CovarianceRule::Explicit { matrix } => matrix.iter().flatten().all(|c| *c >= 0.0),
                };
                if nonneg {
                    Certificate {
                        certified: true,
                        reason: "gaussian with all covariances nonnegative".into(),
                    }
                } else {
                    Certificate {
                        certified: false,
                        reason: "gaussian with a negative covariance".into(),
                    }
                }
            }
            SequenceModel::MaAssoc { coefficients, .. } => {
                if coefficients.iter().all(|a| *a >= 0.0) {
                    Certificate {
                        certified: true,
                        reason: "nonnegative-coefficient filter of independent innovations".into(),
                    }
                } else {
                    Certificate {
                        certified: false,
                        reason: "moving average with a negative coefficient".into(),
                    }
                }
            }
        }
    }

    pub fn require_associated(&self) -> Result<()> {
        let cert = self.certify_association();
        if cert.certified {
            Ok(())
        } else {
            Err(Error::Uncertified(cert.reason))
        }
    }
}

/// sum_{j,h=1..n} phi^|j-h|, closed form.
fn ar1_window_factor(phi: f64, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    if phi == 0.0 {
        return nf;
    }
    let one_minus = 1.0 - phi;
    nf + 2.0 * phi * (nf * one_minus - 1.0 + phi.powi(n as i32)) / (one_minus * one_minus)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MarginalsFile {
    family: Family,
    #[serde(default)]
    variance: Option<VarianceRule>,
    #[serde(default)]
    mean: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    #[serde(default)]
    name: Option<String>,
    kind: String,
    #[serde(default)]
    marginals: Option<MarginalsFile>,
    #[serde(default)]
    covariance: Option<CovarianceRule>,
    #[serde(default)]
    coefficients: Option<Vec<f64>>,
    #[serde(default)]
    innovation: Option<MarginalsFile>,
}

/// A model read from a description file, with its display name.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedModel {
    pub name: String,
    pub model: SequenceModel,
}

impl NamedModel {
    /// Parse a JSON model description. Schema and semantic errors carry the
    /// line of the offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::Schema {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        let field_err = |field: &str, message: String| {
            let (line, column) = locate_field(text, field);
            Error::Schema { line, column, message }
        };
        let model = match file.kind.as_str() {
            "independent" => {
                let m = file
                    .marginals
                    .ok_or_else(|| field_err("kind", "field `marginals` is required for kind `independent`".into()))?;
                check_centered(&m).map_err(|msg| field_err("mean", msg))?;
                SequenceModel::Independent {
                    family: m.family,
                    variance: m.variance.unwrap_or(VarianceRule::Constant { value: 1.0 }),
                }
            }
            "gaussian-assoc" => SequenceModel::GaussianAssoc {
                covariance: file.covariance.ok_or_else(|| {
                    field_err("kind", "field `covariance` is required for kind `gaussian-assoc`".into())
                })?,
            },
            "ma-assoc" => {
                let coefficients = file.coefficients.ok_or_else(|| {
                    field_err("kind", "field `coefficients` is required for kind `ma-assoc`".into())
                })?;
                let inn = file.innovation.unwrap_or(MarginalsFile {
                    family: Family::Normal,
                    variance: None,
                    mean: None,
                });
                check_centered(&inn).map_err(|msg| field_err("mean", msg))?;
                let innovation_variance = match inn.variance {
                    None => 1.0,
                    Some(VarianceRule::Constant { value }) => value,
                    Some(other) => {
                        return Err(field_err(
                            "innovation",
                            format!("innovation variance must be a constant rule, got {other:?}"),
                        ))
                    }
                };
                SequenceModel::MaAssoc {
                    coefficients,
                    innovation: inn.family,
                    innovation_variance,
                }
            }
            other => {
                return Err(field_err(
                    "kind",
                    format!("unknown kind `{other}`, expected one of independent, gaussian-assoc, ma-assoc"),
                ))
            }
        };
        model.validate().map_err(|e| {
            let field = match &model {
                SequenceModel::Independent { .. } => "marginals",
                SequenceModel::GaussianAssoc { .. } => "covariance",
                SequenceModel::MaAssoc { .. } => "coefficients",
            };
            field_err(field, e.to_string())
        })?;
        Ok(NamedModel {
            name: file.name.unwrap_or_else(|| model.kind_name().to_string()),
            model,
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        use serde_json::json;
        let mut v = match &self.model {
            SequenceModel::Independent { family, variance } => json!({
                "kind": "independent",
                "marginals": { "family": family, "variance": variance },
            }),
            SequenceModel::GaussianAssoc { covariance } => json!({
                "kind": "gaussian-assoc",
                "covariance": covariance,
            }),
            SequenceModel::MaAssoc {
                coefficients,
                innovation,
                innovation_variance,
            } => json!({
                "kind": "ma-assoc",
                "coefficients": coefficients,
                "innovation": {
                    "family": innovation,
                    "variance": { "rule": "constant", "value": innovation_variance },
                },
            }),
        };
        v["name"] = json!(self.name);
        v
    }
}

fn check_centered(m: &MarginalsFile) -> std::result::Result<(), String> {
    match m.mean {
        Some(mu) if mu != 0.0 => Err(format!("non-centered family (mean {mu}) rejected; marginals must have mean 0")),
        _ => Ok(()),
    }
}

/// 1-based (line, column) of the first `"field"` key in `text`, or (0, 0).
fn locate_field(text: &str, field: &str) -> (usize, usize) {
    let needle = format!("\"{field}\"");
    for (i, line) in text.lines().enumerate() {
        if let Some(col) = line.find(&needle) {
            return (i + 1, col + 1);
        }
    }
    (0, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_window(model: &SequenceModel, a: IndexRange, b: IndexRange) -> f64 {
        let mut s = 0.0;
        for j in a.first..a.first + a.len {
            for h in b.first..b.first + b.len {
                s += model.covariance_at(j, h).unwrap();
            }
        }
        s
    }

    #[test]
    fn variance_examples() {
        assert_eq!(SequenceModel::iid(Family::Normal).variance_at(7).unwrap(), 1.0);
        let ar = SequenceModel::ar1(0.5, 1.0);
        assert!((ar.variance_at(3).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        let ma = SequenceModel::moving_average(vec![1.0, 0.5], Family::Normal, 1.0);
        assert_eq!(ma.variance_at(2).unwrap(), 1.25);
        assert_eq!(ma.variance_at(1).unwrap(), 1.25);
    }

    #[test]
    fn covariance_examples() {
        let ind = SequenceModel::independent(Family::Normal, VarianceRule::Linear { scale: 1.0 });
        assert_eq!(ind.covariance_at(2, 5).unwrap(), 0.0);
        assert_eq!(ind.covariance_at(4, 4).unwrap(), ind.variance_at(4).unwrap());
        let ar = SequenceModel::ar1(0.5, 1.0);
        assert!((ar.covariance_at(5, 7).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(ar.covariance_at(9, 9).unwrap(), ar.variance_at(9).unwrap());
        assert_eq!(ar.covariance_at(2, 9).unwrap(), ar.covariance_at(9, 2).unwrap());
    }

    #[test]
    fn index_zero_and_horizon_are_errors() {
        let m = SequenceModel::explicit_gaussian(vec![vec![1.0, 0.5], vec![0.5, 1.0]]);
        assert!(m.variance_at(0).is_err());
        assert!(matches!(m.variance_at(3), Err(Error::IndexOutOfRange { index: 3, max: 2 })));
        assert_eq!(m.covariance_at(1, 2).unwrap(), 0.5);
    }

    #[test]
    fn range_covariance_matches_double_sum() {
        let models = [
            SequenceModel::ar1(0.5, 1.0),
            SequenceModel::ar1(0.25, 2.0),
            SequenceModel::moving_average(vec![1.0, 0.5, 0.25], Family::Normal, 1.5),
            SequenceModel::independent(Family::Uniform, VarianceRule::Linear { scale: 2.0 }),
        ];
        let ranges = [(1, 1), (1, 7), (3, 5), (9, 4), (4, 12), (20, 3)];
        for m in &models {
            for &(fa, la) in &ranges {
                for &(fb, lb) in &ranges {
                    let a = IndexRange::new(fa, la);
                    let b = IndexRange::new(fb, lb);
                    let fast = m.range_covariance(a, b).unwrap();
                    let slow = brute_window(m, a, b);
                    assert!((fast - slow).abs() < 1e-10 * (1.0 + slow.abs()), "{m:?} {a:?} {b:?}: {fast} vs {slow}");
                }
            }
        }
    }

    #[test]
    fn ar1_window_of_two() {
        let ar = SequenceModel::ar1(0.5, 1.0);
        assert!((ar.window_variance_exact(10, 2).unwrap() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn certification_rules() {
        assert!(SequenceModel::iid(Family::Rademacher).certify_association().certified);
        let neg = SequenceModel::explicit_gaussian(vec![vec![1.0, -0.2], vec![-0.2, 1.0]]);
        let c = neg.certify_association();
        assert!(!c.certified);
        assert!(c.reason.contains("negative"));
        assert!(SequenceModel::moving_average(vec![1.0, 0.5], Family::Normal, 1.0)
            .certify_association()
            .certified);
        assert!(!SequenceModel::ar1(-0.3, 1.0).certify_association().certified);
        assert!(!SequenceModel::moving_average(vec![1.0, -0.5], Family::Normal, 1.0)
            .certify_association()
            .certified);
    }

    #[test]
    fn ma_law_weights() {
        let ma = SequenceModel::moving_average(vec![1.0, 0.5], Family::Rademacher, 1.0);
        match ma.law_of_sum(IndexRange::new(3, 3)).unwrap() {
            Law::Combination { weights, .. } => assert_eq!(weights, vec![0.5, 1.5, 1.5, 1.0]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parses_model_files() {
        let text = r#"{
  "name": "ar",
  "kind": "gaussian-assoc",
  "covariance": { "rule": "ar1", "phi": 0.5, "innovation_variance": 1.0 }
}"#;
        let m = NamedModel::from_json(text).unwrap();
        assert_eq!(m.name, "ar");
        assert_eq!(m.model, SequenceModel::ar1(0.5, 1.0));
        let back = NamedModel::from_json(&m.to_json().to_string()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn schema_errors_name_the_line() {
        let text = "{\n  \"kind\": \"independent\",\n  \"marginals\": { \"family\": \"normal\", \"mean\": 0.5 }\n}";
        match NamedModel::from_json(text) {
            Err(Error::Schema { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("non-centered"));
            }
            other => panic!("unexpected {other:?}"),
        }
        let text = "{\n  \"kind\": \"independent\",\n  \"colour\": 1\n}";
        match NamedModel::from_json(text) {
            Err(Error::Schema { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("colour"));
            }
            other => panic!("unexpected {other:?}"),
        }
        let text = "{\n  \"kind\": \"gaussian-assoc\",\n  \"covariance\": {\"rule\": \"ar1\", \"phi\": 1.5, \"innovation_variance\": 1}\n}";
        assert!(matches!(NamedModel::from_json(text), Err(Error::Schema { line: 3, .. })));
    }
}
