use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::law::Estimate;

/// Default cutoff for a vanishing statistic at finite n.
pub const DEFAULT_THRESHOLD: f64 = 0.1;
/// A vanishing statistic must at least halve when n quadruples.
pub const DECAY_THRESHOLD: f64 = 0.5;

/// One named statistic with its verdict: pass iff `value <= threshold`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionEntry {
    pub statistic: String,
    pub n: usize,
    pub ell: Option<usize>,
    pub delta: Option<f64>,
    pub eps: Option<f64>,
    pub value: f64,
    /// Monte-Carlo standard error; zero for exact values.
    pub std_err: f64,
    pub threshold: f64,
    pub verdict: bool,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EntryParams {
    pub n: usize,
    pub ell: Option<usize>,
    pub delta: Option<f64>,
    pub eps: Option<f64>,
}

impl ConditionEntry {
    pub fn new(statistic: impl Into<String>, params: EntryParams, value: f64, threshold: f64) -> Result<Self> {
        Self::estimated(statistic, params, value, 0.0, threshold)
    }

    pub fn from_estimate(statistic: impl Into<String>, params: EntryParams, est: Estimate, threshold: f64) -> Result<Self> {
        Self::estimated(statistic, params, est.value, est.std_err, threshold)
    }

    fn estimated(statistic: impl Into<String>, params: EntryParams, value: f64, std_err: f64, threshold: f64) -> Result<Self> {
        let statistic = statistic.into();
        if !(value.is_finite() && value >= 0.0) {
            return Err(Error::Precondition(format!(
                "statistic {statistic} evaluated to {value}, expected a finite nonnegative value"
            )));
        }
        Ok(Self {
            statistic,
            n: params.n,
            ell: params.ell,
            delta: params.delta,
            eps: params.eps,
            value,
            std_err,
            threshold,
            verdict: value <= threshold,
        })
    }
}

/// Named condition statistics with verdicts.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ConditionReport {
    pub entries: Vec<ConditionEntry>,
}

impl ConditionReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, entry: ConditionEntry) {
        self.entries.push(entry);
    }

    pub fn extend(&mut self, other: ConditionReport) {
        self.entries.extend(other.entries);
    }

    pub fn get(&self, statistic: &str) -> Option<&ConditionEntry> {
        self.entries.iter().find(|e| e.statistic == statistic)
    }

    pub fn value(&self, statistic: &str) -> Option<f64> {
        self.get(statistic).map(|e| e.value)
    }

    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.verdict)
    }

    /// Flat CSV: statistic, n, ell, delta, eps, value, threshold, verdict.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["statistic", "n", "ell", "delta", "eps", "value", "threshold", "verdict"])?;
        for e in &self.entries {
            w.write_record([
                e.statistic.clone(),
                e.n.to_string(),
                e.ell.map(|v| v.to_string()).unwrap_or_default(),
                e.delta.map(fmt_real).unwrap_or_default(),
                e.eps.map(fmt_real).unwrap_or_default(),
                fmt_real(e.value),
                fmt_real(e.threshold),
                if e.verdict { "pass" } else { "fail" }.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}

/// Reals in reports: 17 significant digits.
pub fn fmt_real(x: f64) -> String {
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_and_csv() {
        let p = EntryParams { n: 100, ell: Some(10), delta: None, eps: Some(0.2) };
        let mut r = ConditionReport::new();
        r.push(ConditionEntry::new("lindeberg", p, 0.26146, DEFAULT_THRESHOLD).unwrap());
        r.push(ConditionEntry::new("h0", p, 0.1, DEFAULT_THRESHOLD).unwrap());
        assert!(!r.get("lindeberg").unwrap().verdict);
        assert!(r.get("h0").unwrap().verdict);
        let csv = r.to_csv_string();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "statistic,n,ell,delta,eps,value,threshold,verdict");
        assert_eq!(
            lines.next().unwrap(),
            "lindeberg,100,10,,2.0000000000000001e-1,2.6146000000000003e-1,1.0000000000000001e-1,fail"
        );
    }

    #[test]
    fn negative_or_nan_values_rejected() {
        let p = EntryParams::default();
        assert!(ConditionEntry::new("x", p, -1e-3, 1.0).is_err());
        assert!(ConditionEntry::new("x", p, f64::NAN, 1.0).is_err());
    }
}
