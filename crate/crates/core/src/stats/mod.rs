//! Statistical kernel: paired t-tests, chi-squared goodness of fit,
//! multiple-comparison corrections, and invariance-violation rates.

mod ledger;
pub mod special;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::DemographicGroup;
use crate::textmetrics::Pov;

pub use ledger::{read_test_ledger, write_test_ledger, TestLedgerRow};

/// Conventional significance level for every test in the audit.
pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("at least {min} observations required, got {got}")]
    TooFewObservations { min: usize, got: usize },
    #[error("observed has {observed} categories but expected has {expected}")]
    LengthMismatch { observed: usize, expected: usize },
    #[error("expected count at index {0} is not positive")]
    NonPositiveExpected(usize),
    #[error("non-finite input value")]
    NonFinite,
    #[error("p-value {0} outside [0, 1]")]
    InvalidPValue(f64),
    #[error("empty test group {0}")]
    EmptyGroup(String),
    #[error("ledger i/o: {0}")]
    Io(String),
}

/// Outcome of one hypothesis test. `p` is two-sided for t-tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub df: usize,
    pub p: f64,
    pub degenerate: bool,
}

/// Paired t-test of H0: mean difference = 0.
///
/// `differences` are perturbed minus original, one per resume. A zero-variance
/// sample is flagged degenerate: p = 1 when every difference is zero,
/// p = 0 otherwise (t is then ±inf).
pub fn paired_t_test(differences: &[f64]) -> Result<TestResult, StatsError> {
    let n = differences.len();
    if n < 2 {
        return Err(StatsError::TooFewObservations { min: 2, got: n });
    }
    if differences.iter().any(|d| !d.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let df = n - 1;
    let first = differences[0];
    if differences.iter().all(|&d| d == first) {
        let (statistic, p) = if first == 0.0 {
            (0.0, 1.0)
        } else {
            (first.signum() * f64::INFINITY, 0.0)
        };
        return Ok(TestResult { statistic, df, p, degenerate: true });
    }
    let nf = n as f64;
    let mean = differences.iter().sum::<f64>() / nf;
    let var = differences.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let t = mean / (var.sqrt() / nf.sqrt());
    let p = special::student_t_two_sided(t, df as f64);
    Ok(TestResult { statistic: t, df, p, degenerate: false })
}

/// Pearson chi-squared goodness-of-fit test, df = k - 1.
pub fn chi_squared_gof(observed: &[f64], expected: &[f64]) -> Result<TestResult, StatsError> {
    if observed.len() != expected.len() {
        return Err(StatsError::LengthMismatch {
            observed: observed.len(),
            expected: expected.len(),
        });
    }
    if observed.len() < 2 {
        return Err(StatsError::TooFewObservations { min: 2, got: observed.len() });
    }
    if let Some(i) = expected.iter().position(|&e| !(e > 0.0)) {
        return Err(StatsError::NonPositiveExpected(i));
    }
    if observed.iter().chain(expected).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let chi2: f64 = observed
        .iter()
        .zip(expected)
        .map(|(o, e)| (o - e).powi(2) / e)
        .sum();
    let df = observed.len() - 1;
    Ok(TestResult {
        statistic: chi2,
        df,
        p: special::chi2_sf(chi2, df as f64),
        degenerate: false,
    })
}

fn check_pvalues(pvalues: &[f64]) -> Result<(), StatsError> {
    match pvalues.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        Some(&p) => Err(StatsError::InvalidPValue(p)),
        None => Ok(()),
    }
}

/// Benjamini-Hochberg step-up procedure. Flags are returned in input order.
pub fn bh_correct(pvalues: &[f64], alpha: f64) -> Result<Vec<bool>, StatsError> {
    check_pvalues(pvalues)?;
    let m = pvalues.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| pvalues[a].total_cmp(&pvalues[b]).then(a.cmp(&b)));
    let cutoff = order
        .iter()
        .enumerate()
        .rev()
        .find(|(rank, &i)| pvalues[i] <= (rank + 1) as f64 / m as f64 * alpha)
        .map(|(rank, _)| rank + 1)
        .unwrap_or(0);
    let mut flags = vec![false; m];
    for &i in &order[..cutoff] {
        flags[i] = true;
    }
    Ok(flags)
}

/// Bonferroni: reject where p <= alpha / m.
pub fn bonferroni_correct(pvalues: &[f64], alpha: f64) -> Result<Vec<bool>, StatsError> {
    check_pvalues(pvalues)?;
    let threshold = alpha / pvalues.len().max(1) as f64;
    Ok(pvalues.iter().map(|&p| p <= threshold).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Correction {
    Bh,
    Bonferroni,
}

impl Correction {
    pub fn apply(self, pvalues: &[f64], alpha: f64) -> Result<Vec<bool>, StatsError> {
        match self {
            Correction::Bh => bh_correct(pvalues, alpha),
            Correction::Bonferroni => bonferroni_correct(pvalues, alpha),
        }
    }
}

impl fmt::Display for Correction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Correction::Bh => "bh",
            Correction::Bonferroni => "bonferroni",
        })
    }
}

impl FromStr for Correction {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "bh" | "benjamini-hochberg" => Ok(Correction::Bh),
            "bonferroni" => Ok(Correction::Bonferroni),
            other => Err(format!("unknown correction '{other}'")),
        }
    }
}

/// Which tests share one correction family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrectionScope {
    /// One family per (model, comparison type).
    #[default]
    Group,
    /// A single family over every test.
    Global,
}

impl FromStr for CorrectionScope {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "group" => Ok(CorrectionScope::Group),
            "global" => Ok(CorrectionScope::Global),
            other => Err(format!("unknown correction scope '{other}'")),
        }
    }
}

/// The four original-vs-perturbed summary comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Comparison {
    #[serde(rename = "MW-FW")]
    MwFw,
    #[serde(rename = "MB-FB")]
    MbFb,
    #[serde(rename = "MW-MB")]
    MwMb,
    #[serde(rename = "FW-FB")]
    FwFb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComparisonKind {
    Gender,
    Race,
}

impl fmt::Display for ComparisonKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ComparisonKind::Gender => "gender",
            ComparisonKind::Race => "race",
        })
    }
}

impl Comparison {
    pub const ALL: [Comparison; 4] =
        [Comparison::MwFw, Comparison::MbFb, Comparison::MwMb, Comparison::FwFb];

    pub fn kind(self) -> ComparisonKind {
        match self {
            Comparison::MwFw | Comparison::MbFb => ComparisonKind::Gender,
            Comparison::MwMb | Comparison::FwFb => ComparisonKind::Race,
        }
    }

    /// (original, perturbed) groups.
    pub fn groups(self) -> (DemographicGroup, DemographicGroup) {
        use DemographicGroup as G;
        match self {
            Comparison::MwFw => (G::MW, G::FW),
            Comparison::MbFb => (G::MB, G::FB),
            Comparison::MwMb => (G::MW, G::MB),
            Comparison::FwFb => (G::FW, G::FB),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Comparison::MwFw => "MW-FW",
            Comparison::MbFb => "MB-FB",
            Comparison::MwMb => "MW-MB",
            Comparison::FwFb => "FW-FB",
        }
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Comparison {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Comparison::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown comparison '{s}'"))
    }
}

/// Experimental cell a paired sample belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestLabel {
    pub model: String,
    pub measure: String,
    pub comparison: Comparison,
    pub temperature: f64,
    pub length: u32,
    pub pov: Pov,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairedSample {
    pub label: TestLabel,
    pub differences: Vec<f64>,
}

impl PairedSample {
    pub fn test(&self) -> Result<LabeledTest, StatsError> {
        Ok(LabeledTest {
            label: self.label.clone(),
            n: self.differences.len(),
            result: paired_t_test(&self.differences)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledTest {
    pub label: TestLabel,
    pub n: usize,
    pub result: TestResult,
}

/// Share of rejected nulls within one (model, comparison type) group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationRate {
    pub model: String,
    pub comparison_kind: ComparisonKind,
    pub rejected: usize,
    pub total: usize,
    /// Percentage in [0, 100].
    pub rate: f64,
}

/// Corrected decision for one test, in the order tests were supplied.
#[derive(Debug, Clone, PartialEq)]
pub struct TestDecision {
    pub test: LabeledTest,
    pub rejected: bool,
}

/// Groups tests by (model, comparison type), corrects p-values within each
/// correction family, and reports the rejected percentage per group.
pub fn invariance_violation_rate(
    tests: &[LabeledTest],
    correction: Correction,
    alpha: f64,
    scope: CorrectionScope,
) -> Result<(Vec<ViolationRate>, Vec<TestDecision>), StatsError> {
    let mut groups: BTreeMap<(String, ComparisonKind), Vec<usize>> = BTreeMap::new();
    for (i, t) in tests.iter().enumerate() {
        groups
            .entry((t.label.model.clone(), t.label.comparison.kind()))
            .or_default()
            .push(i);
    }
    let mut rejected = vec![false; tests.len()];
    match scope {
        CorrectionScope::Group => {
            for ((model, kind), idx) in &groups {
                if idx.is_empty() {
                    return Err(StatsError::EmptyGroup(format!("{model}/{kind}")));
                }
                let ps: Vec<f64> = idx.iter().map(|&i| tests[i].result.p).collect();
                for (&i, flag) in idx.iter().zip(correction.apply(&ps, alpha)?) {
                    rejected[i] = flag;
                }
            }
        }
        CorrectionScope::Global => {
            let ps: Vec<f64> = tests.iter().map(|t| t.result.p).collect();
            rejected = correction.apply(&ps, alpha)?;
        }
    }
    let rates = groups
        .into_iter()
        .map(|((model, comparison_kind), idx)| {
            let total = idx.len();
            let r = idx.iter().filter(|&&i| rejected[i]).count();
            ViolationRate {
                model,
                comparison_kind,
                rejected: r,
                total,
                rate: 100.0 * r as f64 / total as f64,
            }
        })
        .collect();
    let decisions = tests
        .iter()
        .zip(rejected)
        .map(|(t, r)| TestDecision { test: t.clone(), rejected: r })
        .collect();
    Ok((rates, decisions))
}

#[cfg(test)]
mod tests;
