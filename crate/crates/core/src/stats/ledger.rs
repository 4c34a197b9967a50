//! Test-ledger file: one CSV row per t-test with its label, statistic, raw
//! p-value, and corrected decision. Violation-rate bars can be recomputed
//! from this file alone.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{
    Comparison, ComparisonKind, Correction, CorrectionScope, LabeledTest, StatsError,
    TestDecision, TestLabel, TestResult,
};
use crate::textmetrics::Pov;

pub const TEST_LEDGER_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestLedgerRow {
    pub schema_version: u32,
    pub model: String,
    pub measure: String,
    pub comparison: Comparison,
    pub comparison_type: ComparisonKind,
    pub temperature: f64,
    pub length: u32,
    pub pov: Pov,
    pub n: usize,
    pub t: f64,
    pub df: usize,
    pub p: f64,
    pub degenerate: bool,
    pub correction: Correction,
    pub scope: CorrectionScope,
    pub alpha: f64,
    pub rejected: bool,
}

impl TestLedgerRow {
    pub fn from_decision(
        d: &TestDecision,
        correction: Correction,
        scope: CorrectionScope,
        alpha: f64,
    ) -> Self {
        let l = &d.test.label;
        TestLedgerRow {
            schema_version: TEST_LEDGER_SCHEMA_VERSION,
            model: l.model.clone(),
            measure: l.measure.clone(),
            comparison: l.comparison,
            comparison_type: l.comparison.kind(),
            temperature: l.temperature,
            length: l.length,
            pov: l.pov,
            n: d.test.n,
            t: d.test.result.statistic,
            df: d.test.result.df,
            p: d.test.result.p,
            degenerate: d.test.result.degenerate,
            correction,
            scope,
            alpha,
            rejected: d.rejected,
        }
    }

    pub fn to_test(&self) -> LabeledTest {
        LabeledTest {
            label: TestLabel {
                model: self.model.clone(),
                measure: self.measure.clone(),
                comparison: self.comparison,
                temperature: self.temperature,
                length: self.length,
                pov: self.pov,
            },
            n: self.n,
            result: TestResult {
                statistic: self.t,
                df: self.df,
                p: self.p,
                degenerate: self.degenerate,
            },
        }
    }
}

pub fn write_test_ledger<W: Write>(w: W, rows: &[TestLedgerRow]) -> Result<(), StatsError> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r).map_err(|e| StatsError::Io(e.to_string()))?;
    }
    out.flush().map_err(|e| StatsError::Io(e.to_string()))
}

pub fn read_test_ledger<R: Read>(r: R) -> Result<Vec<TestLedgerRow>, StatsError> {
    csv::Reader::from_reader(r)
        .deserialize()
        .map(|row| row.map_err(|e| StatsError::Io(e.to_string())))
        .collect()
}
