//! Per-stage counts and per-record verdicts.

use std::collections::BTreeMap;

use forge_core::filters::{FilterReportLine, FilterVerdict};
use serde::{Deserialize, Serialize};

/// Counts for one stage. Every input record is exactly one of kept,
/// removed or errored. Generating stages also report how many new records
/// they `emitted`; an errored input of a generating stage is still passed
/// through unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: String,
    pub operation: String,
    #[serde(rename = "in")]
    pub input: u64,
    pub kept: u64,
    pub removed: u64,
    pub errored: u64,
    pub emitted: u64,
    pub removal_histogram: BTreeMap<String, u64>,
    pub wall_ms: f64,
    #[serde(default)]
    pub resumed: bool,
}

impl StageReport {
    pub fn is_balanced(&self) -> bool {
        self.input == self.kept + self.removed + self.errored
    }
}

/// Accumulates verdicts in record order.
#[derive(Debug, Clone, Default)]
pub struct Tally {
    pub lines: Vec<FilterReportLine>,
    pub kept: u64,
    pub removed: u64,
    pub errored: u64,
    pub emitted: u64,
    pub histogram: BTreeMap<String, u64>,
}

pub type Metrics = BTreeMap<String, f64>;

impl Tally {
    pub fn keep(&mut self, id: &str, reason: &str, metrics: Metrics) {
        self.kept += 1;
        self.lines.push(FilterReportLine {
            triplet_id: id.to_string(),
            verdict: FilterVerdict::Keep,
            reason: reason.to_string(),
            metrics,
        });
    }

    pub fn remove(&mut self, id: &str, reason: &str, metrics: Metrics) {
        self.removed += 1;
        *self.histogram.entry(reason.to_string()).or_default() += 1;
        self.lines.push(FilterReportLine {
            triplet_id: id.to_string(),
            verdict: FilterVerdict::Discard,
            reason: reason.to_string(),
            metrics,
        });
    }

    pub fn error(&mut self, id: &str, message: &str) {
        self.errored += 1;
        self.lines.push(FilterReportLine {
            triplet_id: id.to_string(),
            verdict: FilterVerdict::Discard,
            reason: format!("error: {message}"),
            metrics: Metrics::new(),
        });
    }

    pub fn input(&self) -> u64 {
        self.kept + self.removed + self.errored
    }
}

pub fn metrics<const N: usize>(pairs: [(&str, f64); N]) -> Metrics {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}
