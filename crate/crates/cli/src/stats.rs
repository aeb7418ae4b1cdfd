//! Manifest summaries.

use std::collections::BTreeMap;
use std::path::Path;

use forge_core::manifest::read_manifest_located;
use forge_core::{Result, TripletRecord};
use serde::Serialize;

/// Score histogram with half-point bins over `[0, 5]`; the last bin is
/// closed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    const BINS: usize = 10;

    fn new() -> Self {
        Self { edges: (0..=Self::BINS).map(|i| i as f64 * 0.5).collect(), counts: vec![0; Self::BINS] }
    }

    fn add(&mut self, v: f64) {
        let bin = ((v / 0.5).floor() as usize).min(Self::BINS - 1);
        self.counts[bin] += 1;
    }
}

/// A (source, instruction text, target) combination seen more than once.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Duplicate {
    pub source_ref: String,
    pub instruction: String,
    pub target_ref: String,
    /// 1-based manifest lines carrying it.
    pub lines: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub records: usize,
    pub by_provenance: BTreeMap<String, u64>,
    pub by_origin: BTreeMap<String, u64>,
    pub scored: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adherence: Option<Histogram>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aesthetic: Option<Histogram>,
    pub duplicates: Vec<Duplicate>,
}

fn kebab<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v).ok().and_then(|j| j.as_str().map(str::to_string)).unwrap_or_default()
}

pub fn summarize(records: &[(usize, TripletRecord)]) -> Summary {
    let mut by_provenance = BTreeMap::new();
    let mut by_origin = BTreeMap::new();
    let mut adherence = Histogram::new();
    let mut aesthetic = Histogram::new();
    let mut scored = 0;
    let mut seen: BTreeMap<(&str, &str, &str), Vec<usize>> = BTreeMap::new();
    for (line, r) in records {
        *by_provenance.entry(kebab(&r.provenance)).or_default() += 1;
        *by_origin.entry(kebab(&r.instruction.origin)).or_default() += 1;
        if let Some(s) = r.scores {
            scored += 1;
            adherence.add(s.instruction_adherence);
            aesthetic.add(s.aesthetic);
        }
        seen.entry((&r.source_ref, &r.instruction.text, &r.target_ref)).or_default().push(*line);
    }
    let mut duplicates: Vec<Duplicate> = seen
        .into_iter()
        .filter(|(_, lines)| lines.len() > 1)
        .map(|((s, i, t), lines)| Duplicate {
            source_ref: s.into(),
            instruction: i.into(),
            target_ref: t.into(),
            lines,
        })
        .collect();
    duplicates.sort_by_key(|d| d.lines[0]);
    Summary {
        records: records.len(),
        by_provenance,
        by_origin,
        scored,
        adherence: (scored > 0).then_some(adherence),
        aesthetic: (scored > 0).then_some(aesthetic),
        duplicates,
    }
}

pub fn stats(path: &Path) -> Result<Summary> {
    let located = read_manifest_located(path)?;
    let records: Vec<(usize, TripletRecord)> = located.into_iter().map(|l| (l.line, l.value)).collect();
    Ok(summarize(&records))
}
