//! Assessor scoring and strict-dominance preference pairs.

use std::collections::BTreeSet;
use std::path::PathBuf;

use forge_core::hooks::{Assessor, HashAssessor, SubprocessHook};
use forge_core::manifest::to_jsonl_bytes;
use forge_core::preference::{strict_dominance_pairs, CandidateSource, ScoredCandidate};
use forge_core::seed::sha256_hex;
use forge_core::{Result, TripletRecord};
use serde::Deserialize;

use super::{read_triplets, StageContext, StageOutput};
use crate::report::{metrics, Metrics, Tally};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssessParams {
    /// External assessor; a seeded hash assessor is used when absent.
    #[serde(default)]
    pub hook: Option<SubprocessHook>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairParams {
    #[serde(default)]
    pub min_gap: f64,
}

/// Records that already carry scores keep them. Assessor failures drop the
/// record.
pub(super) fn assess(ctx: &StageContext, inputs: &[PathBuf], p: AssessParams) -> Result<StageOutput> {
    let records = read_triplets(inputs)?;
    let hash = HashAssessor { seed: ctx.seed };
    let (assessor, serial): (&dyn Assessor, bool) = match &p.hook {
        Some(h) => (h, h.single_flight),
        None => (&hash, false),
    };
    let score = |r: &TripletRecord| match r.scores {
        Some(s) => Ok(s),
        None => assessor.assess(r),
    };
    let scores = if serial { records.iter().map(score).collect() } else { ctx.par_map(&records, score) };
    let mut tally = Tally::default();
    let mut out = Vec::new();
    for (r, s) in records.into_iter().zip(scores) {
        match s {
            Ok(s) => {
                tally.keep(&r.id, "scored", metrics([("adherence", s.instruction_adherence), ("aesthetic", s.aesthetic)]));
                out.push(r.with_scores(s));
            }
            Err(e) => tally.error(&r.id, &e.to_string()),
        }
    }
    StageOutput::triplets(&out, tally)
}

/// Candidates compete when they share a source image and instruction text.
pub fn context_id(r: &TripletRecord) -> String {
    let key = format!("{}\n{}", r.source_ref, r.instruction.text);
    sha256_hex(key.as_bytes())[..16].to_string()
}

pub(super) fn pairs(inputs: &[PathBuf], p: PairParams) -> Result<StageOutput> {
    let records = read_triplets(inputs)?;
    let candidates: Vec<ScoredCandidate> = records
        .iter()
        .filter_map(|r| {
            r.scores.map(|scores| ScoredCandidate {
                triplet_id: r.id.clone(),
                context_id: context_id(r),
                scores,
                source: CandidateSource::OnPolicy,
            })
        })
        .collect();
    let pairs = strict_dominance_pairs(&candidates, p.min_gap)?;
    let paired: BTreeSet<&str> =
        pairs.iter().flat_map(|pp| [pp.winner_id.as_str(), pp.loser_id.as_str()]).collect();
    let mut tally = Tally::default();
    for r in &records {
        if r.scores.is_none() {
            tally.remove(&r.id, "unscored", Metrics::new());
        } else if paired.contains(r.id.as_str()) {
            tally.keep(&r.id, "paired", Metrics::new());
        } else {
            tally.remove(&r.id, "no-strict-dominance", Metrics::new());
        }
    }
    tally.emitted = pairs.len() as u64;
    Ok(StageOutput { manifest: to_jsonl_bytes(&pairs)?, tally, extras: Vec::new() })
}
