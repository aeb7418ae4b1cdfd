//! Grounding synthetic instructions in user phrasing, and corpus dedup.

use std::collections::BTreeMap;
use std::path::PathBuf;

use forge_core::grounding::{
    dedup_instructions, draw_candidates, resolve_candidates, Embedder, GroundingConfig, SidecarEmbedder,
    TrigramEmbedder, VectorIndex, DEFAULT_CAP, DEFAULT_DIM, DEFAULT_TAU_SIM, DEFAULT_TOPK,
};
use forge_core::manifest::to_jsonl_bytes;
use forge_core::{Error, InstructionOrigin, InstructionRecord, Result};
use serde::Deserialize;

use super::{read_triplets, read_values, StageContext, StageOutput};
use crate::report::{metrics, Metrics, Tally};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundParams {
    #[serde(default = "topk")]
    pub topk: usize,
    #[serde(default = "tau_sim")]
    pub tau_sim: f64,
    #[serde(default = "cap")]
    pub cap: usize,
    /// JSONL `{id, vector}` sidecar; ids it lacks fall back to trigrams.
    #[serde(default)]
    pub embeddings: Option<String>,
    #[serde(default = "dim")]
    pub dim: usize,
}

fn topk() -> usize {
    DEFAULT_TOPK
}
fn tau_sim() -> f64 {
    DEFAULT_TAU_SIM
}
fn cap() -> usize {
    DEFAULT_CAP
}
fn dim() -> usize {
    DEFAULT_DIM
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DedupParams {
    #[serde(default = "tau_dup")]
    pub tau_dup: f64,
    #[serde(default = "dim")]
    pub dim: usize,
}

fn tau_dup() -> f64 {
    0.95
}

fn embedder(ctx: &StageContext, p: &GroundParams) -> Result<Box<dyn Embedder<f64>>> {
    let trigram = TrigramEmbedder { dim: p.dim };
    Ok(match &p.embeddings {
        Some(path) => Box::new(SidecarEmbedder::<f64, _>::load(ctx.resolve(path), Some(trigram))?),
        None => Box::new(trigram),
    })
}

/// Each distinct synthetic instruction (by id) is grounded once; every
/// triplet carrying it gets the chosen user phrasing. Triplets whose
/// instruction is already real-user text pass through.
pub(super) fn ground(ctx: &StageContext, inputs: &[PathBuf], p: GroundParams) -> Result<StageOutput> {
    let triplets = read_triplets(&inputs[..1])?;
    let users: Vec<InstructionRecord> = read_values(&inputs[1..])?;
    let embedder = embedder(ctx, &p)?;
    let entries = users
        .iter()
        .map(|u| Ok((u.id.clone(), embedder.embed(&u.id, &u.text)?)))
        .collect::<Result<Vec<_>>>()?;
    let index = VectorIndex::build(entries)?;
    let users_by_id: BTreeMap<&str, &InstructionRecord> = users.iter().map(|u| (u.id.as_str(), u)).collect();

    let mut distinct: Vec<&InstructionRecord> = Vec::new();
    let mut seen: BTreeMap<&str, &str> = BTreeMap::new();
    for t in &triplets {
        if t.instruction.origin == InstructionOrigin::RealUser {
            continue;
        }
        match seen.insert(&t.instruction.id, &t.instruction.text) {
            None => distinct.push(&t.instruction),
            Some(prev) if prev != t.instruction.text => {
                return Err(Error::InvalidArgument(format!(
                    "instruction id {} has two texts: {prev:?} and {:?}",
                    t.instruction.id, t.instruction.text
                )))
            }
            Some(_) => {}
        }
    }

    let config = GroundingConfig { topk: p.topk, tau_sim: p.tau_sim, cap: p.cap, seed: ctx.seed };
    let candidates = ctx
        .par_map(&distinct, |r| draw_candidates(r, &index, embedder.as_ref(), &config))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let outcome = resolve_candidates(&candidates, &config)?;
    let grounded: BTreeMap<&str, _> = outcome.grounded.iter().map(|g| (g.artificial_id.as_str(), g)).collect();
    let dropped: BTreeMap<&str, _> = outcome.dropped.iter().map(|(id, r)| (id.as_str(), r)).collect();

    let mut tally = Tally::default();
    let mut kept = Vec::new();
    for mut t in triplets {
        if t.instruction.origin == InstructionOrigin::RealUser {
            tally.keep(&t.id, "already-grounded", Metrics::new());
            kept.push(t);
            continue;
        }
        if let Some(g) = grounded.get(t.instruction.id.as_str()) {
            let user = users_by_id[g.chosen_user_id.as_str()];
            let m = metrics([("similarity", g.similarity), ("probability", g.sampled_probability)]);
            t.instruction = InstructionRecord {
                id: user.id.clone(),
                text: user.text.clone(),
                origin: InstructionOrigin::RealUser,
                usage_count: outcome.usage[&user.id],
            };
            tally.keep(&t.id, "grounded", m);
            kept.push(t);
        } else {
            let reason = dropped[t.instruction.id.as_str()];
            tally.remove(&t.id, reason.as_str(), Metrics::new());
        }
    }
    StageOutput::triplets(&kept, tally)
}

pub(super) fn dedup(inputs: &[PathBuf], p: DedupParams) -> Result<StageOutput> {
    let corpus: Vec<InstructionRecord> = read_values(inputs)?;
    let kept = dedup_instructions::<f64>(&corpus, p.tau_dup, &TrigramEmbedder { dim: p.dim })?;
    let mut tally = Tally::default();
    let mut k = kept.iter().peekable();
    for rec in &corpus {
        // dedup keeps records in input order, so a merge walk suffices
        if k.peek().is_some_and(|kr| *kr == rec) {
            k.next();
            tally.keep(&rec.id, "unique", Metrics::new());
        } else {
            tally.remove(&rec.id, "duplicate", Metrics::new());
        }
    }
    Ok(StageOutput { manifest: to_jsonl_bytes(&kept)?, tally, extras: Vec::new() })
}
