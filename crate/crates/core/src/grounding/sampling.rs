use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::record::InstructionRecord;
use crate::scalar::Scalar;
use crate::seed::{derive_seed, rng_from_seed};

use super::{retrieve_topk, Embedder, VectorIndex};

pub const DEFAULT_TOPK: usize = 20;
pub const DEFAULT_TAU_SIM: f64 = 0.70;
pub const DEFAULT_CAP: usize = 3;

/// Softmax with max-subtraction.
pub fn softmax<T: Scalar>(scores: &[T]) -> Vec<T> {
    let Some(max) = scores.iter().copied().reduce(T::max) else {
        return Vec::new();
    };
    let exps: Vec<T> = scores.iter().map(|s| (*s - max).exp()).collect();
    let total: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Draw one id with probability `exp(s_i) / Σ exp(s_j)` by inverse CDF.
/// Returns the id and its probability.
pub fn softmax_sample<T: Scalar>(scored: &[(String, T)], seed: u64) -> Result<(String, T)> {
    if scored.is_empty() {
        return Err(Error::invalid("softmax_sample needs at least one candidate"));
    }
    if scored.iter().any(|(_, s)| !s.is_finite()) {
        return Err(Error::invalid("softmax_sample scores must be finite"));
    }
    let scores: Vec<T> = scored.iter().map(|(_, s)| *s).collect();
    let probs = softmax(&scores);
    let u = T::lit(rng_from_seed(seed).random::<f64>());
    let mut acc = T::zero();
    for (i, p) in probs.iter().enumerate() {
        acc += *p;
        if u < acc {
            return Ok((scored[i].0.clone(), *p));
        }
    }
    // u landed in the rounding gap above the last cumulative value
    let last = scored.len() - 1;
    Ok((scored[last].0.clone(), probs[last]))
}

/// A synthetic instruction matched to a real user phrasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundingResult {
    pub artificial_id: String,
    pub chosen_user_id: String,
    pub similarity: f64,
    pub sampled_probability: f64,
}

/// Keep results with `similarity >= tau_sim`, in order.
pub fn apply_similarity_threshold(results: &[GroundingResult], tau_sim: f64) -> Vec<GroundingResult> {
    results
        .iter()
        .filter(|r| r.similarity >= tau_sim)
        .cloned()
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectReason {
    Cap,
    BelowThreshold,
}

impl RejectReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            RejectReason::Cap => "cap",
            RejectReason::BelowThreshold => "below-threshold",
        }
    }
}

/// First-come-first-kept: at most `cap` results per user instruction.
pub fn enforce_frequency_cap(
    selections: &[GroundingResult],
    cap: usize,
) -> Result<(Vec<GroundingResult>, Vec<(GroundingResult, RejectReason)>)> {
    if cap == 0 {
        return Err(Error::invalid("cap must be at least 1"));
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    let mut kept = Vec::new();
    let mut rejected = Vec::new();
    for s in selections {
        let c = counts.entry(s.chosen_user_id.as_str()).or_default();
        if *c < cap {
            *c += 1;
            kept.push(s.clone());
        } else {
            rejected.push((s.clone(), RejectReason::Cap));
        }
    }
    Ok((kept, rejected))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundingConfig {
    pub topk: usize,
    pub tau_sim: f64,
    pub cap: usize,
    pub seed: u64,
}

impl Default for GroundingConfig {
    fn default() -> Self {
        Self {
            topk: DEFAULT_TOPK,
            tau_sim: DEFAULT_TAU_SIM,
            cap: DEFAULT_CAP,
            seed: 0,
        }
    }
}

/// Retrieval and sampling for one synthetic instruction, before the
/// corpus-level cap is applied.
#[derive(Debug, Clone)]
pub struct Candidates {
    pub artificial_id: String,
    pub ranked: Vec<(String, f64)>,
    pub probabilities: Vec<f64>,
    pub drawn: usize,
}

#[derive(Debug, Clone, Default)]
pub struct GroundingOutcome {
    pub grounded: Vec<GroundingResult>,
    pub dropped: Vec<(String, RejectReason)>,
    /// Final use count per user instruction id.
    pub usage: BTreeMap<String, u64>,
}

/// Per-record half of grounding: embed, retrieve top-K, draw one candidate.
/// Pure in `(instruction, index, config.seed)`, so it may run in parallel.
pub fn draw_candidates<T: Scalar>(
    instruction: &InstructionRecord,
    index: &VectorIndex<T>,
    embedder: &dyn Embedder<T>,
    config: &GroundingConfig,
) -> Result<Candidates> {
    let query = embedder.embed(&instruction.id, &instruction.text)?;
    let ranked: Vec<(String, f64)> = retrieve_topk(index, &query, config.topk)?
        .into_iter()
        .map(|(id, s)| (id, s.to_f64_lossy()))
        .collect();
    let seed = derive_seed(&[config.seed.into(), "ground".into(), instruction.id.as_str().into()]);
    let (chosen, _) = softmax_sample(&ranked, seed)?;
    let drawn = ranked.iter().position(|(id, _)| *id == chosen).expect("drawn id in list");
    let probabilities = softmax(&ranked.iter().map(|(_, s)| *s).collect::<Vec<_>>());
    Ok(Candidates {
        artificial_id: instruction.id.clone(),
        ranked,
        probabilities,
        drawn,
    })
}

/// Sequential half: threshold the drawn match, then apply the frequency cap
/// in input order. A capped draw gets one re-draw: the best-ranked remaining
/// candidate that clears the threshold and is under the cap.
pub fn resolve_candidates(candidates: &[Candidates], config: &GroundingConfig) -> Result<GroundingOutcome> {
    if config.cap == 0 {
        return Err(Error::invalid("cap must be at least 1"));
    }
    let mut out = GroundingOutcome::default();
    for c in candidates {
        let (id, sim) = &c.ranked[c.drawn];
        if *sim < config.tau_sim {
            out.dropped.push((c.artificial_id.clone(), RejectReason::BelowThreshold));
            continue;
        }
        let under_cap = |id: &str, usage: &BTreeMap<String, u64>| {
            usage.get(id).copied().unwrap_or(0) < config.cap as u64
        };
        let pick = if under_cap(id, &out.usage) {
            Some(c.drawn)
        } else {
            c.ranked
                .iter()
                .enumerate()
                .find(|(i, (uid, s))| *i != c.drawn && *s >= config.tau_sim && under_cap(uid, &out.usage))
                .map(|(i, _)| i)
        };
        match pick {
            Some(i) => {
                let (uid, sim) = &c.ranked[i];
                *out.usage.entry(uid.clone()).or_default() += 1;
                out.grounded.push(GroundingResult {
                    artificial_id: c.artificial_id.clone(),
                    chosen_user_id: uid.clone(),
                    similarity: *sim,
                    sampled_probability: c.probabilities[i],
                });
            }
            None => out.dropped.push((c.artificial_id.clone(), RejectReason::Cap)),
        }
    }
    Ok(out)
}

/// Ground every synthetic instruction against the user-instruction index.
pub fn ground_instructions<T: Scalar>(
    artificial: &[InstructionRecord],
    index: &VectorIndex<T>,
    embedder: &dyn Embedder<T>,
    config: &GroundingConfig,
) -> Result<GroundingOutcome> {
    let candidates = artificial
        .iter()
        .map(|r| draw_candidates(r, index, embedder, config))
        .collect::<Result<Vec<_>>>()?;
    resolve_candidates(&candidates, config)
}
