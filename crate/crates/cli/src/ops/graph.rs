//! Triplet bootstrapping and generate-and-validate mining.

use std::path::PathBuf;

use forge_core::hooks::{SubprocessHook, Validator};
use forge_core::manifest::to_jsonl_bytes;
use forge_core::triplet_graph::{
    composite_transitions, group_edit_sets, invert_triplets, mine_with_retries, AttemptLog, Bootstrapped,
    Composer, Inverter, MiningPair, TemplateComposer, TemplateInverter, DEFAULT_MAX_ATTEMPTS,
};
use forge_core::{Provenance, Result};
use serde::{Deserialize, Serialize};

use super::{hook_text, read_triplets, read_values, StageContext, StageOutput};
use crate::report::{metrics, Metrics, Tally};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootstrapParams {
    /// Called with `{instruction}`, replies `{text}`.
    #[serde(default)]
    pub inverter: Option<SubprocessHook>,
    /// Called with `{instruction, second}`, replies `{text}`.
    #[serde(default)]
    pub composer: Option<SubprocessHook>,
}

struct HookInverter(SubprocessHook);

impl Inverter for HookInverter {
    fn invert(&self, instruction: &str) -> Result<String> {
        hook_text(&self.0, instruction, None)
    }
}

struct HookComposer(SubprocessHook);

impl Composer for HookComposer {
    fn compose(&self, first: &str, second: &str) -> Result<String> {
        hook_text(&self.0, first, Some(second))
    }
}

/// Edit sets are formed from mined and external records sharing a source
/// image. Inputs pass through; generated records follow, set by set.
pub(super) fn bootstrap(inputs: &[PathBuf], p: BootstrapParams, invert: bool, composite: bool) -> Result<StageOutput> {
    let records = read_triplets(inputs)?;
    let base: Vec<_> = records
        .iter()
        .filter(|r| matches!(r.provenance, Provenance::Mined | Provenance::External))
        .cloned()
        .collect();
    let (sets, _) = group_edit_sets(&base);
    let inverter: Box<dyn Inverter> = match p.inverter {
        Some(h) => Box::new(HookInverter(h)),
        None => Box::new(TemplateInverter),
    };
    let composer: Box<dyn Composer> = match p.composer {
        Some(h) => Box::new(HookComposer(h)),
        None => Box::new(TemplateComposer),
    };

    let mut tally = Tally::default();
    for r in &records {
        tally.keep(&r.id, "passed-through", Metrics::new());
    }
    let mut out = records;
    let mut failures = Vec::new();
    for set in &sets {
        let mut parts: Vec<Bootstrapped> = Vec::new();
        if invert {
            parts.push(invert_triplets(set, inverter.as_ref()));
        }
        if composite {
            parts.push(composite_transitions(set, composer.as_ref()));
        }
        for b in parts {
            tally.emitted += b.records.len() as u64;
            out.extend(b.records);
            failures.extend(b.skipped);
        }
    }
    let mut output = StageOutput::triplets(&out, tally)?;
    if !failures.is_empty() {
        #[derive(Serialize)]
        struct Failure<'a> {
            id: &'a str,
            error: &'a str,
        }
        let lines: Vec<Failure> = failures.iter().map(|(id, error)| Failure { id, error }).collect();
        output.extras.push(("failures.jsonl".into(), to_jsonl_bytes(&lines)?));
    }
    Ok(output)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MineParams {
    pub generator: SubprocessHook,
    pub validators: Vec<SubprocessHook>,
    #[serde(default = "max_attempts")]
    pub max_attempts: u32,
}

fn max_attempts() -> u32 {
    DEFAULT_MAX_ATTEMPTS
}

#[derive(Serialize)]
struct AttemptLine<'a> {
    pair_id: &'a str,
    attempts: &'a [AttemptLog],
}

pub(super) fn mine(ctx: &StageContext, inputs: &[PathBuf], p: MineParams) -> Result<StageOutput> {
    let pairs: Vec<MiningPair> = read_values(inputs)?;
    let validators: Vec<&dyn Validator> = p.validators.iter().map(|v| v as &dyn Validator).collect();
    let work = |pair: &MiningPair| mine_with_retries(pair, &p.generator, &validators, p.max_attempts, ctx.seed);
    let outcomes = if p.generator.single_flight {
        pairs.iter().map(work).collect()
    } else {
        ctx.par_map(&pairs, work)
    };
    let mut tally = Tally::default();
    let mut mined = Vec::new();
    let mut logs = Vec::new();
    for (pair, outcome) in pairs.iter().zip(outcomes) {
        match outcome {
            Ok(o) => {
                let m = metrics([("attempts", o.log.len() as f64)]);
                match o.triplet {
                    Some(t) => {
                        tally.keep(&pair.id, "mined", m);
                        mined.push(t);
                    }
                    None => tally.remove(&pair.id, "attempts-exhausted", m),
                }
                logs.push((pair.id.clone(), o.log));
            }
            Err(e) => tally.error(&pair.id, &e.to_string()),
        }
    }
    let lines: Vec<AttemptLine> = logs.iter().map(|(id, log)| AttemptLine { pair_id: id, attempts: log }).collect();
    let mut output = StageOutput::triplets(&mined, tally)?;
    output.extras.push(("attempts.jsonl".into(), to_jsonl_bytes(&lines)?));
    Ok(output)
}
