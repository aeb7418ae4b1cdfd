//! Stage operations, addressed by name from the pipeline config.

mod augment;
mod filters;
mod graph;
mod ground;
mod pairs;

use std::path::{Path, PathBuf};

use forge_core::hooks::SubprocessHook;
use forge_core::manifest::{read_jsonl, read_manifest, to_jsonl_bytes};
use forge_core::{Error, Result, TripletRecord};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::report::Tally;
use crate::store::ImageStore;

pub use augment::AugmentParams;
pub use filters::{AlignParams, ApplicabilityParams, BlurParams, FaceParams, ThresholdParams};
pub use graph::{BootstrapParams, MineParams};
pub use ground::{DedupParams, GroundParams};
pub use pairs::{context_id, AssessParams, PairParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Operation {
    GroundInstructions,
    DedupInstructions,
    ValidateTriplet,
    ValidateApplicability,
    MineWithRetries,
    InvertTriplets,
    CompositeTransitions,
    Bootstrap,
    FaceIouFilter,
    AlignPair,
    BlurEffect,
    Assess,
    AssessorThresholdFilter,
    Augment,
    StrictDominancePairs,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct NoParams {}

/// Params naming a file whose bytes feed the resume fingerprint.
pub const FILE_PARAMS: [&str; 5] = ["faces", "tags", "plan", "embeddings", "templates"];

impl Operation {
    pub const ALL: [Operation; 15] = [
        Operation::GroundInstructions,
        Operation::DedupInstructions,
        Operation::ValidateTriplet,
        Operation::ValidateApplicability,
        Operation::MineWithRetries,
        Operation::InvertTriplets,
        Operation::CompositeTransitions,
        Operation::Bootstrap,
        Operation::FaceIouFilter,
        Operation::AlignPair,
        Operation::BlurEffect,
        Operation::Assess,
        Operation::AssessorThresholdFilter,
        Operation::Augment,
        Operation::StrictDominancePairs,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Operation::GroundInstructions => "ground_instructions",
            Operation::DedupInstructions => "dedup_instructions",
            Operation::ValidateTriplet => "validate_triplet",
            Operation::ValidateApplicability => "validate_applicability",
            Operation::MineWithRetries => "mine_with_retries",
            Operation::InvertTriplets => "invert_triplets",
            Operation::CompositeTransitions => "composite_transitions",
            Operation::Bootstrap => "bootstrap",
            Operation::FaceIouFilter => "face_iou_filter",
            Operation::AlignPair => "align_pair",
            Operation::BlurEffect => "blur_effect",
            Operation::Assess => "assess",
            Operation::AssessorThresholdFilter => "assessor_threshold_filter",
            Operation::Augment => "augment",
            Operation::StrictDominancePairs => "strict_dominance_pairs",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|op| op.as_str() == name)
    }

    pub fn check_params(self, params: &Map<String, Value>) -> std::result::Result<(), String> {
        fn check<P: DeserializeOwned>(params: &Map<String, Value>) -> std::result::Result<(), String> {
            parse_params::<P>(params).map(|_| ()).map_err(|e| e.to_string())
        }
        match self {
            Operation::GroundInstructions => check::<GroundParams>(params),
            Operation::DedupInstructions => check::<DedupParams>(params),
            Operation::ValidateTriplet => check::<NoParams>(params),
            Operation::ValidateApplicability => check::<ApplicabilityParams>(params),
            Operation::MineWithRetries => check::<MineParams>(params),
            Operation::InvertTriplets | Operation::CompositeTransitions | Operation::Bootstrap => {
                check::<BootstrapParams>(params)
            }
            Operation::FaceIouFilter => check::<FaceParams>(params),
            Operation::AlignPair => check::<AlignParams>(params),
            Operation::BlurEffect => check::<BlurParams>(params),
            Operation::Assess => check::<AssessParams>(params),
            Operation::AssessorThresholdFilter => check::<ThresholdParams>(params),
            Operation::Augment => check::<AugmentParams>(params),
            Operation::StrictDominancePairs => check::<PairParams>(params),
        }
    }

    pub fn check_arity(self, n: usize) -> std::result::Result<(), String> {
        match self {
            Operation::GroundInstructions if n != 2 => {
                Err(format!("expects 2 inputs (triplets, user instructions), got {n}"))
            }
            _ if n == 0 => Err("expects at least one input".into()),
            _ => Ok(()),
        }
    }
}

pub(crate) fn parse_params<P: DeserializeOwned>(params: &Map<String, Value>) -> Result<P> {
    serde_json::from_value(Value::Object(params.clone())).map_err(|e| Error::InvalidArgument(format!("params: {e}")))
}

/// Everything a stage needs besides its params.
pub struct StageContext<'a> {
    /// Seed for this stage, derived from the global seed and stage name.
    pub seed: u64,
    pub store: &'a ImageStore,
    /// Directory relative param paths resolve against.
    pub base: &'a Path,
    pub pool: &'a rayon::ThreadPool,
}

impl StageContext<'_> {
    pub fn resolve(&self, path: &str) -> PathBuf {
        self.base.join(path)
    }

    /// Order-preserving parallel map on the stage's worker pool.
    pub fn par_map<T: Sync, R: Send>(&self, items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
        self.pool.install(|| items.par_iter().map(f).collect())
    }
}

/// A stage's result before it is written.
pub struct StageOutput {
    pub manifest: Vec<u8>,
    pub tally: Tally,
    /// Extra artifacts written next to the manifest, by file suffix.
    pub extras: Vec<(String, Vec<u8>)>,
}

impl StageOutput {
    fn triplets(records: &[TripletRecord], tally: Tally) -> Result<Self> {
        Ok(Self { manifest: to_jsonl_bytes(records)?, tally, extras: Vec::new() })
    }
}

pub(crate) fn read_triplets(paths: &[PathBuf]) -> Result<Vec<TripletRecord>> {
    let mut out = Vec::new();
    for p in paths {
        out.extend(read_manifest(p)?);
    }
    Ok(out)
}

pub(crate) fn read_values<T: DeserializeOwned>(paths: &[PathBuf]) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for p in paths {
        out.extend(read_jsonl::<T>(p)?.into_iter().map(|l| l.value));
    }
    Ok(out)
}

/// Text in, text out over a [`SubprocessHook`].
#[derive(Debug, Serialize)]
struct TextRequest<'a> {
    instruction: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    second: Option<&'a str>,
}

#[derive(Debug, Deserialize)]
struct TextReply {
    text: String,
}

pub fn run(op: Operation, params: &Map<String, Value>, inputs: &[PathBuf], ctx: &StageContext) -> Result<StageOutput> {
    match op {
        Operation::GroundInstructions => ground::ground(ctx, inputs, parse_params(params)?),
        Operation::DedupInstructions => ground::dedup(inputs, parse_params(params)?),
        Operation::ValidateTriplet => {
            parse_params::<NoParams>(params)?;
            filters::validate(inputs)
        }
        Operation::ValidateApplicability => filters::applicability(ctx, inputs, parse_params(params)?),
        Operation::MineWithRetries => graph::mine(ctx, inputs, parse_params(params)?),
        Operation::InvertTriplets => graph::bootstrap(inputs, parse_params(params)?, true, false),
        Operation::CompositeTransitions => graph::bootstrap(inputs, parse_params(params)?, false, true),
        Operation::Bootstrap => graph::bootstrap(inputs, parse_params(params)?, true, true),
        Operation::FaceIouFilter => filters::face(ctx, inputs, parse_params(params)?),
        Operation::AlignPair => filters::align(ctx, inputs, parse_params(params)?),
        Operation::BlurEffect => filters::blur(ctx, inputs, parse_params(params)?),
        Operation::Assess => pairs::assess(ctx, inputs, parse_params(params)?),
        Operation::AssessorThresholdFilter => filters::threshold(inputs, parse_params(params)?),
        Operation::Augment => augment::augment(ctx, inputs, parse_params(params)?),
        Operation::StrictDominancePairs => pairs::pairs(inputs, parse_params(params)?),
    }
}

pub(crate) fn hook_text(hook: &SubprocessHook, first: &str, second: Option<&str>) -> Result<String> {
    let reply: TextReply = hook.call(&TextRequest { instruction: first, second })?;
    Ok(reply.text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for op in Operation::ALL {
            assert_eq!(Operation::parse(op.as_str()), Some(op));
        }
        assert_eq!(Operation::parse("nope"), None);
    }

    #[test]
    fn every_operation_accepts_empty_params_except_required_files() {
        let empty = Map::new();
        let needs_file = [Operation::FaceIouFilter, Operation::ValidateApplicability, Operation::MineWithRetries];
        for op in Operation::ALL {
            assert_eq!(op.check_params(&empty).is_ok(), !needs_file.contains(&op), "{}", op.as_str());
        }
    }

    #[test]
    fn grounding_needs_two_inputs() {
        assert!(Operation::GroundInstructions.check_arity(1).is_err());
        assert!(Operation::GroundInstructions.check_arity(2).is_ok());
        assert!(Operation::Augment.check_arity(0).is_err());
        assert!(Operation::Augment.check_arity(3).is_ok());
    }
}
