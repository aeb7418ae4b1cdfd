//! Per-record gates: invariants, applicability, faces, alignment, blur and
//! assessor scores.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use forge_core::filters::{
    align_pair, assessor_threshold_filter, blur_effect, face_iou_filter, grid_correspondences, is_near_identity,
    ransac_homography, read_face_sidecar, FilterVerdict, MatchConfig, RansacConfig, DEFAULT_ASSESSOR_THRESHOLD,
    DEFAULT_FACE_IOU_THRESHOLD, DEFAULT_INLIER_TOL, DEFAULT_RANSAC_ITERS,
};
use forge_core::grounding::{
    validate_applicability, ApplicabilityOutcome, ApplicabilityValidator, HookVerdict, ImageDescriptor,
    KeywordValidator,
};
use forge_core::hooks::SubprocessHook;
use forge_core::seed::derive_seed;
use forge_core::validate::validate_triplets;
use forge_core::{Error, Provenance, Result, TripletRecord};
use serde::{Deserialize, Serialize};

use super::{read_triplets, StageContext, StageOutput};
use crate::report::{metrics, Metrics, Tally};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaceParams {
    /// JSON `{image_ref: [boxes]}`.
    pub faces: String,
    #[serde(default = "face_threshold")]
    pub threshold: f64,
}

fn face_threshold() -> f64 {
    DEFAULT_FACE_IOU_THRESHOLD
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdParams {
    #[serde(default = "assessor_threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub aesthetic_floor: Option<f64>,
}

fn assessor_threshold() -> f64 {
    DEFAULT_ASSESSOR_THRESHOLD
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlignParams {
    #[serde(default = "ransac_iters")]
    pub ransac_iters: usize,
    #[serde(default = "inlier_tol")]
    pub inlier_tol: f64,
    /// Corner displacement at or below which a pair counts as aligned.
    #[serde(default = "identity_tol")]
    pub identity_tol: f64,
    /// Largest corner displacement still corrected; beyond it the pair is
    /// discarded as misaligned.
    #[serde(default = "max_correction")]
    pub max_correction: f64,
    #[serde(default = "grid")]
    pub grid: usize,
    #[serde(default = "patch_radius")]
    pub patch_radius: usize,
    #[serde(default = "search_radius")]
    pub search_radius: usize,
    #[serde(default = "min_ncc")]
    pub min_ncc: f64,
}

fn ransac_iters() -> usize {
    DEFAULT_RANSAC_ITERS
}
fn inlier_tol() -> f64 {
    DEFAULT_INLIER_TOL
}
fn identity_tol() -> f64 {
    1.0
}
fn max_correction() -> f64 {
    32.0
}
fn grid() -> usize {
    MatchConfig::default().grid
}
fn patch_radius() -> usize {
    MatchConfig::default().patch_radius
}
fn search_radius() -> usize {
    MatchConfig::default().search_radius
}
fn min_ncc() -> f64 {
    MatchConfig::default().min_ncc
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlurParams {
    /// Targets scoring above this are discarded.
    #[serde(default = "max_blur")]
    pub max_blur: f64,
}

fn max_blur() -> f64 {
    0.6
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApplicabilityParams {
    /// JSON `{image_ref: [tags]}` describing source images.
    pub tags: String,
    /// External validator; the keyword check is used when absent.
    #[serde(default)]
    pub hook: Option<SubprocessHook>,
}

pub(super) fn validate(inputs: &[PathBuf]) -> Result<StageOutput> {
    let records = read_triplets(inputs)?;
    let mut first: BTreeMap<usize, String> = BTreeMap::new();
    for (i, v) in validate_triplets(&records) {
        let kind = serde_json::to_value(&v)
            .ok()
            .and_then(|j| j["kind"].as_str().map(str::to_string))
            .unwrap_or_else(|| "invalid".into());
        first.entry(i).or_insert(kind);
    }
    let mut tally = Tally::default();
    let mut kept = Vec::new();
    for (i, r) in records.into_iter().enumerate() {
        match first.get(&i) {
            Some(kind) => tally.remove(&r.id, kind, Metrics::new()),
            None => {
                tally.keep(&r.id, "valid", Metrics::new());
                kept.push(r);
            }
        }
    }
    StageOutput::triplets(&kept, tally)
}

#[derive(Serialize)]
struct ApplicabilityRequest<'a> {
    instruction: &'a str,
    descriptor: &'a ImageDescriptor,
}

struct HookApplicability(SubprocessHook);

impl ApplicabilityValidator for HookApplicability {
    fn check(&self, instruction: &str, descriptor: &ImageDescriptor) -> Result<HookVerdict> {
        self.0.call(&ApplicabilityRequest { instruction, descriptor })
    }
}

pub(super) fn applicability(ctx: &StageContext, inputs: &[PathBuf], p: ApplicabilityParams) -> Result<StageOutput> {
    let records = read_triplets(inputs)?;
    let path = ctx.resolve(&p.tags);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::Io { path: path.clone(), source: e })?;
    let tags: BTreeMap<String, Vec<String>> =
        serde_json::from_str(&text).map_err(|e| Error::Json { line: e.line(), message: e.to_string() })?;
    let validator: Box<dyn ApplicabilityValidator> = match p.hook {
        Some(h) => Box::new(HookApplicability(h)),
        None => Box::new(KeywordValidator),
    };
    let outcomes = ctx.par_map(&records, |r| {
        let descriptor =
            ImageDescriptor { image_ref: r.source_ref.clone(), tags: tags.get(&r.source_ref).cloned().unwrap_or_default() };
        validate_applicability(&r.instruction.text, &descriptor, validator.as_ref())
    });
    let mut tally = Tally::default();
    let mut kept = Vec::new();
    for (mut r, outcome) in records.into_iter().zip(outcomes) {
        match outcome {
            Ok(ApplicabilityOutcome::Applicable) => {
                tally.keep(&r.id, "applicable", Metrics::new());
                kept.push(r);
            }
            Ok(ApplicabilityOutcome::MinimallyEdited { text }) => {
                r.instruction.text = text;
                tally.keep(&r.id, "minimally-edited", Metrics::new());
                kept.push(r);
            }
            Ok(ApplicabilityOutcome::Discarded { .. }) => tally.remove(&r.id, "not-applicable", Metrics::new()),
            Err(e) => tally.error(&r.id, &e.to_string()),
        }
    }
    StageOutput::triplets(&kept, tally)
}

pub(super) fn face(ctx: &StageContext, inputs: &[PathBuf], p: FaceParams) -> Result<StageOutput> {
    let records = read_triplets(inputs)?;
    let sidecar = read_face_sidecar(&ctx.resolve(&p.faces))?;
    let mut tally = Tally::default();
    let mut kept = Vec::new();
    for r in records {
        let src = sidecar.get(&r.source_ref).map(Vec::as_slice).unwrap_or(&[]);
        let tgt = sidecar.get(&r.target_ref).map(Vec::as_slice).unwrap_or(&[]);
        let gate = face_iou_filter(src, tgt, p.threshold);
        let m = gate.iou.map(|v| metrics([("iou", v)])).unwrap_or_default();
        match gate.verdict {
            FilterVerdict::Keep => {
                tally.keep(&r.id, &gate.detail, m);
                kept.push(r);
            }
            FilterVerdict::Discard => tally.remove(&r.id, &gate.detail, m),
        }
    }
    StageOutput::triplets(&kept, tally)
}

enum AlignVerdict {
    Keep(TripletRecord, &'static str, Metrics),
    Remove(&'static str, Metrics),
}

fn align_one(ctx: &StageContext, p: &AlignParams, r: &TripletRecord) -> Result<AlignVerdict> {
    if r.provenance == Provenance::Identity {
        return Ok(AlignVerdict::Keep(r.clone(), "identity", Metrics::new()));
    }
    let source = ctx.store.load(&r.source_ref)?;
    let target = ctx.store.load(&r.target_ref)?;
    if source.dims() != target.dims() {
        return Ok(AlignVerdict::Remove("dims-mismatch", Metrics::new()));
    }
    let cfg = MatchConfig {
        grid: p.grid,
        patch_radius: p.patch_radius,
        search_radius: p.search_radius,
        min_ncc: p.min_ncc,
    };
    let matches = grid_correspondences(&source, &target, &cfg)?;
    let ransac = RansacConfig {
        iterations: p.ransac_iters,
        inlier_tol: p.inlier_tol,
        seed: derive_seed(&[ctx.seed.into(), r.id.as_str().into()]),
    };
    let est = match ransac_homography(&matches, &ransac) {
        Ok(est) => est,
        // too few reliable matches to say anything about geometry
        Err(Error::NoModel(_)) => {
            return Ok(AlignVerdict::Keep(r.clone(), "no-model", metrics([("matches", matches.len() as f64)])))
        }
        Err(e) => return Err(e),
    };
    let m = metrics([
        ("matches", matches.len() as f64),
        ("inliers", est.inlier_count() as f64),
        ("rmse", est.rmse),
    ]);
    let dims = source.dims();
    if is_near_identity(&est.homography, dims, p.identity_tol) {
        return Ok(AlignVerdict::Keep(r.clone(), "near-identity", m));
    }
    if !is_near_identity(&est.homography, dims, p.max_correction) {
        return Ok(AlignVerdict::Remove("misaligned", m));
    }
    let aligned = align_pair(&target, &est.homography, dims)?;
    let mut out = r.clone();
    out.target_ref = ctx.store.put(&aligned)?;
    Ok(AlignVerdict::Keep(out, "aligned", m))
}

pub(super) fn align(ctx: &StageContext, inputs: &[PathBuf], p: AlignParams) -> Result<StageOutput> {
    let records = read_triplets(inputs)?;
    let verdicts = ctx.par_map(&records, |r| align_one(ctx, &p, r));
    let mut tally = Tally::default();
    let mut kept = Vec::new();
    for (r, v) in records.iter().zip(verdicts) {
        match v {
            Ok(AlignVerdict::Keep(out, reason, m)) => {
                tally.keep(&r.id, reason, m);
                kept.push(out);
            }
            Ok(AlignVerdict::Remove(reason, m)) => tally.remove(&r.id, reason, m),
            Err(e) => tally.error(&r.id, &e.to_string()),
        }
    }
    StageOutput::triplets(&kept, tally)
}

pub(super) fn blur(ctx: &StageContext, inputs: &[PathBuf], p: BlurParams) -> Result<StageOutput> {
    let records = read_triplets(inputs)?;
    let scores = ctx.par_map(&records, |r| blur_effect(&ctx.store.load(&r.target_ref)?));
    let mut tally = Tally::default();
    let mut kept = Vec::new();
    for (r, s) in records.into_iter().zip(scores) {
        match s {
            Ok(b) if b <= p.max_blur => {
                tally.keep(&r.id, "sharp", metrics([("blur", b)]));
                kept.push(r);
            }
            Ok(b) => tally.remove(&r.id, "blurry", metrics([("blur", b)])),
            Err(e) => tally.error(&r.id, &e.to_string()),
        }
    }
    StageOutput::triplets(&kept, tally)
}

/// Unscored records count as errored rather than failing the stage.
pub(super) fn threshold(inputs: &[PathBuf], p: ThresholdParams) -> Result<StageOutput> {
    let records = read_triplets(inputs)?;
    let (scored, unscored): (Vec<_>, Vec<_>) = records.iter().cloned().partition(|r| r.scores.is_some());
    let unscored: BTreeSet<String> = unscored.into_iter().map(|r| r.id).collect();
    let part = assessor_threshold_filter(scored, p.threshold, p.aesthetic_floor)?;
    let removed: BTreeMap<&str, &TripletRecord> = part.removed.iter().map(|(r, _)| (r.id.as_str(), r)).collect();
    let mut tally = Tally::default();
    for r in &records {
        let m = r
            .scores
            .map(|s| metrics([("adherence", s.instruction_adherence), ("aesthetic", s.aesthetic)]))
            .unwrap_or_default();
        if unscored.contains(&r.id) {
            tally.error(&r.id, "no assessor scores");
        } else if let Some(rr) = removed.get(r.id.as_str()) {
            let s = rr.scores.expect("scored");
            let reason =
                if s.instruction_adherence < p.threshold { "adherence-below-threshold" } else { "aesthetic-below-floor" };
            tally.remove(&r.id, reason, m);
        } else {
            tally.keep(&r.id, "above-threshold", m);
        }
    }
    StageOutput::triplets(&part.kept, tally)
}
