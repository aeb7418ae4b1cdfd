//! Deterministic synthetic triplets from each selected record.

use std::path::PathBuf;

use forge_core::augment::{
    conditional_mirror, identity_triplet, jpeg_sync_triplet, make_bidirectional_pair, overlay_triplet, AugmentOp,
    AugmentationSpec, Direction, DirectionalBlocklist, ImageTriplet, OverlayKind, TemplateBank,
};
use forge_core::manifest::read_jsonl;
use forge_core::seed::{derive_seed, rng_from_seed};
use forge_core::{Error, Provenance, Result, TripletRecord};
use rand::Rng;
use serde::Deserialize;

use super::{read_triplets, StageContext, StageOutput};
use crate::report::{metrics, Tally};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentParams {
    /// Ops applied with magnitudes drawn per record; bidirectional ops
    /// emit both directions.
    #[serde(default)]
    pub ops: Vec<String>,
    /// JSONL of augmentation specs; each line emits only its direction.
    #[serde(default)]
    pub plan: Option<String>,
    /// Share of eligible records augmented, chosen by stable hash of id.
    #[serde(default = "sample_percent")]
    pub sample_percent: f64,
    #[serde(default = "eligible")]
    pub provenance: Vec<Provenance>,
    #[serde(default)]
    pub blocklist: Option<Vec<String>>,
    #[serde(default)]
    pub templates: Option<String>,
}

fn sample_percent() -> f64 {
    100.0
}

fn eligible() -> Vec<Provenance> {
    vec![Provenance::Mined, Provenance::External, Provenance::Inverted, Provenance::Composite]
}

/// One unit of work for a record: an op, an optional fixed direction and
/// magnitude, and the plan seed it was derived from.
#[derive(Debug, Clone, Copy)]
struct Job {
    op: AugmentOp,
    direction: Option<Direction>,
    magnitude: Option<f64>,
    seed: u64,
}

/// Per-record magnitude when none is given: a mild, visible setting.
fn draw_magnitude(op: AugmentOp, seed: u64) -> f64 {
    let mut rng = rng_from_seed(seed);
    let up: bool = rng.random();
    let u: f64 = rng.random();
    let lerp = |a: f64, b: f64| a + (b - a) * u;
    match op {
        AugmentOp::Blur => lerp(1.0, 3.0),
        AugmentOp::Noise => lerp(0.02, 0.06),
        AugmentOp::Sepia => lerp(0.5, 1.0),
        AugmentOp::Brightness | AugmentOp::Contrast if up => lerp(1.2, 1.6),
        AugmentOp::Brightness | AugmentOp::Contrast => lerp(0.6, 0.8),
        AugmentOp::Saturation if up => lerp(1.3, 2.0),
        AugmentOp::Saturation => lerp(0.0, 0.6),
        AugmentOp::JpegSync => (20.0 + u * 40.0).floor(),
        _ => 0.0,
    }
}

struct Generated {
    records: Vec<TripletRecord>,
    skipped: u64,
}

fn store(ctx: &StageContext, t: ImageTriplet) -> Result<TripletRecord> {
    ctx.store.put(&t.source)?;
    ctx.store.put(&t.target)?;
    Ok(t.record)
}

fn apply(
    ctx: &StageContext,
    record: &TripletRecord,
    jobs: &[Job],
    bank: &TemplateBank,
    blocklist: &DirectionalBlocklist,
) -> Result<Generated> {
    let source = ctx.store.load(&record.source_ref)?;
    let mut pair: Option<ImageTriplet> = None;
    let mut out = Generated { records: Vec::new(), skipped: 0 };
    for job in jobs {
        let seed = derive_seed(&[job.seed.into(), record.id.as_str().into(), job.op.as_str().into()]);
        let magnitude = job.magnitude.unwrap_or_else(|| draw_magnitude(job.op, seed));
        if matches!(job.op, AugmentOp::Mirror | AugmentOp::JpegSync) && pair.is_none() {
            let target = ctx.store.load(&record.target_ref)?;
            pair = Some(ImageTriplet { record: record.clone(), source: source.clone(), target });
        }
        let produced: Result<Vec<ImageTriplet>> = match job.op {
            op if op.is_bidirectional() => {
                let spec = AugmentationSpec::new(op, job.direction.unwrap_or_default(), magnitude, seed)?;
                make_bidirectional_pair(&record.id, &source, &spec, bank).map(|p| match job.direction {
                    None => vec![p.forward, p.reverse],
                    Some(Direction::Forward) => vec![p.forward],
                    Some(Direction::Reverse) => vec![p.reverse],
                })
            }
            AugmentOp::Identity => identity_triplet(&record.id, &source, seed, bank).map(|t| vec![t]),
            AugmentOp::Mirror => Ok(conditional_mirror(pair.as_ref().expect("loaded"), blocklist).into_iter().collect()),
            AugmentOp::Overlay | AugmentOp::TextOverlay => {
                let kind = if job.op == AugmentOp::TextOverlay {
                    Some(OverlayKind::Text)
                } else {
                    let kinds = [OverlayKind::Rectangle, OverlayKind::Ellipse];
                    Some(kinds[(seed % 2) as usize])
                };
                overlay_triplet(&record.id, &source, kind, seed, bank).map(|(t, _)| vec![t])
            }
            AugmentOp::JpegSync => {
                AugmentationSpec::new(job.op, Direction::Forward, magnitude, seed)?;
                jpeg_sync_triplet(pair.as_ref().expect("loaded"), magnitude as u8).map(|t| vec![t])
            }
            op => Err(Error::InvalidArgument(format!("unhandled op {}", op.as_str()))),
        };
        match produced {
            Ok(ts) if ts.is_empty() => out.skipped += 1,
            Ok(ts) => {
                for t in ts {
                    out.records.push(store(ctx, t)?);
                }
            }
            // no-op transforms and images too small for an op are skipped
            Err(Error::Degenerate(_) | Error::InvalidArgument(_)) => out.skipped += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

fn jobs(ctx: &StageContext, p: &AugmentParams) -> Result<Vec<Job>> {
    let mut jobs = Vec::new();
    for name in &p.ops {
        let op = AugmentOp::parse(name)?;
        jobs.push(Job { op, direction: None, magnitude: None, seed: ctx.seed });
    }
    if let Some(plan) = &p.plan {
        for line in read_jsonl::<AugmentationSpec>(ctx.resolve(plan))? {
            let spec = line.value;
            spec.validate().map_err(|e| Error::Schema { line: line.line, message: e.to_string() })?;
            let direction = spec.op.is_bidirectional().then_some(spec.direction);
            jobs.push(Job { op: spec.op, direction, magnitude: Some(spec.magnitude), seed: spec.seed });
        }
    }
    let mut keys: Vec<(AugmentOp, Option<Direction>)> = Vec::new();
    for j in &jobs {
        let clash = keys.iter().any(|(op, d)| *op == j.op && (d.is_none() || j.direction.is_none() || *d == j.direction));
        if clash {
            return Err(Error::InvalidArgument(format!("op {} requested twice", j.op.as_str())));
        }
        keys.push((j.op, j.direction));
    }
    Ok(jobs)
}

/// Inputs pass through in order, each followed by its augmentations.
pub(super) fn augment(ctx: &StageContext, inputs: &[PathBuf], p: AugmentParams) -> Result<StageOutput> {
    if !(0.0..=100.0).contains(&p.sample_percent) {
        return Err(Error::InvalidArgument(format!("sample_percent {} outside [0, 100]", p.sample_percent)));
    }
    let records = read_triplets(inputs)?;
    let jobs = jobs(ctx, &p)?;
    let bank = match &p.templates {
        Some(path) => TemplateBank::load(&ctx.resolve(path))?,
        None => TemplateBank::bundled(),
    };
    let blocklist = match &p.blocklist {
        Some(terms) => DirectionalBlocklist::new(terms.iter().cloned())?,
        None => DirectionalBlocklist::default(),
    };
    let selected = |r: &TripletRecord| {
        let h = derive_seed(&[ctx.seed.into(), "sample".into(), r.id.as_str().into()]);
        p.provenance.contains(&r.provenance) && ((h % 10_000) as f64) < p.sample_percent * 100.0
    };
    let results = ctx.par_map(&records, |r| selected(r).then(|| apply(ctx, r, &jobs, &bank, &blocklist)));

    let mut tally = Tally::default();
    let mut out = Vec::new();
    for (r, res) in records.into_iter().zip(results) {
        let id = r.id.clone();
        out.push(r);
        match res {
            None => tally.keep(&id, "not-selected", Default::default()),
            Some(Ok(g)) => {
                let m = metrics([("emitted", g.records.len() as f64), ("skipped", g.skipped as f64)]);
                tally.keep(&id, "augmented", m);
                tally.emitted += g.records.len() as u64;
                out.extend(g.records);
            }
            Some(Err(e)) => tally.error(&id, &e.to_string()),
        }
    }
    StageOutput::triplets(&out, tally)
}
