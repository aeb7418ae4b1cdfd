//! Self-contained end-to-end fixture: procedural anchor images, five edits
//! per anchor, a user-instruction corpus, a face sidecar and a pipeline
//! config that runs ground, validate, face gate, alignment, bootstrap,
//! augment, assess, threshold and pairing.

use std::path::Path;

use forge_core::augment::{scalar_adjust, sepia, AdjustKind};
use forge_core::filters::{BoundingBox, FaceSidecar};
use forge_core::fixtures::natural_image_variant;
use forge_core::manifest::{to_jsonl_bytes, write_atomic};
use forge_core::{Error, ImageBuffer, InstructionOrigin, InstructionRecord, Provenance, Result, TripletRecord};
use serde_json::json;

use crate::store::ImageStore;

pub const FIXTURE_DIMS: (usize, usize) = (96, 72);
pub const EDITS_PER_ANCHOR: usize = 5;

/// Synthetic phrasings; the last one has no user counterpart.
const PHRASES: [&str; 9] = [
    "make the photo warmer",
    "increase the brightness of the scene",
    "reduce the contrast",
    "give the picture a vintage look",
    "brighten the sky",
    "make the colors pop",
    "darken the image a little",
    "add a soft glow to the landscape",
    "replace the hills with a snowy mountain range",
];

fn user_variants(phrase: &str) -> [String; 4] {
    [phrase.to_string(), format!("please {phrase}"), format!("can you {phrase}"), format!("{phrase} please")]
}

/// Source face box for anchors that have one.
pub const FACE: [f64; 4] = [30.0, 16.0, 54.0, 44.0];
/// Horizontal offset of the face in the moved-face target.
pub const FACE_SHIFT: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureSummary {
    pub anchors: usize,
    pub triplets: usize,
    pub users: usize,
    /// Triplets whose target face moved enough to fail the 0.9 gate.
    pub moved_faces: usize,
}

/// Copy with content moved by `(dx, dy)`, edges replicated.
fn shift(img: &ImageBuffer, dx: isize, dy: isize) -> ImageBuffer {
    let (w, h) = img.dims();
    ImageBuffer::from_fn(w, h, img.channels(), |x, y, c| {
        let sx = (x as isize - dx).clamp(0, w as isize - 1) as usize;
        let sy = (y as isize - dy).clamp(0, h as isize - 1) as usize;
        img.get(sx, sy, c)
    })
    .expect("same dims")
}

fn face_box(dx: f64) -> BoundingBox<f64> {
    BoundingBox::new(FACE[0] + dx, FACE[1], FACE[2] + dx, FACE[3]).expect("valid box")
}

/// Targets for one anchor. Edits 0-2 answer one instruction (competing
/// candidates); edit 3 is slightly shifted, as generated edits sometimes are.
fn edit_targets(anchor: &ImageBuffer) -> Result<[ImageBuffer; EDITS_PER_ANCHOR]> {
    Ok([
        sepia(anchor, 0.6)?,
        scalar_adjust(anchor, AdjustKind::Brightness, 1.2)?,
        scalar_adjust(anchor, AdjustKind::Contrast, 0.8)?,
        scalar_adjust(&shift(anchor, 2, 1), AdjustKind::Brightness, 1.15)?,
        scalar_adjust(anchor, AdjustKind::Saturation, 1.5)?,
    ])
}

/// Write the fixture into `dir` (created if needed): `images/`,
/// `triplets.jsonl`, `users.jsonl`, `faces.json`, `pipeline.json`.
pub fn write_fixture(dir: &Path, count: usize, seed: u64) -> Result<FixtureSummary> {
    if count == 0 {
        return Err(Error::InvalidArgument("fixture needs at least one triplet".into()));
    }
    let store = ImageStore::new(dir.join("images"));
    std::fs::create_dir_all(store.root()).map_err(|e| Error::Io { path: store.root().to_path_buf(), source: e })?;
    let anchors = count.div_ceil(EDITS_PER_ANCHOR);
    let mut triplets = Vec::with_capacity(count);
    let mut faces = FaceSidecar::new();
    let mut moved_faces = 0;
    for a in 0..anchors {
        let anchor = natural_image_variant(FIXTURE_DIMS.0, FIXTURE_DIMS.1, a as u64 + 1);
        let anchor_ref = store.put(&anchor)?;
        let with_face = a % 2 == 0;
        if with_face {
            faces.insert(anchor_ref.clone(), vec![face_box(0.0)]);
        }
        let phrase = |k: usize| PHRASES[(a * 3 + k) % PHRASES.len()];
        for (j, target) in edit_targets(&anchor)?.into_iter().enumerate() {
            if triplets.len() == count {
                break;
            }
            let k = if j < 3 { 0 } else { j - 2 };
            let instruction = InstructionRecord::new(format!("a{a:03}-i{k}"), phrase(k), InstructionOrigin::Synthetic);
            let target_ref = store.put(&target)?;
            if with_face {
                let moved = j == 1;
                moved_faces += usize::from(moved);
                faces.insert(target_ref.clone(), vec![face_box(if moved { FACE_SHIFT } else { 0.0 })]);
            }
            triplets.push(TripletRecord::new(
                format!("t{a:03}-{j}"),
                anchor_ref.clone(),
                instruction,
                target_ref,
                Provenance::Mined,
            ));
        }
    }
    let users: Vec<InstructionRecord> = PHRASES[..PHRASES.len() - 1]
        .iter()
        .enumerate()
        .flat_map(|(p, phrase)| {
            user_variants(phrase)
                .into_iter()
                .enumerate()
                .map(move |(v, text)| InstructionRecord::new(format!("u{p}-{v}"), text, InstructionOrigin::RealUser))
        })
        .collect();

    let write = |name: &str, bytes: Vec<u8>| write_atomic(dir.join(name), &bytes);
    write("triplets.jsonl", to_jsonl_bytes(&triplets)?)?;
    write("users.jsonl", to_jsonl_bytes(&users)?)?;
    write("faces.json", serde_json::to_vec_pretty(&faces).map_err(|e| Error::InvalidArgument(e.to_string()))?)?;
    write("pipeline.json", serde_json::to_vec_pretty(&pipeline_config(seed)).expect("static config"))?;
    Ok(FixtureSummary { anchors, triplets: triplets.len(), users: users.len(), moved_faces })
}

fn pipeline_config(seed: u64) -> serde_json::Value {
    json!({
        "global_seed": seed,
        "parallelism": 1,
        "image_dir": "images",
        "stages": [
            {"name": "ground", "operation": "ground_instructions", "params": {"topk": 5},
             "inputs": ["triplets.jsonl", "users.jsonl"], "output": "out/grounded.jsonl"},
            {"name": "validate", "operation": "validate_triplet",
             "inputs": ["out/grounded.jsonl"], "output": "out/valid.jsonl"},
            {"name": "faces", "operation": "face_iou_filter", "params": {"faces": "faces.json"},
             "inputs": ["out/valid.jsonl"], "output": "out/faces.jsonl"},
            {"name": "align", "operation": "align_pair", "params": {"grid": 8, "ransac_iters": 500},
             "inputs": ["out/faces.jsonl"], "output": "out/aligned.jsonl"},
            {"name": "bootstrap", "operation": "bootstrap",
             "inputs": ["out/aligned.jsonl"], "output": "out/bootstrapped.jsonl"},
            {"name": "augment", "operation": "augment",
             "params": {"ops": ["blur", "sepia", "identity", "mirror", "overlay", "jpeg_sync"], "sample_percent": 10},
             "inputs": ["out/bootstrapped.jsonl"], "output": "out/augmented.jsonl"},
            {"name": "assess", "operation": "assess",
             "inputs": ["out/augmented.jsonl"], "output": "out/assessed.jsonl"},
            {"name": "threshold", "operation": "assessor_threshold_filter",
             "inputs": ["out/assessed.jsonl"], "output": "out/filtered.jsonl"},
            {"name": "pairs", "operation": "strict_dominance_pairs",
             "inputs": ["out/assessed.jsonl"], "output": "out/pairs.jsonl"}
        ]
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use forge_core::manifest::read_manifest;

    #[test]
    fn small_fixture_has_requested_count_and_parses() {
        let dir = tempfile::tempdir().unwrap();
        let s = write_fixture(dir.path(), 12, 7).unwrap();
        assert_eq!((s.anchors, s.triplets, s.users), (3, 12, 32));
        let recs = read_manifest(dir.path().join("triplets.jsonl")).unwrap();
        assert_eq!(recs.len(), 12);
        assert!(recs.iter().all(|r| r.source_ref != r.target_ref));
        let config = crate::config::PipelineConfig::load(&dir.path().join("pipeline.json")).unwrap();
        config.validate(dir.path()).unwrap();
    }

    #[test]
    fn shift_moves_content() {
        let img = natural_image_variant(16, 16, 3);
        let s = shift(&img, 2, 1);
        assert_eq!(s.pixel(5, 5), img.pixel(3, 4));
    }
}
