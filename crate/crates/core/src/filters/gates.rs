use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::bbox::{iou, BoundingBox};
use crate::error::{Error, Result};
use crate::record::TripletRecord;

pub const DEFAULT_FACE_IOU_THRESHOLD: f64 = 0.9;
pub const DEFAULT_ASSESSOR_THRESHOLD: f64 = 3.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FilterVerdict {
    Keep,
    Discard,
}

/// One line of a filter report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterReportLine {
    pub triplet_id: String,
    pub verdict: FilterVerdict,
    pub reason: String,
    #[serde(default)]
    pub metrics: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaceGate {
    pub verdict: FilterVerdict,
    pub detail: String,
    pub iou: Option<f64>,
}

fn largest(faces: &[BoundingBox<f64>]) -> Option<&BoundingBox<f64>> {
    // first of equal areas wins
    faces.iter().fold(None, |best, f| match best {
        Some(b) if b.area() >= f.area() => Some(b),
        _ => Some(f),
    })
}

/// Compare the largest face on each side. Pairs where either side has no face
/// pass through with detail `"no-face"`.
pub fn face_iou_filter(faces_src: &[BoundingBox<f64>], faces_tgt: &[BoundingBox<f64>], threshold: f64) -> FaceGate {
    match (largest(faces_src), largest(faces_tgt)) {
        (Some(a), Some(b)) => {
            let v = iou(a, b);
            let keep = v >= threshold;
            FaceGate {
                verdict: if keep { FilterVerdict::Keep } else { FilterVerdict::Discard },
                detail: if keep { "face-iou-ok".into() } else { "face-iou-below-threshold".into() },
                iou: Some(v),
            }
        }
        _ => FaceGate { verdict: FilterVerdict::Keep, detail: "no-face".into(), iou: None },
    }
}

/// Face boxes keyed by image reference.
pub type FaceSidecar = BTreeMap<String, Vec<BoundingBox<f64>>>;

pub fn read_face_sidecar(path: &Path) -> Result<FaceSidecar> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let raw: FaceSidecar =
        serde_json::from_str(&text).map_err(|e| Error::Json { line: e.line(), message: e.to_string() })?;
    for (image_ref, boxes) in &raw {
        for b in boxes {
            BoundingBox::new(b.x_min, b.y_min, b.x_max, b.y_max)
                .map_err(|e| Error::invalid(format!("face box for {image_ref}: {e}")))?;
        }
    }
    Ok(raw)
}

#[derive(Debug, Clone, Default)]
pub struct ThresholdPartition {
    pub kept: Vec<TripletRecord>,
    pub removed: Vec<(TripletRecord, String)>,
}

/// Keep records whose instruction adherence reaches `tau` (inclusive), and,
/// when given, whose aesthetic reaches `aesthetic_floor`.
pub fn assessor_threshold_filter(
    records: Vec<TripletRecord>,
    tau: f64,
    aesthetic_floor: Option<f64>,
) -> Result<ThresholdPartition> {
    if let Some(r) = records.iter().find(|r| r.scores.is_none()) {
        return Err(Error::invalid(format!("record {} has no assessor scores", r.id)));
    }
    let mut out = ThresholdPartition::default();
    for r in records {
        let s = r.scores.expect("checked above");
        if s.instruction_adherence < tau {
            let why = format!("adherence {} < {tau}", s.instruction_adherence);
            out.removed.push((r, why));
        } else if let Some(floor) = aesthetic_floor.filter(|&f| s.aesthetic < f) {
            let why = format!("aesthetic {} < {floor}", s.aesthetic);
            out.removed.push((r, why));
        } else {
            out.kept.push(r);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::{AssessorScore, InstructionOrigin, InstructionRecord, Provenance};

    fn instr() -> InstructionRecord {
        InstructionRecord::new("i", "do it", InstructionOrigin::Synthetic)
    }

    fn b(x0: f64, y0: f64, x1: f64, y1: f64) -> BoundingBox<f64> {
        BoundingBox::new(x0, y0, x1, y1).unwrap()
    }

    fn scored(id: &str, adh: f64, aes: f64) -> TripletRecord {
        TripletRecord::new(id, "s.png", instr(), "t.png", Provenance::Mined)
            .with_scores(AssessorScore::new(adh, aes).unwrap())
    }

    #[test]
    fn same_face_keeps() {
        let f = vec![b(0.0, 0.0, 10.0, 10.0)];
        assert_eq!(face_iou_filter(&f, &f, 0.9).verdict, FilterVerdict::Keep);
    }

    #[test]
    fn iou_085_discards() {
        // IoU oracle: a = [0,20]x[0,10], b = [s,20+s]x[0,10] => IoU = (20-s)/(20+s)
        let s = 20.0 * 0.15 / 1.85;
        let g = face_iou_filter(&[b(0.0, 0.0, 20.0, 10.0)], &[b(s, 0.0, 20.0 + s, 10.0)], 0.9);
        assert!((g.iou.unwrap() - 0.85).abs() < 1e-12);
        assert_eq!(g.verdict, FilterVerdict::Discard);
    }

    #[test]
    fn largest_face_is_compared() {
        let src = vec![b(0.0, 0.0, 2.0, 2.0), b(10.0, 10.0, 30.0, 30.0)];
        let tgt = vec![b(10.0, 10.0, 30.0, 30.0), b(50.0, 50.0, 51.0, 51.0)];
        assert_eq!(face_iou_filter(&src, &tgt, 0.9).iou, Some(1.0));
    }

    #[test]
    fn no_face_keeps() {
        let g = face_iou_filter(&[], &[b(0.0, 0.0, 1.0, 1.0)], 0.9);
        assert_eq!((g.verdict, g.detail.as_str()), (FilterVerdict::Keep, "no-face"));
    }

    #[test]
    fn threshold_is_inclusive() {
        let p = assessor_threshold_filter(vec![scored("a", 3.5, 1.0), scored("b", 3.49, 5.0)], 3.5, None).unwrap();
        assert_eq!(p.kept.iter().map(|r| r.id.as_str()).collect::<Vec<_>>(), ["a"]);
        assert_eq!(p.removed[0].0.id, "b");
    }

    #[test]
    fn aesthetic_floor_is_conjunctive() {
        let p = assessor_threshold_filter(vec![scored("a", 4.0, 2.0), scored("b", 4.0, 3.0)], 3.5, Some(2.5)).unwrap();
        assert_eq!(p.kept.len(), 1);
        assert_eq!(p.kept[0].id, "b");
    }

    #[test]
    fn missing_scores_is_error() {
        let r = TripletRecord::new("x", "s", instr(), "t", Provenance::Mined);
        assert!(assessor_threshold_filter(vec![r], 3.5, None).is_err());
    }

    #[test]
    fn sidecar_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("faces.json");
        std::fs::write(&p, r#"{"a.png": [{"x_min":0,"y_min":0,"x_max":4,"y_max":5}], "b.png": []}"#).unwrap();
        let s = read_face_sidecar(&p).unwrap();
        assert_eq!(s["a.png"][0].area(), 20.0);
        assert!(s["b.png"].is_empty());
    }
}
