use std::collections::HashSet;

use crate::error::Result;
use crate::record::InstructionRecord;
use crate::scalar::Scalar;

use super::{Embedder, EmbeddingVector};

/// Greedy scan in input order. A record is dropped when its text exactly
/// matches a kept record, or when its cosine similarity to any kept record
/// is at least `tau_dup`.
pub fn dedup_instructions<T: Scalar>(
    corpus: &[InstructionRecord],
    tau_dup: f64,
    embedder: &dyn Embedder<T>,
) -> Result<Vec<InstructionRecord>> {
    let mut texts: HashSet<&str> = HashSet::new();
    let mut kept: Vec<(&InstructionRecord, EmbeddingVector<T>)> = Vec::new();
    for rec in corpus {
        if texts.contains(rec.text.as_str()) {
            continue;
        }
        let v = embedder.embed(&rec.id, &rec.text)?;
        if kept
            .iter()
            .any(|(_, k)| k.cosine(&v).to_f64_lossy() >= tau_dup)
        {
            continue;
        }
        texts.insert(rec.text.as_str());
        kept.push((rec, v));
    }
    Ok(kept.into_iter().map(|(r, _)| r.clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grounding::{embed_text, TrigramEmbedder};
    use crate::record::InstructionOrigin;

    fn recs(texts: &[&str]) -> Vec<InstructionRecord> {
        texts
            .iter()
            .enumerate()
            .map(|(i, t)| InstructionRecord::new(format!("r{i}"), *t, InstructionOrigin::RealUser))
            .collect()
    }

    #[test]
    fn exact_duplicates_always_dropped() {
        let c = recs(&["add a hat", "add a hat"]);
        let out = dedup_instructions::<f64>(&c, 2.0, &TrigramEmbedder::default()).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].id, "r0");
    }

    #[test]
    fn unreachable_threshold_keeps_distinct_texts() {
        let c = recs(&["add a hat", "add a hat!", "remove the hat"]);
        let out = dedup_instructions::<f64>(&c, 1.0 + 1e-9, &TrigramEmbedder::default()).unwrap();
        assert_eq!(out.len(), 3);
    }

    #[test]
    fn ten_records_match_pairwise_replay() {
        let c = recs(&[
            "remove the car",
            "remove the car.",
            "remove the cars",
            "make the sky pink",
            "make the sky pink please",
            "add snow to the roof",
            "remove the car",
            "turn day into night",
            "turn the day into night",
            "add a small dog",
        ]);
        let tau = 0.95;
        let out = dedup_instructions::<f64>(&c, tau, &TrigramEmbedder::default()).unwrap();
        // O(n^2) oracle replay
        let vecs: Vec<EmbeddingVector<f64>> = c.iter().map(|r| embed_text(&r.text, 256).unwrap()).collect();
        let mut keep: Vec<usize> = Vec::new();
        for i in 0..c.len() {
            let dup = keep
                .iter()
                .any(|&j| c[j].text == c[i].text || vecs[j].cosine(&vecs[i]) >= tau);
            if !dup {
                keep.push(i);
            }
        }
        let got: Vec<_> = out.iter().map(|r| r.id.clone()).collect();
        let want: Vec<_> = keep.iter().map(|&i| c[i].id.clone()).collect();
        assert_eq!(got, want);
        assert!(got.len() < c.len());
    }
}
