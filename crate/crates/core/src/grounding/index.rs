use std::cmp::Ordering;
use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::EmbeddingVector;

/// Exact (brute-force) cosine index over instruction embeddings.
#[derive(Debug, Clone)]
pub struct VectorIndex<T> {
    entries: Vec<(String, EmbeddingVector<T>)>,
}

impl<T: Scalar> VectorIndex<T> {
    pub fn build(entries: Vec<(String, EmbeddingVector<T>)>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        let dim = entries.first().map(|(_, v)| v.dim());
        for (id, v) in &entries {
            if !seen.insert(id.as_str()) {
                return Err(Error::invalid(format!("duplicate index id {id}")));
            }
            if Some(v.dim()) != dim {
                return Err(Error::DimensionMismatch(format!(
                    "index entry {id} has dim {}, expected {}",
                    v.dim(),
                    dim.unwrap_or(0)
                )));
            }
        }
        Ok(Self { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.entries.first().map(|(_, v)| v.dim())
    }

    pub fn entries(&self) -> &[(String, EmbeddingVector<T>)] {
        &self.entries
    }

    pub fn get(&self, id: &str) -> Option<&EmbeddingVector<T>> {
        self.entries.iter().find(|(i, _)| i == id).map(|(_, v)| v)
    }
}

/// Total order used for ranked results: similarity descending, then id
/// ascending.
pub fn rank_order<T: Scalar>(a: &(String, T), b: &(String, T)) -> Ordering {
    b.1.partial_cmp(&a.1)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.0.cmp(&b.0))
}

/// The `min(k, |index|)` most cosine-similar entries.
pub fn retrieve_topk<T: Scalar>(
    index: &VectorIndex<T>,
    query: &EmbeddingVector<T>,
    k: usize,
) -> Result<Vec<(String, T)>> {
    if index.is_empty() {
        return Err(Error::invalid("cannot query an empty index"));
    }
    if k == 0 {
        return Err(Error::invalid("k must be positive"));
    }
    if index.dim() != Some(query.dim()) {
        return Err(Error::DimensionMismatch(format!(
            "query dim {} vs index dim {}",
            query.dim(),
            index.dim().unwrap_or(0)
        )));
    }
    let mut scored: Vec<(String, T)> = index
        .entries
        .iter()
        .map(|(id, v)| (id.clone(), query.cosine(v)))
        .collect();
    let k = k.min(scored.len());
    if k < scored.len() {
        scored.select_nth_unstable_by(k - 1, rank_order);
        scored.truncate(k);
    }
    scored.sort_by(rank_order);
    Ok(scored)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grounding::embed_text;

    fn v(xs: &[f64]) -> EmbeddingVector<f64> {
        EmbeddingVector::new(xs.to_vec()).unwrap()
    }

    #[test]
    fn self_retrieval_ranks_first() {
        let texts = ["remove the car", "add a hat", "make it winter", "blur the face"];
        let entries: Vec<_> = texts
            .iter()
            .enumerate()
            .map(|(i, t)| (format!("u{i}"), embed_text::<f64>(t, 64).unwrap()))
            .collect();
        let index = VectorIndex::build(entries).unwrap();
        let q = index.get("u2").unwrap().clone();
        let top = retrieve_topk(&index, &q, 2).unwrap();
        assert_eq!(top[0].0, "u2");
        assert!((top[0].1 - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn k_is_clamped_to_index_size() {
        let index = VectorIndex::build(vec![("a".into(), v(&[1.0, 0.0])), ("b".into(), v(&[0.0, 1.0]))]).unwrap();
        let top = retrieve_topk(&index, &v(&[1.0, 1.0]), 10).unwrap();
        assert_eq!(top.len(), 2);
        // equal similarity: ascending id
        assert_eq!(top[0].0, "a");
    }

    #[test]
    fn five_vectors_top3_matches_full_sort() {
        let raw = [
            ("e", [0.3, 0.9, 0.1]),
            ("d", [1.0, 0.0, 0.0]),
            ("c", [0.7, 0.7, 0.0]),
            ("b", [-1.0, 0.2, 0.5]),
            ("a", [0.5, 0.5, 0.5]),
        ];
        let q = v(&[0.9, 0.3, 0.1]);
        let index =
            VectorIndex::build(raw.iter().map(|(id, x)| (id.to_string(), v(x))).collect()).unwrap();
        let mut oracle: Vec<(String, f64)> = raw
            .iter()
            .map(|(id, x)| {
                let dot: f64 = x.iter().zip(q.values()).map(|(a, b)| a * b).sum();
                let n = x.iter().map(|a| a * a).sum::<f64>().sqrt() * q.norm();
                (id.to_string(), dot / n)
            })
            .collect();
        oracle.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        let top = retrieve_topk(&index, &q, 3).unwrap();
        let ids: Vec<_> = top.iter().map(|(i, _)| i.clone()).collect();
        let want: Vec<_> = oracle[..3].iter().map(|(i, _)| i.clone()).collect();
        assert_eq!(ids, want);
    }

    #[test]
    fn dim_mismatch_and_duplicates_are_errors() {
        let index = VectorIndex::build(vec![("a".into(), v(&[1.0, 0.0]))]).unwrap();
        assert!(matches!(
            retrieve_topk(&index, &v(&[1.0, 0.0, 0.0]), 1),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(VectorIndex::build(vec![("a".into(), v(&[1.0])), ("a".into(), v(&[2.0]))]).is_err());
        assert!(VectorIndex::build(vec![("a".into(), v(&[1.0])), ("b".into(), v(&[2.0, 1.0]))]).is_err());
    }
}
