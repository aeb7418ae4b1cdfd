use crate::error::{Error, Result};
use crate::grounding::EmbeddingVector;
use crate::scalar::Scalar;

/// Greedy farthest-point selection under cosine distance, starting from the
/// largest-norm vector. Returns `ceil(fraction * n)` indices in selection
/// order; ties go to the lowest index.
pub fn select_diverse_frames<T: Scalar>(embeddings: &[EmbeddingVector<T>], fraction: f64) -> Result<Vec<usize>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::invalid(format!("fraction must be in (0, 1], got {fraction}")));
    }
    let n = embeddings.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let want = ((fraction * n as f64) - 1e-9).ceil().max(1.0) as usize;
    let want = want.min(n);
    let mut first = 0;
    for i in 1..n {
        if embeddings[i].norm() > embeddings[first].norm() {
            first = i;
        }
    }
    let mut selected = vec![first];
    let mut taken = vec![false; n];
    taken[first] = true;
    let mut min_dist: Vec<T> = embeddings
        .iter()
        .map(|e| T::one() - e.cosine(&embeddings[first]))
        .collect();
    while selected.len() < want {
        let mut best: Option<usize> = None;
        for i in 0..n {
            if taken[i] {
                continue;
            }
            if best.is_none_or(|b| min_dist[i] > min_dist[b]) {
                best = Some(i);
            }
        }
        let next = best.expect("fewer selected than available");
        taken[next] = true;
        selected.push(next);
        for i in 0..n {
            let d = T::one() - embeddings[i].cosine(&embeddings[next]);
            if d < min_dist[i] {
                min_dist[i] = d;
            }
        }
    }
    Ok(selected)
}
