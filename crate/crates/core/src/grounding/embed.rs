use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifest::read_jsonl;
use crate::scalar::Scalar;

pub const DEFAULT_DIM: usize = 256;

/// Fixed-dimension real vector. `normalized` records that the vector was
/// scaled to unit L2 norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector<T> {
    values: Vec<T>,
    normalized: bool,
}

impl<T: Scalar> EmbeddingVector<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("embedding must have positive dimension"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("embedding has non-finite entries"));
        }
        Ok(Self {
            values,
            normalized: false,
        })
    }

    /// Unit-norm copy of `values`. A zero vector stays zero and is not
    /// flagged normalized.
    pub fn normalized(values: Vec<T>) -> Result<Self> {
        let mut v = Self::new(values)?;
        let n = v.norm();
        if n > T::zero() {
            for x in &mut v.values {
                *x /= n;
            }
            v.normalized = true;
        }
        Ok(v)
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn dot(&self, other: &Self) -> T {
        self.values.iter().zip(&other.values).map(|(a, b)| *a * *b).sum()
    }

    pub fn norm(&self) -> T {
        self.dot(self).sqrt()
    }

    /// Cosine similarity; zero when either vector is zero.
    pub fn cosine(&self, other: &Self) -> T {
        let dot = self.dot(other);
        if self.normalized && other.normalized {
            return dot.max(-T::one()).min(T::one());
        }
        let denom = self.norm() * other.norm();
        if denom == T::zero() {
            return T::zero();
        }
        (dot / denom).max(-T::one()).min(T::one())
    }

    pub fn cast<U: Scalar>(&self) -> EmbeddingVector<U> {
        EmbeddingVector {
            values: self.values.iter().map(|v| U::lit(v.to_f64_lossy())).collect(),
            normalized: self.normalized,
        }
    }
}

/// Text → vector model.
pub trait Embedder<T: Scalar>: Send + Sync {
    fn embed(&self, id: &str, text: &str) -> Result<EmbeddingVector<T>>;
}

/// Offline stand-in: character 3-grams of the lowercased, space-padded
/// text, hashed (FNV-1a) into `dim` count buckets, then unit-normalized.
#[derive(Debug, Clone, Copy)]
pub struct TrigramEmbedder {
    pub dim: usize,
}

impl Default for TrigramEmbedder {
    fn default() -> Self {
        Self { dim: DEFAULT_DIM }
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Character 3-grams of the canonicalized text.
pub fn trigrams(text: &str) -> Vec<String> {
    let canon: Vec<char> = format!(
        " {} ",
        text.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
    )
    .chars()
    .collect();
    canon.windows(3).map(|w| w.iter().collect()).collect()
}

impl<T: Scalar> Embedder<T> for TrigramEmbedder {
    fn embed(&self, _id: &str, text: &str) -> Result<EmbeddingVector<T>> {
        embed_text(text, self.dim)
    }
}

pub fn embed_text<T: Scalar>(text: &str, dim: usize) -> Result<EmbeddingVector<T>> {
    if text.trim().is_empty() {
        return Err(Error::invalid("cannot embed empty text"));
    }
    if dim == 0 {
        return Err(Error::invalid("embedding dim must be positive"));
    }
    let mut buckets = vec![T::zero(); dim];
    for g in trigrams(text) {
        buckets[(fnv1a(g.as_bytes()) % dim as u64) as usize] += T::one();
    }
    EmbeddingVector::normalized(buckets)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbeddingSidecarLine {
    pub id: String,
    pub vector: Vec<f64>,
}

/// Precomputed embeddings keyed by record id, loaded from a JSONL sidecar
/// of `{id, vector}` lines. Falls back to `fallback` for unknown ids.
pub struct SidecarEmbedder<T, E> {
    vectors: BTreeMap<String, EmbeddingVector<T>>,
    fallback: Option<E>,
}

impl<T: Scalar, E: Embedder<T>> SidecarEmbedder<T, E> {
    pub fn load(path: impl AsRef<Path>, fallback: Option<E>) -> Result<Self> {
        let mut vectors = BTreeMap::new();
        let mut dim = None;
        for line in read_jsonl::<EmbeddingSidecarLine>(path)? {
            let v = EmbeddingVector::normalized(line.value.vector.iter().map(|x| T::lit(*x)).collect())
                .map_err(|e| Error::Schema {
                    line: line.line,
                    message: e.to_string(),
                })?;
            if *dim.get_or_insert(v.dim()) != v.dim() {
                return Err(Error::Schema {
                    line: line.line,
                    message: format!("vector dim {} differs from {}", v.dim(), dim.unwrap()),
                });
            }
            if vectors.insert(line.value.id.clone(), v).is_some() {
                return Err(Error::Schema {
                    line: line.line,
                    message: format!("duplicate id {}", line.value.id),
                });
            }
        }
        Ok(Self { vectors, fallback })
    }
}

impl<T: Scalar, E: Embedder<T>> Embedder<T> for SidecarEmbedder<T, E> {
    fn embed(&self, id: &str, text: &str) -> Result<EmbeddingVector<T>> {
        match (self.vectors.get(id), &self.fallback) {
            (Some(v), _) => Ok(v.clone()),
            (None, Some(f)) => f.embed(id, text),
            (None, None) => Err(Error::invalid(format!("no embedding for id {id}"))),
        }
    }
}
