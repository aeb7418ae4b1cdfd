use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{pairwise_sum, Scalar};

fn check_lengths<T>(p: &[T], y: &[T], min: usize) -> Result<()> {
    if p.len() != y.len() {
        return Err(Error::DimensionMismatch(format!("{} predictions vs {} labels", p.len(), y.len())));
    }
    if p.len() < min {
        return Err(Error::invalid(format!("need at least {min} values, got {}", p.len())));
    }
    Ok(())
}

pub fn mae<T: Scalar>(predictions: &[T], labels: &[T]) -> Result<T> {
    check_lengths(predictions, labels, 1)?;
    let d: Vec<T> = predictions.iter().zip(labels).map(|(&p, &y)| (p - y).abs()).collect();
    Ok(pairwise_sum(&d) / T::from_usize_lossy(d.len()))
}

/// 1-based ranks; tied values share the mean of their positions.
pub fn fractional_ranks<T: Scalar>(values: &[T]) -> Vec<T> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite values"));
    let mut ranks = vec![T::zero(); values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = T::from_usize_lossy(i + j + 2) / T::lit(2.0);
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

fn pearson<T: Scalar>(a: &[T], b: &[T]) -> Result<T> {
    let n = T::from_usize_lossy(a.len());
    let (ma, mb) = (pairwise_sum(a) / n, pairwise_sum(b) / n);
    let cov: Vec<T> = a.iter().zip(b).map(|(&x, &y)| (x - ma) * (y - mb)).collect();
    let va: Vec<T> = a.iter().map(|&x| (x - ma) * (x - ma)).collect();
    let vb: Vec<T> = b.iter().map(|&y| (y - mb) * (y - mb)).collect();
    let denom = (pairwise_sum(&va) * pairwise_sum(&vb)).sqrt();
    if denom == T::zero() {
        return Err(Error::Degenerate("correlation undefined for constant input".into()));
    }
    Ok((pairwise_sum(&cov) / denom).max(-T::one()).min(T::one()))
}

/// Pearson correlation of fractional ranks.
pub fn spearman_rho<T: Scalar>(predictions: &[T], labels: &[T]) -> Result<T> {
    check_lengths(predictions, labels, 2)?;
    if predictions.iter().chain(labels).any(|v| !v.is_finite()) {
        return Err(Error::invalid("spearman input must be finite"));
    }
    pearson(&fractional_ranks(predictions), &fractional_ranks(labels))
}

/// Unweighted mean over tasks.
pub fn overall_score<T: Scalar>(per_task: &BTreeMap<String, T>) -> Result<T> {
    if per_task.is_empty() {
        return Err(Error::invalid("no task scores"));
    }
    let v: Vec<T> = per_task.values().copied().collect();
    Ok(pairwise_sum(&v) / T::from_usize_lossy(v.len()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub mae: f64,
    pub rho: f64,
    pub n: usize,
}

pub fn metric_report(predictions: &[f64], labels: &[f64]) -> Result<MetricReport> {
    Ok(MetricReport { mae: mae(predictions, labels)?, rho: spearman_rho(predictions, labels)?, n: predictions.len() })
}
