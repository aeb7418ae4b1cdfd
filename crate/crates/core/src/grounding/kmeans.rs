use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seed::rng_from_seed;

pub const DEFAULT_CLUSTERS: usize = 50;
pub const DEFAULT_MAX_ITER: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult<T> {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<T>>,
    /// Within-cluster sum of squares after each assignment step.
    pub objective_history: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
}

impl<T: Scalar> KMeansResult<T> {
    pub fn objective(&self) -> T {
        self.objective_history.last().copied().unwrap_or_else(T::zero)
    }
}

fn sq_dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| (*x - *y) * (*x - *y)).sum()
}

/// Index of the nearest centroid; ties go to the lowest index.
fn nearest<T: Scalar>(p: &[T], centroids: &[Vec<T>]) -> (usize, T) {
    let mut best = (0, sq_dist(p, &centroids[0]));
    for (j, c) in centroids.iter().enumerate().skip(1) {
        let d = sq_dist(p, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// k-means++ seeding: first centre uniform, the rest drawn with probability
/// proportional to squared distance from the nearest chosen centre.
fn plus_plus_init<T: Scalar>(points: &[Vec<T>], k: usize, rng: &mut impl Rng) -> Vec<Vec<T>> {
    let n = points.len();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = points
        .iter()
        .map(|p| sq_dist(p, &points[chosen[0]]).to_f64_lossy())
        .collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let u = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, d) in d2.iter().enumerate() {
                acc += d;
                if *d > 0.0 && u < acc {
                    pick = Some(i);
                    break;
                }
            }
            pick.unwrap_or_else(|| d2.iter().rposition(|d| *d > 0.0).expect("positive mass"))
        } else {
            // all remaining points coincide with a centre
            (0..n).find(|i| !chosen.contains(i)).expect("k <= n")
        };
        chosen.push(next);
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &points[next]).to_f64_lossy());
        }
    }
    chosen.into_iter().map(|i| points[i].clone()).collect()
}

/// Lloyd's algorithm from a seeded k-means++ start.
pub fn kmeans<T: Scalar>(points: &[Vec<T>], k: usize, seed: u64, max_iter: usize) -> Result<KMeansResult<T>> {
    if k == 0 {
        return Err(Error::invalid("k must be positive"));
    }
    if points.len() < k {
        return Err(Error::invalid(format!(
            "need at least k={k} points, got {}",
            points.len()
        )));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch("points of differing dimension".into()));
    }
    let mut rng = rng_from_seed(seed);
    let mut centroids = plus_plus_init(points, k, &mut rng);
    let mut assignments = vec![usize::MAX; points.len()];
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter.max(1) {
        iterations += 1;
        let mut changed = false;
        let mut objective = T::zero();
        for (i, p) in points.iter().enumerate() {
            let (j, d) = nearest(p, &centroids);
            objective += d;
            if assignments[i] != j {
                assignments[i] = j;
                changed = true;
            }
        }
        history.push(objective);
        if !changed {
            converged = true;
            break;
        }
        let mut sums = vec![vec![T::zero(); dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &j) in points.iter().zip(&assignments) {
            counts[j] += 1;
            for (s, x) in sums[j].iter_mut().zip(p) {
                *s += *x;
            }
        }
        for j in 0..k {
            // empty clusters keep their previous centre
            if counts[j] > 0 {
                let n = T::from_usize_lossy(counts[j]);
                centroids[j] = sums[j].iter().map(|s| *s / n).collect();
            }
        }
    }
    Ok(KMeansResult {
        assignments,
        centroids,
        objective_history: history,
        iterations,
        converged,
    })
}

/// One line of the cluster report file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReportLine {
    pub cluster_id: usize,
    pub member_ids: Vec<String>,
    pub centroid: Vec<f64>,
}

pub fn cluster_report<T: Scalar>(ids: &[String], result: &KMeansResult<T>) -> Vec<ClusterReportLine> {
    let mut lines: Vec<ClusterReportLine> = result
        .centroids
        .iter()
        .enumerate()
        .map(|(cluster_id, c)| ClusterReportLine {
            cluster_id,
            member_ids: Vec::new(),
            centroid: c.iter().map(|v| v.to_f64_lossy()).collect(),
        })
        .collect();
    for (id, &j) in ids.iter().zip(&result.assignments) {
        lines[j].member_ids.push(id.clone());
    }
    lines
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn single_cluster_centroid_is_the_mean() {
        let pts: Vec<Vec<f64>> = vec![vec![0.0, 1.0], vec![2.0, 3.0], vec![4.0, -1.0]];
        let r = kmeans(&pts, 1, 5, 10).unwrap();
        assert!((r.centroids[0][0] - 2.0).abs() < 1e-9);
        assert!((r.centroids[0][1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn separated_blobs_recover_partition() {
        let mut rng = rng_from_seed(1);
        let mut pts = Vec::new();
        let mut truth = Vec::new();
        for blob in 0..2 {
            let cx = if blob == 0 { -10.0 } else { 10.0 };
            for _ in 0..25 {
                pts.push(vec![cx + rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]);
                truth.push(blob);
            }
        }
        let r = kmeans(&pts, 2, 3, 50).unwrap();
        // exhaustive nearest-centroid oracle
        for (i, p) in pts.iter().enumerate() {
            let d: Vec<f64> = r.centroids.iter().map(|c| sq_dist(p, c)).collect();
            let want = if d[0] <= d[1] { 0 } else { 1 };
            assert_eq!(r.assignments[i], want);
        }
        for i in 0..pts.len() {
            for j in 0..pts.len() {
                assert_eq!(truth[i] == truth[j], r.assignments[i] == r.assignments[j]);
            }
        }
    }

    #[test]
    fn k_equal_n_gives_zero_objective() {
        let pts: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let r = kmeans(&pts, 6, 0, 10).unwrap();
        assert_eq!(r.objective(), 0.0);
        let mut a = r.assignments.clone();
        a.sort();
        a.dedup();
        assert_eq!(a.len(), 6);
    }

    #[test]
    fn too_few_points_is_an_error() {
        assert!(kmeans(&[vec![1.0f64]], 2, 0, 10).is_err());
    }

    #[test]
    fn report_lists_every_member_once() {
        let pts: Vec<Vec<f32>> = (0..10).map(|i| vec![i as f32]).collect();
        let ids: Vec<String> = (0..10).map(|i| format!("i{i}")).collect();
        let r = kmeans(&pts, 3, 2, 20).unwrap();
        let rep = cluster_report(&ids, &r);
        let total: usize = rep.iter().map(|l| l.member_ids.len()).sum();
        assert_eq!(total, 10);
    }
}
