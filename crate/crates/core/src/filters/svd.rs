//! One-sided Jacobi (Hestenes) SVD, enough for the small dense systems of
//! homography estimation.

use crate::scalar::Scalar;

/// Singular values (unsorted, one per column) and right singular vectors
/// (`v[i][j]` is component `i` of vector `j`).
#[derive(Debug, Clone)]
pub struct Svd<T> {
    pub singular_values: Vec<T>,
    pub v: Vec<Vec<T>>,
}

impl<T: Scalar> Svd<T> {
    /// Columns of `v` ordered by ascending singular value.
    pub fn ascending(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.singular_values.len()).collect();
        idx.sort_by(|&a, &b| {
            self.singular_values[a]
                .partial_cmp(&self.singular_values[b])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        idx
    }

    pub fn vector(&self, col: usize) -> Vec<T> {
        self.v.iter().map(|row| row[col]).collect()
    }
}

const MAX_SWEEPS: usize = 80;

/// `a` is row-major with `cols` columns. Rows fewer than columns are fine;
/// the missing rows behave as zeros.
pub fn jacobi_svd<T: Scalar>(a: &[Vec<T>], cols: usize) -> Svd<T> {
    // work column-major for cache-friendly column rotations
    let rows = a.len();
    let mut colv: Vec<Vec<T>> = (0..cols).map(|j| (0..rows).map(|i| a[i][j]).collect()).collect();
    let mut v: Vec<Vec<T>> = (0..cols)
        .map(|i| (0..cols).map(|j| if i == j { T::one() } else { T::zero() }).collect())
        .collect();
    let eps = T::epsilon();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let (mut alpha, mut beta, mut gamma) = (T::zero(), T::zero(), T::zero());
                for i in 0..rows {
                    let (x, y) = (colv[p][i], colv[q][i]);
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                if gamma == T::zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for i in 0..rows {
                    let (x, y) = (colv[p][i], colv[q][i]);
                    colv[p][i] = c * x - s * y;
                    colv[q][i] = s * x + c * y;
                }
                for row in v.iter_mut() {
                    let (x, y) = (row[p], row[q]);
                    row[p] = c * x - s * y;
                    row[q] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let singular_values = colv
        .iter()
        .map(|c| c.iter().map(|x| *x * *x).sum::<T>().sqrt())
        .collect();
    Svd { singular_values, v }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_null_vector() {
        // rank-2 3x3 matrix with null vector (1, -2, 1)/sqrt(6)
        let a: Vec<Vec<f64>> = vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0], vec![7.0, 8.0, 9.0]];
        let svd = jacobi_svd(&a, 3);
        let k = svd.ascending()[0];
        assert!(svd.singular_values[k] < 1e-12);
        let v = svd.vector(k);
        let s = v[0].signum();
        let want = [1.0, -2.0, 1.0].map(|x: f64| x / 6f64.sqrt());
        for (a, b) in v.iter().zip(want) {
            assert!((a * s - b).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_values_of_diagonal() {
        let a = vec![vec![3.0f32, 0.0], vec![0.0, -2.0]];
        let svd = jacobi_svd(&a, 2);
        let mut s = svd.singular_values.clone();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(s, vec![2.0, 3.0]);
    }
}
