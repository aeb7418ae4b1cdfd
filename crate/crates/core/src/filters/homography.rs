//! Projective transforms: normalized DLT and seeded RANSAC.

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seed::rng_from_seed;

use super::svd::jacobi_svd;

/// 3x3 projective transform with `m[2][2] == 1` and `|det| > 1e-12`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Homography<T> {
    m: [[T; 3]; 3],
}

pub const MIN_ABS_DET: f64 = 1e-12;

fn det3<T: Scalar>(m: &[[T; 3]; 3]) -> T {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn matmul<T: Scalar>(a: &[[T; 3]; 3], b: &[[T; 3]; 3]) -> [[T; 3]; 3] {
    let mut out = [[T::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

impl<T: Scalar> Homography<T> {
    /// Scale so the bottom-right entry is 1 and check invertibility.
    pub fn new(m: [[T; 3]; 3]) -> Result<Self> {
        if m.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Degenerate("non-finite homography entry".into()));
        }
        let s = m[2][2];
        let scale = m.iter().flatten().fold(T::zero(), |a, v| a.max(v.abs()));
        if s.abs() <= scale * T::epsilon() * T::lit(16.0) {
            return Err(Error::Degenerate("homography with H[2][2] = 0 cannot be normalized".into()));
        }
        let mut n = m;
        for v in n.iter_mut().flatten() {
            *v /= s;
        }
        if det3(&n).abs().to_f64_lossy() <= MIN_ABS_DET {
            return Err(Error::Degenerate("homography is not invertible".into()));
        }
        Ok(Self { m: n })
    }

    pub fn identity() -> Self {
        let (o, z) = (T::one(), T::zero());
        Self {
            m: [[o, z, z], [z, o, z], [z, z, o]],
        }
    }

    pub fn translation(dx: T, dy: T) -> Self {
        let (o, z) = (T::one(), T::zero());
        Self {
            m: [[o, z, dx], [z, o, dy], [z, z, o]],
        }
    }

    pub fn matrix(&self) -> &[[T; 3]; 3] {
        &self.m
    }

    pub fn determinant(&self) -> T {
        det3(&self.m)
    }

    /// Map a point; `None` when it lands on the line at infinity.
    pub fn apply(&self, x: T, y: T) -> Option<(T, T)> {
        let m = &self.m;
        let w = m[2][0] * x + m[2][1] * y + m[2][2];
        if w == T::zero() || !w.is_finite() {
            return None;
        }
        Some((
            (m[0][0] * x + m[0][1] * y + m[0][2]) / w,
            (m[1][0] * x + m[1][1] * y + m[1][2]) / w,
        ))
    }

    pub fn inverse(&self) -> Result<Self> {
        let m = &self.m;
        let adj = [
            [
                m[1][1] * m[2][2] - m[1][2] * m[2][1],
                m[0][2] * m[2][1] - m[0][1] * m[2][2],
                m[0][1] * m[1][2] - m[0][2] * m[1][1],
            ],
            [
                m[1][2] * m[2][0] - m[1][0] * m[2][2],
                m[0][0] * m[2][2] - m[0][2] * m[2][0],
                m[0][2] * m[1][0] - m[0][0] * m[1][2],
            ],
            [
                m[1][0] * m[2][1] - m[1][1] * m[2][0],
                m[0][1] * m[2][0] - m[0][0] * m[2][1],
                m[0][0] * m[1][1] - m[0][1] * m[1][0],
            ],
        ];
        Self::new(adj)
    }

    pub fn compose(&self, other: &Self) -> Result<Self> {
        Self::new(matmul(&self.m, &other.m))
    }

    /// Largest elementwise difference relative to the largest entry.
    pub fn relative_error(&self, other: &Self) -> T {
        let mut num = T::zero();
        let mut den = T::zero();
        for (a, b) in self.m.iter().flatten().zip(other.m.iter().flatten()) {
            num = num.max((*a - *b).abs());
            den = den.max(b.abs());
        }
        num / den
    }

    pub fn cast<U: Scalar>(&self) -> Homography<U> {
        let mut m = [[U::zero(); 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = U::lit(self.m[i][j].to_f64_lossy());
            }
        }
        Homography { m }
    }
}

/// A point in the source image and its match in the target image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "([T; 2], [T; 2])", into = "([T; 2], [T; 2])")]
#[serde(bound(serialize = "T: Serialize + Copy", deserialize = "T: Deserialize<'de>"))]
pub struct PointPair<T> {
    pub src: [T; 2],
    pub dst: [T; 2],
}

impl<T> From<([T; 2], [T; 2])> for PointPair<T> {
    fn from((src, dst): ([T; 2], [T; 2])) -> Self {
        Self { src, dst }
    }
}

impl<T> From<PointPair<T>> for ([T; 2], [T; 2]) {
    fn from(p: PointPair<T>) -> Self {
        (p.src, p.dst)
    }
}

pub type Correspondences<T> = Vec<PointPair<T>>;

/// Hartley normalization: centroid to origin, mean distance to sqrt(2).
fn normalizer<T: Scalar>(pts: impl Iterator<Item = [T; 2]> + Clone) -> Option<[[T; 3]; 3]> {
    let n = T::from_usize_lossy(pts.clone().count());
    let (sx, sy) = pts.clone().fold((T::zero(), T::zero()), |(a, b), p| (a + p[0], b + p[1]));
    let (cx, cy) = (sx / n, sy / n);
    let mean = pts
        .map(|p| ((p[0] - cx).powi(2) + (p[1] - cy).powi(2)).sqrt())
        .sum::<T>()
        / n;
    if !(mean > T::zero()) {
        return None;
    }
    let s = T::lit(std::f64::consts::SQRT_2) / mean;
    let z = T::zero();
    Some([[s, z, -s * cx], [z, s, -s * cy], [z, z, T::one()]])
}

fn apply_raw<T: Scalar>(m: &[[T; 3]; 3], p: [T; 2]) -> [T; 2] {
    let w = m[2][0] * p[0] + m[2][1] * p[1] + m[2][2];
    [
        (m[0][0] * p[0] + m[0][1] * p[1] + m[0][2]) / w,
        (m[1][0] * p[0] + m[1][1] * p[1] + m[1][2]) / w,
    ]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DltEstimate<T> {
    pub homography: Homography<T>,
    /// Root-mean-square forward reprojection error in pixels.
    pub rmse: T,
}

/// Forward reprojection RMSE of `h` over `c`.
pub fn reprojection_rmse<T: Scalar>(h: &Homography<T>, c: &[PointPair<T>]) -> T {
    let mut sse = T::zero();
    for p in c {
        match h.apply(p.src[0], p.src[1]) {
            Some((x, y)) => sse += (x - p.dst[0]).powi(2) + (y - p.dst[1]).powi(2),
            None => return T::infinity(),
        }
    }
    (sse / T::from_usize_lossy(c.len())).sqrt()
}

/// Normalized DLT over all correspondences (least squares via the
/// smallest right singular vector).
pub fn estimate_homography_dlt<T: Scalar>(c: &[PointPair<T>]) -> Result<DltEstimate<T>> {
    if c.len() < 4 {
        return Err(Error::Degenerate(format!("need at least 4 correspondences, got {}", c.len())));
    }
    if c.iter().any(|p| p.src.iter().chain(&p.dst).any(|v| !v.is_finite())) {
        return Err(Error::invalid("non-finite correspondence"));
    }
    let ts = normalizer(c.iter().map(|p| p.src)).ok_or_else(|| Error::Degenerate("coincident source points".into()))?;
    let td = normalizer(c.iter().map(|p| p.dst)).ok_or_else(|| Error::Degenerate("coincident target points".into()))?;
    let (o, z) = (T::one(), T::zero());
    let mut a = Vec::with_capacity(2 * c.len());
    for p in c {
        let [x, y] = apply_raw(&ts, p.src);
        let [u, v] = apply_raw(&td, p.dst);
        a.push(vec![-x, -y, -o, z, z, z, u * x, u * y, u]);
        a.push(vec![z, z, z, -x, -y, -o, v * x, v * y, v]);
    }
    let svd = jacobi_svd(&a, 9);
    let order = svd.ascending();
    let smax = svd.singular_values[order[8]];
    // a second (near-)zero singular value means the null space is not 1-D
    let rank_tol = T::epsilon().sqrt() * T::lit(10.0);
    if smax == T::zero() || svd.singular_values[order[1]] <= rank_tol * smax {
        return Err(Error::Degenerate("rank-deficient correspondence configuration".into()));
    }
    let h = svd.vector(order[0]);
    let hn = [[h[0], h[1], h[2]], [h[3], h[4], h[5]], [h[6], h[7], h[8]]];
    let td_inv = Homography::new(td)?.inverse()?;
    let homography = Homography::new(matmul(&matmul(td_inv.matrix(), &hn), &ts))?;
    let rmse = reprojection_rmse(&homography, c);
    Ok(DltEstimate { homography, rmse })
}

/// Exact 4-point solve with `h33 = 1`, in normalized coordinates.
fn minimal_solve<T: Scalar>(c: [&PointPair<T>; 4]) -> Option<Homography<T>> {
    let ts = normalizer(c.iter().map(|p| p.src))?;
    let td = normalizer(c.iter().map(|p| p.dst))?;
    let mut m = [[T::zero(); 9]; 8];
    for (k, p) in c.iter().enumerate() {
        let [x, y] = apply_raw(&ts, p.src);
        let [u, v] = apply_raw(&td, p.dst);
        m[2 * k] = [x, y, T::one(), T::zero(), T::zero(), T::zero(), -u * x, -u * y, u];
        m[2 * k + 1] = [T::zero(), T::zero(), T::zero(), x, y, T::one(), -v * x, -v * y, v];
    }
    // Gaussian elimination with partial pivoting on the augmented system
    for col in 0..8 {
        let piv = (col..8).max_by(|&a, &b| m[a][col].abs().partial_cmp(&m[b][col].abs()).unwrap())?;
        if m[piv][col].abs() < T::lit(1e-10) {
            return None;
        }
        m.swap(col, piv);
        for r in (col + 1)..8 {
            let f = m[r][col] / m[col][col];
            for k in col..9 {
                let sub = f * m[col][k];
                m[r][k] -= sub;
            }
        }
    }
    let mut h = [T::zero(); 8];
    for r in (0..8).rev() {
        let mut acc = m[r][8];
        for k in (r + 1)..8 {
            acc -= m[r][k] * h[k];
        }
        h[r] = acc / m[r][r];
    }
    let hn = [[h[0], h[1], h[2]], [h[3], h[4], h[5]], [h[6], h[7], T::one()]];
    let td_inv = Homography::new(td).ok()?.inverse().ok()?;
    Homography::new(matmul(&matmul(td_inv.matrix(), &hn), &ts)).ok()
}

fn nearly_collinear<T: Scalar>(a: [T; 2], b: [T; 2], c: [T; 2]) -> bool {
    let (ux, uy) = (b[0] - a[0], b[1] - a[1]);
    let (vx, vy) = (c[0] - a[0], c[1] - a[1]);
    let cross = (ux * vy - uy * vx).abs();
    let scale = (ux * ux + uy * uy).sqrt() * (vx * vx + vy * vy).sqrt();
    cross <= scale * T::lit(1e-6)
}

fn degenerate_sample<T: Scalar>(s: [&PointPair<T>; 4]) -> bool {
    const TRIPLES: [[usize; 3]; 4] = [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]];
    TRIPLES.iter().any(|t| {
        nearly_collinear(s[t[0]].src, s[t[1]].src, s[t[2]].src)
            || nearly_collinear(s[t[0]].dst, s[t[1]].dst, s[t[2]].dst)
    })
}

/// `sqrt(d(x', Hx)^2 + d(x, H^-1 x')^2)`.
pub fn symmetric_transfer_error<T: Scalar>(h: &Homography<T>, h_inv: &Homography<T>, p: &PointPair<T>) -> T {
    let fwd = h.apply(p.src[0], p.src[1]);
    let bwd = h_inv.apply(p.dst[0], p.dst[1]);
    match (fwd, bwd) {
        (Some((x, y)), Some((u, v))) => {
            ((x - p.dst[0]).powi(2) + (y - p.dst[1]).powi(2) + (u - p.src[0]).powi(2) + (v - p.src[1]).powi(2))
                .sqrt()
        }
        _ => T::infinity(),
    }
}

fn consensus<T: Scalar>(h: &Homography<T>, c: &[PointPair<T>], tol: T) -> Vec<bool> {
    let Ok(h_inv) = h.inverse() else {
        return vec![false; c.len()];
    };
    c.iter().map(|p| symmetric_transfer_error(h, &h_inv, p) < tol).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RansacConfig {
    pub iterations: usize,
    /// Symmetric transfer error bound, pixels.
    pub inlier_tol: f64,
    pub seed: u64,
}

pub const DEFAULT_RANSAC_ITERS: usize = 2000;
pub const DEFAULT_INLIER_TOL: f64 = 1.5;

impl Default for RansacConfig {
    fn default() -> Self {
        Self {
            iterations: DEFAULT_RANSAC_ITERS,
            inlier_tol: DEFAULT_INLIER_TOL,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RansacEstimate<T> {
    pub homography: Homography<T>,
    pub inliers: Vec<bool>,
    pub rmse: T,
}

impl<T> RansacEstimate<T> {
    pub fn inlier_count(&self) -> usize {
        self.inliers.iter().filter(|&&b| b).count()
    }
}

/// Support a hypothesis needs beyond its own 4-point sample, which it
/// always fits exactly.
pub fn required_support(n: usize) -> usize {
    if n >= 8 {
        4
    } else {
        n.saturating_sub(4)
    }
}

/// Seeded 4-point RANSAC; the model is a DLT refit on the largest
/// consensus set.
pub fn ransac_homography<T: Scalar>(c: &[PointPair<T>], config: &RansacConfig) -> Result<RansacEstimate<T>> {
    let n = c.len();
    if n < 4 {
        return Err(Error::Degenerate(format!("need at least 4 correspondences, got {n}")));
    }
    let tol = T::lit(config.inlier_tol);
    let mut rng = rng_from_seed(config.seed);
    let mut best: Option<(usize, Vec<bool>)> = None;
    for _ in 0..config.iterations {
        let idx = sample(&mut rng, n, 4);
        let s = [&c[idx.index(0)], &c[idx.index(1)], &c[idx.index(2)], &c[idx.index(3)]];
        if degenerate_sample(s) {
            continue;
        }
        let Some(h) = minimal_solve(s) else { continue };
        let mask = consensus(&h, c, tol);
        let count = mask.iter().filter(|&&b| b).count();
        if best.as_ref().is_none_or(|(b, _)| count > *b) {
            best = Some((count, mask));
        }
    }
    let Some((count, mut mask)) = best else {
        return Err(Error::NoModel("no non-degenerate sample".into()));
    };
    if count < 4 + required_support(n) {
        return Err(Error::NoModel(format!("largest consensus set has {count} of {n} points")));
    }
    let subset = |m: &[bool]| -> Vec<PointPair<T>> {
        c.iter().zip(m).filter(|(_, &k)| k).map(|(p, _)| *p).collect()
    };
    let mut fit = estimate_homography_dlt(&subset(&mask))?;
    for _ in 0..5 {
        let grown = consensus(&fit.homography, c, tol);
        let grown_count = grown.iter().filter(|&&b| b).count();
        if grown == mask || grown_count < mask.iter().filter(|&&b| b).count() {
            break;
        }
        match estimate_homography_dlt(&subset(&grown)) {
            Ok(next) => {
                fit = next;
                mask = grown;
            }
            Err(_) => break,
        }
    }
    Ok(RansacEstimate {
        homography: fit.homography,
        rmse: fit.rmse,
        inliers: mask,
    })
}
