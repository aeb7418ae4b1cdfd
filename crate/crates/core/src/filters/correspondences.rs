//! Grid patch matching by normalized cross-correlation, plus match files.

use std::path::Path;

use super::homography::PointPair;
use crate::error::{Error, Result};
use crate::image::ImageBuffer;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchConfig {
    /// Grid points per axis.
    pub grid: usize,
    /// Patch half-width; patches are `(2r+1)^2`.
    pub patch_radius: usize,
    /// Search radius in the target around the source location.
    pub search_radius: usize,
    /// Matches scoring below this NCC are dropped.
    pub min_ncc: f64,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self { grid: 16, patch_radius: 6, search_radius: 8, min_ncc: 0.9 }
    }
}

struct Gray {
    w: usize,
    v: Vec<f64>,
}

impl Gray {
    fn at(&self, x: usize, y: usize) -> f64 {
        self.v[y * self.w + x]
    }
}

fn patch_stats(g: &Gray, cx: usize, cy: usize, r: usize) -> (f64, f64) {
    let n = ((2 * r + 1) * (2 * r + 1)) as f64;
    let (mut s, mut s2) = (0.0, 0.0);
    for y in cy - r..=cy + r {
        for x in cx - r..=cx + r {
            let v = g.at(x, y);
            s += v;
            s2 += v * v;
        }
    }
    let mean = s / n;
    (mean, (s2 / n - mean * mean).max(0.0))
}

fn ncc(a: &Gray, (ax, ay): (usize, usize), b: &Gray, (bx, by): (usize, usize), r: usize) -> f64 {
    let (ma, va) = patch_stats(a, ax, ay, r);
    let (mb, vb) = patch_stats(b, bx, by, r);
    if va < 1e-6 || vb < 1e-6 {
        return f64::NEG_INFINITY;
    }
    let n = ((2 * r + 1) * (2 * r + 1)) as f64;
    let mut acc = 0.0;
    for dy in 0..=2 * r {
        for dx in 0..=2 * r {
            acc += (a.at(ax - r + dx, ay - r + dy) - ma) * (b.at(bx - r + dx, by - r + dy) - mb);
        }
    }
    acc / (n * (va * vb).sqrt())
}

/// Vertex offset of the parabola through (-1, l), (0, c), (1, r).
fn parabolic_offset(l: f64, c: f64, r: f64) -> f64 {
    let denom = l - 2.0 * c + r;
    if !l.is_finite() || !r.is_finite() || denom >= -1e-12 {
        0.0
    } else {
        (0.5 * (l - r) / denom).clamp(-0.5, 0.5)
    }
}

/// Match a `grid x grid` lattice of source patches into `target` by exhaustive
/// NCC search, refined to subpixel precision. Flat patches and weak matches
/// are skipped.
pub fn grid_correspondences(source: &ImageBuffer, target: &ImageBuffer, cfg: &MatchConfig) -> Result<Vec<PointPair<f64>>> {
    if source.dims() != target.dims() {
        return Err(Error::DimensionMismatch(format!("{:?} vs {:?}", source.dims(), target.dims())));
    }
    let (w, h) = source.dims();
    let r = cfg.patch_radius;
    let s = cfg.search_radius;
    let margin = r + s + 1;
    if cfg.grid == 0 || w <= 2 * margin || h <= 2 * margin {
        return Err(Error::invalid(format!("image {w}x{h} too small for matching")));
    }
    let a = Gray { w, v: source.luma() };
    let b = Gray { w, v: target.luma() };
    let step = |n: usize, i: usize| {
        let span = (n - 1 - 2 * margin) as f64;
        margin + if cfg.grid == 1 { span as usize / 2 } else { (span * i as f64 / (cfg.grid - 1) as f64).round() as usize }
    };
    let mut out = Vec::new();
    for gy in 0..cfg.grid {
        for gx in 0..cfg.grid {
            let (cx, cy) = (step(w, gx), step(h, gy));
            let side = 2 * s + 1;
            let mut scores = vec![f64::NEG_INFINITY; side * side];
            let mut best = (f64::NEG_INFINITY, 0usize, 0usize);
            for j in 0..side {
                for i in 0..side {
                    let (tx, ty) = (cx + i - s, cy + j - s);
                    let v = ncc(&a, (cx, cy), &b, (tx, ty), r);
                    scores[j * side + i] = v;
                    if v > best.0 {
                        best = (v, i, j);
                    }
                }
            }
            let (score, i, j) = best;
            if score < cfg.min_ncc {
                continue;
            }
            let at = |i: usize, j: usize| scores[j * side + i];
            let ox = if i == 0 || i + 1 == side { 0.0 } else { parabolic_offset(at(i - 1, j), score, at(i + 1, j)) };
            let oy = if j == 0 || j + 1 == side { 0.0 } else { parabolic_offset(at(i, j - 1), score, at(i, j + 1)) };
            out.push(PointPair {
                src: [cx as f64, cy as f64],
                dst: [(cx + i - s) as f64 + ox, (cy + j - s) as f64 + oy],
            });
        }
    }
    Ok(out)
}

/// Read a JSON list of `[[x, y], [x', y']]` pairs.
pub fn read_match_file(path: &Path) -> Result<Vec<PointPair<f64>>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let pairs: Vec<PointPair<f64>> =
        serde_json::from_str(&text).map_err(|e| Error::Json { line: e.line(), message: e.to_string() })?;
    if let Some(p) = pairs.iter().find(|p| !p.src.iter().chain(&p.dst).all(|v| v.is_finite())) {
        return Err(Error::invalid(format!("non-finite correspondence {p:?}")));
    }
    Ok(pairs)
}

pub fn write_match_file(path: &Path, pairs: &[PointPair<f64>]) -> Result<()> {
    let bytes = serde_json::to_vec(pairs).map_err(|e| Error::invalid(e.to_string()))?;
    crate::manifest::write_atomic(path, &bytes)
}
