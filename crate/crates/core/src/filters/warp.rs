use crate::error::{Error, Result};
use crate::image::ImageBuffer;

use super::homography::Homography;

/// Bilinear sample at `(x, y)` in pixel-centre coordinates; `None` outside
/// the image.
fn sample_bilinear(img: &ImageBuffer, x: f64, y: f64, c: usize) -> Option<f64> {
    let (w, h) = (img.width() as f64, img.height() as f64);
    const SLACK: f64 = 1e-9;
    if !(x >= -SLACK && y >= -SLACK && x <= w - 1.0 + SLACK && y <= h - 1.0 + SLACK) {
        return None;
    }
    let x = x.clamp(0.0, w - 1.0);
    let y = y.clamp(0.0, h - 1.0);
    let (x0, y0) = (x.floor() as usize, y.floor() as usize);
    let (fx, fy) = (x - x0 as f64, y - y0 as f64);
    let x1 = (x0 + 1).min(img.width() - 1);
    let y1 = (y0 + 1).min(img.height() - 1);
    let v = |xx, yy| f64::from(img.get(xx, yy, c));
    Some(
        (1.0 - fx) * (1.0 - fy) * v(x0, y0)
            + fx * (1.0 - fy) * v(x1, y0)
            + (1.0 - fx) * fy * v(x0, y1)
            + fx * fy * v(x1, y1),
    )
}

fn resample(src: &ImageBuffer, map: &Homography<f64>, (ow, oh): (usize, usize)) -> Result<ImageBuffer> {
    let c = src.channels();
    ImageBuffer::from_fn(ow, oh, c, |x, y, ch| {
        map.apply(x as f64, y as f64)
            .and_then(|(sx, sy)| sample_bilinear(src, sx, sy, ch))
            .map_or(0, |v| v.round_ties_even().clamp(0.0, 255.0) as u8)
    })
}

/// Bring `target` into the source frame: output pixel `p` samples `target`
/// at `H p`, where `H` maps source coordinates to target coordinates.
/// Samples falling outside `target` are black.
pub fn align_pair(target: &ImageBuffer, h: &Homography<f64>, out_dims: (usize, usize)) -> Result<ImageBuffer> {
    h.inverse()
        .map_err(|_| Error::Degenerate("cannot align with a non-invertible homography".into()))?;
    resample(target, h, out_dims)
}

/// Forward warp: the image as seen after mapping through `h`.
pub fn warp_image(image: &ImageBuffer, h: &Homography<f64>, out_dims: (usize, usize)) -> Result<ImageBuffer> {
    resample(image, &h.inverse()?, out_dims)
}

/// True when no image corner moves more than `tol_px` under `h`.
pub fn is_near_identity(h: &Homography<f64>, (w, hgt): (usize, usize), tol_px: f64) -> bool {
    let (w, hgt) = (w as f64, hgt as f64);
    [(0.0, 0.0), (w, 0.0), (0.0, hgt), (w, hgt)].iter().all(|&(x, y)| match h.apply(x, y) {
        Some((u, v)) => ((u - x).powi(2) + (v - y).powi(2)).sqrt() <= tol_px,
        None => false,
    })
}
