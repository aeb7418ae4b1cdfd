//! No-reference blur score (re-blur attenuation of neighbour differences).

use crate::error::{Error, Result};
use crate::image::{reflect_index as reflect, ImageBuffer};

/// Re-blur kernel length.
pub const BLUR_KERNEL: usize = 9;

/// Box filter along one axis with half-sample symmetric borders.
fn box_filter(img: &[f64], w: usize, h: usize, horizontal: bool) -> Vec<f64> {
    let half = (BLUR_KERNEL / 2) as isize;
    let mut out = vec![0.0; img.len()];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for k in -half..=half {
                let (xx, yy) = if horizontal {
                    (reflect(x as isize + k, w), y)
                } else {
                    (x, reflect(y as isize + k, h))
                };
                acc += img[yy * w + xx];
            }
            out[y * w + x] = acc / BLUR_KERNEL as f64;
        }
    }
    out
}

/// Blur score in `[0, 1]`; higher is blurrier. Zero-variation images score 0.
pub fn blur_effect(image: &ImageBuffer) -> Result<f64> {
    let (w, h) = image.dims();
    if w.min(h) < 8 {
        return Err(Error::invalid(format!("blur_effect needs at least 8x8 pixels, got {w}x{h}")));
    }
    let gray: Vec<f64> = if image.channels() == 1 {
        image.data().iter().map(|&v| f64::from(v) / 255.0).collect()
    } else {
        image
            .data()
            .chunks_exact(3)
            .map(|p| (0.2125 * f64::from(p[0]) + 0.7154 * f64::from(p[1]) + 0.0721 * f64::from(p[2])) / 255.0)
            .collect()
    };
    let mut scores = [0.0f64; 2];
    for (axis, score) in scores.iter_mut().enumerate() {
        // axis 0 differences run down columns, axis 1 along rows
        let horizontal = axis == 1;
        let filtered = box_filter(&gray, w, h, horizontal);
        let (mut m1, mut m2) = (0.0, 0.0);
        let (dw, dh) = if horizontal { (w - 1, h) } else { (w, h - 1) };
        for y in 0..dh {
            for x in 0..dw {
                // interior crop [2, n-1) on both axes of the original shape
                if !(2..h - 1).contains(&y) || !(2..w - 1).contains(&x) {
                    continue;
                }
                let (a, b) = if horizontal {
                    (y * w + x, y * w + x + 1)
                } else {
                    (y * w + x, (y + 1) * w + x)
                };
                let sharp = (gray[b] - gray[a]).abs();
                let blurred = (filtered[b] - filtered[a]).abs();
                m1 += sharp;
                m2 += (sharp - blurred).max(0.0);
            }
        }
        *score = if m1 == 0.0 { 0.0 } else { (m1 - m2).abs() / m1 };
    }
    Ok(scores[0].max(scores[1]))
}
