//! Baseline-JPEG round trip without entropy coding: JFIF colour transform,
//! 4:2:0 chroma, 8x8 DCT, quantization with the standard tables.

use std::sync::OnceLock;

use super::photometric::to_u8;
use crate::error::{Error, Result};
use crate::image::ImageBuffer;

#[rustfmt::skip]
const LUMA_BASE: [u16; 64] = [
    16, 11, 10, 16, 24, 40, 51, 61,
    12, 12, 14, 19, 26, 58, 60, 55,
    14, 13, 16, 24, 40, 57, 69, 56,
    14, 17, 22, 29, 51, 87, 80, 62,
    18, 22, 37, 56, 68, 109, 103, 77,
    24, 35, 55, 64, 81, 104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101,
    72, 92, 95, 98, 112, 100, 103, 99,
];

#[rustfmt::skip]
const CHROMA_BASE: [u16; 64] = [
    17, 18, 24, 47, 99, 99, 99, 99,
    18, 21, 26, 66, 99, 99, 99, 99,
    24, 26, 56, 99, 99, 99, 99, 99,
    47, 66, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99,
];

/// Row-major quantization tables for one quality setting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuantTables {
    pub luma: [u16; 64],
    pub chroma: [u16; 64],
}

fn scale_table(base: &[u16; 64], quality: u8) -> [u16; 64] {
    let q = u32::from(quality);
    let scale = if q < 50 { 5000 / q } else { 200 - 2 * q };
    base.map(|b| ((u32::from(b) * scale + 50) / 100).clamp(1, 255) as u16)
}

pub fn quant_tables(quality: u8) -> Result<QuantTables> {
    if !(1..=100).contains(&quality) {
        return Err(Error::invalid(format!("jpeg quality must be in 1..=100, got {quality}")));
    }
    Ok(QuantTables { luma: scale_table(&LUMA_BASE, quality), chroma: scale_table(&CHROMA_BASE, quality) })
}

fn cos_table() -> &'static [[f64; 8]; 8] {
    static T: OnceLock<[[f64; 8]; 8]> = OnceLock::new();
    T.get_or_init(|| {
        let mut t = [[0.0; 8]; 8];
        for (u, row) in t.iter_mut().enumerate() {
            let cu = if u == 0 { (0.5f64).sqrt() } else { 1.0 };
            for (x, v) in row.iter_mut().enumerate() {
                *v = 0.5 * cu * (((2 * x + 1) * u) as f64 * std::f64::consts::PI / 16.0).cos();
            }
        }
        t
    })
}

/// Orthonormal 2-D DCT-II of an 8x8 block.
fn dct8(block: &[f64; 64]) -> [f64; 64] {
    let t = cos_table();
    let mut tmp = [0.0; 64];
    for y in 0..8 {
        for u in 0..8 {
            tmp[y * 8 + u] = (0..8).map(|x| t[u][x] * block[y * 8 + x]).sum();
        }
    }
    let mut out = [0.0; 64];
    for v in 0..8 {
        for u in 0..8 {
            out[v * 8 + u] = (0..8).map(|y| t[v][y] * tmp[y * 8 + u]).sum();
        }
    }
    out
}

fn idct8(coef: &[f64; 64]) -> [f64; 64] {
    let t = cos_table();
    let mut tmp = [0.0; 64];
    for v in 0..8 {
        for x in 0..8 {
            tmp[v * 8 + x] = (0..8).map(|u| t[u][x] * coef[v * 8 + u]).sum();
        }
    }
    let mut out = [0.0; 64];
    for y in 0..8 {
        for x in 0..8 {
            out[y * 8 + x] = (0..8).map(|v| t[v][y] * tmp[v * 8 + x]).sum();
        }
    }
    out
}

/// Quantize and reconstruct one plane, edge-padded to whole blocks.
fn roundtrip_plane(plane: &[f64], w: usize, h: usize, table: &[u16; 64]) -> Vec<f64> {
    let (bw, bh) = (w.div_ceil(8), h.div_ceil(8));
    let mut out = vec![0.0; w * h];
    for by in 0..bh {
        for bx in 0..bw {
            let mut block = [0.0; 64];
            for y in 0..8 {
                for x in 0..8 {
                    let sx = (bx * 8 + x).min(w - 1);
                    let sy = (by * 8 + y).min(h - 1);
                    block[y * 8 + x] = plane[sy * w + sx] - 128.0;
                }
            }
            let mut coef = dct8(&block);
            for (c, &q) in coef.iter_mut().zip(table) {
                let q = f64::from(q);
                *c = (*c / q).round_ties_even() * q;
            }
            let rec = idct8(&coef);
            for y in 0..8 {
                for x in 0..8 {
                    let (ox, oy) = (bx * 8 + x, by * 8 + y);
                    if ox < w && oy < h {
                        out[oy * w + ox] = (rec[y * 8 + x] + 128.0).round_ties_even().clamp(0.0, 255.0);
                    }
                }
            }
        }
    }
    out
}

/// 2x2 box average (edge-replicated) to a half-resolution plane.
fn downsample(plane: &[f64], w: usize, h: usize) -> (Vec<f64>, usize, usize) {
    let (cw, ch) = (w.div_ceil(2), h.div_ceil(2));
    let mut out = vec![0.0; cw * ch];
    for y in 0..ch {
        for x in 0..cw {
            let mut acc = 0.0;
            for (dx, dy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                let sx = (2 * x + dx).min(w - 1);
                let sy = (2 * y + dy).min(h - 1);
                acc += plane[sy * w + sx];
            }
            out[y * cw + x] = acc / 4.0;
        }
    }
    (out, cw, ch)
}

/// Triangle-filter upsampling, then a per-block offset so that each 2x2
/// block averages back to its chroma sample. Box downsampling of the result
/// returns the input, which keeps re-encoding from smoothing chroma again.
fn upsample(plane: &[f64], cw: usize, ch: usize, w: usize, h: usize) -> Vec<f64> {
    let at = |x: isize, y: isize| {
        let x = x.clamp(0, cw as isize - 1) as usize;
        let y = y.clamp(0, ch as isize - 1) as usize;
        plane[y * cw + x]
    };
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let (cx, cy) = ((x / 2) as isize, (y / 2) as isize);
            let nx = if x % 2 == 0 { cx - 1 } else { cx + 1 };
            let ny = if y % 2 == 0 { cy - 1 } else { cy + 1 };
            out[y * w + x] = (9.0 * at(cx, cy) + 3.0 * at(nx, cy) + 3.0 * at(cx, ny) + at(nx, ny)) / 16.0;
        }
    }
    let (means, _, _) = downsample(&out, w, h);
    for y in 0..h {
        for x in 0..w {
            let i = (y / 2) * cw + x / 2;
            out[y * w + x] += plane[i] - means[i];
        }
    }
    out
}

/// Simulated JPEG compression at `quality` (1..=100).
pub fn jpeg_compress(img: &ImageBuffer, quality: u8) -> Result<ImageBuffer> {
    let tables = quant_tables(quality)?;
    let (w, h) = img.dims();
    if img.channels() == 1 {
        let plane: Vec<f64> = img.data().iter().map(|&v| f64::from(v)).collect();
        let rec = roundtrip_plane(&plane, w, h, &tables.luma);
        return ImageBuffer::from_raw(w, h, 1, rec.into_iter().map(to_u8).collect());
    }
    let n = w * h;
    let (mut yp, mut cb, mut cr) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for (i, p) in img.data().chunks_exact(3).enumerate() {
        let (r, g, b) = (f64::from(p[0]), f64::from(p[1]), f64::from(p[2]));
        yp[i] = 0.299 * r + 0.587 * g + 0.114 * b;
        cb[i] = -0.168_735_892 * r - 0.331_264_108 * g + 0.5 * b + 128.0;
        cr[i] = 0.5 * r - 0.418_687_589 * g - 0.081_312_411 * b + 128.0;
    }
    let y_rec = roundtrip_plane(&yp, w, h, &tables.luma);
    let mut chroma = Vec::with_capacity(2);
    for plane in [&cb, &cr] {
        let (small, cw, ch) = downsample(plane, w, h);
        let rec = roundtrip_plane(&small, cw, ch, &tables.chroma);
        chroma.push(upsample(&rec, cw, ch, w, h));
    }
    let mut data = Vec::with_capacity(3 * n);
    for i in 0..n {
        let (y, cb, cr) = (y_rec[i], chroma[0][i] - 128.0, chroma[1][i] - 128.0);
        data.push(to_u8(y + 1.402 * cr));
        data.push(to_u8(y - 0.344_136_286 * cb - 0.714_136_286 * cr));
        data.push(to_u8(y + 1.772 * cb));
    }
    ImageBuffer::from_raw(w, h, 3, data)
}

/// Compress source and target with the same quality.
pub fn jpeg_sync(source: &ImageBuffer, target: &ImageBuffer, quality: u8) -> Result<(ImageBuffer, ImageBuffer)> {
    if source.dims() != target.dims() {
        return Err(Error::DimensionMismatch(format!(
            "jpeg_sync source {:?} vs target {:?}",
            source.dims(),
            target.dims()
        )));
    }
    Ok((jpeg_compress(source, quality)?, jpeg_compress(target, quality)?))
}
