//! Procedural test scenes. Only integer hashing and polynomial arithmetic
//! are used, so output bytes do not depend on the platform's libm.

use crate::image::ImageBuffer;

/// Default scene size.
pub const NATURAL_DIMS: (usize, usize) = (256, 192);

fn hash2(x: i64, y: i64, salt: u64) -> f64 {
    let mut h = (x as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (y as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F)
        ^ salt.wrapping_mul(0x1656_67B1_9E37_79F9);
    h ^= h >> 33;
    h = h.wrapping_mul(0xFF51_AFD7_ED55_8CCD);
    h ^= h >> 33;
    (h >> 11) as f64 / (1u64 << 53) as f64
}

fn smoothstep(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

/// Value noise in `[0, 1]` with lattice spacing `cell`.
fn value_noise(x: f64, y: f64, cell: f64, salt: u64) -> f64 {
    let (gx, gy) = (x / cell, y / cell);
    let (x0, y0) = (gx.floor(), gy.floor());
    let (tx, ty) = (smoothstep(gx - x0), smoothstep(gy - y0));
    let (ix, iy) = (x0 as i64, y0 as i64);
    let a = hash2(ix, iy, salt);
    let b = hash2(ix + 1, iy, salt);
    let c = hash2(ix, iy + 1, salt);
    let d = hash2(ix + 1, iy + 1, salt);
    let top = a + (b - a) * tx;
    let bot = c + (d - c) * tx;
    top + (bot - top) * ty
}

fn fractal(x: f64, y: f64, salt: u64) -> f64 {
    let mut acc = 0.0;
    let mut amp = 0.5;
    let mut norm = 0.0;
    for (i, cell) in [48.0, 24.0, 12.0, 6.0, 3.0].into_iter().enumerate() {
        acc += amp * value_noise(x, y, cell, salt + i as u64);
        norm += amp;
        amp *= 0.6;
    }
    acc / norm
}

fn lerp3(a: [f64; 3], b: [f64; 3], t: f64) -> [f64; 3] {
    [a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t, a[2] + (b[2] - a[2]) * t]
}

fn scale3(c: [f64; 3], f: f64) -> [f64; 3] {
    c.map(|v| v * f)
}

/// Scene colour at a continuous position. Fine texture modulates brightness
/// only; hue varies on coarse scales, as in photographs.
fn scene(fx: f64, fy: f64, w: f64, h: f64, variant: u64) -> [f64; 3] {
    let (u, v) = (fx / w, fy / h);
    let s = |salt: u64| salt + variant.wrapping_mul(1000);
    let mut c = lerp3([70.0, 120.0, 200.0], [190.0, 215.0, 235.0], v / 0.6);
    let cloud = fractal(fx * 1.5, fy * 3.0, s(7));
    c = lerp3(c, [245.0, 245.0, 250.0], ((cloud - 0.55) * 3.0).clamp(0.0, 0.7));
    let (dx, dy) = (u - 0.78, v - 0.18);
    let r2 = dx * dx + dy * dy;
    if r2 < 0.006 {
        let t = ((0.006 - r2) / 0.002).min(1.0);
        c = lerp3(c, [255.0, 236.0, 170.0], t);
    }
    let far = 0.45 + 0.12 * (value_noise(fx, 0.0, 40.0, s(11)) - 0.5) + 0.05 * (u - 0.5) * (u - 0.5);
    if v > far {
        let hue = value_noise(fx, fy, 24.0, s(21));
        let tex = fractal(fx, fy, s(22));
        c = scale3(lerp3([80.0, 110.0, 120.0], [110.0, 130.0, 125.0], hue), 0.8 + 0.4 * tex);
    }
    let near = 0.58 + 0.15 * (value_noise(fx, 0.0, 64.0, s(31)) - 0.5);
    if v > near {
        let hue = value_noise(fx, fy, 32.0, s(41));
        let tex = fractal(fx * 1.3, fy * 1.3, s(42));
        let grain = value_noise(fx, fy, 2.0, s(43));
        c = lerp3([55.0, 100.0, 40.0], [125.0, 135.0, 55.0], hue);
        c = scale3(c, 0.7 + 0.45 * tex + 0.2 * (grain - 0.5));
    }
    let lake_top = 0.80;
    if v > lake_top && (u - 0.35).abs() < 0.25 - (v - lake_top) * 0.2 {
        let ripple = value_noise(fx * 0.5, fy * 4.0, 6.0, s(51));
        c = scale3([60.0, 105.0, 165.0], 0.75 + 0.5 * ripple);
    }
    c
}

/// 5-tap binomial low-pass along both axes, clamped borders.
fn binomial_blur(plane: &[f64], w: usize, h: usize) -> Vec<f64> {
    const K: [f64; 5] = [1.0, 4.0, 6.0, 4.0, 1.0];
    let clamp = |i: isize, n: usize| i.clamp(0, n as isize - 1) as usize;
    let mut tmp = vec![0.0; plane.len()];
    for y in 0..h {
        for x in 0..w {
            tmp[y * w + x] =
                K.iter().enumerate().map(|(k, wt)| wt * plane[y * w + clamp(x as isize + k as isize - 2, w)]).sum::<f64>() / 16.0;
        }
    }
    let mut out = vec![0.0; plane.len()];
    for y in 0..h {
        for x in 0..w {
            out[y * w + x] =
                K.iter().enumerate().map(|(k, wt)| wt * tmp[clamp(y as isize + k as isize - 2, h) * w + x]).sum::<f64>() / 16.0;
        }
    }
    out
}

/// A landscape: graded sky with clouds and a sun, two textured hill layers
/// and a lake. Each pixel averages a 2x2 grid of scene samples, and colour
/// difference is band-limited the way a camera pipeline leaves it.
pub fn natural_image(width: usize, height: usize) -> ImageBuffer {
    natural_image_variant(width, height, 0)
}

/// Same layout as [`natural_image`] with the noise fields reseeded, so each
/// variant is a different landscape.
pub fn natural_image_variant(width: usize, height: usize, variant: u64) -> ImageBuffer {
    let (w, h) = (width as f64, height as f64);
    let mut rgb = vec![[0.0f64; 3]; width * height];
    for y in 0..height {
        for x in 0..width {
            let mut acc = [0.0; 3];
            for (ox, oy) in [(0.25, 0.25), (0.75, 0.25), (0.25, 0.75), (0.75, 0.75)] {
                let c = scene(x as f64 + ox, y as f64 + oy, w, h, variant);
                for i in 0..3 {
                    acc[i] += c[i] / 4.0;
                }
            }
            rgb[y * width + x] = acc;
        }
    }
    let luma: Vec<f64> = rgb.iter().map(|p| 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]).collect();
    let diff_r: Vec<f64> = rgb.iter().zip(&luma).map(|(p, l)| p[0] - l).collect();
    let diff_b: Vec<f64> = rgb.iter().zip(&luma).map(|(p, l)| p[2] - l).collect();
    let (diff_r, diff_b) = (binomial_blur(&diff_r, width, height), binomial_blur(&diff_b, width, height));
    for i in 0..rgb.len() {
        let (l, r, b) = (luma[i], luma[i] + diff_r[i], luma[i] + diff_b[i]);
        rgb[i] = [r, (l - 0.299 * r - 0.114 * b) / 0.587, b];
    }
    ImageBuffer::from_fn(width, height, 3, |x, y, ch| rgb[y * width + x][ch].round_ties_even().clamp(0.0, 255.0) as u8)
        .expect("scene dimensions are valid")
}

/// The default-size scene.
pub fn natural_test_image() -> ImageBuffer {
    natural_image(NATURAL_DIMS.0, NATURAL_DIMS.1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scene_is_deterministic_and_textured() {
        let a = natural_test_image();
        assert_eq!(a, natural_test_image());
        assert_eq!(a.dims(), NATURAL_DIMS);
        let mut distinct = std::collections::BTreeSet::new();
        for p in a.data().chunks(3) {
            distinct.insert((p[0], p[1], p[2]));
        }
        assert!(distinct.len() > 2000);
    }
}
