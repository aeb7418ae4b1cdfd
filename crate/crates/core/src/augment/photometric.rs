use rand::Rng;
use rand_distr::{Dirichlet, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{reflect_index, ImageBuffer};
use crate::seed::{derive_seed, rng_from_seed};

pub(crate) fn to_u8(v: f64) -> u8 {
    v.round_ties_even().clamp(0.0, 255.0) as u8
}

fn map_pixels(img: &ImageBuffer, mut f: impl FnMut([f64; 3]) -> [f64; 3]) -> ImageBuffer {
    let mut out = img.clone();
    if img.channels() == 1 {
        for v in out.data_mut() {
            let g = f64::from(*v);
            *v = to_u8(f([g, g, g])[0]);
        }
    } else {
        for p in out.data_mut().chunks_exact_mut(3) {
            let q = f([f64::from(p[0]), f64::from(p[1]), f64::from(p[2])]);
            for (d, s) in p.iter_mut().zip(q) {
                *d = to_u8(s);
            }
        }
    }
    out
}

fn luma601(p: [f64; 3]) -> f64 {
    0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]
}

/// Separable Gaussian blur, kernel radius `ceil(3 sigma)`, mirrored borders.
pub fn gaussian_blur(img: &ImageBuffer, sigma: f64) -> Result<ImageBuffer> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!("blur sigma must be positive, got {sigma}")));
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let mut kernel: Vec<f64> = (-radius..=radius).map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp()).collect();
    let total: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|k| *k /= total);

    let (w, h, c) = (img.width(), img.height(), img.channels());
    let src: Vec<f64> = img.data().iter().map(|&v| f64::from(v)).collect();
    let mut tmp = vec![0.0; src.len()];
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                let mut acc = 0.0;
                for (k, wt) in kernel.iter().enumerate() {
                    let xx = reflect_index(x as isize + k as isize - radius, w);
                    acc += wt * src[(y * w + xx) * c + ch];
                }
                tmp[(y * w + x) * c + ch] = acc;
            }
        }
    }
    let mut out = vec![0u8; src.len()];
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                let mut acc = 0.0;
                for (k, wt) in kernel.iter().enumerate() {
                    let yy = reflect_index(y as isize + k as isize - radius, h);
                    acc += wt * tmp[(yy * w + x) * c + ch];
                }
                out[(y * w + x) * c + ch] = to_u8(acc);
            }
        }
    }
    ImageBuffer::from_raw(w, h, c, out)
}

/// Additive Gaussian noise; `sigma` is a fraction of full scale.
pub fn add_gaussian_noise(img: &ImageBuffer, sigma: f64, seed: u64) -> Result<ImageBuffer> {
    let normal = Normal::new(0.0, sigma * 255.0).map_err(|e| Error::invalid(format!("noise sigma {sigma}: {e}")))?;
    let mut rng = rng_from_seed(seed);
    let mut out = img.clone();
    for v in out.data_mut() {
        *v = to_u8(f64::from(*v) + normal.sample(&mut rng));
    }
    Ok(out)
}

/// Blend towards the classic sepia matrix by `strength` in `[0, 1]`.
pub fn sepia(img: &ImageBuffer, strength: f64) -> Result<ImageBuffer> {
    if !(0.0..=1.0).contains(&strength) {
        return Err(Error::invalid(format!("sepia strength must be in [0, 1], got {strength}")));
    }
    let rgb = img.to_rgb();
    Ok(map_pixels(&rgb, |[r, g, b]| {
        let s = [
            0.393 * r + 0.769 * g + 0.189 * b,
            0.349 * r + 0.686 * g + 0.168 * b,
            0.272 * r + 0.534 * g + 0.131 * b,
        ];
        [
            r + (s[0] - r) * strength,
            g + (s[1] - g) * strength,
            b + (s[2] - b) * strength,
        ]
    }))
}

pub const FILM_MIX_CENTER: [f64; 3] = [0.30, 0.55, 0.15];
pub const FILM_MIX_SPREAD: f64 = 0.1;
const FILM_MIX_CONCENTRATION: f64 = 200.0;

/// Parameters of one film-grayscale draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilmParams {
    pub weights: [f64; 3],
    pub gain: f64,
    pub midpoint: f64,
    pub grain_sigma: f64,
}

impl FilmParams {
    pub fn draw(seed: u64) -> Self {
        let mut rng = rng_from_seed(derive_seed(&[seed.into(), "film-params".into()]));
        let alpha = FILM_MIX_CENTER.map(|c| c * FILM_MIX_CONCENTRATION);
        let raw = Dirichlet::new(alpha).expect("positive concentration").sample(&mut rng);
        let mut weights = [0.0; 3];
        for i in 0..3 {
            weights[i] = raw[i].clamp(FILM_MIX_CENTER[i] - FILM_MIX_SPREAD, FILM_MIX_CENTER[i] + FILM_MIX_SPREAD);
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Self {
            weights,
            gain: rng.random_range(4.0..=10.0),
            midpoint: rng.random_range(0.4..=0.6),
            grain_sigma: rng.random_range(1.0..=4.0) / 255.0,
        }
    }

    /// Sigmoid tone curve rescaled so that 0 and 1 are fixed points.
    pub fn tone(&self, x: f64) -> f64 {
        let s = |t: f64| 1.0 / (1.0 + (-self.gain * (t - self.midpoint)).exp());
        let (lo, hi) = (s(0.0), s(1.0));
        (s(x) - lo) / (hi - lo)
    }
}

/// Monochrome film look: random channel mix, sigmoid contrast, grain.
/// Output is RGB with equal channels.
pub fn film_grayscale(img: &ImageBuffer, seed: u64) -> Result<ImageBuffer> {
    if img.channels() != 3 {
        return Err(Error::invalid("film grayscale needs an RGB image"));
    }
    let p = FilmParams::draw(seed);
    let grain = Normal::new(0.0, p.grain_sigma).expect("positive sigma");
    let mut rng = rng_from_seed(derive_seed(&[seed.into(), "film-grain".into()]));
    let mut out = img.clone();
    for px in out.data_mut().chunks_exact_mut(3) {
        let l = (p.weights[0] * f64::from(px[0]) + p.weights[1] * f64::from(px[1]) + p.weights[2] * f64::from(px[2]))
            / 255.0;
        let v = to_u8((p.tone(l) + grain.sample(&mut rng)) * 255.0);
        px.fill(v);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdjustKind {
    Brightness,
    Contrast,
    Saturation,
}

pub const MIN_ADJUST_FACTOR: f64 = 0.25;
pub const MAX_ADJUST_FACTOR: f64 = 4.0;

/// Brightness scales all channels, contrast scales around 128, saturation
/// interpolates from per-pixel luma. Saturation also accepts 0 (grayscale).
pub fn scalar_adjust(img: &ImageBuffer, kind: AdjustKind, factor: f64) -> Result<ImageBuffer> {
    let lo = if kind == AdjustKind::Saturation { 0.0 } else { MIN_ADJUST_FACTOR };
    if !(factor >= lo && factor <= MAX_ADJUST_FACTOR) {
        return Err(Error::invalid(format!("{kind:?} factor {factor} outside [{lo}, {MAX_ADJUST_FACTOR}]")));
    }
    Ok(match kind {
        AdjustKind::Brightness => map_pixels(img, |p| p.map(|v| v * factor)),
        AdjustKind::Contrast => map_pixels(img, |p| p.map(|v| (v - 128.0) * factor + 128.0)),
        AdjustKind::Saturation if img.channels() == 1 => img.clone(),
        AdjustKind::Saturation => map_pixels(img, |p| {
            let l = luma601(p);
            p.map(|v| l + (v - l) * factor)
        }),
    })
}
