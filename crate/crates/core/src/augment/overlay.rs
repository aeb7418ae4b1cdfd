use rand::Rng;
use serde::{Deserialize, Serialize};

use super::font::{ink, ink_count, GLYPH_H, GLYPH_W};
use crate::error::{Error, Result};
use crate::image::{ImageBuffer, Mask};
use crate::seed::{derive_seed, rng_from_seed, DetRng};

pub const MIN_OVERLAY_DIM: usize = 64;
pub const MIN_COVERAGE: f64 = 0.02;
pub const MAX_COVERAGE: f64 = 0.20;
const MAX_ATTEMPTS: usize = 16;

/// Strings available to the text occluder.
pub const TEXT_BANK: [&str; 10] = ["SALE", "OPEN", "HELLO", "CAFE", "STOP", "NEWS", "PHOTO", "2024", "SAMPLE", "DRAFT"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlayKind {
    Rectangle,
    Ellipse,
    Text,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Overlay {
    pub kind: OverlayKind,
    pub image: ImageBuffer,
    pub mask: Mask,
    /// Rendered string when `kind` is `Text`.
    pub text: Option<String>,
}

fn fill_color(rng: &mut DetRng, channels: usize) -> Vec<u8> {
    (0..channels).map(|_| rng.random_range(0..=255u8)).collect()
}

fn in_range(mask: &Mask) -> bool {
    (MIN_COVERAGE..=MAX_COVERAGE).contains(&mask.coverage())
}

fn try_shape(kind: OverlayKind, w: usize, h: usize, rng: &mut DetRng) -> Option<(Mask, Option<String>)> {
    let (fw, fh) = (w as f64, h as f64);
    let target = rng.random_range(0.03..0.18) * fw * fh;
    let aspect: f64 = rng.random_range(0.5..2.0);
    match kind {
        OverlayKind::Rectangle => {
            let rw = (target * aspect).sqrt().round() as usize;
            let rh = (target / rw.max(1) as f64).round() as usize;
            if rw == 0 || rh == 0 || rw > w || rh > h {
                return None;
            }
            let x0 = rng.random_range(0..=w - rw);
            let y0 = rng.random_range(0..=h - rh);
            Some((Mask::from_fn(w, h, |x, y| (x0..x0 + rw).contains(&x) && (y0..y0 + rh).contains(&y)), None))
        }
        OverlayKind::Ellipse => {
            let b = (target / (std::f64::consts::PI * aspect)).sqrt();
            let a = aspect * b;
            if 2.0 * a + 2.0 > fw || 2.0 * b + 2.0 > fh {
                return None;
            }
            let cx = rng.random_range(a + 1.0..=fw - a - 1.0);
            let cy = rng.random_range(b + 1.0..=fh - b - 1.0);
            let m = Mask::from_fn(w, h, |x, y| {
                let dx = (x as f64 + 0.5 - cx) / a;
                let dy = (y as f64 + 0.5 - cy) / b;
                dx * dx + dy * dy <= 1.0
            });
            Some((m, None))
        }
        OverlayKind::Text => {
            let word = TEXT_BANK[rng.random_range(0..TEXT_BANK.len())];
            let n = word.chars().count();
            let cells = ink_count(word) as f64;
            let mut scale = (target / cells).sqrt().floor() as usize;
            while scale > 0 && (((GLYPH_W + 1) * n - 1) * scale > w || GLYPH_H * scale > h) {
                scale -= 1;
            }
            if scale == 0 {
                return None;
            }
            let tw = ((GLYPH_W + 1) * n - 1) * scale;
            let th = GLYPH_H * scale;
            let x0 = rng.random_range(0..=w - tw);
            let y0 = rng.random_range(0..=h - th);
            let chars: Vec<char> = word.chars().collect();
            let m = Mask::from_fn(w, h, |x, y| {
                if x < x0 || y < y0 || x >= x0 + tw || y >= y0 + th {
                    return false;
                }
                let (lx, ly) = ((x - x0) / scale, (y - y0) / scale);
                let (ci, gx) = (lx / (GLYPH_W + 1), lx % (GLYPH_W + 1));
                gx < GLYPH_W && ink(chars[ci], gx, ly)
            });
            Some((m, Some(word.to_string())))
        }
    }
}

/// Paint an occluder of the given kind covering 2-20% of the pixels.
/// After bounded retries a centred rectangle of about 10% is used.
pub fn overlay_with(image: &ImageBuffer, kind: OverlayKind, seed: u64) -> Result<Overlay> {
    let (w, h) = image.dims();
    if w.min(h) < MIN_OVERLAY_DIM {
        return Err(Error::invalid(format!("overlay needs at least {MIN_OVERLAY_DIM}px per side, got {w}x{h}")));
    }
    let mut rng = rng_from_seed(derive_seed(&[seed.into(), "overlay".into()]));
    let color = fill_color(&mut rng, image.channels());
    let mut chosen = None;
    for _ in 0..MAX_ATTEMPTS {
        if let Some((m, text)) = try_shape(kind, w, h, &mut rng).filter(|(m, _)| in_range(m)) {
            chosen = Some((kind, m, text));
            break;
        }
    }
    let (kind, mask, text) = chosen.unwrap_or_else(|| {
        let (rw, rh) = ((w as f64 * 0.1f64.sqrt()).round() as usize, (h as f64 * 0.1f64.sqrt()).round() as usize);
        let (x0, y0) = ((w - rw) / 2, (h - rh) / 2);
        let m = Mask::from_fn(w, h, |x, y| (x0..x0 + rw).contains(&x) && (y0..y0 + rh).contains(&y));
        (OverlayKind::Rectangle, m, None)
    });
    let mut out = image.clone();
    for y in 0..h {
        for x in 0..w {
            if mask.get(x, y) {
                for (c, &v) in color.iter().enumerate() {
                    out.set(x, y, c, v);
                }
            }
        }
    }
    Ok(Overlay { kind, image: out, mask, text })
}

/// Seeded choice among rectangle, ellipse and text occluders.
pub fn random_overlay(image: &ImageBuffer, seed: u64) -> Result<Overlay> {
    let mut rng = rng_from_seed(derive_seed(&[seed.into(), "overlay-kind".into()]));
    let kind = [OverlayKind::Rectangle, OverlayKind::Ellipse, OverlayKind::Text][rng.random_range(0..3)];
    overlay_with(image, kind, seed)
}
