use crate::error::{Error, Result};
use crate::image::{ImageBuffer, Mask};

pub const DEFAULT_FILL: [u8; 3] = [255, 255, 255];

fn fill_for(channels: usize, fill: [u8; 3]) -> Vec<u8> {
    if channels == 3 {
        fill.to_vec()
    } else {
        let luma = 0.299 * f64::from(fill[0]) + 0.587 * f64::from(fill[1]) + 0.114 * f64::from(fill[2]);
        vec![luma.round() as u8]
    }
}

/// Keep pixels inside the union of `masks`, paint everything else `fill`.
pub fn background_removal_target(image: &ImageBuffer, masks: &[Mask], fill: [u8; 3]) -> Result<ImageBuffer> {
    let (w, h) = image.dims();
    if let Some(m) = masks.iter().find(|m| m.dims() != (w, h)) {
        return Err(Error::DimensionMismatch(format!(
            "mask {:?} vs image {w}x{h}",
            m.dims()
        )));
    }
    let c = image.channels();
    let fill = fill_for(c, fill);
    let mut out = image.clone();
    let data = out.data_mut();
    for y in 0..h {
        for x in 0..w {
            if !masks.iter().any(|m| m.get(x, y)) {
                let i = (y * w + x) * c;
                data[i..i + c].copy_from_slice(&fill);
            }
        }
    }
    Ok(out)
}

/// Hard composite: `edited` where the mask is set, `original` elsewhere.
pub fn composite_masked(original: &ImageBuffer, edited: &ImageBuffer, mask: &Mask) -> Result<ImageBuffer> {
    if !original.same_shape(edited) || mask.dims() != original.dims() {
        return Err(Error::DimensionMismatch(format!(
            "original {:?}x{}, edited {:?}x{}, mask {:?}",
            original.dims(),
            original.channels(),
            edited.dims(),
            edited.channels(),
            mask.dims()
        )));
    }
    let c = original.channels();
    let mut out = original.clone();
    let data = out.data_mut();
    for (p, &on) in mask.bits().iter().enumerate() {
        if on {
            data[p * c..p * c + c].copy_from_slice(&edited.data()[p * c..p * c + c]);
        }
    }
    Ok(out)
}
