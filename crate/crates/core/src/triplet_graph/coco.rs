//! COCO-style annotation ingestion: bbox `[x, y, w, h]` plus polygon or
//! RLE (counted or compressed-string) segmentation.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::filters::BoundingBox;
use crate::image::Mask;

use super::localization::{Instance, SegmentationAnnotation};

#[derive(Debug, Deserialize)]
struct CocoFile {
    images: Vec<CocoImage>,
    annotations: Vec<CocoAnnotation>,
    categories: Vec<CocoCategory>,
}

#[derive(Debug, Deserialize)]
struct CocoImage {
    id: u64,
    file_name: String,
    width: usize,
    height: usize,
}

#[derive(Debug, Deserialize)]
struct CocoCategory {
    id: u64,
    name: String,
}

#[derive(Debug, Deserialize)]
struct CocoAnnotation {
    image_id: u64,
    category_id: u64,
    bbox: [f64; 4],
    #[serde(default)]
    segmentation: Option<Segmentation>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Segmentation {
    Polygons(Vec<Vec<f64>>),
    Rle { counts: RleCounts, size: [usize; 2] },
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RleCounts {
    Runs(Vec<u64>),
    Compressed(String),
}

/// Decode the compressed-string RLE form (6-bit groups with continuation,
/// counts after the second delta-coded against the count two back).
pub fn decode_rle_string(s: &str) -> Result<Vec<u64>> {
    let bytes = s.as_bytes();
    let mut counts: Vec<i64> = Vec::new();
    let mut p = 0;
    while p < bytes.len() {
        let mut x: i64 = 0;
        let mut k = 0;
        loop {
            let c = i64::from(bytes.get(p).copied().ok_or_else(|| Error::invalid("truncated RLE string"))?) - 48;
            if !(0..64).contains(&c) {
                return Err(Error::invalid("invalid RLE character"));
            }
            x |= (c & 0x1f) << (5 * k);
            let more = c & 0x20 != 0;
            p += 1;
            k += 1;
            if !more {
                if c & 0x10 != 0 {
                    x |= -1i64 << (5 * k);
                }
                break;
            }
            if k > 12 {
                return Err(Error::invalid("RLE group too long"));
            }
        }
        if counts.len() > 2 {
            x += counts[counts.len() - 2];
        }
        counts.push(x);
    }
    counts
        .into_iter()
        .map(|c| u64::try_from(c).map_err(|_| Error::invalid("negative RLE run")))
        .collect()
}

/// Column-major runs, alternating background/foreground, starting with
/// background.
pub fn rle_to_mask(counts: &[u64], width: usize, height: usize) -> Result<Mask> {
    let total: u64 = counts.iter().sum();
    if total != (width * height) as u64 {
        return Err(Error::DimensionMismatch(format!(
            "RLE covers {total} pixels, image has {}",
            width * height
        )));
    }
    let mut mask = Mask::new(width, height);
    let mut idx = 0usize;
    for (k, &run) in counts.iter().enumerate() {
        for _ in 0..run {
            if k % 2 == 1 {
                mask.set(idx / height, idx % height, true);
            }
            idx += 1;
        }
    }
    Ok(mask)
}

/// Even-odd fill; a pixel is inside when its centre is.
pub fn rasterize_polygons(polygons: &[Vec<f64>], width: usize, height: usize) -> Mask {
    let mut mask = Mask::new(width, height);
    for poly in polygons {
        let pts: Vec<(f64, f64)> = poly.chunks_exact(2).map(|p| (p[0], p[1])).collect();
        if pts.len() < 3 {
            continue;
        }
        for y in 0..height {
            let py = y as f64 + 0.5;
            for x in 0..width {
                let px = x as f64 + 0.5;
                let mut inside = false;
                let mut j = pts.len() - 1;
                for i in 0..pts.len() {
                    let (xi, yi) = pts[i];
                    let (xj, yj) = pts[j];
                    if (yi > py) != (yj > py) && px < (xj - xi) * (py - yi) / (yj - yi) + xi {
                        inside = !inside;
                    }
                    j = i;
                }
                if inside {
                    mask.set(x, y, true);
                }
            }
        }
    }
    mask
}

pub fn parse_coco(text: &str) -> Result<Vec<SegmentationAnnotation>> {
    let file: CocoFile = serde_json::from_str(text).map_err(|e| Error::Json {
        line: e.line(),
        message: e.to_string(),
    })?;
    let categories: BTreeMap<u64, &str> = file.categories.iter().map(|c| (c.id, c.name.as_str())).collect();
    let mut per_image: BTreeMap<u64, Vec<Instance>> = BTreeMap::new();
    let images: BTreeMap<u64, &CocoImage> = file.images.iter().map(|i| (i.id, i)).collect();
    for ann in &file.annotations {
        let img = images
            .get(&ann.image_id)
            .ok_or_else(|| Error::invalid(format!("annotation references unknown image {}", ann.image_id)))?;
        let category = categories
            .get(&ann.category_id)
            .ok_or_else(|| Error::invalid(format!("unknown category {}", ann.category_id)))?;
        let [x, y, w, h] = ann.bbox;
        let bbox = BoundingBox::from_xywh(x, y, w, h)?;
        let mask = match &ann.segmentation {
            None => Mask::from_fn(img.width, img.height, |px, py| {
                let (cx, cy) = (px as f64 + 0.5, py as f64 + 0.5);
                cx >= bbox.x_min && cx < bbox.x_max && cy >= bbox.y_min && cy < bbox.y_max
            }),
            Some(Segmentation::Polygons(p)) => rasterize_polygons(p, img.width, img.height),
            Some(Segmentation::Rle { counts, size: [h, w] }) => {
                if (*w, *h) != (img.width, img.height) {
                    return Err(Error::DimensionMismatch(format!(
                        "RLE size {w}x{h} differs from image {}x{}",
                        img.width, img.height
                    )));
                }
                let runs = match counts {
                    RleCounts::Runs(r) => r.clone(),
                    RleCounts::Compressed(s) => decode_rle_string(s)?,
                };
                rle_to_mask(&runs, *w, *h)?
            }
        };
        per_image.entry(ann.image_id).or_default().push(Instance {
            category: category.to_string(),
            bbox,
            mask,
        });
    }
    file.images
        .iter()
        .map(|img| {
            SegmentationAnnotation::new(
                img.file_name.clone(),
                img.width,
                img.height,
                per_image.remove(&img.id).unwrap_or_default(),
            )
        })
        .collect()
}

pub fn read_coco(path: impl AsRef<Path>) -> Result<Vec<SegmentationAnnotation>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_coco(&text)
}
