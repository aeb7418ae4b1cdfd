use super::jpeg::jpeg_sync;
use super::overlay::{overlay_with, random_overlay, OverlayKind};
use super::photometric::{add_gaussian_noise, film_grayscale, gaussian_blur, scalar_adjust, sepia, AdjustKind};
use super::spec::{AugmentOp, AugmentationSpec, DirectionalBlocklist};
use super::templates::TemplateBank;
use crate::error::{Error, Result};
use crate::image::{ImageBuffer, Mask};
use crate::record::{InstructionOrigin, InstructionRecord, Provenance, TripletRecord};
use crate::seed::derive_seed;

/// A triplet record together with the buffers its refs name.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTriplet {
    pub record: TripletRecord,
    pub source: ImageBuffer,
    pub target: ImageBuffer,
}

impl ImageTriplet {
    fn build(id: String, source: ImageBuffer, text: &str, target: ImageBuffer, provenance: Provenance) -> Self {
        let instruction = InstructionRecord::new(format!("{id}/instruction"), text, InstructionOrigin::Template);
        let record = TripletRecord::new(id, source.content_ref(), instruction, target.content_ref(), provenance);
        Self { record, source, target }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BidirectionalPair {
    pub forward: ImageTriplet,
    pub reverse: ImageTriplet,
}

/// Apply a bidirectional op to a clean image.
pub fn degrade(image: &ImageBuffer, spec: &AugmentationSpec) -> Result<ImageBuffer> {
    spec.validate()?;
    let m = spec.magnitude;
    match spec.op {
        AugmentOp::Blur => gaussian_blur(image, m),
        AugmentOp::Noise => add_gaussian_noise(image, m, derive_seed(&[spec.seed.into(), "noise".into()])),
        AugmentOp::Sepia => sepia(image, m),
        AugmentOp::FilmGray => film_grayscale(image, spec.seed),
        AugmentOp::Brightness => scalar_adjust(image, AdjustKind::Brightness, m),
        AugmentOp::Contrast => scalar_adjust(image, AdjustKind::Contrast, m),
        AugmentOp::Saturation => scalar_adjust(image, AdjustKind::Saturation, m),
        op => Err(Error::invalid(format!("{} is not a bidirectional op", op.as_str()))),
    }
}

/// Template key: scalar adjustments split by direction of change.
fn template_key(spec: &AugmentationSpec) -> String {
    match spec.op {
        AugmentOp::Brightness | AugmentOp::Contrast | AugmentOp::Saturation => {
            let dir = if spec.magnitude >= 1.0 { "increase" } else { "decrease" };
            format!("{}_{dir}", spec.op.as_str())
        }
        op => op.as_str().to_string(),
    }
}

/// Forward `(clean, apply, degraded)` and reverse `(degraded, restore, clean)`.
/// The reverse source is the forward target buffer.
pub fn make_bidirectional_pair(
    base_id: &str,
    image: &ImageBuffer,
    spec: &AugmentationSpec,
    templates: &TemplateBank,
) -> Result<BidirectionalPair> {
    let degraded = degrade(image, spec)?;
    if degraded == *image {
        return Err(Error::Degenerate(format!("{} left {base_id} unchanged", spec.op.as_str())));
    }
    let key = template_key(spec);
    let fwd_id = format!("{base_id}~{}~fwd", spec.op.as_str());
    let rev_id = format!("{base_id}~{}~rev", spec.op.as_str());
    let forward = ImageTriplet::build(
        fwd_id.clone(),
        image.clone(),
        templates.draw(&key, false, spec.seed)?,
        degraded.clone(),
        Provenance::Augmented,
    );
    let mut reverse =
        ImageTriplet::build(rev_id, degraded, templates.draw(&key, true, spec.seed)?, image.clone(), Provenance::Augmented);
    reverse.record.lineage = vec![fwd_id];
    Ok(BidirectionalPair { forward, reverse })
}

/// Source and target are the same buffer; the instruction asks for nothing.
pub fn identity_triplet(base_id: &str, image: &ImageBuffer, seed: u64, templates: &TemplateBank) -> Result<ImageTriplet> {
    let text = templates.draw("identity", false, seed)?;
    Ok(ImageTriplet::build(format!("{base_id}~identity"), image.clone(), text, image.clone(), Provenance::Identity))
}

/// Flip both images unless the instruction names a direction-sensitive term.
/// Identity triplets stay identity triplets.
pub fn conditional_mirror(triplet: &ImageTriplet, blocklist: &DirectionalBlocklist) -> Option<ImageTriplet> {
    if blocklist.matches(&triplet.record.instruction.text) {
        return None;
    }
    let source = triplet.source.flip_horizontal();
    let target = triplet.target.flip_horizontal();
    let mut record = triplet.record.clone();
    record.id = format!("{}~mirror", triplet.record.id);
    record.source_ref = source.content_ref();
    record.target_ref = target.content_ref();
    if record.provenance != Provenance::Identity {
        record.provenance = Provenance::Augmented;
    }
    record.scores = None;
    record.lineage = vec![triplet.record.id.clone()];
    Some(ImageTriplet { record, source, target })
}

/// Occluded image to clean image, with the occluder mask.
pub fn overlay_triplet(
    base_id: &str,
    image: &ImageBuffer,
    kind: Option<OverlayKind>,
    seed: u64,
    templates: &TemplateBank,
) -> Result<(ImageTriplet, Mask)> {
    let o = match kind {
        Some(k) => overlay_with(image, k, seed)?,
        None => random_overlay(image, seed)?,
    };
    let key = if o.kind == OverlayKind::Text { "text_overlay" } else { "overlay" };
    let text = templates.draw(key, false, seed)?;
    let t = ImageTriplet::build(format!("{base_id}~{key}"), o.image, text, image.clone(), Provenance::Augmented);
    Ok((t, o.mask))
}

/// Re-encode both sides of a triplet at one quality.
pub fn jpeg_sync_triplet(triplet: &ImageTriplet, quality: u8) -> Result<ImageTriplet> {
    let (source, target) = jpeg_sync(&triplet.source, &triplet.target, quality)?;
    let mut record = triplet.record.clone();
    record.id = format!("{}~jpeg{quality}", triplet.record.id);
    record.source_ref = source.content_ref();
    record.target_ref = target.content_ref();
    if record.provenance != Provenance::Identity {
        record.provenance = Provenance::Augmented;
    }
    record.scores = None;
    record.lineage = vec![triplet.record.id.clone()];
    Ok(ImageTriplet { record, source, target })
}
