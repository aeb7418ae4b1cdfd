//! Triplet bootstrapping: inversion, composite transitions, retry-based
//! mining, and annotation-driven localization instructions and targets.

mod bootstrap;
mod coco;
mod compositing;
mod localization;
mod mining;

pub use bootstrap::{
    composite_transitions, group_edit_sets, invert_triplet, invert_triplets, Bootstrapped, Composer, Edit,
    EditSet, Inverter, TemplateComposer, TemplateInverter,
};
pub use coco::{decode_rle_string, parse_coco, rasterize_polygons, read_coco, rle_to_mask};
pub use compositing::{background_removal_target, composite_masked, DEFAULT_FILL};
pub use localization::{
    generate_localization_instruction, Instance, LocalizationMode, SegmentationAnnotation, TIE_BAND,
};
pub use mining::{attempt_seed, mine_with_retries, AttemptLog, MiningOutcome, MiningPair, DEFAULT_MAX_ATTEMPTS};
