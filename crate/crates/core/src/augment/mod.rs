//! Deterministic synthetic triplets from single images or existing triplets.

mod font;
mod jpeg;
mod overlay;
mod photometric;
mod spec;
mod templates;
mod triplets;

pub use jpeg::{jpeg_compress, jpeg_sync, quant_tables, QuantTables};
pub use overlay::{
    overlay_with, random_overlay, Overlay, OverlayKind, MAX_COVERAGE, MIN_COVERAGE, MIN_OVERLAY_DIM, TEXT_BANK,
};
pub use photometric::{
    add_gaussian_noise, film_grayscale, gaussian_blur, scalar_adjust, sepia, AdjustKind, FilmParams,
    FILM_MIX_CENTER, FILM_MIX_SPREAD, MAX_ADJUST_FACTOR, MIN_ADJUST_FACTOR,
};
pub use spec::{AugmentOp, AugmentationSpec, Direction, DirectionalBlocklist, DEFAULT_BLOCKLIST};
pub use templates::{OpTemplates, TemplateBank};
pub use triplets::{
    conditional_mirror, degrade, identity_triplet, jpeg_sync_triplet, make_bidirectional_pair, overlay_triplet,
    BidirectionalPair, ImageTriplet,
};
