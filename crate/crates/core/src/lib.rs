//! Curation toolkit for instruction-based image-editing data.

pub mod augment;
pub mod error;
pub mod filters;
pub mod fixtures;
pub mod grounding;
pub mod hooks;
pub mod image;
pub mod manifest;
pub mod preference;
pub mod record;
pub mod scalar;
pub mod scheduler;
pub mod seed;
pub mod triplet_graph;
pub mod validate;

pub use error::{Error, Result};
pub use image::{ImageBuffer, Mask};
pub use record::{AssessorScore, InstructionOrigin, InstructionRecord, Provenance, TripletRecord};
pub use scalar::Scalar;

/// Double-precision instantiations of the generic numeric types.
pub type Embedding = grounding::EmbeddingVector<f64>;
pub type Homography = filters::Homography<f64>;
pub type BoundingBox = filters::BoundingBox<f64>;
pub type PointPair = filters::PointPair<f64>;
pub type DpoSample = preference::DpoSample<f64>;

/// Single-precision instantiations.
pub type EmbeddingF32 = grounding::EmbeddingVector<f32>;
pub type HomographyF32 = filters::Homography<f32>;
pub type BoundingBoxF32 = filters::BoundingBox<f32>;
pub type PointPairF32 = filters::PointPair<f32>;
pub type DpoSampleF32 = preference::DpoSample<f32>;
