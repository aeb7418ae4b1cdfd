//! Config-driven pipeline runner for editing-triplet curation: named stages
//! over JSONL manifests, per-stage reports, and fingerprint-based resume.

pub mod commands;
pub mod config;
pub mod fixture;
pub mod ops;
pub mod pipeline;
pub mod report;
pub mod stats;
pub mod store;

pub use config::{Overrides, PipelineConfig, StageConfig};
pub use pipeline::{run_pipeline, PipelineError, RunOptions};
pub use report::StageReport;
