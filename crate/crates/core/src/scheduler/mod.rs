//! Resolution sampling, pixel-budget batching and T2I/edit mixing.

mod batches;
mod mix;
mod resolution;

pub use batches::{batch_size_for, bucket_items, plan_batches, Batch, BatchPlan, PlanItem, ResolutionBucket, TaskKind};
pub use mix::{apply_template, mix_tasks, MixRatio, MixedEntry, TaskSource, EDIT_TEMPLATE, T2I_TEMPLATE};
pub use resolution::{sample_resolution, sample_resolution_in, ResolutionRange};
