use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    T2i,
    #[default]
    Edit,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanItem {
    pub id: String,
    pub width: u32,
    pub height: u32,
    #[serde(default)]
    pub task: TaskKind,
}

/// Items that share exact dimensions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolutionBucket {
    pub width: u32,
    pub height: u32,
    pub items: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Batch {
    pub dims: [u32; 2],
    pub ids: Vec<String>,
    pub tags: Vec<TaskKind>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchPlan {
    pub pixel_budget: u64,
    pub batches: Vec<Batch>,
}

pub fn batch_size_for(width: u32, height: u32, pixel_budget: u64) -> u64 {
    pixel_budget / (u64::from(width) * u64::from(height))
}

pub fn bucket_items(items: &[PlanItem]) -> Vec<ResolutionBucket> {
    let mut map: BTreeMap<(u32, u32), Vec<String>> = BTreeMap::new();
    for it in items {
        map.entry((it.width, it.height)).or_default().push(it.id.clone());
    }
    map.into_iter().map(|((width, height), items)| ResolutionBucket { width, height, items }).collect()
}

/// Group by exact dimensions, fill each batch up to the pixel budget and
/// shuffle batch order with `seed`. Items keep their input order inside a
/// bucket.
pub fn plan_batches(items: &[PlanItem], pixel_budget: u64, seed: u64) -> Result<BatchPlan> {
    if let Some(it) = items.iter().find(|it| it.width == 0 || it.height == 0) {
        return Err(Error::invalid(format!("item {} has zero size", it.id)));
    }
    if let Some(it) = items.iter().find(|it| batch_size_for(it.width, it.height, pixel_budget) == 0) {
        return Err(Error::invalid(format!(
            "item {} ({}x{}) exceeds the pixel budget {pixel_budget}",
            it.id, it.width, it.height
        )));
    }
    let tag_of: BTreeMap<&str, TaskKind> = items.iter().map(|it| (it.id.as_str(), it.task)).collect();
    let mut batches = Vec::new();
    for b in bucket_items(items) {
        let size = batch_size_for(b.width, b.height, pixel_budget) as usize;
        for chunk in b.items.chunks(size) {
            batches.push(Batch {
                dims: [b.width, b.height],
                ids: chunk.to_vec(),
                tags: chunk.iter().map(|id| tag_of[id.as_str()]).collect(),
            });
        }
    }
    batches.shuffle(&mut rng_from_seed(seed));
    Ok(BatchPlan { pixel_budget, batches })
}
