use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::batches::TaskKind;
use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

pub const T2I_TEMPLATE: &str = "generate the image by description: {prompt}";
pub const EDIT_TEMPLATE: &str = "what will this image be like if {prompt}";

/// Relative T2I and edit shares; normalized by their sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixRatio {
    pub t2i_percent: f64,
    pub edit_percent: f64,
}

impl MixRatio {
    pub fn new(t2i_percent: f64, edit_percent: f64) -> Result<Self> {
        let r = Self { t2i_percent, edit_percent };
        r.t2i_share()?;
        Ok(r)
    }

    pub fn t2i_share(&self) -> Result<f64> {
        let (a, b) = (self.t2i_percent, self.edit_percent);
        if !(a >= 0.0 && b >= 0.0 && a.is_finite() && b.is_finite() && a + b > 0.0) {
            return Err(Error::invalid(format!("invalid mix ratio {a}/{b}")));
        }
        Ok(a / (a + b))
    }

    /// `(t2i, edit)` counts for `count` draws; T2I gets `round(count * share)`.
    pub fn split(&self, count: usize) -> Result<(usize, usize)> {
        let t2i = (count as f64 * self.t2i_share()?).round() as usize;
        Ok((t2i, count - t2i))
    }
}

/// Stream element: an id and its prompt or instruction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSource {
    pub id: String,
    pub prompt: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixedEntry {
    pub id: String,
    pub task: TaskKind,
    pub text: String,
    /// The conditioning image is all black and masked out.
    pub black_conditioning: bool,
}

pub fn apply_template(task: TaskKind, prompt: &str) -> String {
    let t = match task {
        TaskKind::T2i => T2I_TEMPLATE,
        TaskKind::Edit => EDIT_TEMPLATE,
    };
    t.replace("{prompt}", prompt)
}

/// Draw `count` entries from the two streams in the requested proportion,
/// interleaved in a seeded order.
pub fn mix_tasks(
    edit: &mut dyn Iterator<Item = TaskSource>,
    t2i: &mut dyn Iterator<Item = TaskSource>,
    ratio: &MixRatio,
    count: usize,
    seed: u64,
) -> Result<Vec<MixedEntry>> {
    let (n_t2i, n_edit) = ratio.split(count)?;
    let t2i_items: Vec<TaskSource> = t2i.take(n_t2i).collect();
    let edit_items: Vec<TaskSource> = edit.take(n_edit).collect();
    if t2i_items.len() < n_t2i || edit_items.len() < n_edit {
        return Err(Error::StreamExhausted {
            t2i_short: n_t2i - t2i_items.len(),
            edit_short: n_edit - edit_items.len(),
        });
    }
    let mut tags: Vec<TaskKind> = std::iter::repeat_n(TaskKind::T2i, n_t2i)
        .chain(std::iter::repeat_n(TaskKind::Edit, n_edit))
        .collect();
    tags.shuffle(&mut rng_from_seed(seed));
    let (mut ti, mut ei) = (t2i_items.into_iter(), edit_items.into_iter());
    Ok(tags
        .into_iter()
        .map(|task| {
            let src = match task {
                TaskKind::T2i => ti.next(),
                TaskKind::Edit => ei.next(),
            }
            .expect("counts match tags");
            MixedEntry {
                text: apply_template(task, &src.prompt),
                id: src.id,
                task,
                black_conditioning: task == TaskKind::T2i,
            }
        })
        .collect())
}
