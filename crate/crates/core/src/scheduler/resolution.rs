use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

/// Per-side size range, alignment and aspect limit for sampled resolutions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolutionRange {
    pub min_side: u32,
    pub max_side: u32,
    pub multiple: u32,
    pub max_aspect: f64,
}

impl Default for ResolutionRange {
    fn default() -> Self {
        Self { min_side: 860, max_side: 2200, multiple: 4, max_aspect: 6.0 }
    }
}

impl ResolutionRange {
    fn steps(&self) -> Result<(u32, u32)> {
        let lo = self.min_side.div_ceil(self.multiple.max(1));
        let hi = self.max_side / self.multiple.max(1);
        if self.multiple == 0 || lo == 0 || lo > hi || !(self.max_aspect >= 1.0) {
            return Err(Error::invalid(format!("unusable resolution range {self:?}")));
        }
        Ok((lo, hi))
    }

    pub fn validate(&self) -> Result<()> {
        self.steps().map(|_| ())
    }
}

const MAX_DRAWS: usize = 64;

/// Uniform side lengths on the aligned grid, redrawn while the aspect ratio
/// is out of range. Falls back to a square after repeated failures.
pub fn sample_resolution_in(range: &ResolutionRange, seed: u64) -> Result<(u32, u32)> {
    let (lo, hi) = range.steps()?;
    let mut rng = rng_from_seed(seed);
    let mut side = lo * range.multiple;
    for _ in 0..MAX_DRAWS {
        let w = rng.random_range(lo..=hi) * range.multiple;
        let h = rng.random_range(lo..=hi) * range.multiple;
        let aspect = f64::from(w) / f64::from(h);
        if aspect <= range.max_aspect && aspect >= 1.0 / range.max_aspect {
            return Ok((w, h));
        }
        side = w.min(h);
    }
    Ok((side, side))
}

pub fn sample_resolution(seed: u64) -> (u32, u32) {
    sample_resolution_in(&ResolutionRange::default(), seed).expect("default range is valid")
}
