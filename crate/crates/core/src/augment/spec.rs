use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentOp {
    Blur,
    Noise,
    Sepia,
    FilmGray,
    Brightness,
    Contrast,
    Saturation,
    Identity,
    Mirror,
    Overlay,
    TextOverlay,
    JpegSync,
}

impl AugmentOp {
    pub const ALL: [AugmentOp; 12] = [
        AugmentOp::Blur,
        AugmentOp::Noise,
        AugmentOp::Sepia,
        AugmentOp::FilmGray,
        AugmentOp::Brightness,
        AugmentOp::Contrast,
        AugmentOp::Saturation,
        AugmentOp::Identity,
        AugmentOp::Mirror,
        AugmentOp::Overlay,
        AugmentOp::TextOverlay,
        AugmentOp::JpegSync,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AugmentOp::Blur => "blur",
            AugmentOp::Noise => "noise",
            AugmentOp::Sepia => "sepia",
            AugmentOp::FilmGray => "film_gray",
            AugmentOp::Brightness => "brightness",
            AugmentOp::Contrast => "contrast",
            AugmentOp::Saturation => "saturation",
            AugmentOp::Identity => "identity",
            AugmentOp::Mirror => "mirror",
            AugmentOp::Overlay => "overlay",
            AugmentOp::TextOverlay => "text_overlay",
            AugmentOp::JpegSync => "jpeg_sync",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|op| op.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown augmentation op {s:?}")))
    }

    /// Accepted magnitude range; `None` for ops that ignore the magnitude.
    ///
    /// | op | magnitude |
    /// |----|-----------|
    /// | blur | Gaussian sigma in pixels |
    /// | noise | Gaussian sigma as a fraction of full scale |
    /// | sepia | blend strength |
    /// | brightness, contrast | multiplicative factor |
    /// | saturation | factor; 0 gives grayscale |
    /// | jpeg_sync | quality, integral |
    pub fn magnitude_range(self) -> Option<(f64, f64)> {
        match self {
            AugmentOp::Blur => Some((0.3, 10.0)),
            AugmentOp::Noise => Some((1.0 / 255.0, 0.25)),
            AugmentOp::Sepia => Some((0.1, 1.0)),
            AugmentOp::Brightness | AugmentOp::Contrast => Some((0.25, 4.0)),
            AugmentOp::Saturation => Some((0.0, 4.0)),
            AugmentOp::JpegSync => Some((1.0, 100.0)),
            AugmentOp::FilmGray | AugmentOp::Identity | AugmentOp::Mirror | AugmentOp::Overlay | AugmentOp::TextOverlay => {
                None
            }
        }
    }

    /// Ops that produce a forward/reverse pair from a single clean image.
    pub fn is_bidirectional(self) -> bool {
        matches!(
            self,
            AugmentOp::Blur
                | AugmentOp::Noise
                | AugmentOp::Sepia
                | AugmentOp::FilmGray
                | AugmentOp::Brightness
                | AugmentOp::Contrast
                | AugmentOp::Saturation
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    #[default]
    Forward,
    Reverse,
}

/// One line of an augmentation plan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentationSpec {
    pub op: AugmentOp,
    #[serde(default)]
    pub direction: Direction,
    #[serde(default)]
    pub magnitude: f64,
    pub seed: u64,
}

impl AugmentationSpec {
    pub fn new(op: AugmentOp, direction: Direction, magnitude: f64, seed: u64) -> Result<Self> {
        let spec = Self { op, direction, magnitude, seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let Some((lo, hi)) = self.op.magnitude_range() else {
            return Ok(());
        };
        if !(self.magnitude >= lo && self.magnitude <= hi) {
            return Err(Error::invalid(format!(
                "{} magnitude {} outside [{lo}, {hi}]",
                self.op.as_str(),
                self.magnitude
            )));
        }
        if self.op == AugmentOp::JpegSync && self.magnitude.fract() != 0.0 {
            return Err(Error::invalid(format!("jpeg quality must be integral, got {}", self.magnitude)));
        }
        Ok(())
    }
}

pub const DEFAULT_BLOCKLIST: [&str; 9] =
    ["left", "right", "east", "west", "text", "read", "writing", "clockwise", "counterclockwise"];

/// Instruction words that make a horizontal flip change the meaning.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct DirectionalBlocklist {
    terms: Vec<String>,
}

impl DirectionalBlocklist {
    pub fn new<S: Into<String>>(terms: impl IntoIterator<Item = S>) -> Result<Self> {
        let terms: Vec<String> = terms.into_iter().map(Into::into).collect();
        if terms.is_empty() {
            return Err(Error::invalid("blocklist must not be empty"));
        }
        if let Some(t) = terms.iter().find(|t| t.is_empty() || t.chars().any(|c| !c.is_alphanumeric() || c.is_uppercase())) {
            return Err(Error::invalid(format!("blocklist term {t:?} must be a lowercase word")));
        }
        Ok(Self { terms })
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    /// True when any term occurs as a whole word, ignoring case.
    pub fn matches(&self, text: &str) -> bool {
        text.split(|c: char| !c.is_alphanumeric())
            .filter(|w| !w.is_empty())
            .any(|w| {
                let w = w.to_lowercase();
                self.terms.iter().any(|t| *t == w)
            })
    }
}

impl Default for DirectionalBlocklist {
    fn default() -> Self {
        Self::new(DEFAULT_BLOCKLIST).expect("default terms are valid")
    }
}

impl TryFrom<Vec<String>> for DirectionalBlocklist {
    type Error = Error;
    fn try_from(v: Vec<String>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<DirectionalBlocklist> for Vec<String> {
    fn from(b: DirectionalBlocklist) -> Self {
        b.terms
    }
}
