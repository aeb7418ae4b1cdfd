//! Triplet data model shared by every stage.

use serde::{Deserialize, Serialize};

/// Where an instruction's wording came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InstructionOrigin {
    RealUser,
    Synthetic,
    Inverted,
    Composite,
    Template,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InstructionRecord {
    pub id: String,
    pub text: String,
    pub origin: InstructionOrigin,
    #[serde(default)]
    pub usage_count: u64,
}

impl InstructionRecord {
    pub fn new(id: impl Into<String>, text: impl Into<String>, origin: InstructionOrigin) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            origin,
            usage_count: 0,
        }
    }
}

/// How a triplet was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Mined,
    Inverted,
    Composite,
    Augmented,
    Identity,
    External,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Mined => "mined",
            Provenance::Inverted => "inverted",
            Provenance::Composite => "composite",
            Provenance::Augmented => "augmented",
            Provenance::Identity => "identity",
            Provenance::External => "external",
        }
    }
}

/// Assessor grades on a 0..=5 scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawScore")]
pub struct AssessorScore {
    pub instruction_adherence: f64,
    pub aesthetic: f64,
}

#[derive(Deserialize)]
struct RawScore {
    instruction_adherence: f64,
    aesthetic: f64,
}

impl TryFrom<RawScore> for AssessorScore {
    type Error = String;

    fn try_from(raw: RawScore) -> Result<Self, String> {
        AssessorScore::new(raw.instruction_adherence, raw.aesthetic)
    }
}

impl AssessorScore {
    pub const MAX: f64 = 5.0;

    pub fn new(instruction_adherence: f64, aesthetic: f64) -> Result<Self, String> {
        for (name, v) in [("instruction_adherence", instruction_adherence), ("aesthetic", aesthetic)] {
            if !v.is_finite() || !(0.0..=Self::MAX).contains(&v) {
                return Err(format!("{name} must be a finite value in [0, 5], got {v}"));
            }
        }
        Ok(Self {
            instruction_adherence,
            aesthetic,
        })
    }

    /// Strictly better on both criteria.
    pub fn strictly_dominates(&self, other: &AssessorScore) -> bool {
        self.instruction_adherence > other.instruction_adherence && self.aesthetic > other.aesthetic
    }
}

/// One (source image, instruction, target image) unit.
///
/// Images are referenced by path or by lowercase hex SHA-256 of the image
/// file; pixels never live in a manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripletRecord {
    pub id: String,
    pub source_ref: String,
    pub instruction: InstructionRecord,
    pub target_ref: String,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<AssessorScore>,
    #[serde(default)]
    pub lineage: Vec<String>,
}

impl TripletRecord {
    pub fn new(
        id: impl Into<String>,
        source_ref: impl Into<String>,
        instruction: InstructionRecord,
        target_ref: impl Into<String>,
        provenance: Provenance,
    ) -> Self {
        Self {
            id: id.into(),
            source_ref: source_ref.into(),
            instruction,
            target_ref: target_ref.into(),
            provenance,
            scores: None,
            lineage: Vec::new(),
        }
    }

    pub fn with_lineage(mut self, parents: impl IntoIterator<Item = String>) -> Self {
        self.lineage = parents.into_iter().collect();
        self
    }

    pub fn with_scores(mut self, scores: AssessorScore) -> Self {
        self.scores = Some(scores);
        self
    }
}
