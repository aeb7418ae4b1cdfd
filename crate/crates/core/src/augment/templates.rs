use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_from_seed};

const BUNDLED: &str = include_str!("../../data/templates.json");

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OpTemplates {
    #[serde(default)]
    pub forward: Vec<String>,
    #[serde(default)]
    pub reverse: Vec<String>,
}

/// Instruction phrasings keyed by template key (an op name, or
/// `{op}_increase` / `{op}_decrease` for scalar adjustments).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TemplateBank(pub BTreeMap<String, OpTemplates>);

impl TemplateBank {
    pub fn bundled() -> Self {
        Self::parse(BUNDLED).expect("bundled template bank parses")
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Json { line: e.line(), message: e.to_string() })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    pub fn phrasings(&self, key: &str, reverse: bool) -> Result<&[String]> {
        let t = self.0.get(key).ok_or_else(|| Error::invalid(format!("no templates for {key:?}")))?;
        let list = if reverse { &t.reverse } else { &t.forward };
        if list.is_empty() {
            let side = if reverse { "reverse" } else { "forward" };
            return Err(Error::invalid(format!("empty {side} templates for {key:?}")));
        }
        Ok(list)
    }

    /// Seeded uniform pick.
    pub fn draw(&self, key: &str, reverse: bool, seed: u64) -> Result<&str> {
        let list = self.phrasings(key, reverse)?;
        let mut rng = rng_from_seed(derive_seed(&[seed.into(), "template".into(), key.into(), u64::from(reverse).into()]));
        Ok(&list[rng.random_range(0..list.len())])
    }
}

impl Default for TemplateBank {
    fn default() -> Self {
        Self::bundled()
    }
}
