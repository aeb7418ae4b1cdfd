//! Pipeline configuration: a single JSON document naming stages in order.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::ops::Operation;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageConfig {
    pub name: String,
    pub operation: String,
    #[serde(default)]
    pub params: Map<String, Value>,
    #[serde(default)]
    pub inputs: Vec<String>,
    pub output: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub global_seed: u64,
    #[serde(default = "default_parallelism", alias = "workers")]
    pub parallelism: usize,
    /// Where image refs resolve and where new images are written.
    #[serde(default = "default_image_dir")]
    pub image_dir: String,
    #[serde(default)]
    pub stages: Vec<StageConfig>,
}

fn default_parallelism() -> usize {
    1
}

fn default_image_dir() -> String {
    "images".into()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

impl PipelineConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text)
            .map_err(|e| ConfigError(format!("config line {} column {}: {e}", e.line(), e.column())))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Check names, operations, parameters and the input graph. `base` is
    /// the directory relative paths resolve against.
    pub fn validate(&self, base: &Path) -> Result<(), ConfigError> {
        if self.parallelism == 0 {
            return err("parallelism must be at least 1");
        }
        let mut names = BTreeSet::new();
        let mut produced_by: BTreeMap<PathBuf, usize> = BTreeMap::new();
        for (i, s) in self.stages.iter().enumerate() {
            if s.name.trim().is_empty() {
                return err(format!("stage {i} has an empty name"));
            }
            if !names.insert(s.name.as_str()) {
                return err(format!("duplicate stage name {:?}", s.name));
            }
            let out = base.join(&s.output);
            if let Some(j) = produced_by.insert(out.clone(), i) {
                return err(format!(
                    "stages {:?} and {:?} write the same output {}",
                    self.stages[j].name, s.name, s.output
                ));
            }
        }
        for (i, s) in self.stages.iter().enumerate() {
            let op = Operation::parse(&s.operation)
                .ok_or_else(|| ConfigError(format!("stage {:?}: unknown operation {:?}", s.name, s.operation)))?;
            op.check_params(&s.params)
                .map_err(|e| ConfigError(format!("stage {:?}: {e}", s.name)))?;
            op.check_arity(s.inputs.len())
                .map_err(|e| ConfigError(format!("stage {:?}: {e}", s.name)))?;
            for input in &s.inputs {
                let path = base.join(input);
                match produced_by.get(&path) {
                    Some(&j) if j < i => {}
                    Some(&j) => {
                        return err(format!(
                            "cycle: stage {:?} reads {input}, which stage {:?} produces at or after it",
                            s.name, self.stages[j].name
                        ))
                    }
                    None if path.exists() => {}
                    None => return err(format!("stage {:?}: input {input} does not exist", s.name)),
                }
            }
        }
        Ok(())
    }
}

/// Flag values that override matching parameters of every stage that
/// runs the corresponding operation.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub face_iou_threshold: Option<f64>,
    pub assessor_threshold: Option<f64>,
    pub ransac_iters: Option<usize>,
    pub inlier_tol: Option<f64>,
    pub topk: Option<usize>,
    pub tau_sim: Option<f64>,
    pub cap: Option<usize>,
    pub min_gap: Option<f64>,
    pub ops: Option<Vec<String>>,
    pub plan: Option<String>,
}

impl Overrides {
    pub fn apply(&self, config: &mut PipelineConfig) {
        for stage in &mut config.stages {
            let Some(op) = Operation::parse(&stage.operation) else {
                continue;
            };
            let p = &mut stage.params;
            let mut set = |key: &str, v: Option<Value>| {
                if let Some(v) = v {
                    p.insert(key.to_string(), v);
                }
            };
            match op {
                Operation::FaceIouFilter => set("threshold", self.face_iou_threshold.map(Value::from)),
                Operation::AssessorThresholdFilter => set("threshold", self.assessor_threshold.map(Value::from)),
                Operation::AlignPair => {
                    set("ransac_iters", self.ransac_iters.map(Value::from));
                    set("inlier_tol", self.inlier_tol.map(Value::from));
                }
                Operation::GroundInstructions => {
                    set("topk", self.topk.map(Value::from));
                    set("tau_sim", self.tau_sim.map(Value::from));
                    set("cap", self.cap.map(Value::from));
                }
                Operation::StrictDominancePairs => set("min_gap", self.min_gap.map(Value::from)),
                Operation::Augment => {
                    set("ops", self.ops.clone().map(Value::from));
                    set("plan", self.plan.clone().map(Value::from));
                }
                _ => {}
            }
        }
    }
}
