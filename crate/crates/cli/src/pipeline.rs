//! Sequential stage execution with atomic outputs and fingerprint resume.

use std::path::{Path, PathBuf};
use std::time::Instant;

use forge_core::manifest::write_atomic;
use forge_core::seed::{derive_seed, sha256_hex};
use log::info;
use serde_json::{json, Value};

use crate::config::{ConfigError, PipelineConfig, StageConfig};
use crate::ops::{self, Operation, StageContext, FILE_PARAMS};
use crate::report::StageReport;
use crate::store::ImageStore;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub resume: bool,
    /// Overrides the config's parallelism.
    pub workers: Option<usize>,
}

#[derive(Debug)]
pub enum PipelineError {
    Validation(String),
    Stage { stage: String, message: String },
}

impl std::fmt::Display for PipelineError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PipelineError::Validation(m) => write!(f, "invalid config: {m}"),
            PipelineError::Stage { stage, message } => write!(f, "stage {stage:?} failed: {message}"),
        }
    }
}

impl std::error::Error for PipelineError {}

impl From<ConfigError> for PipelineError {
    fn from(e: ConfigError) -> Self {
        PipelineError::Validation(e.0)
    }
}

/// Artifact paths next to a stage's output manifest.
pub fn sidecar(output: &Path, suffix: &str) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".");
    name.push(suffix);
    output.with_file_name(name)
}

pub fn stage_seed(global_seed: u64, stage_name: &str) -> u64 {
    derive_seed(&[global_seed.into(), "stage".into(), stage_name.into()])
}

fn file_digest(path: &Path) -> std::io::Result<String> {
    Ok(sha256_hex(&std::fs::read(path)?))
}

/// Hash of everything a stage's output depends on: operation, params,
/// seed, and the bytes of its inputs and referenced files.
pub fn fingerprint(stage: &StageConfig, seed: u64, base: &Path) -> std::io::Result<String> {
    let mut inputs = Vec::new();
    for i in &stage.inputs {
        inputs.push(json!([i, file_digest(&base.join(i))?]));
    }
    let mut files = Vec::new();
    for key in FILE_PARAMS {
        if let Some(Value::String(p)) = stage.params.get(key) {
            files.push(json!([key, file_digest(&base.join(p))?]));
        }
    }
    let doc = json!({
        "operation": stage.operation,
        "params": Value::Object(stage.params.clone()),
        "seed": seed,
        "inputs": inputs,
        "files": files,
    });
    Ok(sha256_hex(doc.to_string().as_bytes()))
}

fn try_resume(stage: &StageConfig, output: &Path, print: &str) -> Option<StageReport> {
    if !output.exists() {
        return None;
    }
    let recorded = std::fs::read_to_string(sidecar(output, "fingerprint")).ok()?;
    if recorded.trim() != print {
        return None;
    }
    let text = std::fs::read_to_string(sidecar(output, "report.json")).ok()?;
    let mut report: StageReport = serde_json::from_str(&text).ok()?;
    if report.stage != stage.name {
        return None;
    }
    report.resumed = true;
    Some(report)
}

/// Run every stage in order. Relative paths resolve against `base`
/// (normally the config file's directory). A failing stage stops the run;
/// outputs of earlier stages stay on disk.
pub fn run_pipeline(config: &PipelineConfig, base: &Path, opts: &RunOptions) -> Result<Vec<StageReport>, PipelineError> {
    config.validate(base)?;
    let workers = opts.workers.unwrap_or(config.parallelism);
    if workers == 0 {
        return Err(PipelineError::Validation("workers must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| PipelineError::Validation(format!("worker pool: {e}")))?;
    let store = ImageStore::new(base.join(&config.image_dir));
    if !config.stages.is_empty() {
        std::fs::create_dir_all(store.root()).map_err(|e| PipelineError::Stage {
            stage: config.stages[0].name.clone(),
            message: format!("{}: {e}", store.root().display()),
        })?;
    }

    let mut reports = Vec::new();
    for stage in &config.stages {
        let fail = |message: String| PipelineError::Stage { stage: stage.name.clone(), message };
        let op = Operation::parse(&stage.operation).expect("validated");
        let seed = stage_seed(config.global_seed, &stage.name);
        let output = base.join(&stage.output);
        let print = fingerprint(stage, seed, base).map_err(|e| fail(e.to_string()))?;
        if opts.resume {
            if let Some(report) = try_resume(stage, &output, &print) {
                info!("stage {}: resumed from {}", stage.name, output.display());
                reports.push(report);
                continue;
            }
        }

        let started = Instant::now();
        let inputs: Vec<PathBuf> = stage.inputs.iter().map(|i| base.join(i)).collect();
        let ctx = StageContext { seed, store: &store, base, pool: &pool };
        let result = ops::run(op, &stage.params, &inputs, &ctx).map_err(|e| fail(e.to_string()))?;
        let t = &result.tally;
        let report = StageReport {
            stage: stage.name.clone(),
            operation: stage.operation.clone(),
            input: t.input(),
            kept: t.kept,
            removed: t.removed,
            errored: t.errored,
            emitted: t.emitted,
            removal_histogram: t.histogram.clone(),
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
            resumed: false,
        };

        if let Some(dir) = output.parent() {
            std::fs::create_dir_all(dir).map_err(|e| fail(format!("{}: {e}", dir.display())))?;
        }
        let lines = forge_core::manifest::to_jsonl_bytes(&t.lines).map_err(|e| fail(e.to_string()))?;
        let report_json = serde_json::to_vec_pretty(&report).map_err(|e| fail(e.to_string()))?;
        let mut writes = vec![(sidecar(&output, "records.jsonl"), lines), (sidecar(&output, "report.json"), report_json)];
        for (suffix, bytes) in result.extras {
            writes.push((sidecar(&output, &suffix), bytes));
        }
        // drop the old fingerprint first and write the new one last, so a
        // crash never leaves a fingerprint vouching for a different manifest
        let _ = std::fs::remove_file(sidecar(&output, "fingerprint"));
        writes.push((output.clone(), result.manifest));
        writes.push((sidecar(&output, "fingerprint"), format!("{print}\n").into_bytes()));
        for (path, bytes) in writes {
            write_atomic(&path, &bytes).map_err(|e| fail(e.to_string()))?;
        }
        info!(
            "stage {}: in {} kept {} removed {} errored {} emitted {} ({:.0} ms)",
            report.stage, report.input, report.kept, report.removed, report.errored, report.emitted, report.wall_ms
        );
        reports.push(report);
    }
    Ok(reports)
}
