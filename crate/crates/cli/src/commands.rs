//! Standalone subcommands outside the staged pipeline.

use std::path::Path;

use forge_core::grounding::{cluster_report, kmeans, ClusterReportLine, Embedder, TrigramEmbedder, DEFAULT_MAX_ITER};
use forge_core::manifest::{read_jsonl, read_manifest_located};
use forge_core::preference::{dpo_batch_loss, metric_report, DpoSample, MetricReport};
use forge_core::scheduler::{mix_tasks, plan_batches, BatchPlan, MixRatio, MixedEntry, PlanItem, TaskSource};
use forge_core::validate::validate_triplets;
use forge_core::{InstructionRecord, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViolationLine {
    pub line: usize,
    pub id: String,
    pub violation: String,
}

/// Invariant violations with their manifest line numbers.
pub fn validate_manifest(path: &Path) -> Result<Vec<ViolationLine>> {
    let located = read_manifest_located(path)?;
    let records: Vec<_> = located.iter().map(|l| l.value.clone()).collect();
    Ok(validate_triplets(&records)
        .into_iter()
        .map(|(i, v)| ViolationLine { line: located[i].line, id: records[i].id.clone(), violation: v.to_string() })
        .collect())
}

/// k-means over trigram embeddings of an instruction corpus.
pub fn cluster(path: &Path, k: usize, seed: u64) -> Result<Vec<ClusterReportLine>> {
    let corpus: Vec<InstructionRecord> = read_jsonl(path)?.into_iter().map(|l| l.value).collect();
    let embedder = TrigramEmbedder::default();
    let points = corpus
        .iter()
        .map(|r| Ok(Embedder::<f64>::embed(&embedder, &r.id, &r.text)?.values().to_vec()))
        .collect::<Result<Vec<_>>>()?;
    let ids: Vec<String> = corpus.iter().map(|r| r.id.clone()).collect();
    let result = kmeans(&points, k, seed, DEFAULT_MAX_ITER)?;
    Ok(cluster_report(&ids, &result))
}

pub fn plan(path: &Path, pixel_budget: u64, seed: u64) -> Result<BatchPlan> {
    let items: Vec<PlanItem> = read_jsonl(path)?.into_iter().map(|l| l.value).collect();
    plan_batches(&items, pixel_budget, seed)
}

pub fn mix(edit: &Path, t2i: &Path, ratio: &MixRatio, count: usize, seed: u64) -> Result<Vec<MixedEntry>> {
    let mut e = read_jsonl::<TaskSource>(edit)?.into_iter().map(|l| l.value);
    let mut t = read_jsonl::<TaskSource>(t2i)?.into_iter().map(|l| l.value);
    mix_tasks(&mut e, &mut t, ratio, count, seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DpoSummary {
    pub mean_loss: f64,
    pub n: usize,
}

pub fn dpo_loss(path: &Path) -> Result<DpoSummary> {
    let samples: Vec<DpoSample<f64>> = read_jsonl(path)?.into_iter().map(|l| l.value).collect();
    let batch = dpo_batch_loss(&samples)?;
    Ok(DpoSummary { mean_loss: batch.mean_loss, n: samples.len() })
}

#[derive(Debug, Clone, Copy, Deserialize)]
struct LabeledPrediction {
    prediction: f64,
    label: f64,
}

/// MAE and Spearman correlation over `{prediction, label}` lines.
pub fn metrics(path: &Path) -> Result<MetricReport> {
    let rows: Vec<LabeledPrediction> = read_jsonl(path)?.into_iter().map(|l| l.value).collect();
    let p: Vec<f64> = rows.iter().map(|r| r.prediction).collect();
    let l: Vec<f64> = rows.iter().map(|r| r.label).collect();
    metric_report(&p, &l)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn validate_reports_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let ok = r#"{"id":"a","source_ref":"s","instruction":{"id":"i","text":"x","origin":"synthetic"},"target_ref":"t","provenance":"mined"}"#;
        let bad = r#"{"id":"b","source_ref":"s","instruction":{"id":"i","text":"x","origin":"synthetic"},"target_ref":"s","provenance":"mined"}"#;
        let p = write(dir.path(), "m.jsonl", &format!("{ok}\n\n{bad}\n"));
        let v = validate_manifest(&p).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!((v[0].line, v[0].id.as_str()), (3, "b"));
    }

    #[test]
    fn metrics_and_dpo_from_files() {
        let dir = tempfile::tempdir().unwrap();
        let m = write(
            dir.path(),
            "m.jsonl",
            "{\"prediction\":1,\"label\":2}\n{\"prediction\":2,\"label\":3}\n{\"prediction\":3,\"label\":5}\n",
        );
        let r = metrics(&m).unwrap();
        assert!((r.mae - 4.0 / 3.0).abs() < 1e-12);
        assert!((r.rho - 1.0).abs() < 1e-12);

        let d = write(
            dir.path(),
            "d.jsonl",
            "{\"eps\":[0],\"eps_ref_w\":[1],\"eps_theta_w\":[1],\"eps_ref_l\":[1],\"eps_theta_l\":[1],\"beta\":0.1}\n",
        );
        let s = dpo_loss(&d).unwrap();
        assert!((s.mean_loss - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn mix_and_plan_from_files() {
        let dir = tempfile::tempdir().unwrap();
        let lines = |p: &str, n: usize| {
            (0..n).map(|i| format!("{{\"id\":\"{p}{i}\",\"prompt\":\"x{i}\"}}\n")).collect::<String>()
        };
        let e = write(dir.path(), "e.jsonl", &lines("e", 40));
        let t = write(dir.path(), "t.jsonl", &lines("t", 80));
        let out = mix(&e, &t, &MixRatio::new(68.0, 32.0).unwrap(), 100, 1).unwrap();
        assert_eq!(out.iter().filter(|m| m.black_conditioning).count(), 68);

        let items = write(
            dir.path(),
            "i.jsonl",
            &(0..5).map(|i| format!("{{\"id\":\"p{i}\",\"width\":100,\"height\":100}}\n")).collect::<String>(),
        );
        let plan = plan(&items, 20_000, 3).unwrap();
        assert_eq!(plan.batches.iter().map(|b| b.ids.len()).sum::<usize>(), 5);
    }

    #[test]
    fn cluster_separates_two_phrasings() {
        let dir = tempfile::tempdir().unwrap();
        let text = [
            ("a", "make the sky blue"),
            ("b", "make the sky bluer"),
            ("c", "remove the red car"),
            ("d", "remove the red cars"),
        ]
        .iter()
        .map(|(id, t)| format!("{{\"id\":\"{id}\",\"text\":\"{t}\",\"origin\":\"real-user\"}}\n"))
        .collect::<String>();
        let p = write(dir.path(), "c.jsonl", &text);
        let mut groups: Vec<Vec<String>> = cluster(&p, 2, 5).unwrap().into_iter().map(|c| c.member_ids).collect();
        groups.sort();
        assert_eq!(groups, vec![vec!["a".to_string(), "b".into()], vec!["c".to_string(), "d".into()]]);
    }
}
