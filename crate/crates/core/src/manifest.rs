//! JSONL manifests: one JSON object per line, UTF-8, stable key order.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::record::TripletRecord;

/// A parsed value together with its 1-based line number.
#[derive(Debug, Clone, PartialEq)]
pub struct Located<T> {
    pub line: usize,
    pub value: T,
}

/// Parse JSONL text. Blank lines are skipped but still counted.
pub fn parse_jsonl<T: DeserializeOwned>(text: &str) -> Result<Vec<Located<T>>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(raw).map_err(|e| Error::Json {
            line,
            message: e.to_string(),
        })?;
        if !value.is_object() {
            return Err(Error::Json {
                line,
                message: "expected a JSON object".into(),
            });
        }
        let value = serde_json::from_value(value).map_err(|e| Error::Schema {
            line,
            message: e.to_string(),
        })?;
        out.push(Located { line, value });
    }
    Ok(out)
}

pub fn read_jsonl<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<Located<T>>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut text = String::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        text.push_str(&line);
        text.push('\n');
    }
    parse_jsonl(&text)
}

/// Canonical JSONL bytes: compact JSON, `\n` after every record.
pub fn to_jsonl_bytes<T: Serialize>(items: &[T]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for item in items {
        serde_json::to_writer(&mut out, item).map_err(|e| Error::invalid(e.to_string()))?;
        out.push(b'\n');
    }
    Ok(out)
}

/// Write bytes through a sibling temp file and rename, so readers never
/// observe a partially written file.
pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => std::path::PathBuf::from("."),
    };
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::invalid(format!("not a file path: {}", path.display())))?
        .to_string_lossy()
        .into_owned();
    static NEXT_TMP: std::sync::atomic::AtomicU64 = std::sync::atomic::AtomicU64::new(0);
    let n = NEXT_TMP.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
    let tmp = dir.join(format!(".{file_name}.tmp-{}-{n}", std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    }
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn write_jsonl<T: Serialize>(items: &[T], path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path, &to_jsonl_bytes(items)?)
}

pub fn read_manifest_located(path: impl AsRef<Path>) -> Result<Vec<Located<TripletRecord>>> {
    read_jsonl(path)
}

/// Records in file order.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<TripletRecord>> {
    Ok(read_jsonl(path)?.into_iter().map(|l| l.value).collect())
}

pub fn write_manifest(records: &[TripletRecord], path: impl AsRef<Path>) -> Result<()> {
    write_jsonl(records, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::{InstructionOrigin, InstructionRecord, Provenance};

    fn rec(id: &str) -> TripletRecord {
        TripletRecord::new(
            id,
            "img/a.png",
            InstructionRecord::new(format!("{id}-i"), "remove the car", InstructionOrigin::Synthetic),
            "img/b.png",
            Provenance::Mined,
        )
    }

    #[test]
    fn empty_file_is_empty_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.jsonl");
        std::fs::write(&p, "").unwrap();
        assert!(read_manifest(&p).unwrap().is_empty());
        write_manifest(&[], &p).unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"");
    }

    #[test]
    fn one_line_round_trips_with_provenance() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.jsonl");
        write_manifest(&[rec("t1")], &p).unwrap();
        let back = read_manifest(&p).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].provenance, Provenance::Mined);
        assert_eq!(back[0], rec("t1"));
    }

    #[test]
    fn order_is_preserved() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.jsonl");
        write_manifest(&[rec("b"), rec("a")], &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().count(), 2);
        let ids: Vec<_> = read_manifest(&p).unwrap().into_iter().map(|r| r.id).collect();
        assert_eq!(ids, ["b", "a"]);
    }

    #[test]
    fn missing_instruction_on_line_three_is_a_schema_error() {
        let good = String::from_utf8(to_jsonl_bytes(&[rec("x")]).unwrap()).unwrap();
        let mut bad: serde_json::Value = serde_json::from_str(good.trim()).unwrap();
        bad.as_object_mut().unwrap().remove("instruction");
        let text = format!("{good}{good}{bad}\n");
        match parse_jsonl::<TripletRecord>(&text) {
            Err(Error::Schema { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("instruction"), "{message}");
            }
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_json_reports_line() {
        let good = String::from_utf8(to_jsonl_bytes(&[rec("x")]).unwrap()).unwrap();
        let text = format!("{good}\n{{not json\n");
        match parse_jsonl::<TripletRecord>(&text) {
            Err(Error::Json { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected json error, got {other:?}"),
        }
    }

    #[test]
    fn write_read_write_is_byte_stable() {
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("1.jsonl");
        let p2 = dir.path().join("2.jsonl");
        let mut r = rec("s");
        r.scores = Some(crate::record::AssessorScore::new(3.7, 4.123456789).unwrap());
        r.lineage = vec!["p1".into(), "p2".into()];
        write_manifest(&[r, rec("t")], &p1).unwrap();
        write_manifest(&read_manifest(&p1).unwrap(), &p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn io_errors_carry_path() {
        let err = read_manifest("/nonexistent/dir/m.jsonl").unwrap_err();
        assert!(err.to_string().contains("/nonexistent/dir/m.jsonl"));
    }
}
