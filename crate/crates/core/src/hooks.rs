//! Pluggable external models: generators, validators, assessors.
//!
//! In-process implementations are ordinary trait objects. Out-of-process
//! ones use [`SubprocessHook`]: one JSON request on stdin, one JSON reply on
//! stdout, non-zero exit is a transport failure.

use std::io::Write;
use std::process::{Command, Stdio};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::record::{AssessorScore, TripletRecord};
use crate::seed::derive_seed;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub source_ref: String,
    pub instruction: String,
    pub attempt: u32,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationReply {
    pub target_ref: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationRequest {
    pub source_ref: String,
    pub instruction: String,
    pub target_ref: String,
    pub attempt: u32,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl Verdict {
    pub fn pass() -> Self {
        Self {
            pass: true,
            reason: None,
        }
    }

    pub fn fail(reason: impl Into<String>) -> Self {
        Self {
            pass: false,
            reason: Some(reason.into()),
        }
    }
}

/// Produces a candidate edited image for a (source, instruction) pair.
pub trait Generator: Send + Sync {
    fn generate(&self, request: &GenerationRequest) -> Result<GenerationReply>;

    /// True when the hook must not be invoked concurrently.
    fn single_flight(&self) -> bool {
        false
    }
}

/// Accepts or rejects a generated candidate.
pub trait Validator: Send + Sync {
    fn name(&self) -> &str;
    fn validate(&self, request: &ValidationRequest) -> Result<Verdict>;
}

/// Scores a triplet on instruction adherence and aesthetics.
pub trait Assessor: Send + Sync {
    fn assess(&self, record: &TripletRecord) -> Result<AssessorScore>;
}

impl<F> Generator for F
where
    F: Fn(&GenerationRequest) -> Result<GenerationReply> + Send + Sync,
{
    fn generate(&self, request: &GenerationRequest) -> Result<GenerationReply> {
        self(request)
    }
}

/// Deterministic offline assessor: scores are a hash of the triplet id,
/// seed and refs, spread over `[1, 5]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct HashAssessor {
    pub seed: u64,
}

impl Assessor for HashAssessor {
    fn assess(&self, record: &TripletRecord) -> Result<AssessorScore> {
        let draw = |salt: &str| {
            let h = derive_seed(&[
                self.seed.into(),
                salt.into(),
                record.source_ref.as_str().into(),
                record.instruction.text.as_str().into(),
                record.target_ref.as_str().into(),
            ]);
            // quantize to 0.01 so manifests stay readable
            let unit = (h % 401) as f64 / 400.0;
            (100.0 + unit * 400.0).round() / 100.0
        };
        AssessorScore::new(draw("adherence"), draw("aesthetic")).map_err(Error::InvalidArgument)
    }
}

/// External program speaking the JSON-over-stdio hook contract.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubprocessHook {
    pub program: String,
    #[serde(default)]
    pub args: Vec<String>,
    /// Declared by the hook author; see [`Generator::single_flight`].
    #[serde(default)]
    pub single_flight: bool,
}

impl SubprocessHook {
    pub fn new(program: impl Into<String>, args: impl IntoIterator<Item = String>) -> Self {
        Self {
            program: program.into(),
            args: args.into_iter().collect(),
            single_flight: false,
        }
    }

    pub fn call<Req: Serialize, Resp: for<'de> Deserialize<'de>>(&self, request: &Req) -> Result<Resp> {
        let payload = serde_json::to_vec(request).map_err(|e| Error::Transport(e.to_string()))?;
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| Error::Transport(format!("spawn {}: {e}", self.program)))?;
        child
            .stdin
            .take()
            .expect("piped stdin")
            .write_all(&payload)
            .map_err(|e| Error::Transport(format!("write to {}: {e}", self.program)))?;
        let output = child
            .wait_with_output()
            .map_err(|e| Error::Transport(format!("wait for {}: {e}", self.program)))?;
        if !output.status.success() {
            return Err(Error::Transport(format!(
                "{} exited with {}: {}",
                self.program,
                output.status,
                String::from_utf8_lossy(&output.stderr).trim()
            )));
        }
        serde_json::from_slice(&output.stdout)
            .map_err(|e| Error::Transport(format!("bad reply from {}: {e}", self.program)))
    }
}

impl Generator for SubprocessHook {
    fn generate(&self, request: &GenerationRequest) -> Result<GenerationReply> {
        self.call(request)
    }

    fn single_flight(&self) -> bool {
        self.single_flight
    }
}

impl Validator for SubprocessHook {
    fn name(&self) -> &str {
        &self.program
    }

    fn validate(&self, request: &ValidationRequest) -> Result<Verdict> {
        self.call(request)
    }
}

impl Assessor for SubprocessHook {
    fn assess(&self, record: &TripletRecord) -> Result<AssessorScore> {
        self.call(record)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_assessor_is_deterministic_and_in_range() {
        let rec = TripletRecord::new(
            "t",
            "a",
            crate::record::InstructionRecord::new("i", "x", crate::record::InstructionOrigin::Synthetic),
            "b",
            crate::record::Provenance::Mined,
        );
        let a = HashAssessor { seed: 3 }.assess(&rec).unwrap();
        let b = HashAssessor { seed: 3 }.assess(&rec).unwrap();
        assert_eq!(a, b);
        assert!((1.0..=5.0).contains(&a.instruction_adherence));
    }

    #[cfg(unix)]
    #[test]
    fn subprocess_round_trip_and_transport_failure() {
        let echo = SubprocessHook::new(
            "sh",
            ["-c".to_string(), r#"cat > /dev/null; echo '{"pass": false, "reason": "blurry"}'"#.to_string()],
        );
        let req = ValidationRequest {
            source_ref: "a".into(),
            instruction: "x".into(),
            target_ref: "b".into(),
            attempt: 0,
            seed: 1,
        };
        assert_eq!(echo.validate(&req).unwrap(), Verdict::fail("blurry"));

        let failing = SubprocessHook::new("sh", ["-c".to_string(), "exit 3".to_string()]);
        assert!(matches!(failing.validate(&req), Err(Error::Transport(_))));
    }
}
