//! Generate-and-validate with bounded retries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hooks::{GenerationRequest, Generator, ValidationRequest, Validator, Verdict};
use crate::record::{InstructionRecord, Provenance, TripletRecord};
use crate::seed::derive_seed;

pub const DEFAULT_MAX_ATTEMPTS: u32 = 5;

/// A source image and the instruction to realize on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiningPair {
    pub id: String,
    pub source_ref: String,
    pub instruction: InstructionRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttemptLog {
    pub attempt: u32,
    pub seed: u64,
    pub target_ref: Option<String>,
    /// `(validator name, verdict)` in evaluation order; stops at the first
    /// failure.
    pub verdicts: Vec<(String, Verdict)>,
    pub error: Option<String>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MiningOutcome {
    pub triplet: Option<TripletRecord>,
    pub log: Vec<AttemptLog>,
}

/// Per-attempt seed: `hash(global seed, pair id, attempt index)`.
pub fn attempt_seed(global_seed: u64, pair_id: &str, attempt: u32) -> u64 {
    derive_seed(&[global_seed.into(), pair_id.into(), u64::from(attempt).into()])
}

/// Call the generator up to `max_attempts` times; return the first
/// candidate every validator accepts. Generator or validator transport
/// failures count as failed attempts.
pub fn mine_with_retries(
    pair: &MiningPair,
    generator: &dyn Generator,
    validators: &[&dyn Validator],
    max_attempts: u32,
    global_seed: u64,
) -> Result<MiningOutcome> {
    if max_attempts == 0 {
        return Err(Error::invalid("max_attempts must be at least 1"));
    }
    if validators.is_empty() {
        return Err(Error::invalid("at least one validator is required"));
    }
    let mut log = Vec::new();
    for attempt in 0..max_attempts {
        let seed = attempt_seed(global_seed, &pair.id, attempt);
        let mut entry = AttemptLog {
            attempt,
            seed,
            target_ref: None,
            verdicts: Vec::new(),
            error: None,
            passed: false,
        };
        let request = GenerationRequest {
            source_ref: pair.source_ref.clone(),
            instruction: pair.instruction.text.clone(),
            attempt,
            seed,
        };
        let target_ref = match generator.generate(&request) {
            Ok(reply) => reply.target_ref,
            Err(e) => {
                entry.error = Some(e.to_string());
                log.push(entry);
                continue;
            }
        };
        entry.target_ref = Some(target_ref.clone());
        let vreq = ValidationRequest {
            source_ref: pair.source_ref.clone(),
            instruction: pair.instruction.text.clone(),
            target_ref: target_ref.clone(),
            attempt,
            seed,
        };
        let mut all_pass = true;
        for v in validators {
            let verdict = v.validate(&vreq).unwrap_or_else(|e| Verdict::fail(format!("transport: {e}")));
            let pass = verdict.pass;
            entry.verdicts.push((v.name().to_string(), verdict));
            if !pass {
                all_pass = false;
                break;
            }
        }
        entry.passed = all_pass;
        log.push(entry);
        if all_pass {
            let triplet = TripletRecord::new(
                pair.id.clone(),
                pair.source_ref.clone(),
                pair.instruction.clone(),
                target_ref,
                Provenance::Mined,
            );
            return Ok(MiningOutcome {
                triplet: Some(triplet),
                log,
            });
        }
    }
    Ok(MiningOutcome { triplet: None, log })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hooks::GenerationReply;
    use crate::record::InstructionOrigin;
    use std::sync::atomic::{AtomicU32, Ordering};

    fn pair() -> MiningPair {
        MiningPair {
            id: "p1".into(),
            source_ref: "src".into(),
            instruction: InstructionRecord::new("i", "add a hat", InstructionOrigin::Synthetic),
        }
    }

    struct CountingGen(AtomicU32);
    impl Generator for CountingGen {
        fn generate(&self, r: &GenerationRequest) -> Result<GenerationReply> {
            self.0.fetch_add(1, Ordering::SeqCst);
            Ok(GenerationReply {
                target_ref: format!("cand-{}-{}", r.attempt, r.seed % 1000),
            })
        }
    }

    struct PassOn(u32);
    impl Validator for PassOn {
        fn name(&self) -> &str {
            "pass-on"
        }
        fn validate(&self, r: &ValidationRequest) -> Result<Verdict> {
            Ok(if r.attempt + 1 == self.0 {
                Verdict::pass()
            } else {
                Verdict::fail("not yet")
            })
        }
    }

    struct Always;
    impl Validator for Always {
        fn name(&self) -> &str {
            "always"
        }
        fn validate(&self, _: &ValidationRequest) -> Result<Verdict> {
            Ok(Verdict::pass())
        }
    }

    #[test]
    fn passes_on_third_attempt() {
        let g = CountingGen(AtomicU32::new(0));
        let out = mine_with_retries(&pair(), &g, &[&Always, &PassOn(3)], 5, 7).unwrap();
        assert!(out.triplet.is_some());
        assert_eq!(out.log.len(), 3);
        assert_eq!(g.0.load(Ordering::SeqCst), 3);
        assert_eq!(out.triplet.unwrap().target_ref, out.log[2].target_ref.clone().unwrap());
    }

    #[test]
    fn exhaustion_returns_none_after_five() {
        let g = CountingGen(AtomicU32::new(0));
        let out = mine_with_retries(&pair(), &g, &[&PassOn(99)], DEFAULT_MAX_ATTEMPTS, 7).unwrap();
        assert!(out.triplet.is_none());
        assert_eq!(out.log.len(), 5);
        assert_eq!(g.0.load(Ordering::SeqCst), 5);
    }

    #[test]
    fn single_attempt_pass() {
        let g = CountingGen(AtomicU32::new(0));
        let out = mine_with_retries(&pair(), &g, &[&Always], 1, 7).unwrap();
        assert!(out.triplet.is_some());
        assert_eq!(out.log.len(), 1);
    }

    #[test]
    fn validators_stop_at_first_failure() {
        let g = CountingGen(AtomicU32::new(0));
        let out = mine_with_retries(&pair(), &g, &[&PassOn(99), &Always], 2, 7).unwrap();
        assert!(out.log.iter().all(|e| e.verdicts.len() == 1));
    }

    #[test]
    fn generator_failure_counts_as_attempt() {
        let flaky = |r: &GenerationRequest| -> Result<GenerationReply> {
            if r.attempt < 2 {
                Err(Error::Transport("503".into()))
            } else {
                Ok(GenerationReply { target_ref: "ok".into() })
            }
        };
        let out = mine_with_retries(&pair(), &flaky, &[&Always], 5, 1).unwrap();
        assert_eq!(out.log.len(), 3);
        assert!(out.log[0].error.is_some());
        assert_eq!(out.triplet.unwrap().target_ref, "ok");
    }

    #[test]
    fn deterministic_given_seed() {
        let run = || {
            let g = CountingGen(AtomicU32::new(0));
            mine_with_retries(&pair(), &g, &[&PassOn(4)], 5, 42).unwrap().log
        };
        assert_eq!(run(), run());
        assert_ne!(attempt_seed(42, "p1", 0), attempt_seed(42, "p1", 1));
    }

    #[test]
    fn preconditions() {
        let g = CountingGen(AtomicU32::new(0));
        assert!(mine_with_retries(&pair(), &g, &[&Always], 0, 0).is_err());
        assert!(mine_with_retries(&pair(), &g, &[], 3, 0).is_err());
    }
}
