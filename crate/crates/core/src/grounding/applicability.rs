use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// What the validator knows about an image: its reference and a tag list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageDescriptor {
    pub image_ref: String,
    pub tags: Vec<String>,
}

/// Raw hook verdict before the minimal-edit rule is enforced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum HookVerdict {
    Applicable,
    Propose { text: String },
    Reject { reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum ApplicabilityOutcome {
    Applicable,
    MinimallyEdited { text: String },
    Discarded { reason: String },
}

pub trait ApplicabilityValidator: Send + Sync {
    fn check(&self, instruction: &str, descriptor: &ImageDescriptor) -> Result<HookVerdict>;
}

/// Fraction of a proposal must retain this share of the original tokens.
pub const MIN_TOKEN_RETENTION: f64 = 0.6;

fn tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric() && c != '\'')
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Share of `original`'s tokens (as a multiset) still present in `edited`.
pub fn token_retention(original: &str, edited: &str) -> f64 {
    let orig = tokens(original);
    if orig.is_empty() {
        return 0.0;
    }
    let mut pool = tokens(edited);
    let mut hits = 0usize;
    for t in &orig {
        if let Some(pos) = pool.iter().position(|p| p == t) {
            pool.swap_remove(pos);
            hits += 1;
        }
    }
    hits as f64 / orig.len() as f64
}

const DETERMINERS: &[&str] = &["the", "a", "an", "this", "that", "these", "those", "his", "her", "their"];

/// Offline stand-in: the referent is the token after the first determiner
/// (or the last token). Applicable when a tag names it; otherwise proposes
/// swapping it for the first tag; rejects when there are no tags.
#[derive(Debug, Clone, Copy, Default)]
pub struct KeywordValidator;

fn singular(t: &str) -> &str {
    t.strip_suffix('s').filter(|s| s.len() >= 3).unwrap_or(t)
}

impl ApplicabilityValidator for KeywordValidator {
    fn check(&self, instruction: &str, descriptor: &ImageDescriptor) -> Result<HookVerdict> {
        let toks = tokens(instruction);
        let tags: Vec<String> = descriptor.tags.iter().map(|t| t.to_lowercase()).collect();
        let named = |t: &str| tags.iter().any(|g| g == t || singular(g) == singular(t));
        if toks.iter().any(|t| named(t)) {
            return Ok(HookVerdict::Applicable);
        }
        let Some(first_tag) = tags.first() else {
            return Ok(HookVerdict::Reject {
                reason: "no referent".into(),
            });
        };
        let referent = toks
            .iter()
            .position(|t| DETERMINERS.contains(&t.as_str()))
            .and_then(|i| toks.get(i + 1))
            .or_else(|| toks.last())
            .cloned();
        let Some(referent) = referent else {
            return Ok(HookVerdict::Reject {
                reason: "no referent".into(),
            });
        };
        // replace the first whole-word occurrence, preserving the rest verbatim
        let lower = instruction.to_lowercase();
        let mut start = 0;
        while let Some(off) = lower[start..].find(&referent) {
            let at = start + off;
            let end = at + referent.len();
            let before_ok = lower[..at].chars().next_back().is_none_or(|c| !c.is_alphanumeric());
            let after_ok = lower[end..].chars().next().is_none_or(|c| !c.is_alphanumeric());
            if before_ok && after_ok {
                let text = format!("{}{}{}", &instruction[..at], first_tag, &instruction[end..]);
                return Ok(HookVerdict::Propose { text });
            }
            start = end;
        }
        Ok(HookVerdict::Reject {
            reason: "no referent".into(),
        })
    }
}

/// Run the hook and enforce the minimal-edit rule on proposals. Hook
/// failures surface as `Err`, distinct from a `Discarded` outcome.
pub fn validate_applicability(
    instruction: &str,
    descriptor: &ImageDescriptor,
    validator: &dyn ApplicabilityValidator,
) -> Result<ApplicabilityOutcome> {
    let verdict = validator.check(instruction, descriptor).map_err(|e| match e {
        Error::Transport(m) => Error::Transport(m),
        other => Error::Transport(other.to_string()),
    })?;
    Ok(match verdict {
        HookVerdict::Applicable => ApplicabilityOutcome::Applicable,
        HookVerdict::Reject { reason } => ApplicabilityOutcome::Discarded { reason },
        HookVerdict::Propose { text } => {
            let text = text.trim().to_string();
            if text.is_empty() || text == instruction.trim() {
                ApplicabilityOutcome::Discarded {
                    reason: "empty or unchanged proposal".into(),
                }
            } else if token_retention(instruction, &text) < MIN_TOKEN_RETENTION {
                ApplicabilityOutcome::Discarded {
                    reason: "edit not minimal".into(),
                }
            } else {
                ApplicabilityOutcome::MinimallyEdited { text }
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn desc(tags: &[&str]) -> ImageDescriptor {
        ImageDescriptor {
            image_ref: "img".into(),
            tags: tags.iter().map(|t| t.to_string()).collect(),
        }
    }

    #[test]
    fn tag_present_is_applicable() {
        let out = validate_applicability("remove the dog", &desc(&["grass", "dog"]), &KeywordValidator).unwrap();
        assert_eq!(out, ApplicabilityOutcome::Applicable);
    }

    #[test]
    fn substitution_gives_minimal_edit() {
        let out = validate_applicability("remove the dog", &desc(&["cat"]), &KeywordValidator).unwrap();
        assert_eq!(
            out,
            ApplicabilityOutcome::MinimallyEdited {
                text: "remove the cat".into()
            }
        );
        assert!(token_retention("remove the dog", "remove the cat") >= MIN_TOKEN_RETENTION);
    }

    #[test]
    fn no_tags_discards() {
        let out = validate_applicability("remove the dog", &desc(&[]), &KeywordValidator).unwrap();
        assert_eq!(
            out,
            ApplicabilityOutcome::Discarded {
                reason: "no referent".into()
            }
        );
    }

    struct Rewriter(&'static str);
    impl ApplicabilityValidator for Rewriter {
        fn check(&self, _: &str, _: &ImageDescriptor) -> Result<HookVerdict> {
            Ok(HookVerdict::Propose { text: self.0.into() })
        }
    }

    struct Broken;
    impl ApplicabilityValidator for Broken {
        fn check(&self, _: &str, _: &ImageDescriptor) -> Result<HookVerdict> {
            Err(Error::invalid("socket closed"))
        }
    }

    #[test]
    fn heavy_rewrites_are_discarded() {
        let out = validate_applicability("remove the dog", &desc(&[]), &Rewriter("paint a sunset sky")).unwrap();
        assert!(matches!(out, ApplicabilityOutcome::Discarded { .. }));
        let out = validate_applicability("remove the dog", &desc(&[]), &Rewriter("remove the dog")).unwrap();
        assert!(matches!(out, ApplicabilityOutcome::Discarded { .. }));
    }

    #[test]
    fn hook_failure_is_transport_error() {
        assert!(matches!(
            validate_applicability("remove the dog", &desc(&[]), &Broken),
            Err(Error::Transport(_))
        ));
    }
}
