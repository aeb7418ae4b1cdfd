//! Triplet invariant checks. Violations are data, not errors.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::record::{Provenance, TripletRecord};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violation {
    EmptyId,
    EmptyInstruction,
    EmptyRef { field: &'static str },
    SourceEqualsTarget,
    /// Identity triplets must map an image to itself.
    IdentityRefsDiffer,
    /// Record ids along the cycle, starting and ending at the same id.
    LineageCycle { path: Vec<String> },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::EmptyId => write!(f, "empty triplet id"),
            Violation::EmptyInstruction => write!(f, "instruction text is empty"),
            Violation::EmptyRef { field } => write!(f, "{field} is empty"),
            Violation::SourceEqualsTarget => write!(f, "source_ref equals target_ref"),
            Violation::IdentityRefsDiffer => write!(f, "identity triplet with differing refs"),
            Violation::LineageCycle { path } => write!(f, "lineage cycle {}", path.join(" -> ")),
        }
    }
}

/// Per-record invariants. A record listing itself as a parent is reported
/// as a one-step cycle; longer cycles need the other records, see
/// [`validate_triplets`].
pub fn validate_triplet(record: &TripletRecord) -> Vec<Violation> {
    let mut out = Vec::new();
    if record.id.trim().is_empty() {
        out.push(Violation::EmptyId);
    }
    if record.instruction.text.trim().is_empty() {
        out.push(Violation::EmptyInstruction);
    }
    if record.source_ref.trim().is_empty() {
        out.push(Violation::EmptyRef { field: "source_ref" });
    }
    if record.target_ref.trim().is_empty() {
        out.push(Violation::EmptyRef { field: "target_ref" });
    }
    let same = record.source_ref == record.target_ref;
    match record.provenance {
        Provenance::Identity if !same => out.push(Violation::IdentityRefsDiffer),
        Provenance::Identity => {}
        _ if same => out.push(Violation::SourceEqualsTarget),
        _ => {}
    }
    if record.lineage.iter().any(|p| p == &record.id) {
        out.push(Violation::LineageCycle {
            path: vec![record.id.clone(), record.id.clone()],
        });
    }
    out
}

/// Validate a whole corpus, including lineage cycles that span records.
/// Returns `(record index, violation)` pairs in record order.
pub fn validate_triplets(records: &[TripletRecord]) -> Vec<(usize, Violation)> {
    let mut out: Vec<(usize, Violation)> = Vec::new();
    for (i, r) in records.iter().enumerate() {
        out.extend(validate_triplet(r).into_iter().map(|v| (i, v)));
    }

    let graph: BTreeMap<&str, Vec<&str>> = records
        .iter()
        .map(|r| (r.id.as_str(), r.lineage.iter().map(String::as_str).collect()))
        .collect();
    let index: BTreeMap<&str, usize> = records
        .iter()
        .enumerate()
        .map(|(i, r)| (r.id.as_str(), i))
        .collect();

    // Iterative DFS with white/grey/black colouring. Each cycle is reported
    // once, on the record where it was first closed.
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Grey,
        Black,
    }
    let mut mark: BTreeMap<&str, Mark> = BTreeMap::new();
    let mut reported: BTreeSet<Vec<String>> = BTreeSet::new();
    for start in graph.keys() {
        if mark.contains_key(start) {
            continue;
        }
        let mut stack: Vec<(&str, usize)> = vec![(start, 0)];
        mark.insert(start, Mark::Grey);
        while let Some(&mut (node, ref mut next)) = stack.last_mut() {
            let parents = &graph[node];
            if *next >= parents.len() {
                mark.insert(node, Mark::Black);
                stack.pop();
                continue;
            }
            let parent = parents[*next];
            *next += 1;
            if parent == node || !graph.contains_key(parent) {
                continue;
            }
            match mark.get(parent) {
                None => {
                    mark.insert(parent, Mark::Grey);
                    stack.push((parent, 0));
                }
                Some(Mark::Grey) => {
                    let pos = stack.iter().position(|(n, _)| *n == parent).expect("grey on stack");
                    let mut path: Vec<String> =
                        stack[pos..].iter().map(|(n, _)| n.to_string()).collect();
                    path.push(parent.to_string());
                    let mut key = path[..path.len() - 1].to_vec();
                    key.sort();
                    if reported.insert(key) {
                        out.push((index[node], Violation::LineageCycle { path }));
                    }
                }
                Some(Mark::Black) => {}
            }
        }
    }
    out.sort_by_key(|(i, _)| *i);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::{InstructionOrigin, InstructionRecord};

    fn rec(id: &str, src: &str, tgt: &str, prov: Provenance) -> TripletRecord {
        TripletRecord::new(
            id,
            src,
            InstructionRecord::new("i", "make it red", InstructionOrigin::Synthetic),
            tgt,
            prov,
        )
    }

    #[test]
    fn identity_with_equal_refs_is_valid() {
        assert!(validate_triplet(&rec("a", "h1", "h1", Provenance::Identity)).is_empty());
    }

    #[test]
    fn mined_with_equal_refs_has_one_violation() {
        let v = validate_triplet(&rec("a", "h1", "h1", Provenance::Mined));
        assert_eq!(v, vec![Violation::SourceEqualsTarget]);
    }

    #[test]
    fn two_record_lineage_cycle_is_found() {
        let a = rec("a", "x", "y", Provenance::Inverted).with_lineage(["b".to_string()]);
        let b = rec("b", "y", "x", Provenance::Inverted).with_lineage(["a".to_string()]);
        let v = validate_triplets(&[a, b]);
        assert_eq!(v.len(), 1);
        match &v[0].1 {
            Violation::LineageCycle { path } => {
                assert_eq!(path.first(), path.last());
                assert_eq!(path.len(), 3);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn self_parent_is_a_cycle() {
        let a = rec("a", "x", "y", Provenance::Mined).with_lineage(["a".to_string()]);
        assert!(matches!(
            validate_triplet(&a).as_slice(),
            [Violation::LineageCycle { .. }]
        ));
    }

    #[test]
    fn acyclic_chain_is_clean() {
        let a = rec("a", "x", "y", Provenance::Mined);
        let b = rec("b", "y", "x", Provenance::Inverted).with_lineage(["a".to_string()]);
        let c = rec("c", "y", "z", Provenance::Composite).with_lineage(["a".into(), "b".into()]);
        assert!(validate_triplets(&[a, b, c]).is_empty());
    }

    #[test]
    fn blank_instruction_is_reported() {
        let mut r = rec("a", "x", "y", Provenance::Mined);
        r.instruction.text = "   ".into();
        assert_eq!(validate_triplet(&r), vec![Violation::EmptyInstruction]);
    }
}
