//! Inversion and composite transitions over a set of edits of one anchor.

use std::collections::{BTreeMap, BTreeSet};

use log::warn;

use crate::error::{Error, Result};
use crate::record::{InstructionOrigin, InstructionRecord, Provenance, TripletRecord};

/// One base edit of the anchor image.
#[derive(Debug, Clone, PartialEq)]
pub struct Edit {
    pub triplet_id: String,
    pub instruction: InstructionRecord,
    pub target_ref: String,
}

/// An anchor image `x` with `N >= 1` edited variants `y_1..y_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct EditSet {
    anchor_ref: String,
    edits: Vec<Edit>,
}

impl EditSet {
    pub fn new(anchor_ref: impl Into<String>, edits: Vec<Edit>) -> Result<Self> {
        let anchor_ref = anchor_ref.into();
        if edits.is_empty() {
            return Err(Error::invalid("edit set needs at least one edit"));
        }
        let mut seen = BTreeSet::new();
        for e in &edits {
            if e.target_ref == anchor_ref {
                return Err(Error::invalid(format!("edit {} targets the anchor", e.triplet_id)));
            }
            if !seen.insert(e.target_ref.as_str()) {
                return Err(Error::invalid(format!("duplicate target ref {}", e.target_ref)));
            }
        }
        Ok(Self { anchor_ref, edits })
    }

    pub fn anchor_ref(&self) -> &str {
        &self.anchor_ref
    }

    pub fn edits(&self) -> &[Edit] {
        &self.edits
    }

    pub fn len(&self) -> usize {
        self.edits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edits.is_empty()
    }

    /// The base triplets `(x, t_i, y_i)`.
    pub fn base_triplets(&self) -> Vec<TripletRecord> {
        self.edits
            .iter()
            .map(|e| {
                TripletRecord::new(
                    e.triplet_id.clone(),
                    self.anchor_ref.clone(),
                    e.instruction.clone(),
                    e.target_ref.clone(),
                    Provenance::Mined,
                )
            })
            .collect()
    }
}

/// Group triplets by source image into edit sets, keeping first-seen
/// order of anchors and edits. Triplets whose target repeats within a
/// group, or equals the anchor, are returned separately.
pub fn group_edit_sets(records: &[TripletRecord]) -> (Vec<EditSet>, Vec<TripletRecord>) {
    let mut order: Vec<&str> = Vec::new();
    let mut groups: BTreeMap<&str, Vec<&TripletRecord>> = BTreeMap::new();
    for r in records {
        let g = groups.entry(r.source_ref.as_str()).or_default();
        if g.is_empty() {
            order.push(r.source_ref.as_str());
        }
        g.push(r);
    }
    let mut sets = Vec::new();
    let mut leftovers = Vec::new();
    for anchor in order {
        let mut targets = BTreeSet::new();
        let mut edits = Vec::new();
        for r in &groups[anchor] {
            if r.target_ref == anchor || !targets.insert(r.target_ref.as_str()) {
                leftovers.push((*r).clone());
                continue;
            }
            edits.push(Edit {
                triplet_id: r.id.clone(),
                instruction: r.instruction.clone(),
                target_ref: r.target_ref.clone(),
            });
        }
        if let Ok(set) = EditSet::new(anchor, edits) {
            sets.push(set);
        }
    }
    (sets, leftovers)
}

/// Produces the reverse of an instruction.
pub trait Inverter: Send + Sync {
    fn invert(&self, instruction: &str) -> Result<String>;
}

/// Produces one instruction equivalent to "undo `first`, then apply `second`".
pub trait Composer: Send + Sync {
    fn compose(&self, first: &str, second: &str) -> Result<String>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct TemplateInverter;

impl Inverter for TemplateInverter {
    fn invert(&self, instruction: &str) -> Result<String> {
        Ok(format!("undo the previous edit: {instruction}; restore the original"))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct TemplateComposer;

impl Composer for TemplateComposer {
    fn compose(&self, first: &str, second: &str) -> Result<String> {
        Ok(format!("undo: {first}; then: {second}"))
    }
}

impl<F: Fn(&str) -> Result<String> + Send + Sync> Inverter for F {
    fn invert(&self, instruction: &str) -> Result<String> {
        self(instruction)
    }
}

impl<F: Fn(&str, &str) -> Result<String> + Send + Sync> Composer for F {
    fn compose(&self, first: &str, second: &str) -> Result<String> {
        self(first, second)
    }
}

/// Swap source and target and invert the instruction. Lineage points at
/// the record being inverted.
pub fn invert_triplet(base: &TripletRecord, inverter: &dyn Inverter) -> Result<TripletRecord> {
    let text = inverter.invert(&base.instruction.text)?;
    let instruction = InstructionRecord::new(format!("{}~inv", base.instruction.id), text, InstructionOrigin::Inverted);
    Ok(TripletRecord::new(
        format!("{}~inv", base.id),
        base.target_ref.clone(),
        instruction,
        base.source_ref.clone(),
        Provenance::Inverted,
    )
    .with_lineage([base.id.clone()]))
}

#[derive(Debug, Clone, Default)]
pub struct Bootstrapped {
    pub records: Vec<TripletRecord>,
    /// `(base triplet id, reason)` for edits the hook failed on.
    pub skipped: Vec<(String, String)>,
}

/// `(y_i, t_i^-1, x)` for every edit.
pub fn invert_triplets(set: &EditSet, inverter: &dyn Inverter) -> Bootstrapped {
    let mut out = Bootstrapped::default();
    for base in set.base_triplets() {
        match invert_triplet(&base, inverter) {
            Ok(r) => out.records.push(r),
            Err(e) => {
                warn!("inversion of {} skipped: {e}", base.id);
                out.skipped.push((base.id, e.to_string()));
            }
        }
    }
    out
}

/// `(y_i, t_{i->j}, y_j)` for every ordered pair `i != j`. Fewer than two
/// edits yields nothing.
pub fn composite_transitions(set: &EditSet, composer: &dyn Composer) -> Bootstrapped {
    let mut out = Bootstrapped::default();
    let edits = set.edits();
    for (i, ei) in edits.iter().enumerate() {
        for (j, ej) in edits.iter().enumerate() {
            if i == j {
                continue;
            }
            let id = format!("{}~{}", ei.triplet_id, ej.triplet_id);
            match composer.compose(&ei.instruction.text, &ej.instruction.text) {
                Ok(text) => {
                    let instruction =
                        InstructionRecord::new(format!("{id}~i"), text, InstructionOrigin::Composite);
                    out.records.push(
                        TripletRecord::new(
                            id,
                            ei.target_ref.clone(),
                            instruction,
                            ej.target_ref.clone(),
                            Provenance::Composite,
                        )
                        .with_lineage([ei.triplet_id.clone(), ej.triplet_id.clone()]),
                    );
                }
                Err(e) => {
                    warn!("composite {id} skipped: {e}");
                    out.skipped.push((id, e.to_string()));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn edit_set(n: usize) -> EditSet {
        let edits = (0..n)
            .map(|i| Edit {
                triplet_id: format!("t{i}"),
                instruction: InstructionRecord::new(format!("i{i}"), format!("edit number {i}"), InstructionOrigin::Synthetic),
                target_ref: format!("y{i}"),
            })
            .collect();
        EditSet::new("x", edits).unwrap()
    }

    #[test]
    fn single_edit_inverts_to_swapped_refs() {
        let out = invert_triplets(&edit_set(1), &TemplateInverter);
        assert_eq!(out.records.len(), 1);
        let r = &out.records[0];
        assert_eq!((r.source_ref.as_str(), r.target_ref.as_str()), ("y0", "x"));
        assert_eq!(r.provenance, Provenance::Inverted);
        assert_eq!(r.lineage, vec!["t0".to_string()]);
        assert_eq!(
            r.instruction.text,
            "undo the previous edit: edit number 0; restore the original"
        );
    }

    #[test]
    fn eight_edits_give_eight_inversions_and_56_composites() {
        let set = edit_set(8);
        assert_eq!(invert_triplets(&set, &TemplateInverter).records.len(), 8);
        assert_eq!(composite_transitions(&set, &TemplateComposer).records.len(), 56);
    }

    #[test]
    fn two_edits_give_two_composites() {
        let out = composite_transitions(&edit_set(2), &TemplateComposer);
        assert_eq!(out.records.len(), 2);
        assert_eq!(out.records[0].instruction.text, "undo: edit number 0; then: edit number 1");
        assert!(composite_transitions(&edit_set(1), &TemplateComposer).records.is_empty());
    }

    #[test]
    fn double_inversion_restores_refs() {
        let base = &edit_set(3).base_triplets()[1];
        let twice = invert_triplet(&invert_triplet(base, &TemplateInverter).unwrap(), &TemplateInverter).unwrap();
        assert_eq!(twice.source_ref, base.source_ref);
        assert_eq!(twice.target_ref, base.target_ref);
    }

    #[test]
    fn n4_union_has_20_distinct_directed_pairs() {
        let set = edit_set(4);
        let mut all = set.base_triplets();
        all.extend(invert_triplets(&set, &TemplateInverter).records);
        all.extend(composite_transitions(&set, &TemplateComposer).records);
        assert_eq!(all.len(), 20);
        // exhaustive enumeration of directed pairs over {x, y0..y3}
        let nodes = ["x", "y0", "y1", "y2", "y3"];
        let mut oracle = BTreeSet::new();
        for a in nodes {
            for b in nodes {
                if a != b {
                    oracle.insert((a.to_string(), b.to_string()));
                }
            }
        }
        let got: BTreeSet<_> = all.iter().map(|r| (r.source_ref.clone(), r.target_ref.clone())).collect();
        assert_eq!(got.len(), 20);
        assert_eq!(got, oracle);
    }

    #[test]
    fn failing_hook_skips_only_that_edit() {
        let picky = |t: &str| -> Result<String> {
            if t.ends_with('1') {
                Err(Error::Transport("model timeout".into()))
            } else {
                Ok(format!("reverse {t}"))
            }
        };
        let out = invert_triplets(&edit_set(3), &picky);
        assert_eq!(out.records.len(), 2);
        assert_eq!(out.skipped.len(), 1);
        assert_eq!(out.skipped[0].0, "t1");
    }

    #[test]
    fn edit_set_invariants() {
        let e = |t: &str| Edit {
            triplet_id: t.into(),
            instruction: InstructionRecord::new("i", "x", InstructionOrigin::Synthetic),
            target_ref: t.into(),
        };
        assert!(EditSet::new("x", vec![]).is_err());
        assert!(EditSet::new("x", vec![e("x")]).is_err());
        assert!(EditSet::new("x", vec![e("a"), e("a")]).is_err());
    }

    #[test]
    fn grouping_by_source() {
        let mk = |id: &str, s: &str, t: &str| {
            TripletRecord::new(id, s, InstructionRecord::new(id, "e", InstructionOrigin::Synthetic), t, Provenance::Mined)
        };
        let recs = vec![mk("a", "x1", "y1"), mk("b", "x2", "y2"), mk("c", "x1", "y3"), mk("d", "x1", "y1")];
        let (sets, left) = group_edit_sets(&recs);
        assert_eq!(sets.len(), 2);
        assert_eq!(sets[0].anchor_ref(), "x1");
        assert_eq!(sets[0].len(), 2);
        assert_eq!(left.len(), 1);
    }
}
