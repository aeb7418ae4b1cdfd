use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::record::AssessorScore;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CandidateSource {
    OnPolicy,
    Teacher,
}

/// One generated image for a context (source image plus instruction).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    pub triplet_id: String,
    pub context_id: String,
    pub scores: AssessorScore,
    pub source: CandidateSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairOrigin {
    SelfGenerated,
    Symmetric,
    Distilled,
}

/// `(winner, loser)` under a shared context.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PreferencePair {
    pub context_id: String,
    pub winner_id: String,
    pub loser_id: String,
    pub origin: PairOrigin,
}

impl PreferencePair {
    pub fn new(context_id: &str, winner_id: &str, loser_id: &str, origin: PairOrigin) -> Result<Self> {
        if winner_id == loser_id {
            return Err(Error::invalid(format!("pair in {context_id} has the same winner and loser {winner_id}")));
        }
        Ok(Self { context_id: context_id.into(), winner_id: winner_id.into(), loser_id: loser_id.into(), origin })
    }
}

/// True when `a` beats `b` by more than `min_gap` on both criteria.
pub fn dominates_by(a: &AssessorScore, b: &AssessorScore, min_gap: f64) -> bool {
    a.instruction_adherence - b.instruction_adherence > min_gap && a.aesthetic - b.aesthetic > min_gap
}

fn by_context(candidates: &[ScoredCandidate]) -> BTreeMap<&str, Vec<&ScoredCandidate>> {
    let mut groups: BTreeMap<&str, Vec<&ScoredCandidate>> = BTreeMap::new();
    for c in candidates {
        groups.entry(c.context_id.as_str()).or_default().push(c);
    }
    for g in groups.values_mut() {
        g.sort_by(|a, b| a.triplet_id.cmp(&b.triplet_id));
    }
    groups
}

/// Every ordered pair within a context where the winner is strictly better
/// on both adherence and aesthetics (by more than `min_gap`). Output is
/// ordered by context, then winner id, then loser id.
pub fn strict_dominance_pairs(candidates: &[ScoredCandidate], min_gap: f64) -> Result<Vec<PreferencePair>> {
    if !(min_gap >= 0.0) {
        return Err(Error::invalid(format!("min_gap must be non-negative, got {min_gap}")));
    }
    let mut out = Vec::new();
    for (ctx, group) in by_context(candidates) {
        for w in &group {
            for l in &group {
                if dominates_by(&w.scores, &l.scores, min_gap) {
                    out.push(PreferencePair::new(ctx, &w.triplet_id, &l.triplet_id, PairOrigin::SelfGenerated)?);
                }
            }
        }
    }
    Ok(out)
}

/// Square instruction-by-generation grid: generation `i` was produced for
/// context `i`, and `adheres[i][j]` says whether generation `j` satisfies
/// instruction `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricGrid {
    pub context_ids: Vec<String>,
    pub generation_ids: Vec<String>,
    pub adheres: Vec<Vec<bool>>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SymmetricOutcome {
    pub pairs: Vec<PreferencePair>,
    /// `(context_id, reason)` for contexts whose own generation failed.
    pub skipped: Vec<(String, String)>,
}

/// Each generation wins under its own instruction and loses under every
/// other instruction, provided it passed its own check. A generation that
/// also satisfies a foreign instruction is not used as that context's
/// negative.
pub fn symmetric_pairs(grid: &SymmetricGrid) -> Result<SymmetricOutcome> {
    let m = grid.context_ids.len();
    if grid.generation_ids.len() != m || grid.adheres.len() != m || grid.adheres.iter().any(|r| r.len() != m) {
        return Err(Error::DimensionMismatch(format!("symmetric grid must be {m}x{m}")));
    }
    let valid: Vec<bool> = (0..m).map(|i| grid.adheres[i][i]).collect();
    let mut out = SymmetricOutcome::default();
    for i in 0..m {
        if !valid[i] {
            out.skipped.push((grid.context_ids[i].clone(), "own generation failed the assessor".into()));
            continue;
        }
        for j in (0..m).filter(|&j| j != i && valid[j] && !grid.adheres[i][j]) {
            out.pairs.push(PreferencePair::new(
                &grid.context_ids[i],
                &grid.generation_ids[i],
                &grid.generation_ids[j],
                PairOrigin::Symmetric,
            )?);
        }
    }
    Ok(out)
}

/// Teacher output beats each student output in the same context unless the
/// student strictly dominates it.
pub fn distilled_pairs(teacher: &[ScoredCandidate], student: &[ScoredCandidate]) -> Result<Vec<PreferencePair>> {
    if let Some(c) = teacher.iter().find(|c| c.source != CandidateSource::Teacher) {
        return Err(Error::invalid(format!("candidate {} is not tagged as teacher output", c.triplet_id)));
    }
    let students = by_context(student);
    let mut out = Vec::new();
    for (ctx, teachers) in by_context(teacher) {
        let Some(studs) = students.get(ctx) else { continue };
        for t in &teachers {
            for s in studs {
                if !dominates_by(&s.scores, &t.scores, 0.0) {
                    out.push(PreferencePair::new(ctx, &t.triplet_id, &s.triplet_id, PairOrigin::Distilled)?);
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cand(id: &str, ctx: &str, a: f64, b: f64, source: CandidateSource) -> ScoredCandidate {
        ScoredCandidate {
            triplet_id: id.into(),
            context_id: ctx.into(),
            scores: AssessorScore::new(a, b).unwrap(),
            source,
        }
    }

    fn on(id: &str, a: f64, b: f64) -> ScoredCandidate {
        cand(id, "c", a, b, CandidateSource::OnPolicy)
    }

    fn ids(p: &[PreferencePair]) -> Vec<(String, String)> {
        p.iter().map(|p| (p.winner_id.clone(), p.loser_id.clone())).collect()
    }

    #[test]
    fn incomparable_candidates_are_not_paired() {
        let c = vec![on("a", 4.0, 4.0), on("b", 3.0, 5.0), on("c", 2.0, 2.0)];
        let p = strict_dominance_pairs(&c, 0.0).unwrap();
        assert_eq!(ids(&p), vec![("a".into(), "c".into()), ("b".into(), "c".into())]);
    }

    #[test]
    fn ties_veto_pairs() {
        let c = vec![on("a", 3.0, 3.0), on("b", 3.0, 3.0)];
        assert!(strict_dominance_pairs(&c, 0.0).unwrap().is_empty());
        let c = vec![on("a", 5.0, 5.0), on("b", 5.0, 4.0)];
        assert!(strict_dominance_pairs(&c, 0.0).unwrap().is_empty());
    }

    #[test]
    fn min_gap_tightens() {
        let c = vec![on("a", 4.0, 4.0), on("b", 3.5, 3.0)];
        assert_eq!(strict_dominance_pairs(&c, 0.0).unwrap().len(), 1);
        assert!(strict_dominance_pairs(&c, 0.5).unwrap().is_empty());
    }

    #[test]
    fn contexts_do_not_mix() {
        let c = vec![cand("a", "x", 5.0, 5.0, CandidateSource::OnPolicy), cand("b", "y", 1.0, 1.0, CandidateSource::OnPolicy)];
        assert!(strict_dominance_pairs(&c, 0.0).unwrap().is_empty());
    }

    fn grid(m: usize) -> SymmetricGrid {
        SymmetricGrid {
            context_ids: (0..m).map(|i| format!("c{i}")).collect(),
            generation_ids: (0..m).map(|i| format!("y{i}")).collect(),
            adheres: (0..m).map(|i| (0..m).map(|j| i == j).collect()).collect(),
        }
    }

    #[test]
    fn symmetric_counts() {
        let two = symmetric_pairs(&grid(2)).unwrap().pairs;
        assert_eq!(
            two.iter().map(|p| (p.context_id.as_str(), p.winner_id.as_str(), p.loser_id.as_str())).collect::<Vec<_>>(),
            vec![("c0", "y0", "y1"), ("c1", "y1", "y0")]
        );
        assert_eq!(symmetric_pairs(&grid(3)).unwrap().pairs.len(), 6);
        assert!(symmetric_pairs(&grid(1)).unwrap().pairs.is_empty());
    }

    #[test]
    fn failed_diagonal_is_skipped_and_never_a_negative() {
        let mut g = grid(3);
        g.adheres[1][1] = false;
        let out = symmetric_pairs(&g).unwrap();
        assert_eq!(out.skipped.len(), 1);
        assert_eq!(out.pairs.len(), 2);
        assert!(out.pairs.iter().all(|p| p.loser_id != "y1" && p.winner_id != "y1"));
    }

    #[test]
    fn grid_shape_checked() {
        let mut g = grid(2);
        g.adheres.pop();
        assert!(symmetric_pairs(&g).is_err());
    }

    #[test]
    fn distillation_guard() {
        let t = vec![cand("t", "c", 4.5, 4.5, CandidateSource::Teacher)];
        let p = distilled_pairs(&t, &[on("s", 3.0, 3.0)]).unwrap();
        assert_eq!(ids(&p), vec![("t".into(), "s".into())]);
        assert_eq!(p[0].origin, PairOrigin::Distilled);
        let t = vec![cand("t", "c", 4.0, 4.0, CandidateSource::Teacher)];
        assert!(distilled_pairs(&t, &[on("s", 5.0, 5.0)]).unwrap().is_empty());
        assert!(distilled_pairs(&t, &[]).unwrap().is_empty());
        assert!(distilled_pairs(&[on("x", 1.0, 1.0)], &[]).is_err());
    }

    #[test]
    fn pair_json_shape() {
        let p = PreferencePair::new("c", "w", "l", PairOrigin::SelfGenerated).unwrap();
        assert_eq!(
            serde_json::to_string(&p).unwrap(),
            r#"{"context_id":"c","winner_id":"w","loser_id":"l","origin":"self-generated"}"#
        );
        assert!(PreferencePair::new("c", "w", "w", PairOrigin::Symmetric).is_err());
    }
}
