//! Preference-pair construction and the diffusion DPO objective.

mod dpo;
mod metrics;
mod pairing;

pub use dpo::{
    dpo_batch_loss, dpo_implicit_reward, dpo_loss, sigmoid, softplus, DpoBatch, DpoOutput, DpoSample, DEFAULT_BETA,
};
pub use metrics::{fractional_ranks, mae, metric_report, overall_score, spearman_rho, MetricReport};
pub use pairing::{
    distilled_pairs, dominates_by, strict_dominance_pairs, symmetric_pairs, CandidateSource, PairOrigin,
    PreferencePair, ScoredCandidate, SymmetricGrid, SymmetricOutcome,
};
