//! Grounding synthetic edit instructions in real user phrasing: embedding,
//! exact top-K retrieval, softmax sampling, similarity threshold, frequency
//! cap, plus clustering, deduplication and applicability checks.

mod applicability;
mod dedup;
mod embed;
mod index;
mod kmeans;
mod sampling;

pub use applicability::{
    token_retention, validate_applicability, ApplicabilityOutcome, ApplicabilityValidator,
    HookVerdict, ImageDescriptor, KeywordValidator, MIN_TOKEN_RETENTION,
};
pub use dedup::dedup_instructions;
pub use embed::{
    embed_text, trigrams, Embedder, EmbeddingSidecarLine, EmbeddingVector, SidecarEmbedder,
    TrigramEmbedder, DEFAULT_DIM,
};
pub use index::{rank_order, retrieve_topk, VectorIndex};
pub use kmeans::{cluster_report, kmeans, ClusterReportLine, KMeansResult, DEFAULT_CLUSTERS, DEFAULT_MAX_ITER};
pub use sampling::{
    apply_similarity_threshold, draw_candidates, enforce_frequency_cap, ground_instructions,
    resolve_candidates, softmax, softmax_sample, Candidates, GroundingConfig, GroundingOutcome,
    GroundingResult, RejectReason, DEFAULT_CAP, DEFAULT_TAU_SIM, DEFAULT_TOPK,
};
