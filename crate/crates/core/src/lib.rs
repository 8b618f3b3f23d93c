//! Load-normalizing bug triage.
//!
//! The pipeline: ingest tracker exports ([`ingest`]), turn descriptions into
//! token ids ([`text`]), label reports by topic with a seeded Gibbs-sampled
//! topic model ([`topics`]), score developers by historical per-topic fixing
//! hours ([`scoring`]), and assign incoming bugs in batches with a min-cost
//! perfect matcher so no developer's load drifts more than one bug from any
//! other's ([`assign`]). The [`eval`] module replays the whole pipeline over
//! rolling chronological folds and reports time reduction and load spread
//! against ground truth; [`synth`] generates seeded corpora and streams with
//! planted structure for tests and demos.

pub mod assign;
pub mod eval;
pub mod ingest;
pub mod scoring;
pub mod synth;
pub mod text;
pub mod topics;

pub use assign::{build_batch_matrix, iterative_assign, km_min_cost, AssignmentPlan, CostMatrix, Matching};
pub use eval::{make_folds, run_all, run_fold, EvaluationReport, FoldReport, PipelineConfig};
pub use ingest::{effective_fixing_hours, filter_and_order, load_reports, BugReport, Dataset, InputFormat};
pub use scoring::{build_score_matrix, FallbackPolicy, ScoreMatrix};
pub use text::{build_corpus, default_stoplist, tokenize, TokenizedDocument, Vocabulary};
pub use topics::{fit_lda, select_topic_count, LdaConfig, LdaParams, ModelArtifact, TopicLabel, TopicModel};

pub(crate) const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;

/// FNV-1a, used for vocabulary/model/score content hashes.
pub(crate) fn fnv1a(mut hash: u64, bytes: &[u8]) -> u64 {
    for &byte in bytes {
        hash ^= byte as u64;
        hash = hash.wrapping_mul(0x100_0000_01b3);
    }
    hash
}
