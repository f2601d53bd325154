//! Argument retrieval engine.
//!
//! Given a query claim, the engine retrieves a short list of premises that are
//! both relevant to the claim and semantically diverse:
//!
//! 1. [`prefilter`] generates a high-recall candidate set from lexical
//!    similarity (DFR over claims, BM25 over premises).
//! 2. [`relevance`] scores candidates against the query claim and keeps those
//!    above a threshold.
//! 3. [`ranker`] selects `k` premises with the biased coreset greedy rule (or a
//!    k-means / top-k baseline).
//!
//! [`eval`] implements the duplicate-aware NDCG metric and the leave-one-out
//! hyperparameter harness. The neural model is external: relevance comes from
//! a score table or from embedding cosine similarity.
//!
//! Data-parallel loops go through [`par`], which uses rayon when the
//! `parallel` feature is enabled (the default) and plain iterators otherwise.

#![forbid(unsafe_code)]

pub mod corpus;
pub mod error;
pub mod eval;
pub mod fixture;
pub mod index;
pub mod jsonl;
pub mod par;
pub mod pipeline;
pub mod prefilter;
pub mod ranker;
pub mod relevance;
pub mod represent;

pub use corpus::{Assignment, Claim, Corpus, Grade, Judgment, MeaningCluster, Premise};
pub use error::{Error, Result};
pub use eval::{evaluate_run, loo_select, modified_ndcg, EvalConfigGrid, QueryJudgments};
pub use index::{tokenize, InvertedIndex, ScorerKind};
pub use pipeline::{Engine, PipelineConfig, RankerKind, Retrieval};
pub use prefilter::{prefilter, CandidateSet, PrefilterConfig, QueryClaim};
pub use ranker::{biased_coreset, kmeans_ranker, RankedItem, RankedResult, RankerConfig};
pub use relevance::{RelevanceSource, ScoreTable, TrainingPair};
pub use represent::{similarity, EmbeddingStore, ReprKind, Representation, SimKind};
