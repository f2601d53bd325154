//! End-to-end retrieval: prefilter, relevance threshold, then a ranker.

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::index::InvertedIndex;
use crate::prefilter::{prefilter, CandidateSet, PrefilterConfig, QueryClaim};
use crate::ranker::{
    biased_coreset, kmeans_ranker, top_k, RankedResult, RankerConfig, Representative, SimilarityMatrix,
};
use crate::relevance::{filter_by_threshold, RelevanceSource, ScoreTable, ScoredPremise};
use crate::represent::{build_representation, EmbeddingStore, ReprKind, ReprOptions, SimKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RankerKind {
    BiasedCoreset,
    Kmeans,
    TopK,
}

impl RankerKind {
    pub fn name(self) -> &'static str {
        match self {
            RankerKind::BiasedCoreset => "biased-coreset",
            RankerKind::Kmeans => "kmeans",
            RankerKind::TopK => "top-k",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceKind {
    #[default]
    Table,
    ZeroShot,
}

/// Files backing the relevance scorer.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RelevanceSpec {
    pub kind: SourceKind,
    pub scores: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
}

impl RelevanceSpec {
    /// Loads the scorer and, when a path is given, the embedding store.
    pub fn load(&self) -> Result<(RelevanceSource, Option<Arc<EmbeddingStore>>)> {
        let embeddings = match &self.embeddings {
            Some(p) => Some(Arc::new(EmbeddingStore::read(p)?)),
            None => None,
        };
        let source = match self.kind {
            SourceKind::Table => {
                let path = self
                    .scores
                    .as_ref()
                    .ok_or_else(|| Error::invalid("relevance", "table scorer needs a scores file"))?;
                RelevanceSource::Table(ScoreTable::read(path)?)
            }
            SourceKind::ZeroShot => RelevanceSource::ZeroShot(
                embeddings
                    .clone()
                    .ok_or_else(|| Error::invalid("relevance", "zero-shot scorer needs an embeddings file"))?,
            ),
        };
        Ok((source, embeddings))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub prefilter: PrefilterConfig,
    pub relevance: RelevanceSpec,
    pub ranker_kind: RankerKind,
    pub ranker: RankerConfig,
    pub representation: ReprOptions,
    pub kmeans_representative: Representative,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            prefilter: PrefilterConfig::default(),
            relevance: RelevanceSpec::default(),
            ranker_kind: RankerKind::BiasedCoreset,
            ranker: RankerConfig::default(),
            representation: ReprOptions::default(),
            kmeans_representative: Representative::default(),
            seed: 0,
        }
    }
}

/// The hyperparameters that distinguish sweep configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigSummary {
    pub ranker: RankerKind,
    pub k: usize,
    pub alpha: f64,
    pub tau: f64,
    pub representation: ReprKind,
    pub similarity: SimKind,
    pub m_claims: usize,
    pub m_premises: usize,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.ranker.validate()?;
        if self.prefilter.m_claims == 0 || self.prefilter.m_premises == 0 {
            return Err(Error::invalid("prefilter cutoffs", "must be >= 1"));
        }
        Ok(())
    }

    pub fn summary(&self) -> ConfigSummary {
        ConfigSummary {
            ranker: self.ranker_kind,
            k: self.ranker.k,
            alpha: self.ranker.alpha,
            tau: self.ranker.tau,
            representation: self.ranker.representation,
            similarity: self.ranker.similarity,
            m_claims: self.prefilter.m_claims,
            m_premises: self.prefilter.m_premises,
        }
    }
}

/// Every stage's output for one query.
#[derive(Debug, Clone, PartialEq)]
pub struct Retrieval {
    pub candidates: CandidateSet,
    pub filtered: Vec<ScoredPremise>,
    pub result: RankedResult,
    /// Set when the pipeline produced no result for a benign reason.
    pub diagnostic: Option<String>,
}

/// Immutable retrieval state: corpus, both lexical indexes and the scorer.
/// Safe to share across threads.
#[derive(Debug, Clone)]
pub struct Engine {
    pub corpus: Arc<Corpus>,
    pub claim_index: Arc<InvertedIndex>,
    pub premise_index: Arc<InvertedIndex>,
    pub source: Arc<RelevanceSource>,
    pub embeddings: Option<Arc<EmbeddingStore>>,
}

impl Engine {
    /// Builds both indexes from the corpus texts.
    pub fn new(corpus: Corpus, source: RelevanceSource, embeddings: Option<Arc<EmbeddingStore>>) -> Result<Self> {
        let claim_index = InvertedIndex::build(corpus.claims().iter().map(|c| (c.id.clone(), c.text.clone())))?;
        let premise_index = InvertedIndex::build(corpus.premises().iter().map(|p| (p.id.clone(), p.text.clone())))?;
        Ok(Self::with_indexes(
            corpus,
            claim_index,
            premise_index,
            source,
            embeddings,
        ))
    }

    pub fn with_indexes(
        corpus: Corpus,
        claim_index: InvertedIndex,
        premise_index: InvertedIndex,
        source: RelevanceSource,
        embeddings: Option<Arc<EmbeddingStore>>,
    ) -> Self {
        Engine {
            corpus: Arc::new(corpus),
            claim_index: Arc::new(claim_index),
            premise_index: Arc::new(premise_index),
            source: Arc::new(source),
            embeddings,
        }
    }

    pub fn candidates(&self, config: &PipelineConfig, query: &QueryClaim) -> Result<CandidateSet> {
        prefilter(
            &self.corpus,
            &self.claim_index,
            &self.premise_index,
            query,
            &config.prefilter,
        )
    }

    pub fn retrieve(&self, config: &PipelineConfig, query: &QueryClaim) -> Result<Retrieval> {
        config.validate()?;
        let candidates = self.candidates(config, query)?;
        self.retrieve_from(config, query, candidates)
    }

    /// Runs the relevance filter and ranker on an existing candidate set.
    pub fn retrieve_from(
        &self,
        config: &PipelineConfig,
        query: &QueryClaim,
        candidates: CandidateSet,
    ) -> Result<Retrieval> {
        let filtered = filter_by_threshold(&candidates, &self.source, &query.id, config.ranker.tau)?;
        let mut diagnostic = None;
        let items = if filtered.is_empty() {
            diagnostic = Some(if candidates.is_empty() {
                format!("query `{}`: pre-filtering found no candidates", query.id)
            } else {
                format!(
                    "query `{}`: none of {} candidates scored above tau = {}",
                    query.id,
                    candidates.len(),
                    config.ranker.tau
                )
            });
            Vec::new()
        } else {
            self.rank(config, &filtered)?
        };
        Ok(Retrieval {
            candidates,
            filtered,
            result: RankedResult {
                query_claim_id: query.id.clone(),
                items,
                config: config.ranker,
            },
            diagnostic,
        })
    }

    /// Applies the configured ranker to a non-empty filtered candidate list.
    pub fn rank(&self, config: &PipelineConfig, filtered: &[ScoredPremise]) -> Result<Vec<crate::ranker::RankedItem>> {
        let rc = &config.ranker;
        if config.ranker_kind == RankerKind::TopK {
            return Ok(top_k(filtered, rc.k));
        }
        let ids: Vec<String> = filtered.iter().map(|c| c.id.clone()).collect();
        let repr = build_representation(
            &ids,
            rc.representation,
            self.embeddings.as_deref(),
            &self.corpus,
            Some(&self.source),
            &config.representation,
        )?;
        match config.ranker_kind {
            RankerKind::BiasedCoreset => {
                let sims = SimilarityMatrix::from_representation(ids, &repr, rc.similarity)?;
                biased_coreset(filtered, &sims, rc.k, rc.alpha)
            }
            RankerKind::Kmeans => kmeans_ranker(filtered, &repr, rc.k, config.seed, config.kmeans_representative),
            RankerKind::TopK => unreachable!(),
        }
    }
}
