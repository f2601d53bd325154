//! Candidate generation: lexical claim retrieval, claim-cluster expansion,
//! assigned premises as seeds, and BM25 premise-to-premise expansion.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::index::{tokenize, Bm25Params, DfrParams, InvertedIndex, ScorerKind};
use crate::par;

/// The claim a user asks about.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryClaim {
    pub id: String,
    pub text: String,
    pub topic: String,
}

impl QueryClaim {
    pub fn from_corpus(corpus: &Corpus, id: &str) -> Result<Self> {
        let c = corpus.claim(id).ok_or_else(|| Error::DanglingId {
            record: "query".into(),
            kind: "claim",
            id: id.to_string(),
        })?;
        Ok(QueryClaim {
            id: c.id.clone(),
            text: c.text.clone(),
            topic: c.topic.clone(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PrefilterConfig {
    /// Claims retrieved by DFR similarity to the query.
    pub m_claims: usize,
    /// Premises retrieved by BM25 for every seed premise.
    pub m_premises: usize,
    /// Restrict the BM25 expansion to premises of the query's topic.
    pub same_topic: bool,
    pub dfr: DfrParams,
    pub bm25: Bm25Params,
}

impl Default for PrefilterConfig {
    fn default() -> Self {
        PrefilterConfig {
            m_claims: 10,
            m_premises: 10,
            same_topic: false,
            dfr: DfrParams::default(),
            bm25: Bm25Params::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub query_claim_id: String,
    /// Claims reached by retrieval plus cluster expansion.
    pub claims: BTreeSet<String>,
    pub seed: BTreeSet<String>,
    pub expanded: BTreeSet<String>,
    pub all: BTreeSet<String>,
}

impl CandidateSet {
    pub fn empty(query_claim_id: &str) -> Self {
        CandidateSet {
            query_claim_id: query_claim_id.to_string(),
            claims: BTreeSet::new(),
            seed: BTreeSet::new(),
            expanded: BTreeSet::new(),
            all: BTreeSet::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.all.len()
    }

    pub fn is_empty(&self) -> bool {
        self.all.is_empty()
    }
}

/// Runs the candidate pipeline for one query.
///
/// The query claim never retrieves itself: if it is part of `claim_index`,
/// it is skipped in the DFR step.
pub fn prefilter(
    corpus: &Corpus,
    claim_index: &InvertedIndex,
    premise_index: &InvertedIndex,
    query: &QueryClaim,
    config: &PrefilterConfig,
) -> Result<CandidateSet> {
    if config.m_claims == 0 || config.m_premises == 0 {
        return Err(Error::invalid(
            "prefilter cutoffs",
            "m_claims and m_premises must be >= 1",
        ));
    }
    let tokens = tokenize(&query.text);
    if tokens.is_empty() {
        return Ok(CandidateSet::empty(&query.id));
    }

    let retrieved = claim_index.search_topk_where(&tokens, ScorerKind::Dfr(config.dfr), config.m_claims, |id| {
        id != query.id
    });

    let mut claims = BTreeSet::new();
    for (id, _) in &retrieved {
        claims.extend(corpus.cluster_siblings(id).into_iter().map(str::to_owned));
    }

    let seed: BTreeSet<String> = claims
        .iter()
        .flat_map(|c| corpus.premises_of_claim(c))
        .map(str::to_owned)
        .collect();

    let seeds: Vec<&String> = seed.iter().collect();
    let bm25 = ScorerKind::Bm25(config.bm25);
    let hits = par::map(&seeds, |p| {
        let text = corpus.premise(p).map(|x| x.text.as_str()).unwrap_or_default();
        premise_index.search_topk_where(&tokenize(text), bm25, config.m_premises, |id| {
            id != p.as_str() && (!config.same_topic || corpus.premise(id).is_some_and(|x| x.topic == query.topic))
        })
    });
    let expanded: BTreeSet<String> = hits.into_iter().flatten().map(|(id, _)| id).collect();

    let all = seed.union(&expanded).cloned().collect();
    Ok(CandidateSet {
        query_claim_id: query.id.clone(),
        claims,
        seed,
        expanded,
        all,
    })
}
