//! Claim/premise relevance: pluggable scorers, threshold filtering, and the
//! training pairs (positives plus embedding-mined hard negatives) consumed by
//! an external relevance model trainer.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::jsonl;
use crate::par;
use crate::prefilter::CandidateSet;
use crate::represent::{similarity, EmbeddingStore, SimKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub claim_id: String,
    pub premise_id: String,
    pub score: f64,
}

/// Precomputed relevance scores, e.g. the output of a trained classifier.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreTable {
    scores: HashMap<(String, String), f64>,
}

impl ScoreTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, claim_id: &str, premise_id: &str, score: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::invalid(
                format!("score ({claim_id}, {premise_id})"),
                format!("{score} is outside [0, 1]"),
            ));
        }
        let key = (claim_id.to_string(), premise_id.to_string());
        if self.scores.insert(key, score).is_some() {
            return Err(Error::DuplicateId {
                kind: "score pair",
                id: format!("({claim_id}, {premise_id})"),
            });
        }
        Ok(())
    }

    pub fn get(&self, claim_id: &str, premise_id: &str) -> Option<f64> {
        // HashMap<(String, String)> cannot be probed with borrowed tuples
        self.scores
            .get(&(claim_id.to_string(), premise_id.to_string()))
            .copied()
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut t = ScoreTable::new();
        for r in jsonl::read::<ScoreRecord>(path)? {
            t.insert(&r.claim_id, &r.premise_id, r.score)?;
        }
        Ok(t)
    }

    /// Records sorted by (claim, premise).
    pub fn records(&self) -> Vec<ScoreRecord> {
        let mut out: Vec<ScoreRecord> = self
            .scores
            .iter()
            .map(|((c, p), &s)| ScoreRecord {
                claim_id: c.clone(),
                premise_id: p.clone(),
                score: s,
            })
            .collect();
        out.sort_by(|a, b| (&a.claim_id, &a.premise_id).cmp(&(&b.claim_id, &b.premise_id)));
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        jsonl::write(path, &self.records())
    }
}

/// Where relevance scores come from.
#[derive(Debug, Clone)]
pub enum RelevanceSource {
    Table(ScoreTable),
    /// `(cos + 1) / 2` between claim and premise embeddings.
    ZeroShot(Arc<EmbeddingStore>),
}

impl RelevanceSource {
    pub fn kind_name(&self) -> &'static str {
        match self {
            RelevanceSource::Table(_) => "table",
            RelevanceSource::ZeroShot(_) => "zero-shot",
        }
    }

    /// r(premise | claim) in [0, 1]. A missing table entry or embedding is an
    /// error, never a silent zero.
    pub fn score(&self, claim_id: &str, premise_id: &str) -> Result<f64> {
        match self {
            RelevanceSource::Table(t) => t.get(claim_id, premise_id).ok_or_else(|| Error::MissingScore {
                claim: claim_id.to_string(),
                premise: premise_id.to_string(),
            }),
            RelevanceSource::ZeroShot(store) => {
                let cos = similarity(store.require(claim_id)?, store.require(premise_id)?, SimKind::Cos)?;
                Ok((cos + 1.0) / 2.0)
            }
        }
    }
}

/// A candidate premise with its relevance to the query claim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPremise {
    pub id: String,
    pub relevance: f64,
}

impl ScoredPremise {
    pub fn new(id: impl Into<String>, relevance: f64) -> Self {
        ScoredPremise {
            id: id.into(),
            relevance,
        }
    }
}

/// Descending relevance, ties by ascending id.
pub fn sort_by_relevance(items: &mut [ScoredPremise]) {
    items.sort_by(|a, b| {
        (b.relevance + 0.0)
            .total_cmp(&(a.relevance + 0.0))
            .then_with(|| a.id.cmp(&b.id))
    });
}

/// Keeps candidates with relevance strictly above `tau`.
pub fn filter_by_threshold(
    candidates: &CandidateSet,
    source: &RelevanceSource,
    query_claim_id: &str,
    tau: f64,
) -> Result<Vec<ScoredPremise>> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::invalid("tau", format!("{tau} is outside [0, 1]")));
    }
    let ids: Vec<&String> = candidates.all.iter().collect();
    let scored = par::try_map(&ids, |id| {
        source
            .score(query_claim_id, id)
            .map(|r| ScoredPremise::new(id.as_str(), r))
    })?;
    let mut kept: Vec<ScoredPremise> = scored.into_iter().filter(|s| s.relevance > tau).collect();
    sort_by_relevance(&mut kept);
    Ok(kept)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TrainingPair {
    pub premise_id: String,
    pub claim_id: String,
    /// 1 for a ground-truth pair, 0 for a mined negative.
    pub label: u8,
}

/// Pool the hard negatives are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NegativeScope {
    #[default]
    Global,
    /// Only premises sharing the positive premise's topic.
    SameTopic,
}

/// Emits every assignment as a positive, each followed by up to
/// `negatives_per_positive` negatives: the premises most cosine-similar to
/// the positive premise that are not assigned to its claim. Cosine ties break
/// by ascending premise id.
pub fn generate_training_pairs(
    corpus: &Corpus,
    embeddings: &EmbeddingStore,
    negatives_per_positive: usize,
    scope: NegativeScope,
) -> Result<Vec<TrainingPair>> {
    for p in corpus.premises() {
        embeddings.require(&p.id)?;
    }
    let mut seen = BTreeSet::new();
    let positives: Vec<_> = corpus
        .assignments()
        .iter()
        .filter(|a| seen.insert((a.claim_id.as_str(), a.premise_id.as_str())))
        .collect();

    let per_positive = par::try_map(&positives, |a| {
        let anchor = embeddings.require(&a.premise_id)?;
        let topic = &corpus.premise(&a.premise_id).expect("validated").topic;
        let mut pool = Vec::new();
        if negatives_per_positive > 0 {
            for p in corpus.premises() {
                if corpus.is_assigned(&a.claim_id, &p.id) {
                    continue;
                }
                if scope == NegativeScope::SameTopic && &p.topic != topic {
                    continue;
                }
                let sim = similarity(anchor, embeddings.require(&p.id)?, SimKind::Cos)?;
                pool.push((sim, p.id.as_str()));
            }
        }
        let by_sim = |x: &(f64, &str), y: &(f64, &str)| y.0.total_cmp(&x.0).then_with(|| x.1.cmp(y.1));
        if pool.len() > negatives_per_positive && negatives_per_positive > 0 {
            pool.select_nth_unstable_by(negatives_per_positive - 1, by_sim);
            pool.truncate(negatives_per_positive);
        }
        pool.sort_by(by_sim);
        pool.truncate(negatives_per_positive);

        let mut out = Vec::with_capacity(1 + pool.len());
        out.push(TrainingPair {
            premise_id: a.premise_id.clone(),
            claim_id: a.claim_id.clone(),
            label: 1,
        });
        out.extend(pool.into_iter().map(|(_, id)| TrainingPair {
            premise_id: id.to_string(),
            claim_id: a.claim_id.clone(),
            label: 0,
        }));
        Ok::<_, Error>(out)
    })?;
    Ok(per_positive.into_iter().flatten().collect())
}
