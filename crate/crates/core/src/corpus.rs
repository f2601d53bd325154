//! Claims, premises and the ground truth that ties them together.
//!
//! A [`Corpus`] is validated once at construction and immutable afterwards:
//! every id is unique within its kind and every cross-reference resolves.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsonl;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Claim {
    pub id: String,
    pub text: String,
    pub topic: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Premise {
    pub id: String,
    pub text: String,
    pub topic: String,
}

/// Ground-truth link between a database claim and one of its premises.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Assignment {
    pub claim_id: String,
    pub premise_id: String,
}

/// Relevance label of a premise for a query claim.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Grade {
    NotRelevant = 0,
    Relevant = 1,
    VeryRelevant = 2,
}

impl Grade {
    pub fn gain(self) -> f64 {
        self as u8 as f64
    }

    pub fn is_relevant(self) -> bool {
        self != Grade::NotRelevant
    }
}

impl TryFrom<u8> for Grade {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, Self::Error> {
        match v {
            0 => Ok(Grade::NotRelevant),
            1 => Ok(Grade::Relevant),
            2 => Ok(Grade::VeryRelevant),
            _ => Err(format!("grade must be 0, 1 or 2, got {v}")),
        }
    }
}

impl From<Grade> for u8 {
    fn from(g: Grade) -> u8 {
        g as u8
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Judgment {
    pub query_claim_id: String,
    /// May be absent (or unresolvable) for not-relevant judgments.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result_claim_id: Option<String>,
    pub premise_id: String,
    pub grade: Grade,
}

/// Annotator group of premises expressing the same idea for one query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeaningCluster {
    pub query_claim_id: String,
    pub label: String,
    pub premise_ids: Vec<String>,
}

/// File locations of a corpus. Judgments and meaning clusters are optional.
#[derive(Debug, Clone)]
pub struct CorpusPaths {
    pub claims: PathBuf,
    pub premises: PathBuf,
    pub assignments: PathBuf,
    pub judgments: Option<PathBuf>,
    pub meaning_clusters: Option<PathBuf>,
}

impl CorpusPaths {
    pub const CLAIMS: &'static str = "claims.jsonl";
    pub const PREMISES: &'static str = "premises.jsonl";
    pub const ASSIGNMENTS: &'static str = "assignments.jsonl";
    pub const JUDGMENTS: &'static str = "judgments.jsonl";
    pub const MEANING_CLUSTERS: &'static str = "meaning_clusters.jsonl";

    /// Standard file names inside `dir`. The optional files are only picked
    /// up when present.
    pub fn in_dir(dir: &Path) -> Self {
        let opt = |name: &str| {
            let p = dir.join(name);
            p.exists().then_some(p)
        };
        CorpusPaths {
            claims: dir.join(Self::CLAIMS),
            premises: dir.join(Self::PREMISES),
            assignments: dir.join(Self::ASSIGNMENTS),
            judgments: opt(Self::JUDGMENTS),
            meaning_clusters: opt(Self::MEANING_CLUSTERS),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    /// Topic given to claims and premises whose record has no `topic` field.
    /// When unset, a missing topic is a parse error.
    pub default_topic: Option<String>,
}

#[derive(Deserialize)]
struct RawClaim {
    id: String,
    text: String,
    topic: Option<String>,
    #[serde(default)]
    cluster_id: Option<String>,
}

#[derive(Deserialize)]
struct RawPremise {
    id: String,
    text: String,
    topic: Option<String>,
}

fn resolve_topic(topic: Option<String>, opts: &LoadOptions, path: &Path, line: usize) -> Result<String> {
    topic
        .or_else(|| opts.default_topic.clone())
        .ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line,
            message: "missing field `topic`".into(),
        })
}

pub fn load_corpus(paths: &CorpusPaths) -> Result<Corpus> {
    load_corpus_with(paths, &LoadOptions::default())
}

pub fn load_corpus_with(paths: &CorpusPaths, opts: &LoadOptions) -> Result<Corpus> {
    let claims = jsonl::read::<RawClaim>(&paths.claims)?
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            Ok(Claim {
                topic: resolve_topic(r.topic, opts, &paths.claims, i + 1)?,
                id: r.id,
                text: r.text,
                cluster_id: r.cluster_id,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let premises = jsonl::read::<RawPremise>(&paths.premises)?
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            Ok(Premise {
                topic: resolve_topic(r.topic, opts, &paths.premises, i + 1)?,
                id: r.id,
                text: r.text,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let assignments = jsonl::read(&paths.assignments)?;
    let judgments = match &paths.judgments {
        Some(p) => jsonl::read(p)?,
        None => Vec::new(),
    };
    let clusters = match &paths.meaning_clusters {
        Some(p) => jsonl::read(p)?,
        None => Vec::new(),
    };
    Corpus::new(claims, premises, assignments, judgments, clusters)
}

/// Writes the corpus into `dir` using the standard file names.
pub fn write_corpus(corpus: &Corpus, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    jsonl::write(&dir.join(CorpusPaths::CLAIMS), &corpus.claims)?;
    jsonl::write(&dir.join(CorpusPaths::PREMISES), &corpus.premises)?;
    jsonl::write(&dir.join(CorpusPaths::ASSIGNMENTS), &corpus.assignments)?;
    jsonl::write(&dir.join(CorpusPaths::JUDGMENTS), &corpus.judgments)?;
    jsonl::write(&dir.join(CorpusPaths::MEANING_CLUSTERS), &corpus.meaning_clusters)
}

#[derive(Debug, Clone)]
pub struct Corpus {
    claims: Vec<Claim>,
    premises: Vec<Premise>,
    assignments: Vec<Assignment>,
    judgments: Vec<Judgment>,
    meaning_clusters: Vec<MeaningCluster>,

    claim_pos: HashMap<String, usize>,
    premise_pos: HashMap<String, usize>,
    premises_by_claim: HashMap<String, BTreeSet<String>>,
    claims_by_cluster: HashMap<String, Vec<String>>,
    claims_by_topic: BTreeMap<String, Vec<String>>,
    query_ids: Vec<String>,
}

fn index_ids<'a>(kind: &'static str, ids: impl Iterator<Item = (&'a str, &'a str)>) -> Result<HashMap<String, usize>> {
    let mut pos = HashMap::new();
    for (i, (id, text)) in ids.enumerate() {
        if id.is_empty() {
            return Err(Error::invalid(format!("{kind} #{}", i + 1), "empty id"));
        }
        if text.is_empty() {
            return Err(Error::invalid(format!("{kind} `{id}`"), "empty text"));
        }
        if pos.insert(id.to_string(), i).is_some() {
            return Err(Error::DuplicateId {
                kind,
                id: id.to_string(),
            });
        }
    }
    Ok(pos)
}

impl Corpus {
    /// Validates the records and builds the lookup tables.
    pub fn new(
        claims: Vec<Claim>,
        premises: Vec<Premise>,
        assignments: Vec<Assignment>,
        judgments: Vec<Judgment>,
        meaning_clusters: Vec<MeaningCluster>,
    ) -> Result<Self> {
        let claim_pos = index_ids("claim", claims.iter().map(|c| (c.id.as_str(), c.text.as_str())))?;
        let premise_pos = index_ids("premise", premises.iter().map(|p| (p.id.as_str(), p.text.as_str())))?;

        let dangling = |record: String, kind, id: &str| Error::DanglingId {
            record,
            kind,
            id: id.to_string(),
        };

        let mut premises_by_claim: HashMap<String, BTreeSet<String>> = HashMap::new();
        for a in &assignments {
            let record = || format!("assignment ({}, {})", a.claim_id, a.premise_id);
            if !claim_pos.contains_key(&a.claim_id) {
                return Err(dangling(record(), "claim", &a.claim_id));
            }
            if !premise_pos.contains_key(&a.premise_id) {
                return Err(dangling(record(), "premise", &a.premise_id));
            }
            premises_by_claim
                .entry(a.claim_id.clone())
                .or_default()
                .insert(a.premise_id.clone());
        }

        let mut relevant: HashMap<(&str, &str), Grade> = HashMap::new();
        for j in &judgments {
            let record = || format!("judgment ({}, {})", j.query_claim_id, j.premise_id);
            if !claim_pos.contains_key(&j.query_claim_id) {
                return Err(dangling(record(), "claim", &j.query_claim_id));
            }
            if !premise_pos.contains_key(&j.premise_id) {
                return Err(dangling(record(), "premise", &j.premise_id));
            }
            if let Some(rc) = &j.result_claim_id {
                if j.grade.is_relevant() && !claim_pos.contains_key(rc) {
                    return Err(dangling(record(), "claim", rc));
                }
            }
            let g = relevant
                .entry((j.query_claim_id.as_str(), j.premise_id.as_str()))
                .or_insert(j.grade);
            *g = (*g).max(j.grade);
        }

        let mut seen: HashMap<&str, HashMap<&str, &str>> = HashMap::new();
        let mut labels: BTreeSet<(&str, &str)> = BTreeSet::new();
        for mc in &meaning_clusters {
            let record = || format!("meaning cluster `{}` of `{}`", mc.label, mc.query_claim_id);
            if !claim_pos.contains_key(&mc.query_claim_id) {
                return Err(dangling(record(), "claim", &mc.query_claim_id));
            }
            if mc.premise_ids.is_empty() {
                return Err(Error::invalid(record(), "no premises"));
            }
            if !labels.insert((&mc.query_claim_id, &mc.label)) {
                return Err(Error::invalid(record(), "label used twice for this query"));
            }
            let members = seen.entry(&mc.query_claim_id).or_default();
            for p in &mc.premise_ids {
                if !premise_pos.contains_key(p) {
                    return Err(dangling(record(), "premise", p));
                }
                if let Some(other) = members.insert(p, &mc.label) {
                    return Err(Error::invalid(
                        record(),
                        format!("premise `{p}` already belongs to cluster `{other}`"),
                    ));
                }
                let grade = relevant.get(&(mc.query_claim_id.as_str(), p.as_str()));
                if !grade.is_some_and(|g| g.is_relevant()) {
                    return Err(Error::invalid(
                        record(),
                        format!("premise `{p}` has no relevant judgment for this query"),
                    ));
                }
            }
        }

        let mut claims_by_cluster: HashMap<String, Vec<String>> = HashMap::new();
        let mut claims_by_topic: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for c in &claims {
            if let Some(cl) = &c.cluster_id {
                claims_by_cluster.entry(cl.clone()).or_default().push(c.id.clone());
            }
            claims_by_topic.entry(c.topic.clone()).or_default().push(c.id.clone());
        }
        claims_by_cluster.values_mut().for_each(|v| v.sort());
        claims_by_topic.values_mut().for_each(|v| v.sort());

        let query_ids: BTreeSet<String> = judgments.iter().map(|j| j.query_claim_id.clone()).collect();

        Ok(Corpus {
            claims,
            premises,
            assignments,
            judgments,
            meaning_clusters,
            claim_pos,
            premise_pos,
            premises_by_claim,
            claims_by_cluster,
            claims_by_topic,
            query_ids: query_ids.into_iter().collect(),
        })
    }

    pub fn claims(&self) -> &[Claim] {
        &self.claims
    }

    pub fn premises(&self) -> &[Premise] {
        &self.premises
    }

    pub fn assignments(&self) -> &[Assignment] {
        &self.assignments
    }

    pub fn judgments(&self) -> &[Judgment] {
        &self.judgments
    }

    pub fn meaning_clusters(&self) -> &[MeaningCluster] {
        &self.meaning_clusters
    }

    pub fn claim(&self, id: &str) -> Option<&Claim> {
        self.claim_pos.get(id).map(|&i| &self.claims[i])
    }

    pub fn premise(&self, id: &str) -> Option<&Premise> {
        self.premise_pos.get(id).map(|&i| &self.premises[i])
    }

    /// Premises assigned to `claim_id`, ascending by id.
    pub fn premises_of_claim(&self, claim_id: &str) -> impl Iterator<Item = &str> {
        self.premises_by_claim
            .get(claim_id)
            .into_iter()
            .flatten()
            .map(String::as_str)
    }

    pub fn is_assigned(&self, claim_id: &str, premise_id: &str) -> bool {
        self.premises_by_claim
            .get(claim_id)
            .is_some_and(|s| s.contains(premise_id))
    }

    /// Claims sharing `claim_id`'s cluster, including itself, ascending by id.
    /// A claim without a cluster id is its own singleton cluster.
    pub fn cluster_siblings(&self, claim_id: &str) -> Vec<&str> {
        match self.claim(claim_id).and_then(|c| c.cluster_id.as_ref()) {
            Some(cl) => self.claims_by_cluster[cl].iter().map(String::as_str).collect(),
            None => match self.claim_pos.get_key_value(claim_id) {
                Some((k, _)) => vec![k.as_str()],
                None => Vec::new(),
            },
        }
    }

    /// All claims of `topic`, ascending by id.
    pub fn claims_in_topic(&self, topic: &str) -> &[String] {
        self.claims_by_topic.get(topic).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Ids of claims that have at least one judgment, ascending.
    pub fn query_claim_ids(&self) -> &[String] {
        &self.query_ids
    }

    pub fn judgments_for<'a>(&'a self, query_claim_id: &'a str) -> impl Iterator<Item = &'a Judgment> {
        self.judgments
            .iter()
            .filter(move |j| j.query_claim_id == query_claim_id)
    }

    pub fn clusters_for<'a>(&'a self, query_claim_id: &'a str) -> impl Iterator<Item = &'a MeaningCluster> {
        self.meaning_clusters
            .iter()
            .filter(move |m| m.query_claim_id == query_claim_id)
    }
}

/// Order-insensitive record equality, used to compare corpora after a
/// write/load round trip.
pub fn same_records(a: &Corpus, b: &Corpus) -> bool {
    fn sorted<T: Clone, K: Ord>(xs: &[T], key: impl Fn(&T) -> K) -> Vec<K> {
        let mut v: Vec<K> = xs.iter().map(key).collect();
        v.sort();
        v
    }
    let claim_key = |c: &Claim| (c.id.clone(), c.text.clone(), c.topic.clone(), c.cluster_id.clone());
    let premise_key = |p: &Premise| (p.id.clone(), p.text.clone(), p.topic.clone());
    let judgment_key = |j: &Judgment| {
        (
            j.query_claim_id.clone(),
            j.premise_id.clone(),
            j.result_claim_id.clone(),
            j.grade,
        )
    };
    let cluster_key = |m: &MeaningCluster| {
        let mut ids = m.premise_ids.clone();
        ids.sort();
        (m.query_claim_id.clone(), m.label.clone(), ids)
    };
    sorted(&a.claims, claim_key) == sorted(&b.claims, claim_key)
        && sorted(&a.premises, premise_key) == sorted(&b.premises, premise_key)
        && sorted(&a.assignments, Clone::clone) == sorted(&b.assignments, Clone::clone)
        && sorted(&a.judgments, judgment_key) == sorted(&b.judgments, judgment_key)
        && sorted(&a.meaning_clusters, cluster_key) == sorted(&b.meaning_clusters, cluster_key)
}
