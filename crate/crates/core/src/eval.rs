//! Duplicate-aware NDCG and the leave-one-out hyperparameter harness.
//!
//! Only the first premise of a meaning cluster earns gain; later members of
//! the same cluster count as zero. The ideal ranking takes each cluster once
//! at its best grade.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Grade};
use crate::error::{Error, Result};
use crate::par;
use crate::pipeline::{ConfigSummary, Engine, PipelineConfig, RankerKind};
use crate::prefilter::{CandidateSet, QueryClaim};
use crate::ranker::RankedResult;
use crate::represent::{ReprKind, SimKind};

/// Grades and meaning clusters of one query.
#[derive(Debug, Clone, Default)]
pub struct QueryJudgments {
    grades: HashMap<String, Grade>,
    cluster_of: HashMap<String, String>,
    ideal: Vec<f64>,
}

impl QueryJudgments {
    /// `clusters` maps a label to its member premises. Relevant premises that
    /// belong to no cluster act as singleton clusters.
    pub fn new<'a, J, C, M>(judgments: J, clusters: C) -> Self
    where
        J: IntoIterator<Item = (&'a str, Grade)>,
        C: IntoIterator<Item = (&'a str, M)>,
        M: IntoIterator<Item = &'a str>,
    {
        let mut grades: HashMap<String, Grade> = HashMap::new();
        for (p, g) in judgments {
            let e = grades.entry(p.to_string()).or_insert(g);
            *e = (*e).max(g);
        }
        let mut cluster_of = HashMap::new();
        for (label, members) in clusters {
            for p in members {
                cluster_of.insert(p.to_string(), format!("c:{label}"));
            }
        }
        let mut best: HashMap<String, Grade> = HashMap::new();
        for (p, &g) in &grades {
            if !g.is_relevant() {
                continue;
            }
            let key = cluster_of.get(p).cloned().unwrap_or_else(|| format!("p:{p}"));
            let e = best.entry(key).or_insert(g);
            *e = (*e).max(g);
        }
        let mut ideal: Vec<f64> = best.values().map(|g| g.gain()).collect();
        ideal.sort_by(|a, b| b.total_cmp(a));
        QueryJudgments {
            grades,
            cluster_of,
            ideal,
        }
    }

    pub fn from_corpus(corpus: &Corpus, query_claim_id: &str) -> Result<Self> {
        let js: Vec<_> = corpus.judgments_for(query_claim_id).collect();
        if js.is_empty() {
            return Err(Error::invalid(format!("query `{query_claim_id}`"), "has no judgments"));
        }
        Ok(Self::new(
            js.iter().map(|j| (j.premise_id.as_str(), j.grade)),
            corpus
                .clusters_for(query_claim_id)
                .map(|m| (m.label.as_str(), m.premise_ids.iter().map(String::as_str))),
        ))
    }

    pub fn grade(&self, premise_id: &str) -> Grade {
        self.grades.get(premise_id).copied().unwrap_or(Grade::NotRelevant)
    }

    fn cluster_key(&self, premise_id: &str) -> String {
        self.cluster_of
            .get(premise_id)
            .cloned()
            .unwrap_or_else(|| format!("p:{premise_id}"))
    }
}

fn discount(rank: usize) -> f64 {
    // rank is 1-based
    ((rank + 1) as f64).log2()
}

/// Modified NDCG@k of `ranking`. Premises without a judgment count as not
/// relevant. Returns 0 when no relevant premise exists.
pub fn modified_ndcg<S: AsRef<str>>(ranking: &[S], judgments: &QueryJudgments, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::invalid("k", "must be >= 1"));
    }
    let mut seen = HashSet::new();
    let mut dcg = 0.0;
    for (i, p) in ranking.iter().take(k).enumerate() {
        let p = p.as_ref();
        if !judgments.grades.contains_key(p) {
            log::debug!("premise `{p}` has no judgment; scored as not relevant");
        }
        let g = judgments.grade(p);
        if !g.is_relevant() {
            continue;
        }
        if seen.insert(judgments.cluster_key(p)) {
            dcg += g.gain() / discount(i + 1);
        }
    }
    let idcg: f64 = judgments
        .ideal
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, g)| g / discount(i + 1))
        .sum();
    Ok(if idcg == 0.0 { 0.0 } else { dcg / idcg })
}

/// Arithmetic mean with a fixed left-to-right summation order.
pub fn mean_in_order(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().fold(0.0, |acc, v| acc + v) / values.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryScore {
    pub query_claim_id: String,
    pub ndcg: f64,
    pub config: Option<ConfigSummary>,
}

/// Contents of `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub k: usize,
    pub mean_ndcg: f64,
    pub per_query: Vec<QueryScore>,
}

impl Report {
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).map_err(|e| Error::io(path, e.into()))?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// Scores a ranking per query. Per-query scores are ordered, and summed, by
/// query id.
pub fn evaluate_rankings(rankings: &BTreeMap<String, Vec<String>>, corpus: &Corpus, k: usize) -> Result<Report> {
    let entries: Vec<(&String, &Vec<String>)> = rankings.iter().collect();
    let per_query = par::try_map(&entries, |(q, ranking)| {
        let qj = QueryJudgments::from_corpus(corpus, q)?;
        Ok::<_, Error>(QueryScore {
            query_claim_id: q.to_string(),
            ndcg: modified_ndcg(ranking, &qj, k)?,
            config: None,
        })
    })?;
    let scores: Vec<f64> = per_query.iter().map(|s| s.ndcg).collect();
    Ok(Report {
        k,
        mean_ndcg: mean_in_order(&scores),
        per_query,
    })
}

pub fn evaluate_run(results: &[RankedResult], corpus: &Corpus, k: usize) -> Result<Report> {
    let mut rankings = BTreeMap::new();
    for r in results {
        let ids = r.items.iter().map(|i| i.premise_id.clone()).collect();
        if rankings.insert(r.query_claim_id.clone(), ids).is_some() {
            return Err(Error::DuplicateId {
                kind: "result query",
                id: r.query_claim_id.clone(),
            });
        }
    }
    evaluate_rankings(&rankings, corpus, k)
}

/// Outcome of one leave-one-out split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LooChoice {
    pub config: usize,
    pub held_out: f64,
}

/// Leave-one-out selection over a `[config][query]` score matrix. For each
/// query, the config with the best mean over the other queries is chosen
/// (first config wins ties) and scored on the held-out query.
pub fn loo_select(scores: &[Vec<f64>]) -> Result<(Vec<LooChoice>, f64)> {
    if scores.is_empty() {
        return Err(Error::Empty("config grid"));
    }
    let n = scores[0].len();
    if n < 2 {
        return Err(Error::invalid("leave-one-out", "needs at least two queries"));
    }
    if scores.iter().any(|row| row.len() != n) {
        return Err(Error::invalid("score matrix", "ragged rows"));
    }
    let choices: Vec<LooChoice> = (0..n)
        .map(|q| {
            let mut best = (0, f64::NEG_INFINITY);
            for (c, row) in scores.iter().enumerate() {
                let rest: Vec<f64> = row
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != q)
                    .map(|(_, &v)| v)
                    .collect();
                let m = mean_in_order(&rest);
                if m > best.1 {
                    best = (c, m);
                }
            }
            LooChoice {
                config: best.0,
                held_out: scores[best.0][q],
            }
        })
        .collect();
    let held: Vec<f64> = choices.iter().map(|c| c.held_out).collect();
    let mean = mean_in_order(&held);
    Ok((choices, mean))
}

fn default_m() -> Vec<usize> {
    vec![10]
}

/// Hyperparameter axes of a sweep. Axes that a ranker ignores (alpha for
/// k-means and top-k; representation and similarity for top-k; similarity
/// for k-means) are not expanded for it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfigGrid {
    pub alphas: Vec<f64>,
    pub taus: Vec<f64>,
    pub representations: Vec<ReprKind>,
    pub similarities: Vec<SimKind>,
    pub rankers: Vec<RankerKind>,
    pub ks: Vec<usize>,
    #[serde(default = "default_m")]
    pub m_claims: Vec<usize>,
    #[serde(default = "default_m")]
    pub m_premises: Vec<usize>,
}

impl EvalConfigGrid {
    /// A grid holding exactly the given configuration's values.
    pub fn singleton(c: &PipelineConfig) -> Self {
        EvalConfigGrid {
            alphas: vec![c.ranker.alpha],
            taus: vec![c.ranker.tau],
            representations: vec![c.ranker.representation],
            similarities: vec![c.ranker.similarity],
            rankers: vec![c.ranker_kind],
            ks: vec![c.ranker.k],
            m_claims: vec![c.prefilter.m_claims],
            m_premises: vec![c.prefilter.m_premises],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let axes = [
            ("alphas", self.alphas.len()),
            ("taus", self.taus.len()),
            ("representations", self.representations.len()),
            ("similarities", self.similarities.len()),
            ("rankers", self.rankers.len()),
            ("ks", self.ks.len()),
            ("m_claims", self.m_claims.len()),
            ("m_premises", self.m_premises.len()),
        ];
        if let Some((name, _)) = axes.iter().find(|(_, n)| *n == 0) {
            return Err(Error::invalid("grid", format!("axis `{name}` is empty")));
        }
        let unit = |v: &f64| (0.0..=1.0).contains(v);
        if !self.alphas.iter().all(unit) || !self.taus.iter().all(unit) {
            return Err(Error::invalid("grid", "alphas and taus must lie in [0, 1]"));
        }
        if self.ks.contains(&0) || self.m_claims.contains(&0) || self.m_premises.contains(&0) {
            return Err(Error::invalid("grid", "k and cutoffs must be >= 1"));
        }
        Ok(())
    }

    /// All configurations in a fixed nesting order, based on `base` for every
    /// field the grid does not cover.
    pub fn expand(&self, base: &PipelineConfig) -> Result<Vec<PipelineConfig>> {
        self.validate()?;
        let mut out = Vec::new();
        for &ranker in &self.rankers {
            let reprs = match ranker {
                RankerKind::TopK => &self.representations[..1],
                _ => &self.representations[..],
            };
            let sims = match ranker {
                RankerKind::BiasedCoreset => &self.similarities[..],
                _ => &self.similarities[..1],
            };
            let alphas = match ranker {
                RankerKind::BiasedCoreset => &self.alphas[..],
                _ => &self.alphas[..1],
            };
            for &representation in reprs {
                for &similarity in sims {
                    for &k in &self.ks {
                        for &mc in &self.m_claims {
                            for &mp in &self.m_premises {
                                for &tau in &self.taus {
                                    for &alpha in alphas {
                                        let mut c = base.clone();
                                        c.ranker_kind = ranker;
                                        c.ranker.representation = representation;
                                        c.ranker.similarity = similarity;
                                        c.ranker.k = k;
                                        c.ranker.tau = tau;
                                        c.ranker.alpha = alpha;
                                        c.prefilter.m_claims = mc;
                                        c.prefilter.m_premises = mp;
                                        out.push(c);
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Modified NDCG of every (config, query) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepMatrix {
    pub configs: Vec<PipelineConfig>,
    pub queries: Vec<String>,
    /// `scores[config][query]`.
    pub scores: Vec<Vec<f64>>,
}

impl SweepMatrix {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let io = |e: csv::Error| Error::io(path, std::io::Error::other(e));
        let mut w = csv::Writer::from_path(path).map_err(io)?;
        let mut header = vec![
            "config".to_string(),
            "ranker".into(),
            "representation".into(),
            "similarity".into(),
            "k".into(),
            "m_claims".into(),
            "m_premises".into(),
            "tau".into(),
            "alpha".into(),
        ];
        header.extend(self.queries.iter().cloned());
        header.push("mean".into());
        w.write_record(&header).map_err(io)?;
        for (i, (c, row)) in self.configs.iter().zip(&self.scores).enumerate() {
            let mut rec = vec![
                i.to_string(),
                c.ranker_kind.name().to_string(),
                c.ranker.representation.name().to_string(),
                c.ranker.similarity.name().to_string(),
                c.ranker.k.to_string(),
                c.prefilter.m_claims.to_string(),
                c.prefilter.m_premises.to_string(),
                c.ranker.tau.to_string(),
                c.ranker.alpha.to_string(),
            ];
            rec.extend(row.iter().map(|v| v.to_string()));
            rec.push(mean_in_order(row).to_string());
            w.write_record(&rec).map_err(io)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Runs every configuration on every query. Candidate sets are computed once
/// per distinct prefilter setting; all cells run in parallel.
pub fn sweep_matrix(engine: &Engine, configs: &[PipelineConfig], queries: &[String], k: usize) -> Result<SweepMatrix> {
    if configs.is_empty() {
        return Err(Error::Empty("config grid"));
    }
    let claims: Vec<QueryClaim> = queries
        .iter()
        .map(|q| QueryClaim::from_corpus(&engine.corpus, q))
        .collect::<Result<_>>()?;
    let judgments: Vec<QueryJudgments> = queries
        .iter()
        .map(|q| QueryJudgments::from_corpus(&engine.corpus, q))
        .collect::<Result<_>>()?;

    let mut prefilters: Vec<crate::prefilter::PrefilterConfig> = Vec::new();
    let slot: Vec<usize> = configs
        .iter()
        .map(|c| match prefilters.iter().position(|p| *p == c.prefilter) {
            Some(i) => i,
            None => {
                prefilters.push(c.prefilter);
                prefilters.len() - 1
            }
        })
        .collect();
    let jobs: Vec<(usize, usize)> = (0..prefilters.len())
        .flat_map(|p| (0..claims.len()).map(move |q| (p, q)))
        .collect();
    let candidates: Vec<CandidateSet> = par::try_map(&jobs, |&(p, q)| {
        crate::prefilter::prefilter(
            &engine.corpus,
            &engine.claim_index,
            &engine.premise_index,
            &claims[q],
            &prefilters[p],
        )
    })?;

    let cells: Vec<(usize, usize)> = (0..configs.len())
        .flat_map(|c| (0..claims.len()).map(move |q| (c, q)))
        .collect();
    let values = par::try_map(&cells, |&(c, q)| {
        let cfg = &configs[c];
        cfg.validate()?;
        let cands = candidates[slot[c] * claims.len() + q].clone();
        let r = engine.retrieve_from(cfg, &claims[q], cands)?;
        modified_ndcg(&r.result.ids(), &judgments[q], k)
    })?;
    let scores = values.chunks(claims.len()).map(<[f64]>::to_vec).collect();
    Ok(SweepMatrix {
        configs: configs.to_vec(),
        queries: queries.to_vec(),
        scores,
    })
}

/// Full leave-one-out sweep: score matrix, per-query choice, final report.
pub fn loo_sweep(
    engine: &Engine,
    base: &PipelineConfig,
    grid: &EvalConfigGrid,
    k: usize,
) -> Result<(SweepMatrix, Report)> {
    let configs = grid.expand(base)?;
    let queries = engine.corpus.query_claim_ids().to_vec();
    if queries.len() < 2 {
        return Err(Error::invalid("leave-one-out", "needs at least two query claims"));
    }
    let matrix = sweep_matrix(engine, &configs, &queries, k)?;
    let (choices, mean) = loo_select(&matrix.scores)?;
    let per_query = queries
        .iter()
        .zip(&choices)
        .map(|(q, c)| QueryScore {
            query_claim_id: q.clone(),
            ndcg: c.held_out,
            config: Some(configs[c.config].summary()),
        })
        .collect();
    Ok((
        matrix,
        Report {
            k,
            mean_ndcg: mean,
            per_query,
        },
    ))
}
