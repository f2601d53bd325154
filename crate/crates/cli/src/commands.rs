use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use argon_core::corpus::{load_corpus_with, write_corpus, Corpus, CorpusPaths, LoadOptions};
use argon_core::eval::{evaluate_rankings, loo_sweep, EvalConfigGrid};
use argon_core::fixture::{generate, FixtureScale};
use argon_core::index::InvertedIndex;
use argon_core::pipeline::{Engine, PipelineConfig, SourceKind};
use argon_core::prefilter::QueryClaim;
use argon_core::relevance::generate_training_pairs;
use argon_core::represent::EmbeddingStore;
use argon_core::{jsonl, RankedResult};
use serde::{Deserialize, Serialize};

use crate::{
    usage, EvaluateArgs, FixtureArgs, GenPairsArgs, IndexArgs, PipelineArgs, RetrieveArgs, ScorerArg, SweepArgs,
};

const CLAIM_INDEX: &str = "claims.idx";
const PREMISE_INDEX: &str = "premises.idx";

/// One line of results.jsonl.
#[derive(Debug, Serialize, Deserialize)]
struct ResultRow {
    query_claim_id: String,
    rank: usize,
    premise_id: String,
    relevance: f64,
    selection_score: f64,
}

fn load_corpus(dir: &Path, default_topic: Option<String>) -> Result<Corpus> {
    let corpus = load_corpus_with(&CorpusPaths::in_dir(dir), &LoadOptions { default_topic })
        .with_context(|| format!("loading corpus from {}", dir.display()))?;
    log::info!(
        "corpus: {} claims, {} premises, {} judgments",
        corpus.claims().len(),
        corpus.premises().len(),
        corpus.judgments().len()
    );
    Ok(corpus)
}

/// Writes to `path`, or standard output when absent.
fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            Box::new(BufWriter::new(
                File::create(p).with_context(|| format!("creating {}", p.display()))?,
            ))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let mut w = output(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn fixture(a: FixtureArgs) -> Result<()> {
    let mut scale = if a.paper_scale {
        FixtureScale::paper()
    } else {
        FixtureScale::small()
    };
    if let Some(g) = a.group_size {
        scale.group_size = g;
    }
    let f = generate(a.seed, &scale)?;
    write_corpus(&f.corpus, &a.out)?;
    f.scores.write(&a.out.join("scores.jsonl"))?;
    f.embeddings.write_binary(&a.out.join("embeddings.bin"))?;
    log::info!(
        "wrote fixture to {}: {} query claims, {} judgments",
        a.out.display(),
        f.corpus.query_claim_ids().len(),
        f.corpus.judgments().len()
    );
    Ok(())
}

fn build_indexes(corpus: &Corpus) -> Result<(InvertedIndex, InvertedIndex)> {
    let claims = InvertedIndex::build(corpus.claims().iter().map(|c| (c.id.clone(), c.text.clone())))?;
    let premises = InvertedIndex::build(corpus.premises().iter().map(|p| (p.id.clone(), p.text.clone())))?;
    Ok((claims, premises))
}

pub fn index(a: IndexArgs) -> Result<()> {
    let corpus = load_corpus(&a.corpus, None)?;
    let (claims, premises) = build_indexes(&corpus)?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    claims.write_to(&a.out.join(CLAIM_INDEX))?;
    premises.write_to(&a.out.join(PREMISE_INDEX))?;
    log::info!(
        "indexed {} claims and {} premises",
        claims.doc_count(),
        premises.doc_count()
    );
    Ok(())
}

fn read_index(dir: &Path, name: &str, ids: impl Iterator<Item = String>) -> Result<InvertedIndex> {
    let path = dir.join(name);
    let idx = InvertedIndex::read_from(&path)?;
    let mut want: Vec<String> = ids.collect();
    want.sort();
    if idx.doc_ids() != want.as_slice() {
        bail!(
            "{} does not match the corpus; rebuild it with `argon index`",
            path.display()
        );
    }
    Ok(idx)
}

impl PipelineArgs {
    fn config(&self) -> Result<PipelineConfig> {
        let mut c: PipelineConfig = match &self.config {
            Some(p) => {
                let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
            }
            None => PipelineConfig::default(),
        };
        if let Some(p) = &self.scores {
            c.relevance.scores = Some(p.clone());
        }
        if let Some(p) = &self.embeddings {
            c.relevance.embeddings = Some(p.clone());
        }
        match self.scorer {
            Some(ScorerArg::Table) => c.relevance.kind = SourceKind::Table,
            Some(ScorerArg::ZeroShot) => c.relevance.kind = SourceKind::ZeroShot,
            None if c.relevance.scores.is_none() && c.relevance.embeddings.is_some() => {
                c.relevance.kind = SourceKind::ZeroShot
            }
            None => {}
        }
        if let Some(r) = self.ranker {
            c.ranker_kind = r.into();
        }
        if let Some(x) = self.alpha {
            c.ranker.alpha = x;
        }
        if let Some(x) = self.tau {
            c.ranker.tau = x;
        }
        if let Some(x) = self.repr {
            c.ranker.representation = x.into();
        }
        if let Some(x) = self.sim {
            c.ranker.similarity = x.into();
        }
        if let Some(x) = self.m_claims {
            c.prefilter.m_claims = x;
        }
        if let Some(x) = self.m_premises {
            c.prefilter.m_premises = x;
        }
        if self.same_topic {
            c.prefilter.same_topic = true;
        }
        if let Some(x) = self.claim_sample {
            c.representation.claim_sample = Some(x);
        }
        if self.normalize {
            c.representation.normalize = true;
        }
        if let Some(x) = self.seed {
            c.seed = x;
            c.representation.sample_seed = x;
        }
        Ok(c)
    }

    fn engine(&self, config: &PipelineConfig) -> Result<Engine> {
        if config.relevance.scores.is_none() && config.relevance.embeddings.is_none() {
            return Err(usage("a relevance source is required: pass --scores or --embeddings"));
        }
        let corpus = load_corpus(&self.corpus, self.default_topic.clone())?;
        let (source, embeddings) = config.relevance.load()?;
        let engine = match &self.index {
            Some(dir) => {
                let claims = read_index(dir, CLAIM_INDEX, corpus.claims().iter().map(|c| c.id.clone()))?;
                let premises = read_index(dir, PREMISE_INDEX, corpus.premises().iter().map(|p| p.id.clone()))?;
                Engine::with_indexes(corpus, claims, premises, source, embeddings)
            }
            None => {
                let (claims, premises) = build_indexes(&corpus)?;
                Engine::with_indexes(corpus, claims, premises, source, embeddings)
            }
        };
        Ok(engine)
    }
}

fn write_results(path: Option<&Path>, results: &[RankedResult]) -> Result<()> {
    let mut w = output(path)?;
    for r in results {
        for (i, item) in r.items.iter().enumerate() {
            let row = ResultRow {
                query_claim_id: r.query_claim_id.clone(),
                rank: i + 1,
                premise_id: item.premise_id.clone(),
                relevance: item.relevance,
                selection_score: item.selection_score,
            };
            serde_json::to_writer(&mut w, &row)?;
            writeln!(w)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn retrieve(a: RetrieveArgs) -> Result<()> {
    let mut config = a.pipeline.config()?;
    if let Some(k) = a.k {
        config.ranker.k = k;
    }
    config.validate().map_err(|e| usage(e.to_string()))?;
    let engine = a.pipeline.engine(&config)?;
    let queries: Vec<QueryClaim> = match &a.query_claim {
        Some(id) => vec![QueryClaim::from_corpus(&engine.corpus, id)?],
        None => {
            let ids = engine.corpus.query_claim_ids();
            if ids.is_empty() {
                bail!("--all-queries: the corpus has no judged query claims");
            }
            ids.iter()
                .map(|id| QueryClaim::from_corpus(&engine.corpus, id))
                .collect::<argon_core::Result<_>>()?
        }
    };

    let mut results = Vec::with_capacity(queries.len());
    for q in &queries {
        let r = engine.retrieve(&config, q)?;
        if let Some(d) = &r.diagnostic {
            log::warn!("{d}");
        }
        log::debug!(
            "query `{}`: {} candidates, {} above tau, {} ranked",
            q.id,
            r.candidates.len(),
            r.filtered.len(),
            r.result.items.len()
        );
        results.push(r.result);
    }
    write_results(a.out.as_deref(), &results)?;
    if let Some(p) = &a.out {
        log::info!("wrote {} ranked lists to {}", results.len(), p.display());
    }
    Ok(())
}

pub fn gen_pairs(a: GenPairsArgs) -> Result<()> {
    let corpus = load_corpus(&a.corpus, a.default_topic.clone())?;
    let embeddings = EmbeddingStore::read(&a.embeddings)?;
    let pairs = generate_training_pairs(&corpus, &embeddings, a.num_negatives, a.negatives.into())?;
    match &a.out {
        Some(p) => jsonl::write(p, &pairs)?,
        None => {
            let mut w = output(None)?;
            for p in &pairs {
                serde_json::to_writer(&mut w, p)?;
                writeln!(w)?;
            }
            w.flush()?;
        }
    }
    let pos = pairs.iter().filter(|p| p.label == 1).count();
    log::info!("{} positive and {} negative pairs", pos, pairs.len() - pos);
    Ok(())
}

pub fn evaluate(a: EvaluateArgs) -> Result<()> {
    if a.k == 0 {
        return Err(usage("--k must be >= 1"));
    }
    let corpus = load_corpus(&a.corpus, a.default_topic.clone())?;
    let rows: Vec<ResultRow> = jsonl::read(&a.results)?;
    let mut grouped: BTreeMap<String, Vec<(usize, String)>> = BTreeMap::new();
    for r in rows {
        grouped
            .entry(r.query_claim_id)
            .or_default()
            .push((r.rank, r.premise_id));
    }
    let rankings: BTreeMap<String, Vec<String>> = grouped
        .into_iter()
        .map(|(q, mut v)| {
            v.sort();
            (q, v.into_iter().map(|(_, p)| p).collect())
        })
        .collect();
    let report = evaluate_rankings(&rankings, &corpus, a.k)?;
    log::info!(
        "mean modified NDCG@{} over {} queries: {:.4}",
        a.k,
        report.per_query.len(),
        report.mean_ndcg
    );
    write_json(a.out.as_deref(), &report)
}

/// Reads a grid file; axes it omits take the base configuration's value.
fn read_grid(path: &PathBuf, base: &PipelineConfig) -> Result<EvalConfigGrid> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let given: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let serde_json::Value::Object(given) = given else {
        bail!("{}: grid must be a JSON object", path.display());
    };
    let mut merged = serde_json::to_value(EvalConfigGrid::singleton(base))?;
    let obj = merged.as_object_mut().expect("grid serializes to an object");
    for (k, v) in given {
        if !obj.contains_key(&k) {
            bail!("{}: unknown grid axis `{k}`", path.display());
        }
        obj.insert(k, v);
    }
    serde_json::from_value(merged).with_context(|| format!("parsing {}", path.display()))
}

pub fn sweep(a: SweepArgs) -> Result<()> {
    if a.k == 0 {
        return Err(usage("--k must be >= 1"));
    }
    let mut base = a.pipeline.config()?;
    base.ranker.k = a.k;
    base.validate().map_err(|e| usage(e.to_string()))?;
    let grid = match &a.grid {
        Some(p) => read_grid(p, &base)?,
        None => EvalConfigGrid::singleton(&base),
    };
    let engine = a.pipeline.engine(&base)?;
    let (matrix, report) = loo_sweep(&engine, &base, &grid, a.k)?;
    log::info!(
        "{} configs x {} queries; leave-one-out mean modified NDCG@{}: {:.4}",
        matrix.configs.len(),
        matrix.queries.len(),
        a.k,
        report.mean_ndcg
    );
    if let Some(p) = &a.csv {
        matrix.write_csv(p)?;
    }
    write_json(a.out.as_deref(), &report)
}
