//! Tokenization, inverted index, and the two lexical scorers (BM25 and InL2
//! divergence from randomness).

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lowercases and splits on every non-alphanumeric codepoint.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

/// Tokenizer with an optional stopword list. The default has none.
#[derive(Debug, Clone, Default)]
pub struct Tokenizer {
    pub stopwords: BTreeSet<String>,
}

impl Tokenizer {
    pub fn tokenize(&self, text: &str) -> Vec<String> {
        let mut toks = tokenize(text);
        if !self.stopwords.is_empty() {
            toks.retain(|t| !self.stopwords.contains(t));
        }
        toks
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 1.2, b: 0.75 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DfrVariant {
    #[default]
    InL2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DfrParams {
    pub variant: DfrVariant,
    /// Term-frequency normalisation constant.
    pub c: f64,
}

impl Default for DfrParams {
    fn default() -> Self {
        DfrParams {
            variant: DfrVariant::InL2,
            c: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScorerKind {
    Bm25(Bm25Params),
    Dfr(DfrParams),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Posting {
    pub doc: u32,
    pub tf: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvertedIndex {
    doc_ids: Vec<String>,
    doc_lengths: Vec<u32>,
    avg_doc_len: f64,
    postings: BTreeMap<String, Vec<Posting>>,
    position: HashMap<String, u32>,
}

const MAGIC: &[u8; 8] = b"ARGONIDX";
const VERSION: u32 = 1;

impl InvertedIndex {
    pub fn build<I, S, T>(docs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, T)>,
        S: Into<String>,
        T: AsRef<str>,
    {
        Self::build_with(&Tokenizer::default(), docs)
    }

    /// Documents are stored in ascending id order, so the result does not
    /// depend on input order.
    pub fn build_with<I, S, T>(tokenizer: &Tokenizer, docs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, T)>,
        S: Into<String>,
        T: AsRef<str>,
    {
        let mut docs: Vec<(String, Vec<String>)> = docs
            .into_iter()
            .map(|(id, text)| (id.into(), tokenizer.tokenize(text.as_ref())))
            .collect();
        if docs.is_empty() {
            return Err(Error::Empty("document list"));
        }
        docs.sort_by(|a, b| a.0.cmp(&b.0));
        if let Some(w) = docs.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::DuplicateId {
                kind: "document",
                id: w[0].0.clone(),
            });
        }

        let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
        let mut doc_ids = Vec::with_capacity(docs.len());
        let mut doc_lengths = Vec::with_capacity(docs.len());
        for (doc, (id, tokens)) in docs.into_iter().enumerate() {
            let mut tf: BTreeMap<String, u32> = BTreeMap::new();
            for t in &tokens {
                *tf.entry(t.clone()).or_default() += 1;
            }
            for (term, tf) in tf {
                postings.entry(term).or_default().push(Posting { doc: doc as u32, tf });
            }
            doc_ids.push(id);
            doc_lengths.push(tokens.len() as u32);
        }
        Ok(Self::assemble(doc_ids, doc_lengths, postings))
    }

    fn assemble(doc_ids: Vec<String>, doc_lengths: Vec<u32>, postings: BTreeMap<String, Vec<Posting>>) -> Self {
        let total: u64 = doc_lengths.iter().map(|&l| l as u64).sum();
        let avg_doc_len = total as f64 / doc_lengths.len() as f64;
        let position = doc_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i as u32))
            .collect();
        InvertedIndex {
            doc_ids,
            doc_lengths,
            avg_doc_len,
            postings,
            position,
        }
    }

    pub fn doc_count(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn avg_doc_len(&self) -> f64 {
        self.avg_doc_len
    }

    /// Document ids in ascending order.
    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn contains(&self, doc_id: &str) -> bool {
        self.position.contains_key(doc_id)
    }

    pub fn doc_len(&self, doc_id: &str) -> Option<u32> {
        self.position.get(doc_id).map(|&i| self.doc_lengths[i as usize])
    }

    pub fn doc_freq(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, Vec::len)
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.postings.get(term).map_or(&[], Vec::as_slice)
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.postings.keys().map(String::as_str)
    }

    pub fn term_freq(&self, term: &str, doc_id: &str) -> u32 {
        let Some(&doc) = self.position.get(doc_id) else {
            return 0;
        };
        let list = self.postings(term);
        list.binary_search_by_key(&doc, |p| p.doc).map_or(0, |i| list[i].tf)
    }

    fn weight(&self, kind: ScorerKind, tf: u32, df: usize, len: u32) -> f64 {
        if tf == 0 {
            return 0.0;
        }
        let tf = tf as f64;
        let n = self.doc_count() as f64;
        let df = df as f64;
        let len = len as f64;
        match kind {
            ScorerKind::Bm25(Bm25Params { k1, b }) => {
                let idf = ((n - df + 0.5) / (df + 0.5) + 1.0).ln();
                let norm = if self.avg_doc_len > 0.0 {
                    len / self.avg_doc_len
                } else {
                    0.0
                };
                idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * norm))
            }
            ScorerKind::Dfr(DfrParams { c, .. }) => {
                let tfn = tf * (1.0 + c * self.avg_doc_len / len).log2();
                tfn / (tfn + 1.0) * ((n + 1.0) / (df + 0.5)).log2()
            }
        }
    }

    /// Score of one document. Query tokens are treated as a multiset: a term
    /// repeated in the query counts once per occurrence.
    pub fn score(&self, kind: ScorerKind, query_tokens: &[String], doc_id: &str) -> Result<f64> {
        let doc = *self
            .position
            .get(doc_id)
            .ok_or_else(|| Error::UnknownDocument(doc_id.to_string()))?;
        let len = self.doc_lengths[doc as usize];
        let mut total = 0.0;
        for (term, qtf) in query_term_counts(query_tokens) {
            let list = self.postings(term);
            if let Ok(i) = list.binary_search_by_key(&doc, |p| p.doc) {
                total += qtf as f64 * self.weight(kind, list[i].tf, list.len(), len);
            }
        }
        Ok(total)
    }

    pub fn bm25_score(&self, params: Bm25Params, query_tokens: &[String], doc_id: &str) -> Result<f64> {
        self.score(ScorerKind::Bm25(params), query_tokens, doc_id)
    }

    pub fn dfr_score(&self, params: DfrParams, query_tokens: &[String], doc_id: &str) -> Result<f64> {
        self.score(ScorerKind::Dfr(params), query_tokens, doc_id)
    }

    /// Top-`m` documents with a positive score, descending, ties by
    /// ascending id.
    pub fn search_topk(&self, query_tokens: &[String], kind: ScorerKind, m: usize) -> Vec<(String, f64)> {
        self.search_topk_where(query_tokens, kind, m, |_| true)
    }

    /// Like [`search_topk`](Self::search_topk) but only documents accepted by
    /// `keep` compete for the `m` slots.
    pub fn search_topk_where<F>(
        &self,
        query_tokens: &[String],
        kind: ScorerKind,
        m: usize,
        keep: F,
    ) -> Vec<(String, f64)>
    where
        F: Fn(&str) -> bool,
    {
        let mut acc: HashMap<u32, f64> = HashMap::new();
        for (term, qtf) in query_term_counts(query_tokens) {
            let list = self.postings(term);
            for p in list {
                let len = self.doc_lengths[p.doc as usize];
                *acc.entry(p.doc).or_insert(0.0) += qtf as f64 * self.weight(kind, p.tf, list.len(), len);
            }
        }
        let mut hits: Vec<(u32, f64)> = acc
            .into_iter()
            .filter(|&(d, s)| s > 0.0 && keep(&self.doc_ids[d as usize]))
            .collect();
        // doc numbers follow ascending id order, so they break ties directly
        hits.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        hits.truncate(m);
        hits.into_iter()
            .map(|(d, s)| (self.doc_ids[d as usize].clone(), s))
            .collect()
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.encode(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_from(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::decode(&mut BufReader::new(file))
    }

    fn encode<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        fn put_str<W: Write>(w: &mut W, s: &str) -> std::io::Result<()> {
            w.write_u32::<LittleEndian>(s.len() as u32)?;
            w.write_all(s.as_bytes())
        }
        w.write_all(MAGIC)?;
        w.write_u32::<LittleEndian>(VERSION)?;
        w.write_u32::<LittleEndian>(self.doc_ids.len() as u32)?;
        for (id, &len) in self.doc_ids.iter().zip(&self.doc_lengths) {
            put_str(w, id)?;
            w.write_u32::<LittleEndian>(len)?;
        }
        w.write_u32::<LittleEndian>(self.postings.len() as u32)?;
        for (term, list) in &self.postings {
            put_str(w, term)?;
            w.write_u32::<LittleEndian>(list.len() as u32)?;
            for p in list {
                w.write_u32::<LittleEndian>(p.doc)?;
                w.write_u32::<LittleEndian>(p.tf)?;
            }
        }
        Ok(())
    }

    fn decode<R: Read>(r: &mut R) -> Result<Self> {
        let bad = |e: std::io::Error| Error::Format(e.to_string());
        fn get_str<R: Read>(r: &mut R) -> Result<String> {
            let n = r.read_u32::<LittleEndian>().map_err(|e| Error::Format(e.to_string()))?;
            let mut buf = vec![0; n as usize];
            r.read_exact(&mut buf).map_err(|e| Error::Format(e.to_string()))?;
            String::from_utf8(buf).map_err(|e| Error::Format(e.to_string()))
        }
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(bad)?;
        if &magic != MAGIC {
            return Err(Error::Format("not an argon index file".into()));
        }
        let version = r.read_u32::<LittleEndian>().map_err(bad)?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let n_docs = r.read_u32::<LittleEndian>().map_err(bad)? as usize;
        if n_docs == 0 {
            return Err(Error::Format("index has no documents".into()));
        }
        let mut doc_ids = Vec::with_capacity(n_docs);
        let mut doc_lengths = Vec::with_capacity(n_docs);
        for _ in 0..n_docs {
            doc_ids.push(get_str(r)?);
            doc_lengths.push(r.read_u32::<LittleEndian>().map_err(bad)?);
        }
        let n_terms = r.read_u32::<LittleEndian>().map_err(bad)?;
        let mut postings = BTreeMap::new();
        for _ in 0..n_terms {
            let term = get_str(r)?;
            let n = r.read_u32::<LittleEndian>().map_err(bad)? as usize;
            let mut list = Vec::with_capacity(n);
            for _ in 0..n {
                let doc = r.read_u32::<LittleEndian>().map_err(bad)?;
                let tf = r.read_u32::<LittleEndian>().map_err(bad)?;
                if doc as usize >= n_docs {
                    return Err(Error::Format(format!("posting for `{term}` out of range")));
                }
                list.push(Posting { doc, tf });
            }
            postings.insert(term, list);
        }
        Ok(Self::assemble(doc_ids, doc_lengths, postings))
    }
}

fn query_term_counts(tokens: &[String]) -> BTreeMap<&str, u32> {
    let mut counts = BTreeMap::new();
    for t in tokens {
        *counts.entry(t.as_str()).or_insert(0) += 1;
    }
    counts
}
