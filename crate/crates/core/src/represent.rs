//! Premise representations and the premise similarity used by the rankers.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::jsonl;
use crate::par;
use crate::relevance::RelevanceSource;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SimKind {
    #[serde(rename = "cos")]
    Cos,
    #[serde(rename = "l1")]
    NegL1,
    #[serde(rename = "l2")]
    NegL2,
}

impl SimKind {
    pub fn name(self) -> &'static str {
        match self {
            SimKind::Cos => "cos",
            SimKind::NegL1 => "l1",
            SimKind::NegL2 => "l2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReprKind {
    Bert,
    ClaimSim,
}

impl ReprKind {
    pub fn name(self) -> &'static str {
        match self {
            ReprKind::Bert => "bert",
            ReprKind::ClaimSim => "claim-sim",
        }
    }
}

/// Similarity where larger always means more alike: cosine, or the negated
/// Manhattan / Euclidean distance.
pub fn similarity(u: &[f64], v: &[f64], kind: SimKind) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    let s = match kind {
        SimKind::Cos => {
            let (mut dot, mut nu, mut nv) = (0.0, 0.0, 0.0);
            for (a, b) in u.iter().zip(v) {
                dot += a * b;
                nu += a * a;
                nv += b * b;
            }
            if nu == 0.0 || nv == 0.0 {
                return Err(Error::ZeroVector);
            }
            (dot / (nu * nv).sqrt()).clamp(-1.0, 1.0)
        }
        SimKind::NegL1 => -u.iter().zip(v).map(|(a, b)| (a - b).abs()).sum::<f64>(),
        SimKind::NegL2 => -u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(),
    };
    // no negative zero, so sorts with total_cmp see exact ties
    Ok(s + 0.0)
}

/// Dense vectors keyed by id, all of one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    dim: usize,
    vectors: BTreeMap<String, Vec<f64>>,
}

const EMB_MAGIC: &[u8; 4] = b"AEMB";
const EMB_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct EmbeddingRecord {
    id: String,
    vector: Vec<f64>,
}

impl EmbeddingStore {
    pub fn new(dim: usize) -> Self {
        EmbeddingStore {
            dim,
            vectors: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, id: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        let id = id.into();
        if vector.len() != self.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: vector.len(),
            });
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid(format!("embedding `{id}`"), "non-finite entry"));
        }
        if self.vectors.contains_key(&id) {
            return Err(Error::DuplicateId { kind: "embedding", id });
        }
        self.vectors.insert(id, vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.vectors.get(id).map(Vec::as_slice)
    }

    pub fn require(&self, id: &str) -> Result<&[f64]> {
        self.get(id).ok_or_else(|| Error::MissingEmbedding(id.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.vectors.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Reads the binary format, or JSON lines when the magic is absent.
    pub fn read(path: &Path) -> Result<Self> {
        let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut magic = [0u8; 4];
        let n = file.read(&mut magic).map_err(|e| Error::io(path, e))?;
        if n == 4 && &magic == EMB_MAGIC {
            let mut r = BufReader::new(file);
            Self::decode(&mut r)
        } else {
            Self::read_jsonl(path)
        }
    }

    pub fn read_jsonl(path: &Path) -> Result<Self> {
        let records: Vec<EmbeddingRecord> = jsonl::read(path)?;
        let dim = records.first().map_or(0, |r| r.vector.len());
        let mut store = EmbeddingStore::new(dim);
        for r in records {
            store.insert(r.id, r.vector)?;
        }
        Ok(store)
    }

    fn decode<R: Read>(r: &mut R) -> Result<Self> {
        let bad = |e: std::io::Error| Error::Format(e.to_string());
        let version = r.read_u32::<LittleEndian>().map_err(bad)?;
        if version != EMB_VERSION {
            return Err(Error::Format(format!("unsupported embedding version {version}")));
        }
        let dim = r.read_u32::<LittleEndian>().map_err(bad)? as usize;
        let count = r.read_u32::<LittleEndian>().map_err(bad)?;
        let mut store = EmbeddingStore::new(dim);
        for _ in 0..count {
            let n = r.read_u32::<LittleEndian>().map_err(bad)?;
            let mut buf = vec![0; n as usize];
            r.read_exact(&mut buf).map_err(bad)?;
            let id = String::from_utf8(buf).map_err(|e| Error::Format(e.to_string()))?;
            let mut v = vec![0f32; dim];
            r.read_f32_into::<LittleEndian>(&mut v).map_err(bad)?;
            store.insert(id, v.into_iter().map(f64::from).collect())?;
        }
        Ok(store)
    }

    /// Writes the binary format. Values are stored as 32-bit floats.
    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        w.write_all(EMB_MAGIC).map_err(io)?;
        w.write_u32::<LittleEndian>(EMB_VERSION).map_err(io)?;
        w.write_u32::<LittleEndian>(self.dim as u32).map_err(io)?;
        w.write_u32::<LittleEndian>(self.vectors.len() as u32).map_err(io)?;
        for (id, v) in &self.vectors {
            w.write_u32::<LittleEndian>(id.len() as u32).map_err(io)?;
            w.write_all(id.as_bytes()).map_err(io)?;
            for &x in v {
                w.write_f32::<LittleEndian>(x as f32).map_err(io)?;
            }
        }
        w.flush().map_err(io)
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let records: Vec<EmbeddingRecord> = self
            .vectors
            .iter()
            .map(|(id, v)| EmbeddingRecord {
                id: id.clone(),
                vector: v.clone(),
            })
            .collect();
        jsonl::write(path, &records)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReprOptions {
    /// Use a random subset of this many topic claims instead of all of them.
    pub claim_sample: Option<usize>,
    pub sample_seed: u64,
    /// L2-normalise every vector after building it.
    pub normalize: bool,
}

/// Vectors for a batch of premises under one representation kind.
#[derive(Debug, Clone, PartialEq)]
pub struct Representation {
    pub kind: ReprKind,
    vectors: BTreeMap<String, Vec<f64>>,
    /// Topic per premise; only claim-sim vectors are topic-bound.
    topics: BTreeMap<String, String>,
}

impl Representation {
    /// Representation from explicit vectors, with no topic restriction.
    pub fn from_vectors(kind: ReprKind, vectors: BTreeMap<String, Vec<f64>>) -> Self {
        Representation {
            kind,
            vectors,
            topics: BTreeMap::new(),
        }
    }

    pub fn vector(&self, id: &str) -> Result<&[f64]> {
        self.vectors
            .get(id)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::MissingEmbedding(id.to_string()))
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.vectors.keys().map(String::as_str)
    }

    /// Premise similarity. Claim-sim vectors of different topics are not
    /// comparable.
    pub fn similarity(&self, a: &str, b: &str, kind: SimKind) -> Result<f64> {
        if let (Some(ta), Some(tb)) = (self.topics.get(a), self.topics.get(b)) {
            if ta != tb {
                return Err(Error::CrossTopic {
                    left: ta.clone(),
                    right: tb.clone(),
                });
            }
        }
        similarity(self.vector(a)?, self.vector(b)?, kind)
    }
}

/// Relevance of `premise_id` to each claim, in the given claim order.
pub fn claim_sim_vector(premise_id: &str, topic_claims: &[String], source: &RelevanceSource) -> Result<Vec<f64>> {
    if topic_claims.is_empty() {
        return Err(Error::Empty("topic claim list"));
    }
    topic_claims.iter().map(|c| source.score(c, premise_id)).collect()
}

fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

fn topic_claims(corpus: &Corpus, topic: &str, opts: &ReprOptions) -> Vec<String> {
    let all = corpus.claims_in_topic(topic);
    match opts.claim_sample {
        Some(n) if n < all.len() => {
            let seed = topic.bytes().fold(opts.sample_seed, |h, b| {
                h.wrapping_mul(0x100_0000_01b3).wrapping_add(b as u64)
            });
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut picked: Vec<String> = all.choose_multiple(&mut rng, n).cloned().collect();
            picked.sort();
            picked
        }
        _ => all.to_vec(),
    }
}

/// Builds vectors for `premise_ids`.
///
/// `bert` copies the embedding of each premise; `claim-sim` stacks the
/// relevance of the premise to every claim of its topic (ascending claim id).
pub fn build_representation(
    premise_ids: &[String],
    kind: ReprKind,
    embeddings: Option<&EmbeddingStore>,
    corpus: &Corpus,
    source: Option<&RelevanceSource>,
    opts: &ReprOptions,
) -> Result<Representation> {
    let finish = |v: Vec<f64>| if opts.normalize { normalized(v) } else { v };
    match kind {
        ReprKind::Bert => {
            let store = embeddings.ok_or(Error::Empty("embedding store"))?;
            let vectors = premise_ids
                .iter()
                .map(|id| Ok((id.clone(), finish(store.require(id)?.to_vec()))))
                .collect::<Result<_>>()?;
            Ok(Representation::from_vectors(kind, vectors))
        }
        ReprKind::ClaimSim => {
            let source = source.ok_or(Error::Empty("relevance source"))?;
            let mut by_topic: BTreeMap<&str, Vec<String>> = BTreeMap::new();
            let mut topics = BTreeMap::new();
            for id in premise_ids {
                let p = corpus.premise(id).ok_or_else(|| Error::DanglingId {
                    record: "representation".into(),
                    kind: "premise",
                    id: id.clone(),
                })?;
                if !by_topic.contains_key(p.topic.as_str()) {
                    let claims = topic_claims(corpus, &p.topic, opts);
                    if claims.is_empty() {
                        return Err(Error::invalid(
                            format!("premise `{id}`"),
                            format!("topic `{}` has no claims", p.topic),
                        ));
                    }
                    by_topic.insert(&p.topic, claims);
                }
                topics.insert(id.clone(), p.topic.clone());
            }
            let rows = par::try_map(premise_ids, |id| {
                let claims = &by_topic[topics[id].as_str()];
                claim_sim_vector(id, claims, source).map(|v| (id.clone(), finish(v)))
            })?;
            Ok(Representation {
                kind,
                vectors: rows.into_iter().collect(),
                topics,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn similarity_examples() {
        let u = [0.3, -1.2, 2.0];
        assert_eq!(similarity(&u, &u, SimKind::Cos).unwrap(), 1.0);
        assert_eq!(similarity(&u, &u, SimKind::NegL2).unwrap(), 0.0);
        assert_eq!(similarity(&[1.0, 0.0], &[0.0, 1.0], SimKind::Cos).unwrap(), 0.0);
        assert_eq!(similarity(&[1.0, 0.0], &[0.0, 1.0], SimKind::NegL1).unwrap(), -2.0);
        assert_eq!(similarity(&[3.0, 4.0], &[0.0, 0.0], SimKind::NegL2).unwrap(), -5.0);
        assert!(similarity(&u, &u, SimKind::NegL1).unwrap().is_sign_positive());
        assert!(similarity(&[0.0, -1.0], &[-1.0, 0.0], SimKind::Cos)
            .unwrap()
            .is_sign_positive());
    }

    #[test]
    fn similarity_errors() {
        assert!(matches!(
            similarity(&[1.0], &[1.0, 2.0], SimKind::NegL1),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            similarity(&[0.0, 0.0], &[1.0, 2.0], SimKind::Cos),
            Err(Error::ZeroVector)
        ));
    }

    #[test]
    fn store_rejects_bad_vectors() {
        let mut s = EmbeddingStore::new(2);
        assert!(s.insert("a", vec![1.0]).is_err());
        assert!(s.insert("a", vec![f64::NAN, 1.0]).is_err());
        s.insert("a", vec![1.0, 2.0]).unwrap();
        assert!(matches!(s.insert("a", vec![1.0, 2.0]), Err(Error::DuplicateId { .. })));
    }

    #[test]
    fn store_round_trips_both_formats() {
        let mut s = EmbeddingStore::new(3);
        s.insert("p1", vec![0.5, -1.0, 2.25]).unwrap();
        s.insert("p2", vec![0.0, 0.125, 8.0]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let bin = dir.path().join("e.bin");
        let js = dir.path().join("e.jsonl");
        s.write_binary(&bin).unwrap();
        s.write_jsonl(&js).unwrap();
        assert_eq!(EmbeddingStore::read(&bin).unwrap(), s);
        assert_eq!(EmbeddingStore::read(&js).unwrap(), s);
    }

    #[test]
    fn binary_layout_is_stable() {
        let mut s = EmbeddingStore::new(1);
        s.insert("x", vec![1.0]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let bin = dir.path().join("e.bin");
        s.write_binary(&bin).unwrap();
        let bytes = std::fs::read(&bin).unwrap();
        let mut expected = b"AEMB".to_vec();
        expected.extend(1u32.to_le_bytes());
        expected.extend(1u32.to_le_bytes());
        expected.extend(1u32.to_le_bytes());
        expected.extend(1u32.to_le_bytes());
        expected.extend(b"x");
        expected.extend(1.0f32.to_le_bytes());
        assert_eq!(bytes, expected);
    }
}
