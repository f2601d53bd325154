//! Seeded synthetic corpora.
//!
//! The generator builds a world with known structure: every query claim has
//! a few "ideas", and each idea is voiced by `group_size` near-duplicate
//! premises that share vocabulary, embedding direction and relevance
//! profile. Not-relevant premises are lexically related to the query but
//! carry their own idea. Alongside the corpus it emits a relevance score
//! table (every same-topic claim/premise pair) and premise/claim embeddings,
//! so the full pipeline can run without a neural model.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Assignment, Claim, Corpus, Grade, Judgment, MeaningCluster, Premise};
use crate::error::{Error, Result};
use crate::relevance::ScoreTable;
use crate::represent::EmbeddingStore;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureScale {
    pub topics: usize,
    pub queries: usize,
    /// Total number of (query, premise) judgments.
    pub judgments: usize,
    /// Requested share of very relevant, relevant and not relevant grades.
    pub grade_proportions: [f64; 3],
    /// Premises per meaning cluster.
    pub group_size: usize,
    pub result_claims_per_query: usize,
    pub distractor_claims_per_topic: usize,
    /// Unjudged premises attached to each distractor claim.
    pub premises_per_distractor: usize,
    pub embedding_dim: usize,
}

impl FixtureScale {
    /// Mirrors the size of the published evaluation set: 1,195 judgments
    /// split 389 / 139 / 667 over the three grades.
    pub fn paper() -> Self {
        FixtureScale {
            topics: 4,
            queries: 40,
            judgments: 1195,
            grade_proportions: [389.0 / 1195.0, 139.0 / 1195.0, 667.0 / 1195.0],
            group_size: 3,
            result_claims_per_query: 3,
            distractor_claims_per_topic: 10,
            premises_per_distractor: 2,
            embedding_dim: 32,
        }
    }

    pub fn small() -> Self {
        FixtureScale {
            topics: 2,
            queries: 6,
            judgments: 120,
            grade_proportions: [0.35, 0.15, 0.5],
            group_size: 3,
            result_claims_per_query: 2,
            distractor_claims_per_topic: 4,
            premises_per_distractor: 2,
            embedding_dim: 16,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |r: &str| Err(Error::invalid("fixture scale", r));
        if self.queries == 0 || self.result_claims_per_query == 0 {
            return bad("needs at least one query and one result claim per query");
        }
        if self.judgments == 0 {
            return bad("needs at least one judgment (premise)");
        }
        if self.topics == 0 || self.group_size == 0 || self.embedding_dim == 0 {
            return bad("topics, group size and embedding dim must be >= 1");
        }
        let p = &self.grade_proportions;
        if p.iter().any(|x| !x.is_finite() || *x < 0.0) || p.iter().sum::<f64>() <= 0.0 {
            return bad("grade proportions must be non-negative with a positive sum");
        }
        Ok(())
    }
}

/// A corpus with the signals an external model would otherwise provide.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub corpus: Corpus,
    pub scores: ScoreTable,
    pub embeddings: EmbeddingStore,
}

/// Corpus only; see [`generate`] for the full fixture.
pub fn generate_fixture(seed: u64, scale: &FixtureScale) -> Result<Corpus> {
    generate(seed, scale).map(|f| f.corpus)
}

/// Largest-remainder split of `total` by `proportions`.
pub fn allocate(total: usize, proportions: &[f64; 3]) -> [usize; 3] {
    let sum: f64 = proportions.iter().sum();
    let exact: Vec<f64> = proportions.iter().map(|p| p / sum * total as f64).collect();
    let mut counts = [0usize; 3];
    for i in 0..3 {
        counts[i] = exact[i].floor() as usize;
    }
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        (exact[b] - exact[b].floor())
            .total_cmp(&(exact[a] - exact[a].floor()))
            .then(a.cmp(&b))
    });
    let mut left = total - counts.iter().sum::<usize>();
    for i in order {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    counts
}

/// Pronounceable, unique pseudo-words.
struct Vocab {
    next: usize,
}

impl Vocab {
    const CONSONANTS: &'static [u8] = b"bdfgklmnprstvz";
    const VOWELS: &'static [u8] = b"aeiou";

    fn word(n: usize) -> String {
        let base = Self::CONSONANTS.len() * Self::VOWELS.len();
        let mut x = n + base;
        let mut syllables = Vec::new();
        while x > 0 {
            let s = x % base;
            syllables.push(s);
            x /= base;
        }
        let mut w = String::new();
        for s in syllables.into_iter().rev() {
            w.push(Self::CONSONANTS[s / Self::VOWELS.len()] as char);
            w.push(Self::VOWELS[s % Self::VOWELS.len()] as char);
        }
        w
    }

    fn fresh(&mut self, n: usize) -> Vec<String> {
        let out = (self.next..self.next + n).map(Self::word).collect();
        self.next += n;
        out
    }
}

fn pick<'a>(rng: &mut ChaCha8Rng, words: &'a [String], n: usize) -> Vec<&'a str> {
    words.choose_multiple(rng, n).map(String::as_str).collect()
}

fn sentence(mut words: Vec<&str>, rng: &mut ChaCha8Rng) -> String {
    words.shuffle(rng);
    let mut s = words.join(" ");
    if let Some(first) = s.get_mut(0..1) {
        first.make_ascii_uppercase();
    }
    s.push('.');
    s
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn gaussian_vec(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim).map(|_| scale * gaussian(rng)).collect()
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// What a premise expresses, for score and embedding synthesis.
#[derive(Clone, Copy)]
struct PremiseInfo {
    topic: usize,
    idea: usize,
    /// Query it was judged for, with its grade.
    judged: Option<(usize, Grade)>,
}

pub fn generate(seed: u64, scale: &FixtureScale) -> Result<Fixture> {
    scale.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vocab = Vocab { next: 0 };

    let counts = allocate(scale.judgments, &scale.grade_proportions);
    let mut grades: Vec<Grade> = [Grade::VeryRelevant, Grade::Relevant, Grade::NotRelevant]
        .into_iter()
        .zip(counts)
        .flat_map(|(g, n)| std::iter::repeat_n(g, n))
        .collect();
    grades.shuffle(&mut rng);
    let mut per_query: Vec<Vec<Grade>> = vec![Vec::new(); scale.queries];
    for (i, g) in grades.into_iter().enumerate() {
        per_query[i % scale.queries].push(g);
    }

    let topic_words: Vec<Vec<String>> = (0..scale.topics).map(|_| vocab.fresh(6)).collect();
    let common_words: Vec<Vec<String>> = (0..scale.topics).map(|_| vocab.fresh(40)).collect();
    let query_words: Vec<Vec<String>> = (0..scale.queries).map(|_| vocab.fresh(5)).collect();

    let mut claims = Vec::new();
    let mut premises = Vec::new();
    let mut info: Vec<PremiseInfo> = Vec::new();
    let mut assignments = Vec::new();
    let mut judgments = Vec::new();
    let mut clusters = Vec::new();
    let mut n_ideas = 0usize;
    let mut claim_topic: Vec<usize> = Vec::new();
    let mut claim_query: Vec<Option<usize>> = Vec::new();
    // ideas each query cares about, for the query embedding
    let mut query_ideas: Vec<Vec<usize>> = vec![Vec::new(); scale.queries];

    let new_premise = |premises: &mut Vec<Premise>, info: &mut Vec<PremiseInfo>, text: String, p: PremiseInfo| {
        let id = format!("P{:05}", premises.len() + 1);
        premises.push(Premise {
            id: id.clone(),
            text,
            topic: format!("topic{}", p.topic),
        });
        info.push(p);
        id
    };

    for q in 0..scale.queries {
        let t = q % scale.topics;
        let qid = format!("Q{}", q + 1);
        let mut qw: Vec<&str> = pick(&mut rng, &topic_words[t], 2);
        qw.extend(query_words[q].iter().map(String::as_str).take(4));
        claims.push(Claim {
            id: qid.clone(),
            text: sentence(qw, &mut rng),
            topic: format!("topic{t}"),
            cluster_id: None,
        });
        claim_topic.push(t);
        claim_query.push(Some(q));

        let mut result_ids = Vec::new();
        for r in 0..scale.result_claims_per_query {
            let id = format!("C{:04}", claims.len() + 1);
            let mut w = pick(&mut rng, &query_words[q], 3);
            w.extend(pick(&mut rng, &topic_words[t], 1));
            w.extend(pick(&mut rng, &common_words[t], 2));
            claims.push(Claim {
                id: id.clone(),
                text: sentence(w, &mut rng),
                topic: format!("topic{t}"),
                cluster_id: Some(format!("K{}-{}", q + 1, r / 2)),
            });
            claim_topic.push(t);
            claim_query.push(None);
            result_ids.push(id);
        }

        // relevant grades first so meaning clusters stay grade-homogeneous
        let mut gs = per_query[q].clone();
        gs.sort_by(|a, b| b.cmp(a));
        let n_rel = gs.iter().filter(|g| g.is_relevant()).count();
        let mut slot = 0usize;
        for (ci, chunk) in gs[..n_rel].chunks(scale.group_size).enumerate() {
            let idea = n_ideas;
            n_ideas += 1;
            query_ideas[q].push(idea);
            let idea_words = vocab.fresh(4);
            let mut members = Vec::new();
            for &g in chunk {
                let mut w = pick(&mut rng, &idea_words, 3);
                w.extend(pick(&mut rng, &query_words[q], 1));
                w.extend(pick(&mut rng, &common_words[t], 2));
                let text = sentence(w, &mut rng);
                let pid = new_premise(
                    &mut premises,
                    &mut info,
                    text,
                    PremiseInfo {
                        topic: t,
                        idea,
                        judged: Some((q, g)),
                    },
                );
                let rc = &result_ids[slot % result_ids.len()];
                slot += 1;
                assignments.push(Assignment {
                    claim_id: rc.clone(),
                    premise_id: pid.clone(),
                });
                judgments.push(Judgment {
                    query_claim_id: qid.clone(),
                    result_claim_id: Some(rc.clone()),
                    premise_id: pid.clone(),
                    grade: g,
                });
                members.push(pid);
            }
            clusters.push(MeaningCluster {
                query_claim_id: qid.clone(),
                label: format!("{qid}-M{}", ci + 1),
                premise_ids: members,
            });
        }
        for &g in &gs[n_rel..] {
            let idea = n_ideas;
            n_ideas += 1;
            let own = vocab.fresh(2);
            let mut w: Vec<&str> = own.iter().map(String::as_str).collect();
            w.extend(pick(&mut rng, &query_words[q], 1));
            w.extend(pick(&mut rng, &common_words[t], 3));
            let text = sentence(w, &mut rng);
            let pid = new_premise(
                &mut premises,
                &mut info,
                text,
                PremiseInfo {
                    topic: t,
                    idea,
                    judged: Some((q, g)),
                },
            );
            let rc = &result_ids[slot % result_ids.len()];
            slot += 1;
            assignments.push(Assignment {
                claim_id: rc.clone(),
                premise_id: pid.clone(),
            });
            judgments.push(Judgment {
                query_claim_id: qid.clone(),
                result_claim_id: Some(rc.clone()),
                premise_id: pid,
                grade: g,
            });
        }
    }

    for t in 0..scale.topics {
        let topic_queries: Vec<usize> = (0..scale.queries).filter(|q| q % scale.topics == t).collect();
        for _ in 0..scale.distractor_claims_per_topic {
            let id = format!("C{:04}", claims.len() + 1);
            let mut w = pick(&mut rng, &topic_words[t], 2);
            w.extend(pick(&mut rng, &common_words[t], 3));
            if let Some(&q) = topic_queries.choose(&mut rng) {
                w.extend(pick(&mut rng, &query_words[q], 1));
            }
            claims.push(Claim {
                id: id.clone(),
                text: sentence(w, &mut rng),
                topic: format!("topic{t}"),
                cluster_id: None,
            });
            claim_topic.push(t);
            claim_query.push(None);
            for _ in 0..scale.premises_per_distractor {
                let idea = n_ideas;
                n_ideas += 1;
                let own = vocab.fresh(2);
                let mut w: Vec<&str> = own.iter().map(String::as_str).collect();
                w.extend(pick(&mut rng, &common_words[t], 3));
                let text = sentence(w, &mut rng);
                let pid = new_premise(
                    &mut premises,
                    &mut info,
                    text,
                    PremiseInfo {
                        topic: t,
                        idea,
                        judged: None,
                    },
                );
                assignments.push(Assignment {
                    claim_id: id.clone(),
                    premise_id: pid,
                });
            }
        }
    }

    // Relevance scores. For a query and its own judged premises the score
    // tracks the grade; every other pair gets an idea-level random profile,
    // so duplicates share nearly identical claim-sim vectors.
    let mut idea_jitter = vec![0.0; n_ideas];
    for j in idea_jitter.iter_mut() {
        *j = rng.gen_range(-0.06..0.06);
    }
    let mut profile: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut scores = ScoreTable::new();
    for (ci, claim) in claims.iter().enumerate() {
        for (pi, p) in premises.iter().enumerate() {
            let pinfo = info[pi];
            if pinfo.topic != claim_topic[ci] {
                continue;
            }
            let noise = rng.gen_range(-0.015..0.015);
            let own_query = claim_query[ci].filter(|&q| pinfo.judged.is_some_and(|(jq, _)| jq == q));
            let base = match (own_query, pinfo.judged) {
                (Some(_), Some((_, Grade::VeryRelevant))) => 0.82 + idea_jitter[pinfo.idea],
                (Some(_), Some((_, Grade::Relevant))) => 0.70 + idea_jitter[pinfo.idea],
                (Some(_), _) => *profile
                    .entry((ci, pinfo.idea))
                    .or_insert_with(|| rng.gen_range(0.05..0.72)),
                (None, _) if claim_query[ci].is_some() => *profile
                    .entry((ci, pinfo.idea))
                    .or_insert_with(|| rng.gen_range(0.0..0.4)),
                (None, _) => *profile
                    .entry((ci, pinfo.idea))
                    .or_insert_with(|| rng.gen_range(0.0..1.0)),
            };
            scores.insert(&claim.id, &p.id, (base + noise).clamp(0.0, 1.0))?;
        }
    }

    // Embeddings: shared topic direction, one direction per idea, small
    // per-premise noise. A query points at the ideas relevant to it.
    let dim = scale.embedding_dim;
    let topic_dirs: Vec<Vec<f64>> = (0..scale.topics).map(|_| gaussian_vec(&mut rng, dim, 0.5)).collect();
    let idea_dirs: Vec<Vec<f64>> = (0..n_ideas).map(|_| gaussian_vec(&mut rng, dim, 1.0)).collect();
    let mut embeddings = EmbeddingStore::new(dim);
    for (pi, p) in premises.iter().enumerate() {
        let pinfo = info[pi];
        let v = add(
            &add(&topic_dirs[pinfo.topic], &idea_dirs[pinfo.idea]),
            &gaussian_vec(&mut rng, dim, 0.2),
        );
        embeddings.insert(p.id.clone(), v)?;
    }
    for (ci, c) in claims.iter().enumerate() {
        let t = claim_topic[ci];
        let focus = match claim_query[ci] {
            Some(q) if !query_ideas[q].is_empty() => {
                let ideas = &query_ideas[q];
                let norm = (ideas.len() as f64).sqrt();
                let mut acc = vec![0.0; dim];
                for &i in ideas {
                    acc = add(&acc, &idea_dirs[i]);
                }
                acc.iter().map(|x| x / norm).collect()
            }
            _ => gaussian_vec(&mut rng, dim, 1.0),
        };
        let v = add(&add(&topic_dirs[t], &focus), &gaussian_vec(&mut rng, dim, 0.3));
        embeddings.insert(c.id.clone(), v)?;
    }

    let corpus = Corpus::new(claims, premises, assignments, judgments, clusters)?;
    Ok(Fixture {
        corpus,
        scores,
        embeddings,
    })
}
