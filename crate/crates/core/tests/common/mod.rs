//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashSet};

use argon_core::corpus::{Assignment, Claim, Corpus, Grade, Judgment, MeaningCluster, Premise};
use argon_core::relevance::ScoredPremise;
use rand::Rng;

/// Plain greedy: objective alpha*R - (1-alpha)*max sim to the chosen set,
/// recomputed from scratch at every step.
pub fn brute_coreset(cands: &[(String, f64)], sim: &dyn Fn(&str, &str) -> f64, k: usize, alpha: f64) -> Vec<String> {
    let mut chosen: Vec<String> = Vec::new();
    let mut left: Vec<(String, f64)> = cands.to_vec();
    while chosen.len() < k && !left.is_empty() {
        let mut best: Option<(usize, f64)> = None;
        for (i, (id, r)) in left.iter().enumerate() {
            let q = chosen
                .iter()
                .map(|c| sim(id, c))
                .fold(None, |m: Option<f64>, s| Some(m.map_or(s, |m| m.max(s))));
            let obj = match q {
                None => alpha * r,
                Some(q) => alpha * r - (1.0 - alpha) * q,
            };
            let wins = match best {
                None => true,
                Some((b, bo)) => {
                    let (bid, br) = &left[b];
                    obj > bo || (obj == bo && (*r > *br || (*r == *br && id < bid)))
                }
            };
            if wins {
                best = Some((i, obj));
            }
        }
        let (i, _) = best.unwrap();
        chosen.push(left.remove(i).0);
    }
    chosen
}

/// Textbook NDCG@k with gains 2/1/0, no duplicate handling.
pub fn classic_ndcg(ranking: &[String], grades: &BTreeMap<String, u8>, k: usize) -> f64 {
    let disc = |i: usize| ((i + 2) as f64).log2();
    let dcg: f64 = ranking
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, p)| *grades.get(p).unwrap_or(&0) as f64 / disc(i))
        .sum();
    let mut ideal: Vec<f64> = grades.values().map(|&g| g as f64).collect();
    ideal.sort_by(|a, b| b.total_cmp(a));
    let idcg: f64 = ideal.iter().take(k).enumerate().map(|(i, g)| g / disc(i)).sum();
    if idcg == 0.0 {
        0.0
    } else {
        dcg / idcg
    }
}

pub fn cosine(u: &[f64], v: &[f64]) -> f64 {
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu: f64 = u.iter().map(|a| a * a).sum();
    let nv: f64 = v.iter().map(|a| a * a).sum();
    (dot / (nu * nv).sqrt()).clamp(-1.0, 1.0) + 0.0
}

/// For each assignment: top-`l` premises by cosine to the assigned premise,
/// among premises not assigned to that claim (ties by id). Sorts the whole
/// pool every time.
pub fn brute_negatives(
    assignments: &[(String, String)],
    premises: &[(String, Vec<f64>)],
    l: usize,
) -> Vec<(String, String, u8)> {
    let assigned: HashSet<(&str, &str)> = assignments.iter().map(|(c, p)| (c.as_str(), p.as_str())).collect();
    let vec_of = |id: &str| &premises.iter().find(|(p, _)| p == id).unwrap().1;
    let mut out = Vec::new();
    for (c, p) in assignments {
        out.push((p.clone(), c.clone(), 1));
        let anchor = vec_of(p);
        let mut pool: Vec<(f64, &String)> = premises
            .iter()
            .filter(|(q, _)| !assigned.contains(&(c.as_str(), q.as_str())))
            .map(|(q, v)| (cosine(anchor, v), q))
            .collect();
        pool.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(b.1)));
        for (_, q) in pool.into_iter().take(l) {
            out.push((q.clone(), c.clone(), 0));
        }
    }
    out
}

pub fn scored(items: &[(&str, f64)]) -> Vec<ScoredPremise> {
    items.iter().map(|&(id, r)| ScoredPremise::new(id, r)).collect()
}

/// Random candidates with relevance drawn from a small grid so ties occur.
pub fn random_candidates<R: Rng>(rng: &mut R, n: usize) -> Vec<(String, f64)> {
    (0..n)
        .map(|i| (format!("p{i:02}"), rng.gen_range(0..=10) as f64 / 10.0))
        .collect()
}

/// Symmetric similarity with unit diagonal, values on a coarse grid.
#[allow(clippy::needless_range_loop)]
pub fn random_sims<R: Rng>(rng: &mut R, n: usize) -> Vec<Vec<f64>> {
    let mut m = vec![vec![1.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let s = rng.gen_range(0..=8) as f64 / 8.0;
            m[i][j] = s;
            m[j][i] = s;
        }
    }
    m
}

fn s(x: &str) -> String {
    x.to_string()
}

/// Four claims, eight premises over two topics.
///
/// C1 "nuclear energy is safe" (cluster K1), C2 "nuclear power is clean"
/// (cluster K1), C3 "solar energy is cheap", C4 "football is fun" (sport).
pub fn hand_corpus() -> Corpus {
    let claims = vec![
        Claim {
            id: s("C1"),
            text: s("nuclear energy is safe"),
            topic: s("energy"),
            cluster_id: Some(s("K1")),
        },
        Claim {
            id: s("C2"),
            text: s("nuclear power is clean"),
            topic: s("energy"),
            cluster_id: Some(s("K1")),
        },
        Claim {
            id: s("C3"),
            text: s("solar energy is cheap"),
            topic: s("energy"),
            cluster_id: None,
        },
        Claim {
            id: s("C4"),
            text: s("football is fun"),
            topic: s("sport"),
            cluster_id: None,
        },
    ];
    let premises = vec![
        Premise {
            id: s("P1"),
            text: s("reactors have strong safety records"),
            topic: s("energy"),
        },
        Premise {
            id: s("P2"),
            text: s("reactors emit no carbon"),
            topic: s("energy"),
        },
        Premise {
            id: s("P3"),
            text: s("nuclear waste stays dangerous"),
            topic: s("energy"),
        },
        Premise {
            id: s("P4"),
            text: s("solar panels are cheap now"),
            topic: s("energy"),
        },
        Premise {
            id: s("P5"),
            text: s("panels need sunny weather"),
            topic: s("energy"),
        },
        Premise {
            id: s("P6"),
            text: s("football builds team spirit"),
            topic: s("sport"),
        },
        Premise {
            id: s("P7"),
            text: s("carbon emissions from reactors are low"),
            topic: s("energy"),
        },
        Premise {
            id: s("P8"),
            text: s("team sports reduce stress"),
            topic: s("sport"),
        },
    ];
    let assign = |c: &str, p: &str| Assignment {
        claim_id: s(c),
        premise_id: s(p),
    };
    let assignments = vec![
        assign("C1", "P1"),
        assign("C2", "P2"),
        assign("C2", "P3"),
        assign("C3", "P4"),
        assign("C3", "P5"),
        assign("C4", "P6"),
    ];
    let judge = |p: &str, g: Grade| Judgment {
        query_claim_id: s("C1"),
        result_claim_id: None,
        premise_id: s(p),
        grade: g,
    };
    let judgments = vec![
        judge("P1", Grade::VeryRelevant),
        judge("P2", Grade::VeryRelevant),
        judge("P7", Grade::VeryRelevant),
        judge("P3", Grade::Relevant),
        judge("P4", Grade::NotRelevant),
    ];
    let clusters = vec![MeaningCluster {
        query_claim_id: s("C1"),
        label: s("low-carbon"),
        premise_ids: vec![s("P2"), s("P7")],
    }];
    Corpus::new(claims, premises, assignments, judgments, clusters).unwrap()
}

/// Relevance of every hand-corpus premise to C1.
pub fn hand_scores() -> Vec<(&'static str, f64)> {
    vec![
        ("P1", 0.9),
        ("P2", 0.8),
        ("P3", 0.6),
        ("P4", 0.3),
        ("P5", 0.2),
        ("P6", 0.05),
        ("P7", 0.75),
        ("P8", 0.01),
    ]
}

/// Random corpus of `n` premises over two topics with embeddings drawn from
/// a small pool of integer vectors, so exact cosine ties are common.
pub fn random_pair_corpus<R: Rng>(rng: &mut R, n: usize) -> (Corpus, Vec<(String, Vec<f64>)>) {
    let topics = ["t0", "t1"];
    let n_claims = rng.gen_range(1..=6);
    let claims: Vec<Claim> = (0..n_claims)
        .map(|i| Claim {
            id: format!("c{i}"),
            text: format!("claim {i}"),
            topic: topics[i % 2].to_string(),
            cluster_id: None,
        })
        .collect();
    let premises: Vec<Premise> = (0..n)
        .map(|i| Premise {
            id: format!("p{i:02}"),
            text: format!("premise {i}"),
            topic: topics[rng.gen_range(0..2)].to_string(),
        })
        .collect();
    let mut assignments = Vec::new();
    let mut seen = HashSet::new();
    for p in &premises {
        for _ in 0..rng.gen_range(1..=2) {
            let c = &claims[rng.gen_range(0..n_claims)].id;
            if seen.insert((c.clone(), p.id.clone())) {
                assignments.push(Assignment {
                    claim_id: c.clone(),
                    premise_id: p.id.clone(),
                });
            }
        }
    }
    let pool: Vec<Vec<f64>> = (0..6)
        .map(|_| loop {
            let v: Vec<f64> = (0..3).map(|_| rng.gen_range(-3..=3) as f64).collect();
            if v.iter().any(|x| *x != 0.0) {
                break v;
            }
        })
        .collect();
    let vectors = premises
        .iter()
        .map(|p| (p.id.clone(), pool[rng.gen_range(0..pool.len())].clone()))
        .collect();
    let corpus = Corpus::new(claims, premises, assignments, vec![], vec![]).unwrap();
    (corpus, vectors)
}
