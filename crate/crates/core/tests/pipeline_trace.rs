mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use argon_core::index::{tokenize, DfrParams, ScorerKind};
use argon_core::pipeline::{Engine, PipelineConfig, RankerKind};
use argon_core::prefilter::{PrefilterConfig, QueryClaim};
use argon_core::ranker::{biased_coreset, SimilarityMatrix};
use argon_core::relevance::{RelevanceSource, ScoreTable, ScoredPremise};
use argon_core::represent::{similarity, EmbeddingStore, ReprKind, SimKind};
use common::{brute_coreset, hand_corpus, hand_scores};

fn set(ids: &[&str]) -> BTreeSet<String> {
    ids.iter().map(|s| s.to_string()).collect()
}

fn hand_table() -> ScoreTable {
    let mut t = ScoreTable::new();
    for (p, r) in hand_scores() {
        t.insert("C1", p, r).unwrap();
    }
    t
}

fn hand_embeddings() -> EmbeddingStore {
    let mut e = EmbeddingStore::new(2);
    for (id, v) in [
        ("P1", [1.0, 0.0]),
        ("P2", [0.0, 1.0]),
        ("P3", [1.0, 0.2]),
        ("P4", [0.5, 0.5]),
        ("P5", [0.4, 0.6]),
        ("P6", [-1.0, 0.1]),
        ("P7", [0.1, 1.0]),
        ("P8", [-1.0, -0.3]),
    ] {
        e.insert(id, v.to_vec()).unwrap();
    }
    e
}

fn engine() -> Engine {
    let emb = Arc::new(hand_embeddings());
    Engine::new(hand_corpus(), RelevanceSource::Table(hand_table()), Some(emb)).unwrap()
}

fn config(m_claims: usize, m_premises: usize) -> PipelineConfig {
    let mut c = PipelineConfig::default();
    c.prefilter.m_claims = m_claims;
    c.prefilter.m_premises = m_premises;
    c.ranker.k = 3;
    c.ranker.alpha = 0.5;
    c.ranker.tau = 0.5;
    c.ranker.representation = ReprKind::Bert;
    c.ranker.similarity = SimKind::Cos;
    c
}

#[test]
fn dfr_ties_between_c2_and_c3() {
    // C2 and C3 each share one df=2 term plus "is" with the query, at equal length.
    let e = engine();
    let q = tokenize("nuclear energy is safe");
    let dfr = ScorerKind::Dfr(DfrParams::default());
    let c2 = e.claim_index.score(dfr, &q, "C2").unwrap();
    let c3 = e.claim_index.score(dfr, &q, "C3").unwrap();
    assert_eq!(c2, c3);
    assert!(c2 > e.claim_index.score(dfr, &q, "C4").unwrap());
}

#[test]
fn prefilter_hand_trace_m1() {
    // (1) DFR top-1 without the query itself: C2 (tie with C3, smaller id)
    // (2) cluster K1 adds C1
    // (3) seed = premises of C1, C2 = P1 P2 P3
    // (4) BM25 top-1: P1 -> P2 (shorter of two "reactors" docs), P2 -> P7
    //     (shares reactors and carbon), P3 -> nothing
    let e = engine();
    let q = QueryClaim::from_corpus(&e.corpus, "C1").unwrap();
    let c = e.candidates(&config(1, 1), &q).unwrap();
    assert_eq!(c.claims, set(&["C1", "C2"]));
    assert_eq!(c.seed, set(&["P1", "P2", "P3"]));
    assert_eq!(c.expanded, set(&["P2", "P7"]));
    assert_eq!(c.all, set(&["P1", "P2", "P3", "P7"]));
}

#[test]
fn prefilter_hand_trace_m2() {
    // C2 and C3 both retrieved; C3 brings P4 P5, which retrieve each other via "panels".
    let e = engine();
    let q = QueryClaim::from_corpus(&e.corpus, "C1").unwrap();
    let c = e.candidates(&config(2, 1), &q).unwrap();
    assert_eq!(c.claims, set(&["C1", "C2", "C3"]));
    assert_eq!(c.seed, set(&["P1", "P2", "P3", "P4", "P5"]));
    assert_eq!(c.expanded, set(&["P2", "P4", "P5", "P7"]));
    assert_eq!(c.all, set(&["P1", "P2", "P3", "P4", "P5", "P7"]));
    assert!(c.seed.is_subset(&c.all) && c.expanded.is_subset(&c.all));
}

#[test]
fn prefilter_without_cluster_is_identity_expansion() {
    let e = engine();
    let q = QueryClaim {
        id: "free".into(),
        text: "football".into(),
        topic: "sport".into(),
    };
    let c = e.candidates(&config(5, 1), &q).unwrap();
    assert_eq!(c.claims, set(&["C4"]));
    assert_eq!(c.seed, set(&["P6"]));
    // P6 shares "team" with P8 only
    assert_eq!(c.all, set(&["P6", "P8"]));
}

#[test]
fn prefilter_empty_and_invalid() {
    let e = engine();
    let q = QueryClaim {
        id: "x".into(),
        text: "!!!".into(),
        topic: "energy".into(),
    };
    assert!(e.candidates(&config(1, 1), &q).unwrap().is_empty());
    let bad = PipelineConfig {
        prefilter: PrefilterConfig {
            m_claims: 0,
            ..Default::default()
        },
        ..Default::default()
    };
    assert!(e.candidates(&bad, &q).is_err());
}

#[test]
fn same_topic_toggle_drops_cross_topic_hits() {
    let e = engine();
    let q = QueryClaim {
        id: "free".into(),
        text: "football".into(),
        topic: "energy".into(),
    };
    let mut cfg = config(5, 3);
    cfg.prefilter.same_topic = true;
    let c = e.candidates(&cfg, &q).unwrap();
    assert_eq!(c.expanded, BTreeSet::new());
}

#[test]
fn retrieve_equals_manual_stage_composition() {
    let e = engine();
    let cfg = config(1, 1);
    let q = QueryClaim::from_corpus(&e.corpus, "C1").unwrap();
    let r = e.retrieve(&cfg, &q).unwrap();

    // stage 2 by hand: tau = 0.5 keeps P1 .9, P2 .8, P7 .75, P3 .6
    let rel: BTreeMap<&str, f64> = hand_scores().into_iter().collect();
    let kept: Vec<(String, f64)> = ["P1", "P2", "P7", "P3"]
        .iter()
        .map(|p| (p.to_string(), rel[p]))
        .collect();
    let got: Vec<(String, f64)> = r.filtered.iter().map(|s| (s.id.clone(), s.relevance)).collect();
    assert_eq!(got, kept);

    // stage 3 by hand with the brute-force greedy
    let emb = hand_embeddings();
    let sim = |a: &str, b: &str| similarity(emb.get(a).unwrap(), emb.get(b).unwrap(), SimKind::Cos).unwrap();
    let want = brute_coreset(&kept, &sim, 3, 0.5);
    assert_eq!(want, ["P1", "P2", "P7"]);
    assert_eq!(r.result.ids(), want);
    assert!(r.diagnostic.is_none());
    assert!(r.result.ids().iter().all(|p| r.candidates.all.contains(*p)));
}

#[test]
fn top_k_kind_equals_coreset_at_alpha_one() {
    let e = engine();
    let q = QueryClaim::from_corpus(&e.corpus, "C1").unwrap();
    let mut top = config(2, 2);
    top.ranker_kind = RankerKind::TopK;
    let mut core = top.clone();
    core.ranker_kind = RankerKind::BiasedCoreset;
    core.ranker.alpha = 1.0;
    for k in 1..6 {
        top.ranker.k = k;
        core.ranker.k = k;
        assert_eq!(
            e.retrieve(&top, &q).unwrap().result.ids(),
            e.retrieve(&core, &q).unwrap().result.ids()
        );
    }
}

#[test]
fn high_tau_gives_empty_result_with_diagnostic() {
    let e = engine();
    let q = QueryClaim::from_corpus(&e.corpus, "C1").unwrap();
    let mut cfg = config(2, 2);
    cfg.ranker.tau = 0.95;
    let r = e.retrieve(&cfg, &q).unwrap();
    assert!(r.result.items.is_empty());
    assert!(r.diagnostic.unwrap().contains("tau"));
}

#[test]
fn claim_sim_representation_runs_through_pipeline() {
    let mut t = hand_table();
    for c in ["C2", "C3"] {
        for (i, (p, _)) in hand_scores().into_iter().enumerate() {
            t.insert(c, p, (i as f64 * 0.13 + if c == "C2" { 0.1 } else { 0.4 }) % 1.0)
                .unwrap();
        }
    }
    let e = Engine::new(hand_corpus(), RelevanceSource::Table(t), None).unwrap();
    let mut cfg = config(2, 2);
    cfg.ranker.representation = ReprKind::ClaimSim;
    for kind in [RankerKind::BiasedCoreset, RankerKind::Kmeans] {
        cfg.ranker_kind = kind;
        let q = QueryClaim::from_corpus(&e.corpus, "C1").unwrap();
        let a = e.retrieve(&cfg, &q).unwrap();
        let b = e.retrieve(&cfg, &q).unwrap();
        assert_eq!(a, b);
        assert!(!a.result.items.is_empty() && a.result.items.len() <= 3);
    }
}

#[test]
fn coreset_on_explicit_matrix_matches_oracle() {
    let cands = vec![
        ScoredPremise::new("a", 1.0),
        ScoredPremise::new("b", 0.9),
        ScoredPremise::new("c", 0.8),
        ScoredPremise::new("d", 0.1),
    ];
    let psim = |x: &str, y: &str| match (x, y) {
        _ if x == y => 1.0,
        ("a", "b") | ("b", "a") => 0.95,
        _ => 0.1,
    };
    let m = SimilarityMatrix::from_fn(cands.iter().map(|c| c.id.clone()).collect(), |a, b| Ok(psim(a, b))).unwrap();
    let got: Vec<String> = biased_coreset(&cands, &m, 3, 0.5)
        .unwrap()
        .into_iter()
        .map(|i| i.premise_id)
        .collect();
    let plain: Vec<(String, f64)> = cands.iter().map(|c| (c.id.clone(), c.relevance)).collect();
    assert_eq!(got, brute_coreset(&plain, &psim, 3, 0.5));
}
