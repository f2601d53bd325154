use std::collections::BTreeSet;
use std::fs;

use argon_core::corpus::{load_corpus, load_corpus_with, same_records, write_corpus, CorpusPaths, Grade, LoadOptions};
use argon_core::error::Error;
use argon_core::fixture::{generate, FixtureScale};
use argon_core::relevance::ScoreTable;
use argon_core::represent::EmbeddingStore;

fn write(dir: &std::path::Path, name: &str, body: &str) {
    fs::write(dir.join(name), body).unwrap();
}

#[test]
fn corpus_round_trip() {
    let f = generate(4, &FixtureScale::small()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_corpus(&f.corpus, dir.path()).unwrap();
    let back = load_corpus(&CorpusPaths::in_dir(dir.path())).unwrap();
    assert!(same_records(&f.corpus, &back));

    let scores = dir.path().join("scores.jsonl");
    f.scores.write(&scores).unwrap();
    assert_eq!(ScoreTable::read(&scores).unwrap(), f.scores);
}

#[test]
fn minimal_corpus_without_optional_files() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "claims.jsonl",
        "{\"id\":\"c1\",\"text\":\"Nuclear energy is safe\",\"topic\":\"energy\"}\n\n",
    );
    write(
        dir.path(),
        "premises.jsonl",
        "{\"id\":\"p1\",\"text\":\"Reactors rarely fail\",\"topic\":\"energy\"}\n",
    );
    write(
        dir.path(),
        "assignments.jsonl",
        "{\"claim_id\":\"c1\",\"premise_id\":\"p1\"}\n",
    );
    let c = load_corpus(&CorpusPaths::in_dir(dir.path())).unwrap();
    assert_eq!(c.claims().len(), 1);
    assert!(c.judgments().is_empty());
}

#[test]
fn missing_topic_needs_a_default() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "claims.jsonl",
        "{\"id\":\"c1\",\"text\":\"Nuclear energy is safe\"}\n",
    );
    write(
        dir.path(),
        "premises.jsonl",
        "{\"id\":\"p1\",\"text\":\"x\",\"topic\":\"energy\"}\n",
    );
    write(
        dir.path(),
        "assignments.jsonl",
        "{\"claim_id\":\"c1\",\"premise_id\":\"p1\"}\n",
    );
    let paths = CorpusPaths::in_dir(dir.path());
    match load_corpus(&paths) {
        Err(Error::Parse { line, message, .. }) => {
            assert_eq!(line, 1);
            assert!(message.contains("topic"));
        }
        other => panic!("expected parse error, got {other:?}"),
    }
    let opts = LoadOptions {
        default_topic: Some("energy".into()),
    };
    assert_eq!(load_corpus_with(&paths, &opts).unwrap().claims()[0].topic, "energy");
}

#[test]
fn dangling_and_duplicate_ids() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "claims.jsonl",
        "{\"id\":\"c1\",\"text\":\"a\",\"topic\":\"t\"}\n",
    );
    write(
        dir.path(),
        "premises.jsonl",
        "{\"id\":\"p1\",\"text\":\"b\",\"topic\":\"t\"}\n",
    );
    write(
        dir.path(),
        "assignments.jsonl",
        "{\"claim_id\":\"c9\",\"premise_id\":\"p1\"}\n",
    );
    let paths = CorpusPaths::in_dir(dir.path());
    assert!(matches!(load_corpus(&paths), Err(Error::DanglingId { .. })));

    write(
        dir.path(),
        "assignments.jsonl",
        "{\"claim_id\":\"c1\",\"premise_id\":\"p1\"}\n",
    );
    write(
        dir.path(),
        "premises.jsonl",
        "{\"id\":\"p1\",\"text\":\"b\",\"topic\":\"t\"}\n{\"id\":\"p1\",\"text\":\"c\",\"topic\":\"t\"}\n",
    );
    assert!(matches!(load_corpus(&paths), Err(Error::DuplicateId { .. })));

    write(
        dir.path(),
        "premises.jsonl",
        "{\"id\":\"p1\",\"text\":\"b\",\"topic\":\"t\"}\n{not json\n",
    );
    assert!(matches!(load_corpus(&paths), Err(Error::Parse { line: 2, .. })));
}

#[test]
fn hand_written_binary_embeddings() {
    let mut bytes = Vec::new();
    bytes.extend_from_slice(b"AEMB");
    for v in [1u32, 2, 2] {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    for (id, v) in [("claim-7", [-2.0f32, 0.25]), ("p1", [1.0, 0.5])] {
        bytes.extend_from_slice(&(id.len() as u32).to_le_bytes());
        bytes.extend_from_slice(id.as_bytes());
        for x in v {
            bytes.extend_from_slice(&x.to_le_bytes());
        }
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("emb.bin");
    fs::write(&path, &bytes).unwrap();
    let store = EmbeddingStore::read(&path).unwrap();
    assert_eq!(store.dim(), 2);
    assert_eq!(store.get("p1").unwrap(), &[1.0, 0.5]);
    assert_eq!(store.get("claim-7").unwrap(), &[-2.0, 0.25]);

    let out = dir.path().join("again.bin");
    store.write_binary(&out).unwrap();
    assert_eq!(fs::read(&out).unwrap(), bytes);

    let jl = dir.path().join("emb.jsonl");
    fs::write(
        &jl,
        "{\"id\":\"a\",\"vector\":[1,2,3]}\n{\"id\":\"b\",\"vector\":[0,0,1]}\n",
    )
    .unwrap();
    let store = EmbeddingStore::read(&jl).unwrap();
    assert_eq!((store.dim(), store.len()), (3, 2));

    fs::write(
        &jl,
        "{\"id\":\"a\",\"vector\":[1,2,3]}\n{\"id\":\"b\",\"vector\":[0,1]}\n",
    )
    .unwrap();
    assert!(EmbeddingStore::read(&jl).is_err());
    let mut truncated = bytes.clone();
    truncated.truncate(bytes.len() - 3);
    fs::write(&path, &truncated).unwrap();
    assert!(EmbeddingStore::read(&path).is_err());
}

#[test]
fn paper_scale_fixture_counts() {
    let f = generate(7, &FixtureScale::paper()).unwrap();
    let c = &f.corpus;
    assert_eq!(c.judgments().len(), 1195);
    let count = |g| c.judgments().iter().filter(|j| j.grade == g).count();
    assert_eq!(
        [
            count(Grade::VeryRelevant),
            count(Grade::Relevant),
            count(Grade::NotRelevant)
        ],
        [389, 139, 667]
    );
    let clustered: usize = c.meaning_clusters().iter().map(|m| m.premise_ids.len()).sum();
    assert_eq!(clustered, 389 + 139);
    assert_eq!(c.query_claim_ids().len(), 40);
    assert!(c.meaning_clusters().iter().all(|m| m.premise_ids.len() <= 3));
    for p in c.premises() {
        assert!(f.embeddings.get(&p.id).is_some());
    }
}

#[test]
fn fixture_is_deterministic_per_seed() {
    let s = FixtureScale::small();
    let a = generate(21, &s).unwrap();
    let b = generate(21, &s).unwrap();
    let c = generate(22, &s).unwrap();
    assert!(same_records(&a.corpus, &b.corpus));
    assert_eq!(a.scores, b.scores);
    assert_eq!(a.embeddings, b.embeddings);
    let texts = |x: &argon_core::fixture::Fixture| -> BTreeSet<String> {
        x.corpus.premises().iter().map(|p| p.text.clone()).collect()
    };
    assert_ne!(texts(&a), texts(&c));
}
