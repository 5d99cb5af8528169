use hybrid_index::persist::{from_bytes, to_bytes, FORMAT_VERSION, MAGIC};
use hybrid_index::synth::{SynthConfig, SyntheticCorpus};
use hybrid_index::{
    build_hybrid_index, deserialize_index, greedy_hybrid_search, serialize_index, BuildParams, Error, HybridIndex,
    KnowledgeGraph, QuerySpec, Triplet, Weights,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small_index(docs: usize, kg: Option<KnowledgeGraph>) -> (SyntheticCorpus, HybridIndex) {
    let c = SyntheticCorpus::generate(SynthConfig { docs, entities: 40, seed: 11, ..SynthConfig::default() });
    let p = BuildParams { degree: 12, knn_k: 20, seed: 3, ..BuildParams::default() };
    let index = build_hybrid_index(c.store().unwrap(), kg, p).unwrap();
    (c, index)
}

fn kg() -> KnowledgeGraph {
    KnowledgeGraph::new(
        (0..60).map(|i| Triplet { source: i % 40, relation: i % 3, target: (i * 7 + 1) % 40 }).collect(),
    )
}

#[test]
fn round_trip_preserves_structure_and_answers() {
    let (c, index) = small_index(500, Some(kg()));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("idx.bin");
    let written = serialize_index(&index, &path).unwrap();
    assert_eq!(written, std::fs::metadata(&path).unwrap().len());
    let back = deserialize_index(&path, true).unwrap();
    assert_eq!(back.len(), index.len());
    for u in 0..index.len() as u32 {
        assert_eq!(back.semantic_edges(u), index.semantic_edges(u));
        assert_eq!(back.keyword_edges(u), index.keyword_edges(u));
        assert_eq!(back.logical_edges(u), index.logical_edges(u));
        assert_eq!(back.forward_len(u), index.forward_len(u));
        assert_eq!(back.bridge_len(u), index.bridge_len(u));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for a in 0..30 {
        let q = QuerySpec::new(c.query_near(&mut rng, a * 7), Weights::new(0.5, 0.3, 0.2, 1.0), 10, 48)
            .with_entities(vec![a as u32 % 40]);
        let x = greedy_hybrid_search(&q, &index).unwrap();
        let y = greedy_hybrid_search(&q, &back).unwrap();
        assert_eq!(x.hits, y.hits);
        assert_eq!(x.warnings, y.warnings);
    }
    assert_eq!(to_bytes(&back), to_bytes(&index));
}

#[test]
fn serialization_is_byte_stable() {
    let (_, index) = small_index(300, None);
    assert_eq!(to_bytes(&index), to_bytes(&index));
    let (_, again) = small_index(300, None);
    assert_eq!(to_bytes(&again), to_bytes(&index));
}

#[test]
fn empty_logical_section_is_omitted() {
    let (_, plain) = small_index(300, None);
    let (_, with_kg) = small_index(300, Some(kg()));
    assert_eq!(plain.logical_edge_count(), 0);
    assert!(with_kg.logical_edge_count() > 0);
    let (a, b) = (to_bytes(&plain), to_bytes(&with_kg));
    assert!(a.len() < b.len());
    let back = from_bytes(&a, true).unwrap();
    assert_eq!(back.logical_edge_count(), 0);
    assert!(back.knowledge_graph().is_none());
}

#[test]
fn foreign_bytes_are_not_an_index() {
    assert!(matches!(from_bytes(b"{\"id\": 1}\n", false), Err(Error::NotAnIndex)));
    assert!(matches!(from_bytes(&[], false), Err(Error::NotAnIndex)));
}

#[test]
fn unknown_version_is_rejected() {
    let (_, index) = small_index(300, None);
    let mut bytes = to_bytes(&index);
    bytes[MAGIC.len()..MAGIC.len() + 4].copy_from_slice(&(FORMAT_VERSION + 1).to_le_bytes());
    match from_bytes(&bytes, false) {
        Err(e @ Error::VersionMismatch(v)) => {
            assert_eq!(v, FORMAT_VERSION + 1);
            assert_eq!(e.code(), "version-mismatch");
        }
        other => panic!("unexpected {:?}", other.map(|_| ())),
    }
}

#[test]
fn every_truncation_is_detected() {
    let (_, index) = small_index(300, None);
    let bytes = to_bytes(&index);
    let step = (bytes.len() / 97).max(1);
    for cut in (MAGIC.len()..bytes.len()).step_by(step) {
        let r = from_bytes(&bytes[..cut], false);
        assert!(matches!(r, Err(Error::Truncated | Error::Malformed(_))), "cut at {cut}: {:?}", r.map(|_| ()));
    }
}

#[test]
fn flipped_payload_byte_fails_checksum() {
    let (_, index) = small_index(300, None);
    let bytes = to_bytes(&index);
    // well inside the vectors section, past the header
    for pos in [bytes.len() / 3, bytes.len() / 2, bytes.len() - 40] {
        let mut bad = bytes.clone();
        bad[pos] ^= 0x40;
        match from_bytes(&bad, false) {
            Err(e) => assert!(
                matches!(e, Error::ChecksumFailure(_) | Error::Malformed(_) | Error::Truncated),
                "byte {pos}: {e}"
            ),
            Ok(_) => panic!("corruption at byte {pos} went unnoticed"),
        }
    }
    let mut bad = bytes.clone();
    let mid = bytes.len() / 2;
    bad[mid] ^= 0x01;
    let err = from_bytes(&bad, false).expect_err("corruption detected");
    assert_eq!(err.code(), "checksum-failure", "{err}");
}
