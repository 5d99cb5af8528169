mod common;

use common::oracle_topk;
use hybrid_index::synth::{generate_queries, SynthConfig, SyntheticCorpus};
use hybrid_index::{
    build_hybrid_index, greedy_hybrid_search, insert_batch, mark_delete, BuildParams, DocumentRecord, Error,
    HybridIndex, KnowledgeGraph, Triplet,
};

fn params() -> BuildParams {
    BuildParams { degree: 12, knn_k: 24, seed: 4, ..BuildParams::default() }
}

fn split(total: usize, base: usize, kg: Option<KnowledgeGraph>) -> (SyntheticCorpus, HybridIndex, Vec<DocumentRecord>) {
    let c = SyntheticCorpus::generate(SynthConfig { docs: total, entities: 60, seed: 31, ..SynthConfig::default() });
    let store = hybrid_index::DocumentStore::new(c.docs[..base].to_vec()).unwrap();
    let index = build_hybrid_index(store, kg, params()).unwrap();
    let rest = c.docs[base..].to_vec();
    (c, index, rest)
}

#[test]
fn inserted_documents_are_indexed_and_findable() {
    let (c, mut index, rest) = split(900, 800, None);
    let report = insert_batch(&mut index, rest.clone()).unwrap();
    assert_eq!(report.inserted, 100);
    assert_eq!(index.len(), 900);
    index.check_invariants().unwrap();
    assert!(index.reachable_from_entries().iter().all(|&r| r));
    for doc in &rest {
        let node = index.store().node_of(doc.doc_id).unwrap();
        assert_eq!(index.semantic_edges(node).len(), index.degree());
    }
    let queries = generate_queries(&c, 40, None, 10, 64, 3);
    let mean: f64 = queries
        .iter()
        .map(|q| {
            common::recall(&greedy_hybrid_search(q, &index).unwrap().doc_ids(), &oracle_topk(q, index.store(), 10))
        })
        .sum::<f64>()
        / queries.len() as f64;
    assert!(mean > 0.85, "{mean}");
}

#[test]
fn single_document_insert() {
    let (_, mut index, rest) = split(401, 400, None);
    insert_batch(&mut index, rest).unwrap();
    index.check_invariants().unwrap();
    assert_eq!(index.len(), 401);
}

#[test]
fn empty_insert_changes_nothing() {
    let (_, mut index, _) = split(300, 300, None);
    let before = hybrid_index::persist::to_bytes(&index);
    assert_eq!(insert_batch(&mut index, Vec::new()).unwrap().inserted, 0);
    assert_eq!(hybrid_index::persist::to_bytes(&index), before);
}

#[test]
fn bad_batches_leave_the_index_untouched() {
    let (c, mut index, rest) = split(500, 400, None);
    let before = hybrid_index::persist::to_bytes(&index);
    let mut dup = rest.clone();
    dup.push(c.docs[0].clone());
    assert!(matches!(insert_batch(&mut index, dup), Err(Error::DuplicateId(_))));
    let mut wrong_dim = rest[0].clone();
    wrong_dim.vector = hybrid_index::FusedVector::new(
        hybrid_index::DenseVector::new(vec![1.0; 3]),
        wrong_dim.vector.learned().clone(),
        wrong_dim.vector.statistical().clone(),
    );
    assert!(matches!(insert_batch(&mut index, vec![wrong_dim]), Err(Error::DimensionMismatch { .. })));
    assert_eq!(hybrid_index::persist::to_bytes(&index), before);
}

#[test]
fn insertion_refreshes_logical_edges() {
    let kg = KnowledgeGraph::new((0..60).map(|e| Triplet { source: e, relation: 0, target: (e + 1) % 60 }).collect());
    let (_, mut index, rest) = split(500, 400, Some(kg));
    let report = insert_batch(&mut index, rest).unwrap();
    index.check_invariants().unwrap();
    assert!(report.logical_refreshed > 0);
}

#[test]
fn delete_is_a_flag_and_rejects_unknown_ids() {
    let (_, mut index, _) = split(300, 300, None);
    let edges: Vec<Vec<u32>> = (0..300).map(|u| index.semantic_edges(u).to_vec()).collect();
    assert_eq!(mark_delete(&mut index, &[5, 6]).unwrap(), 2);
    assert!(index.store().doc(index.store().node_of(5).unwrap()).deleted);
    for u in 0..300u32 {
        assert_eq!(index.semantic_edges(u), edges[u as usize].as_slice());
    }
    match mark_delete(&mut index, &[7, 123_456]) {
        Err(e @ Error::UnknownDocument(123_456)) => assert_eq!(e.code(), "unknown-id"),
        other => panic!("unexpected {other:?}"),
    }
    // the failed call deleted nothing
    assert!(!index.store().doc(index.store().node_of(7).unwrap()).deleted);
}
