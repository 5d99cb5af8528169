mod common;

use common::oracle_topk;
use hybrid_index::synth::{generate_queries, SynthConfig, SyntheticCorpus};
use hybrid_index::{
    build_hybrid_index, greedy_hybrid_search, greedy_hybrid_search_with, mark_delete, BuildParams, HybridIndex,
    KeywordMatch, QuerySpec, SearchOptions, Warning, Weights,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn setup(docs: usize, seed: u64) -> (SyntheticCorpus, HybridIndex) {
    let c = SyntheticCorpus::generate(SynthConfig { docs, entities: 50, seed, ..SynthConfig::default() });
    let p = BuildParams { degree: 16, knn_k: 32, seed, ..BuildParams::default() };
    let index = build_hybrid_index(c.store().unwrap(), None, p).unwrap();
    (c, index)
}

#[test]
fn top1_of_document_vectors_is_reachable() {
    let (c, index) = setup(2000, 21);
    let mut found = 0;
    let total = 400;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..total {
        let a = rng.random_range(0..c.docs.len());
        let q = QuerySpec::new(c.docs[a].vector.clone(), Weights::UNIT, 1, 64);
        let got = greedy_hybrid_search(&q, &index).unwrap().doc_ids();
        if got == oracle_topk(&q, index.store(), 1) {
            found += 1;
        }
    }
    assert!(found as f64 >= 0.95 * total as f64, "top-1 found for {found}/{total}");
}

#[test]
fn recall_does_not_fall_with_a_wider_beam() {
    let (c, index) = setup(1500, 22);
    let queries = generate_queries(&c, 40, None, 10, 16, 5);
    let mean = |beam: usize| {
        queries
            .iter()
            .map(|q| {
                let q = QuerySpec { beam_width: beam, ..q.clone() };
                let got = greedy_hybrid_search(&q, &index).unwrap().doc_ids();
                common::recall(&got, &oracle_topk(&q, index.store(), 10))
            })
            .sum::<f64>()
            / queries.len() as f64
    };
    let rs: Vec<f64> = [16, 32, 64, 128].iter().map(|&b| mean(b)).collect();
    for w in rs.windows(2) {
        assert!(w[1] + 0.01 >= w[0], "recall by beam {rs:?}");
    }
    assert!(rs[3] > 0.9, "{rs:?}");
}

#[test]
fn results_are_sorted_and_unique() {
    let (c, index) = setup(800, 23);
    for q in generate_queries(&c, 20, None, 10, 32, 6) {
        let r = greedy_hybrid_search(&q, &index).unwrap();
        assert_eq!(r.hits.len(), 10);
        for w in r.hits.windows(2) {
            assert!(w[0].score >= w[1].score);
        }
        let mut ids = r.doc_ids();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), 10);
    }
}

#[test]
fn deleted_documents_never_surface() {
    let (c, mut index) = setup(800, 24);
    let queries = generate_queries(&c, 30, None, 10, 64, 7);
    let before: Vec<Vec<u64>> = queries.iter().map(|q| greedy_hybrid_search(q, &index).unwrap().doc_ids()).collect();
    let victims: Vec<u64> = before.iter().map(|r| r[0]).collect();
    mark_delete(&mut index, &victims).unwrap();
    for q in &queries {
        let r = greedy_hybrid_search(q, &index).unwrap();
        assert_eq!(r.hits.len(), 10);
        assert!(r.doc_ids().iter().all(|id| !victims.contains(id)));
    }
    // deleted nodes still route: recall against the live oracle stays high
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
fn unknown_entities_fall_back_with_a_warning() {
    let (c, index) = setup(600, 25);
    let q =
        QuerySpec::new(c.docs[0].vector.clone(), Weights::new(1.0, 1.0, 1.0, 1.0), 10, 32).with_entities(vec![999_999]);
    let r = greedy_hybrid_search(&q, &index).unwrap();
    assert_eq!(r.warnings, vec![Warning::EntityFallback]);
    assert_eq!(r.hits.len(), 10);
    let plain = QuerySpec::new(c.docs[0].vector.clone(), Weights::UNIT, 10, 32);
    assert!(greedy_hybrid_search(&plain, &index).unwrap().warnings.is_empty());
}

#[test]
fn rare_keywords_report_a_shortfall() {
    let (c, index) = setup(600, 26);
    let holder = &c.docs[17];
    let terms = holder.keywords.clone();
    // every term of one document: almost surely nobody else has them all
    let q = QuerySpec::new(holder.vector.clone(), Weights::UNIT, 10, 64).with_keywords(terms.clone());
    let r = greedy_hybrid_search(&q, &index).unwrap();
    assert!(r.warnings.contains(&Warning::KeywordShortfall));
    assert!(r.doc_ids().contains(&holder.doc_id));
    for h in &r.hits {
        assert!(terms.iter().all(|t| index.store().doc(h.node).has_keyword(*t)));
    }
    // a term nobody holds yields an empty, warned result
    let q = QuerySpec::new(holder.vector.clone(), Weights::UNIT, 10, 64).with_keywords(vec![u32::MAX]);
    let r = greedy_hybrid_search(&q, &index).unwrap();
    assert!(r.hits.is_empty());
    assert!(r.warnings.contains(&Warning::KeywordShortfall));
}

#[test]
fn any_match_is_looser_than_all() {
    let (c, index) = setup(600, 27);
    let terms = vec![c.docs[3].keywords[0], c.docs[400].keywords[0]];
    let q = QuerySpec::new(c.docs[3].vector.clone(), Weights::UNIT, 10, 64).with_keywords(terms.clone());
    let all = greedy_hybrid_search_with(&q, &index, &SearchOptions::default()).unwrap().0;
    let opts = SearchOptions { keyword_match: KeywordMatch::Any, ..SearchOptions::default() };
    let any = greedy_hybrid_search_with(&q, &index, &opts).unwrap().0;
    assert!(any.hits.len() >= all.hits.len());
    for h in &any.hits {
        assert!(terms.iter().any(|t| index.store().doc(h.node).has_keyword(*t)));
    }
}

#[test]
fn invalid_queries_are_rejected() {
    let (c, index) = setup(300, 28);
    let v = c.docs[0].vector.clone();
    for q in [
        QuerySpec::new(v.clone(), Weights::UNIT, 0, 32),
        QuerySpec::new(v.clone(), Weights::UNIT, 10, 5),
        QuerySpec::new(v.clone(), Weights::new(-1.0, 1.0, 1.0, 0.0), 10, 32),
        QuerySpec::new(v.clone(), Weights::new(f32::NAN, 1.0, 1.0, 0.0), 10, 32),
    ] {
        assert!(greedy_hybrid_search(&q, &index).is_err(), "{q:?}");
    }
}
