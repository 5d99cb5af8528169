//! Independent oracles shared by the integration tests. Nothing here calls the
//! library's scoring code.

#![allow(dead_code)]

use std::collections::HashMap;

use hybrid_index::{DocumentStore, FusedVector, QuerySpec, SparseVector};

pub fn dense_oracle(a: &FusedVector, b: &FusedVector) -> f64 {
    let mut acc = 0.0;
    for i in 0..a.dense().len() {
        acc += a.dense().as_slice()[i] as f64 * b.dense().as_slice()[i] as f64;
    }
    acc
}

/// Hash-lookup sparse inner product, visiting `a` in index order.
pub fn sparse_oracle(a: &SparseVector, b: &SparseVector) -> f64 {
    let lookup: HashMap<u32, f32> = b.iter().collect();
    a.iter().filter_map(|(i, v)| lookup.get(&i).map(|w| v as f64 * *w as f64)).sum()
}

/// Per-path similarities `[dense, learned, statistical]`.
pub fn path_sims(a: &FusedVector, b: &FusedVector) -> [f64; 3] {
    [dense_oracle(a, b), sparse_oracle(a.learned(), b.learned()), sparse_oracle(a.statistical(), b.statistical())]
}

pub fn unit_oracle(a: &FusedVector, b: &FusedVector) -> f64 {
    let s = path_sims(a, b);
    s[0] + s[1] + s[2]
}

pub fn weighted_oracle(q: &QuerySpec, doc: &FusedVector) -> f64 {
    let s = path_sims(&q.vector, doc);
    let w = q.weights;
    w.dense as f64 * s[0] + w.learned as f64 * s[1] + w.statistical as f64 * s[2]
}

/// Exhaustive top-k doc ids: live documents holding every required keyword,
/// by descending weighted similarity, ties by ascending node.
pub fn oracle_topk(q: &QuerySpec, store: &DocumentStore, k: usize) -> Vec<u64> {
    let mut all: Vec<(f64, u32)> = (0..store.len() as u32)
        .filter(|&u| {
            let d = store.doc(u);
            !d.deleted && q.required_keywords.iter().all(|t| d.keywords.contains(t))
        })
        .map(|u| (weighted_oracle(q, &store.doc(u).vector), u))
        .collect();
    all.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    all.into_iter().take(k).map(|(_, u)| store.doc(u).doc_id).collect()
}

pub fn recall(result: &[u64], truth: &[u64]) -> f64 {
    if truth.is_empty() {
        return 1.0;
    }
    let hit = truth.iter().filter(|t| result.contains(t)).count();
    hit as f64 / truth.len() as f64
}

/// DCG written out term by term.
pub fn ndcg_oracle(result: &[u64], gains: &HashMap<u64, f64>, k: usize) -> f64 {
    let mut dcg = 0.0;
    for (i, d) in result.iter().take(k).enumerate() {
        dcg += gains.get(d).copied().unwrap_or(0.0) / (i as f64 + 2.0).log2();
    }
    let mut ideal: Vec<f64> = gains.values().copied().filter(|g| *g > 0.0).collect();
    ideal.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut idcg = 0.0;
    for (i, g) in ideal.iter().take(k).enumerate() {
        idcg += g / (i as f64 + 2.0).log2();
    }
    if idcg == 0.0 {
        0.0
    } else {
        dcg / idcg
    }
}
