//! Turns the k-NN graph into the hybrid index.
//!
//! Per node: count detourable routes, order neighbors by that count, run the
//! inner-product filter up to degree `d` while flagging keyword-unique
//! candidates, then concatenate `d/2` forward and `d/2` reverse neighbors.

use std::cmp::Ordering;

use crate::distance::{unit_score, unit_score_overlap};
use crate::error::Result;
use crate::index::{BuildParams, HybridIndex, KeywordRule};
use crate::knn::{build_knn_graph, by_similarity, KnnGraph, Neighbor};
use crate::logical::{self, EntityMap};
use crate::model::{DocumentStore, KnowledgeGraph};
use crate::par;

/// A neighbor of `u` that was not kept by the inner-product filter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PruneCandidate {
    pub id: u32,
    pub detour_count: u32,
    pub keyword_flag: bool,
    /// `IP(v, v)` under unit weights.
    pub self_ip: f64,
}

/// A neighbor annotated with its similarity to `u` and its detour count.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RankedNeighbor {
    pub id: u32,
    pub score: f64,
    pub detour_count: u32,
}

/// Detour counts from abstract distances. `dis_to_u[i]` is `dis(A, X_i)` and
/// `pair_dis(i, j)` is `dis(X_i, X_j)`. Route `A->X->Y` is detourable for
/// `A->Y` when `max(dis(A,X), dis(X,Y)) < dis(A,Y)`; only pairs with
/// `dis(A,X) <= dis(A,Y)` are examined.
pub fn count_detours_with(dis_to_u: &[f64], mut pair_dis: impl FnMut(usize, usize) -> f64) -> Vec<u32> {
    let k = dis_to_u.len();
    let mut counts = vec![0u32; k];
    for y in 0..k {
        for x in 0..k {
            if x == y || dis_to_u[x] > dis_to_u[y] {
                continue;
            }
            // strictness on dis(A,X) makes pair_dis unnecessary for ties
            if dis_to_u[x] < dis_to_u[y] && pair_dis(x, y) < dis_to_u[y] {
                counts[y] += 1;
            }
        }
    }
    counts
}

/// Exact detour counts over `u`'s k-NN list with `dis = -score`.
pub fn count_detourable_routes(list: &[Neighbor], store: &DocumentStore) -> Vec<u32> {
    let k = list.len();
    let dis: Vec<f64> = list.iter().map(|nb| -nb.score).collect();
    // pairwise distances among the list, each unordered pair scored once
    let mut pair = vec![0.0f64; k * k];
    for i in 0..k {
        let a = &store.doc(list[i].id).vector;
        for j in i + 1..k {
            let s = -unit_score(a, &store.doc(list[j].id).vector);
            pair[i * k + j] = s;
            pair[j * k + i] = s;
        }
    }
    count_detours_with(&dis, |x, y| pair[x * k + y])
}

/// Positions of `list` sorted by ascending detour count, then descending
/// similarity, then ascending id.
pub fn rng_order(list: &[Neighbor], counts: &[u32]) -> Vec<usize> {
    let mut pos: Vec<usize> = (0..list.len()).collect();
    pos.sort_by(|&a, &b| {
        counts[a].cmp(&counts[b]).then_with(|| by_similarity(list[a].score, list[a].id, list[b].score, list[b].id))
    });
    pos
}

/// Union-form keyword flag: true iff some term of `K(u) ∩ K(v)` is absent
/// from every keyword set in `retained`.
pub fn set_keyword_flag(u: u32, v: u32, retained: &[u32], store: &DocumentStore) -> bool {
    let shared = intersect_sorted(&store.doc(u).keywords, &store.doc(v).keywords);
    shared.iter().any(|t| retained.iter().all(|&w| !store.doc(w).has_keyword(*t)))
}

/// Per-neighbor keyword flag: true iff no single retained neighbor's keyword
/// set contains all of `K(u) ∩ K(v)`.
pub fn set_keyword_flag_exact(u: u32, v: u32, retained: &[u32], store: &DocumentStore) -> bool {
    let shared = intersect_sorted(&store.doc(u).keywords, &store.doc(v).keywords);
    if shared.is_empty() {
        return false;
    }
    !retained.iter().any(|&w| shared.iter().all(|t| store.doc(w).has_keyword(*t)))
}

pub(crate) fn intersect_sorted(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct IpFilterOutcome {
    /// Retained neighbors in RNG order; the first is always kept.
    pub retained: Vec<u32>,
    /// Rejected neighbors in RNG order with their keyword flags.
    pub pruned: Vec<PruneCandidate>,
}

/// Scans `ordered` and keeps `v` iff fewer than `d` are kept and
/// `IP(w, v) < IP(v, v)` for every kept `w`. The statistical intersections
/// computed alongside each `IP(w, v)` decide `v`'s keyword flag.
pub fn ip_filter_pass(
    u: u32,
    ordered: &[RankedNeighbor],
    d: usize,
    store: &DocumentStore,
    rule: KeywordRule,
) -> IpFilterOutcome {
    let mut out = IpFilterOutcome::default();
    let Some(first) = ordered.first() else {
        return out;
    };
    out.retained.push(first.id);
    let ku = &store.doc(u).keywords;
    let mut overlap = Vec::new();
    for cand in &ordered[1..] {
        let v = store.doc(cand.id);
        let self_ip = v.vector.squared_norm();
        let mut uncovered = intersect_sorted(ku, &v.keywords);
        let mut covered_by_one = false;
        let mut dominated = false;
        for &w in &out.retained {
            let wd = store.doc(w);
            overlap.clear();
            let ip = unit_score_overlap(&wd.vector, &v.vector, &mut overlap);
            if ip >= self_ip {
                dominated = true;
            }
            if uncovered.is_empty() {
                continue;
            }
            let shared_vw: &[u32] = if v.keywords_are_statistical() && wd.keywords_are_statistical() {
                &overlap
            } else {
                overlap = intersect_sorted(&v.keywords, &wd.keywords);
                &overlap
            };
            match rule {
                KeywordRule::Union => uncovered.retain(|t| shared_vw.binary_search(t).is_err()),
                KeywordRule::PerNeighbor => {
                    covered_by_one |= uncovered.iter().all(|t| shared_vw.binary_search(t).is_ok());
                }
            }
        }
        if out.retained.len() < d && !dominated {
            out.retained.push(cand.id);
        } else {
            let keyword_flag = match rule {
                KeywordRule::Union => !uncovered.is_empty(),
                KeywordRule::PerNeighbor => !uncovered.is_empty() && !covered_by_one,
            };
            out.pruned.push(PruneCandidate { id: cand.id, detour_count: cand.detour_count, keyword_flag, self_ip });
        }
    }
    out
}

/// Everything the per-node refinement produced, kept for the merge phase
/// and for auditing.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeRefinement {
    /// The full neighbor list in RNG order.
    pub ordered: Vec<RankedNeighbor>,
    pub retained: Vec<u32>,
    pub pruned: Vec<PruneCandidate>,
}

pub fn refine_node(list: &[Neighbor], d: usize, store: &DocumentStore, u: u32, rule: KeywordRule) -> NodeRefinement {
    let counts = count_detourable_routes(list, store);
    let ordered: Vec<RankedNeighbor> = rng_order(list, &counts)
        .into_iter()
        .map(|p| RankedNeighbor { id: list[p].id, score: list[p].score, detour_count: counts[p] })
        .collect();
    let IpFilterOutcome { retained, pruned } = ip_filter_pass(u, &ordered, d, store, rule);
    NodeRefinement { ordered, retained, pruned }
}

/// Reverse neighbors of every node: `w` such that `u` is in `retained(w)`,
/// sorted by the position of `u` in `retained(w)` and then by `w`.
pub(crate) fn reverse_lists(refined: &[NodeRefinement]) -> Vec<Vec<(usize, u32)>> {
    let mut rev: Vec<Vec<(usize, u32)>> = vec![Vec::new(); refined.len()];
    for (w, r) in refined.iter().enumerate() {
        for (pos, &u) in r.retained.iter().enumerate() {
            rev[u as usize].push((pos, w as u32));
        }
    }
    for list in &mut rev {
        list.sort_unstable();
    }
    rev
}

/// Assembles one semantic row: up to `d/2` retained forward neighbors, up to
/// `d/2` distinct reverse neighbors, then padding from the rest of the
/// retained list and the pruned list in RNG order. Returns the row and the
/// number of forward slots.
pub(crate) fn assemble_row(u: u32, r: &NodeRefinement, reverse: &[(usize, u32)], d: usize) -> (Vec<u32>, usize) {
    let half = d / 2;
    let mut row: Vec<u32> = r.retained.iter().copied().take(half).collect();
    let forward = row.len();
    let mut taken = 0;
    for &(_, w) in reverse {
        if taken == half {
            break;
        }
        if w != u && !row.contains(&w) {
            row.push(w);
            taken += 1;
        }
    }
    let pad = r.retained.iter().skip(half).copied().chain(r.pruned.iter().map(|p| p.id));
    for v in pad {
        if row.len() == d {
            break;
        }
        if !row.contains(&v) {
            row.push(v);
        }
    }
    (row, forward)
}

/// Semantic rows for every node (row-major `n * d`) and forward slot counts.
pub fn merge_reverse_edges(refined: &[NodeRefinement], d: usize) -> Result<(Vec<u32>, Vec<u32>)> {
    let n = refined.len();
    if n < d + 1 {
        return Err(crate::error::Error::CorpusTooSmall { n, d });
    }
    let reverse = reverse_lists(refined);
    let rows = par::map_range(n, |u| assemble_row(u as u32, &refined[u], &reverse[u], d));
    let mut flat = Vec::with_capacity(n * d);
    let mut forward = Vec::with_capacity(n);
    for (u, (row, f)) in rows.into_iter().enumerate() {
        if row.len() != d {
            return Err(crate::error::Error::Invariant(format!("node {u} has only {} semantic candidates", row.len())));
        }
        flat.extend(row);
        forward.push(f as u32);
    }
    Ok((flat, forward))
}

/// Flagged pruned neighbors not already among the semantic edges.
pub(crate) fn keyword_row(r: &NodeRefinement, semantic: &[u32]) -> Vec<u32> {
    r.pruned.iter().filter(|p| p.keyword_flag && !semantic.contains(&p.id)).map(|p| p.id).collect()
}

/// Intermediate products of a build.
#[derive(Clone, Debug)]
pub struct BuildTrace {
    pub knn: KnnGraph,
    pub refined: Vec<NodeRefinement>,
}

pub fn build_hybrid_index(
    store: DocumentStore,
    kg: Option<KnowledgeGraph>,
    params: BuildParams,
) -> Result<HybridIndex> {
    build_hybrid_index_traced(store, kg, params).map(|(idx, _)| idx)
}

pub fn build_hybrid_index_traced(
    store: DocumentStore,
    kg: Option<KnowledgeGraph>,
    params: BuildParams,
) -> Result<(HybridIndex, BuildTrace)> {
    params.validate(store.len())?;
    let d = params.degree;
    let knn = build_knn_graph(&store, params.knn_k, params.iterations, params.seed)?;
    let refined: Vec<NodeRefinement> =
        par::map_range(store.len(), |u| refine_node(knn.neighbors(u as u32), d, &store, u as u32, params.keyword_rule));
    let (semantic, forward_len) = merge_reverse_edges(&refined, d)?;
    let keyword_edges = par::map_range(store.len(), |u| keyword_row(&refined[u], &semantic[u * d..(u + 1) * d]));
    let entity_map = EntityMap::build(&store);
    let logical_edges = match &kg {
        Some(kg) => logical::derive_all(&store, kg, &entity_map, params.fanout_cap),
        None => vec![Vec::new(); store.len()],
    };
    let entry_order = HybridIndex::compute_entry_order(&store);
    let mut index = HybridIndex {
        store,
        params,
        semantic,
        bridge_len: vec![0; forward_len.len()],
        forward_len,
        keyword_edges,
        logical_edges,
        entity_map,
        kg,
        entry_order,
    };
    let bridges = index.repair_connectivity();
    log::debug!("connectivity repair added {bridges} bridges");
    if bridges > 0 {
        // evicted slots may hand flagged neighbors back to the keyword rows
        let semantic = &index.semantic;
        index.keyword_edges = par::map_range(index.len(), |u| keyword_row(&refined[u], &semantic[u * d..(u + 1) * d]));
    }
    Ok((index, BuildTrace { knn, refined }))
}
