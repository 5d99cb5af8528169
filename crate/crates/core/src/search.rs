//! Weighted greedy beam search over the hybrid index.
//!
//! Semantic edges are always followed. Keyword edges are loaded only at nodes
//! sharing a required keyword, and logical edges only at nodes annotated with
//! a query-related entity within the hop cutoff. Nodes reached through an
//! entity relation get their distance reduced by `w_k / hop`.

use std::collections::{BTreeSet, HashMap};
use std::time::{Duration, Instant};

use crate::distance::{batch_scores, query_score};
use crate::error::Result;
use crate::index::HybridIndex;
use crate::model::{build_query_vector, FusedVector, QuerySpec, Weights};
use crate::par;

/// Number of smallest-norm entry points used without entity seeds.
pub const DEFAULT_ENTRY_POINTS: usize = 32;

/// How the final filter treats required keywords.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum KeywordMatch {
    /// Every required term must be present.
    #[default]
    All,
    /// At least one required term must be present.
    Any,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchOptions {
    pub entry_points: usize,
    pub keyword_match: KeywordMatch,
    /// Let mark-deleted nodes into results (used for insertion lookups).
    pub include_deleted: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { entry_points: DEFAULT_ENTRY_POINTS, keyword_match: KeywordMatch::All, include_deleted: false }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Warning {
    /// Entity seeding found no matching node; norm-based seeds were used.
    EntityFallback,
    /// Fewer than `k` documents satisfied the keyword filter.
    KeywordShortfall,
}

impl Warning {
    pub fn code(self) -> &'static str {
        match self {
            Warning::EntityFallback => "entity-fallback",
            Warning::KeywordShortfall => "keyword-shortfall",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hit {
    pub node: u32,
    pub doc_id: u64,
    /// Similarity including any hop reward (the negated adjusted distance).
    pub score: f64,
    pub hop: Option<u32>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SearchResult {
    pub hits: Vec<Hit>,
    pub warnings: Vec<Warning>,
    /// Nodes whose neighbor lists were expanded.
    pub expanded: usize,
    /// Distance evaluations performed.
    pub scored: usize,
}

impl SearchResult {
    pub fn doc_ids(&self) -> Vec<u64> {
        self.hits.iter().map(|h| h.doc_id).collect()
    }

    pub fn nodes(&self) -> Vec<u32> {
        self.hits.iter().map(|h| h.node).collect()
    }
}

/// Per-node traversal annotations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodeState {
    pub visited: bool,
    pub hop: Option<u32>,
    pub ent: Option<u32>,
    pub raw_dis: f64,
    pub adjusted_dis: f64,
}

#[derive(Clone, Debug, Default)]
pub struct TraversalState {
    nodes: HashMap<u32, NodeState>,
}

impl TraversalState {
    pub fn get(&self, node: u32) -> Option<&NodeState> {
        self.nodes.get(&node)
    }

    pub fn touched(&self) -> usize {
        self.nodes.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &NodeState)> {
        self.nodes.iter().map(|(k, v)| (*k, v))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct PoolEntry {
    dis: f64,
    id: u32,
    expanded: bool,
}

#[inline]
fn closer(a: (f64, u32), b: (f64, u32)) -> bool {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).is_lt()
}

/// Beam pool, bounded top-k, and the secondary pool of keyword-sharing
/// nodes that fell out of the top-k.
#[derive(Clone, Debug)]
pub struct TwinPools {
    cand: Vec<PoolEntry>,
    topk: Vec<(f64, u32)>,
    kw_cand: BTreeSet<u32>,
    beam: usize,
    k: usize,
}

impl TwinPools {
    pub fn new(k: usize, beam: usize) -> Self {
        TwinPools {
            cand: Vec::with_capacity(beam + 1),
            topk: Vec::with_capacity(k + 1),
            kw_cand: BTreeSet::new(),
            beam,
            k,
        }
    }

    /// Inserts into the beam if there is room or `dis` beats its worst entry.
    fn admit(&mut self, id: u32, dis: f64) -> bool {
        if self.cand.len() >= self.beam {
            let worst = self.cand.last().expect("beam is non-empty");
            if !closer((dis, id), (worst.dis, worst.id)) {
                return false;
            }
        }
        let pos = self.cand.partition_point(|e| closer((e.dis, e.id), (dis, id)));
        self.cand.insert(pos, PoolEntry { dis, id, expanded: false });
        self.cand.truncate(self.beam);
        true
    }

    /// Pushes into the top-k; whatever falls out (or never gets in) and
    /// shares a required keyword goes to the secondary pool.
    fn offer(&mut self, id: u32, dis: f64, shares_keyword: impl Fn(u32) -> bool) {
        let pos = self.topk.partition_point(|&e| closer(e, (dis, id)));
        if pos >= self.k {
            if shares_keyword(id) {
                self.kw_cand.insert(id);
            }
            return;
        }
        self.topk.insert(pos, (dis, id));
        if self.topk.len() > self.k {
            let (_, m) = self.topk.pop().expect("over capacity");
            if shares_keyword(m) {
                self.kw_cand.insert(m);
            }
        }
    }

    fn withdraw(&mut self, id: u32) {
        if let Some(p) = self.cand.iter().position(|e| e.id == id && !e.expanded) {
            self.cand.remove(p);
        }
        if let Some(p) = self.topk.iter().position(|e| e.1 == id) {
            self.topk.remove(p);
        }
        self.kw_cand.remove(&id);
    }

    fn next_unexpanded(&mut self) -> Option<u32> {
        let e = self.cand.iter_mut().find(|e| !e.expanded)?;
        e.expanded = true;
        Some(e.id)
    }

    pub fn topk(&self) -> impl Iterator<Item = u32> + '_ {
        self.topk.iter().map(|e| e.1)
    }

    pub fn kw_cand(&self) -> impl Iterator<Item = u32> + '_ {
        self.kw_cand.iter().copied()
    }

    pub fn beam_len(&self) -> usize {
        self.cand.len()
    }
}

/// Seed set for one query: node, entity annotation.
#[derive(Clone, Debug, PartialEq)]
pub struct EntrySeeds {
    pub seeds: Vec<(u32, Option<u32>)>,
    pub fallback: bool,
}

/// Entity seeds (every node holding a query entity, hop 0) when the query
/// carries entities and a positive hop weight; otherwise the smallest-norm
/// nodes.
pub fn select_entry_points(q: &QuerySpec, index: &HybridIndex, count: usize) -> EntrySeeds {
    if q.weights.knowledge > 0.0 && !q.entities.is_empty() {
        let mut seeds: Vec<(u32, Option<u32>)> = Vec::new();
        for &e in &q.entities {
            for &node in index.entity_map().nodes(e) {
                seeds.push((node, Some(e)));
            }
        }
        // query entities are sorted, so a stable sort keeps the smallest
        // matching entity first for each node
        seeds.sort_by_key(|s| s.0);
        seeds.dedup_by_key(|s| s.0);
        if !seeds.is_empty() {
            return EntrySeeds { seeds, fallback: false };
        }
        let seeds = index.norm_entry_points(count).iter().map(|&n| (n, None)).collect();
        return EntrySeeds { seeds, fallback: true };
    }
    EntrySeeds { seeds: index.norm_entry_points(count).iter().map(|&n| (n, None)).collect(), fallback: false }
}

fn shares_any(keywords: &[u32], required: &[u32]) -> bool {
    !required.is_empty() && required.iter().any(|t| keywords.binary_search(t).is_ok())
}

fn contains_all(keywords: &[u32], required: &[u32]) -> bool {
    required.iter().all(|t| keywords.binary_search(t).is_ok())
}

/// Smallest entity of `node` related to `from` in the knowledge graph.
fn related_entity(index: &HybridIndex, node: u32, from: u32) -> Option<u32> {
    let kg = index.knowledge_graph()?;
    index.store().doc(node).entities.iter().copied().find(|&e| e != from && kg.are_related(from, e))
}

pub fn greedy_hybrid_search(q: &QuerySpec, index: &HybridIndex) -> Result<SearchResult> {
    greedy_hybrid_search_with(q, index, &SearchOptions::default()).map(|(r, _, _)| r)
}

/// Full search returning the result together with the pools and traversal
/// annotations it produced.
pub fn greedy_hybrid_search_with(
    q: &QuerySpec,
    index: &HybridIndex,
    opts: &SearchOptions,
) -> Result<(SearchResult, TwinPools, TraversalState)> {
    let store = index.store();
    store.check_query(q)?;
    let wq = build_query_vector(&q.vector, &q.weights)?;
    let w_k = q.weights.knowledge as f64;
    let reward = |hop: Option<u32>| match hop {
        Some(h) if h >= 1 && w_k > 0.0 => w_k / h as f64,
        _ => 0.0,
    };
    let required = &q.required_keywords;
    let deleted = |n: u32| !opts.include_deleted && store.doc(n).deleted;
    let kw_of = |n: u32| shares_any(&store.doc(n).keywords, required) && !deleted(n);

    let mut pools = TwinPools::new(q.k, q.beam_width);
    let mut state = TraversalState::default();
    let mut result = SearchResult::default();

    let entry = select_entry_points(q, index, opts.entry_points);
    if entry.fallback {
        result.warnings.push(Warning::EntityFallback);
    }
    let seed_ids: Vec<u32> = entry.seeds.iter().map(|s| s.0).collect();
    let seed_scores = batch_scores(&wq, &seed_ids, store)?;
    result.scored += seed_ids.len();
    for (&(node, ent), score) in entry.seeds.iter().zip(seed_scores) {
        let dis = score.distance();
        let hop = ent.map(|_| 0);
        state.nodes.insert(node, NodeState { visited: false, hop, ent, raw_dis: dis, adjusted_dis: dis });
        pools.admit(node, dis);
        if !deleted(node) {
            pools.offer(node, dis, kw_of);
        }
    }

    let mut frontier: Vec<u32> = Vec::new();
    while let Some(u) = pools.next_unexpanded() {
        result.expanded += 1;
        let us = *state.nodes.get(&u).expect("pooled nodes have state");
        if let Some(s) = state.nodes.get_mut(&u) {
            s.visited = true;
        }
        let doc_u = store.doc(u);
        frontier.clear();
        frontier.extend_from_slice(index.semantic_edges(u));
        if shares_any(&doc_u.keywords, required) {
            frontier.extend_from_slice(index.keyword_edges(u));
        }
        let hop_source = match (us.ent, us.hop) {
            (Some(e), Some(h)) if h < q.max_hops => Some((e, h)),
            _ => None,
        };
        if let Some((e, _)) = hop_source {
            frontier.extend(index.logical_edges_from(u, e).iter().map(|le| le.node));
        }
        for &o in &frontier {
            let annotated = hop_source.and_then(|(e, h)| related_entity(index, o, e).map(|oe| (oe, h + 1)));
            match state.nodes.get_mut(&o) {
                Some(s) => {
                    // a shorter hop path improves an unexpanded node's reward
                    let Some((oe, oh)) = annotated else { continue };
                    if s.visited || s.hop.is_some_and(|h| h <= oh) {
                        continue;
                    }
                    s.hop = Some(oh);
                    s.ent = Some(oe);
                    s.adjusted_dis = s.raw_dis - reward(Some(oh));
                    let dis = s.adjusted_dis;
                    pools.withdraw(o);
                    pools.admit(o, dis);
                    if !deleted(o) {
                        pools.offer(o, dis, kw_of);
                    }
                }
                None => {
                    let raw = -query_score(&wq, &store.doc(o).vector);
                    result.scored += 1;
                    let (ent, hop) = match annotated {
                        Some((oe, oh)) => (Some(oe), Some(oh)),
                        None => (None, None),
                    };
                    let dis = raw - reward(hop);
                    state.nodes.insert(o, NodeState { visited: false, hop, ent, raw_dis: raw, adjusted_dis: dis });
                    pools.admit(o, dis);
                    if !deleted(o) {
                        pools.offer(o, dis, kw_of);
                    }
                }
            }
        }
    }

    let (hits, shortfall) = keyword_postfilter(&pools, &state, index, required, q.k, opts);
    if shortfall {
        result.warnings.push(Warning::KeywordShortfall);
    }
    result.hits = hits;
    Ok((result, pools, state))
}

/// Final assembly: with no required keywords the top-k is returned as is;
/// otherwise top-k and the secondary pool are merged, filtered, ordered by
/// adjusted distance and truncated. Returns the hits and whether fewer than
/// `k` documents qualified.
pub fn keyword_postfilter(
    pools: &TwinPools,
    state: &TraversalState,
    index: &HybridIndex,
    required: &[u32],
    k: usize,
    opts: &SearchOptions,
) -> (Vec<Hit>, bool) {
    let store = index.store();
    let hit = |n: u32| {
        let s = state.get(n).expect("pooled nodes have state");
        Hit { node: n, doc_id: store.doc(n).doc_id, score: -s.adjusted_dis, hop: s.hop }
    };
    let keep_deleted = |n: &u32| opts.include_deleted || !store.doc(*n).deleted;
    if required.is_empty() {
        let hits: Vec<Hit> = pools.topk().filter(keep_deleted).map(hit).collect();
        return (hits, false);
    }
    let mut pool: Vec<u32> = pools.topk().chain(pools.kw_cand()).filter(keep_deleted).collect();
    pool.sort_unstable();
    pool.dedup();
    pool.retain(|&n| {
        let kw = &store.doc(n).keywords;
        match opts.keyword_match {
            KeywordMatch::All => contains_all(kw, required),
            KeywordMatch::Any => shares_any(kw, required),
        }
    });
    let mut hits: Vec<Hit> = pool.into_iter().map(hit).collect();
    hits.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.node.cmp(&b.node)));
    hits.truncate(k);
    let shortfall = hits.len() < k;
    (hits, shortfall)
}

/// Approximate k-NN of an arbitrary vector over semantic edges under unit
/// weights, deleted nodes included. Used by insertion.
pub(crate) fn semantic_neighbors(
    index: &HybridIndex,
    vector: &FusedVector,
    k: usize,
    beam: usize,
) -> Result<Vec<(u32, f64)>> {
    let q = QuerySpec::new(vector.clone(), Weights::UNIT, k, beam.max(k));
    let opts = SearchOptions { include_deleted: true, ..SearchOptions::default() };
    let (res, _, _) = greedy_hybrid_search_with(&q, index, &opts)?;
    Ok(res.hits.into_iter().map(|h| (h.node, h.score)).collect())
}

#[derive(Debug)]
pub struct BatchReport {
    pub results: Vec<Result<SearchResult>>,
    pub elapsed: Duration,
    /// Undefined for an empty batch.
    pub qps: Option<f64>,
}

impl BatchReport {
    pub fn mean_latency(&self) -> Option<Duration> {
        (!self.results.is_empty()).then(|| self.elapsed / self.results.len() as u32)
    }
}

/// Runs queries in parallel; each result equals its serial execution.
pub fn batch_query(queries: &[QuerySpec], index: &HybridIndex, opts: &SearchOptions) -> BatchReport {
    let start = Instant::now();
    let results = par::map_slice(queries, |q| greedy_hybrid_search_with(q, index, opts).map(|(r, _, _)| r));
    let elapsed = start.elapsed();
    let qps = (!queries.is_empty()).then(|| queries.len() as f64 / elapsed.as_secs_f64().max(1e-9));
    BatchReport { results, elapsed, qps }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn topk_eviction_feeds_secondary_pool() {
        let mut p = TwinPools::new(2, 4);
        let kw = |n: u32| n % 2 == 1;
        for (id, dis) in [(1u32, 3.0), (2, 2.0), (4, 1.0), (3, 5.0)] {
            p.admit(id, dis);
            p.offer(id, dis, kw);
        }
        assert_eq!(p.topk().collect::<Vec<_>>(), vec![4, 2]);
        assert_eq!(p.kw_cand().collect::<Vec<_>>(), vec![1, 3]);
    }

    #[test]
    fn beam_is_bounded_and_ordered() {
        let mut p = TwinPools::new(1, 3);
        for (id, dis) in [(0u32, 4.0), (1, 3.0), (2, 2.0), (3, 1.0)] {
            p.admit(id, dis);
        }
        assert_eq!(p.beam_len(), 3);
        assert!(!p.admit(9, 10.0));
        assert_eq!(p.next_unexpanded(), Some(3));
        assert_eq!(p.next_unexpanded(), Some(2));
    }
}
