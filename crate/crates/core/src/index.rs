//! The hybrid index: fixed-degree semantic edges, recycled keyword edges and
//! knowledge-graph logical edges over one document store.

use std::collections::BTreeMap;

use crate::distance::unit_score;
use crate::error::{Error, Result};
use crate::knn::{DEFAULT_ITERATIONS, DEFAULT_KNN_K};
use crate::logical::{EntityMap, LogicalEdge, DEFAULT_FANOUT_CAP};
use crate::model::{DocumentStore, KnowledgeGraph, DEFAULT_MAX_HOPS};
use crate::par;
use crate::search::{semantic_neighbors, DEFAULT_ENTRY_POINTS};

pub const DEFAULT_DEGREE: usize = 32;

/// Beam width of the searches that choose connectivity bridges.
const REPAIR_BEAM: usize = 64;

/// Bridges added per unreachable component in one repair round.
const BRIDGES_PER_COMPONENT: usize = 8;
/// Search hits considered as the head of a connectivity bridge.
const HEAD_CANDIDATES: usize = 8;
const NAVIGATION_K: usize = 10;
const NAVIGATION_ROUNDS: usize = 4;

/// Which predicate decides that a pruned neighbor is kept as a keyword edge.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum KeywordRule {
    /// Flag when some shared term of `u` and `v` appears in no retained
    /// neighbor's keyword set.
    #[default]
    Union,
    /// Flag when no single retained neighbor covers all shared terms.
    PerNeighbor,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BuildParams {
    /// Length of the initial k-NN lists.
    pub knn_k: usize,
    pub iterations: usize,
    /// Semantic out-degree; must be even.
    pub degree: usize,
    pub seed: u64,
    pub keyword_rule: KeywordRule,
    /// Max logical edges stored per (node, source entity).
    pub fanout_cap: usize,
    /// Default hop cutoff recorded with the index.
    pub max_hops: u32,
}

impl Default for BuildParams {
    fn default() -> Self {
        BuildParams {
            knn_k: DEFAULT_KNN_K,
            iterations: DEFAULT_ITERATIONS,
            degree: DEFAULT_DEGREE,
            seed: 0,
            keyword_rule: KeywordRule::Union,
            fanout_cap: DEFAULT_FANOUT_CAP,
            max_hops: DEFAULT_MAX_HOPS,
        }
    }
}

impl BuildParams {
    pub fn validate(&self, n: usize) -> Result<()> {
        let d = self.degree;
        if !d.is_multiple_of(2) {
            return Err(Error::DegreeNotEven(d));
        }
        if d == 0 {
            return Err(Error::InvalidParameter("degree must be positive".into()));
        }
        if self.knn_k < d {
            return Err(Error::InvalidParameter(format!("knn k = {} must be at least degree {d}", self.knn_k)));
        }
        if self.fanout_cap == 0 {
            return Err(Error::InvalidParameter("fanout cap must be positive".into()));
        }
        if n < d + 1 {
            return Err(Error::CorpusTooSmall { n, d });
        }
        if n <= self.knn_k {
            return Err(Error::CorpusTooSmall { n, d: self.knn_k });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HybridIndex {
    pub(crate) store: DocumentStore,
    pub(crate) params: BuildParams,
    /// Row-major `n * degree` semantic edges.
    pub(crate) semantic: Vec<u32>,
    /// Leading slots of each row that came from the node's own pruned list;
    /// the rest are reverse or padding slots.
    pub(crate) forward_len: Vec<u32>,
    /// Trailing slots of each row holding connectivity bridges.
    pub(crate) bridge_len: Vec<u32>,
    pub(crate) keyword_edges: Vec<Vec<u32>>,
    /// Per node, sorted by source entity.
    pub(crate) logical_edges: Vec<Vec<LogicalEdge>>,
    pub(crate) entity_map: EntityMap,
    pub(crate) kg: Option<KnowledgeGraph>,
    /// Node ids by ascending squared norm, ties by id.
    pub(crate) entry_order: Vec<u32>,
}

impl HybridIndex {
    pub fn store(&self) -> &DocumentStore {
        &self.store
    }

    pub fn params(&self) -> &BuildParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.store.len()
    }

    pub fn is_empty(&self) -> bool {
        self.store.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.params.degree
    }

    pub fn semantic_edges(&self, u: u32) -> &[u32] {
        let d = self.params.degree;
        &self.semantic[u as usize * d..(u as usize + 1) * d]
    }

    pub fn forward_len(&self, u: u32) -> usize {
        self.forward_len[u as usize] as usize
    }

    pub fn bridge_len(&self, u: u32) -> usize {
        self.bridge_len[u as usize] as usize
    }

    /// Slots of `u`'s row that insertion may rewire: neither forward
    /// neighbors nor bridges.
    pub(crate) fn replaceable_slots(&self, u: u32) -> std::ops::Range<usize> {
        self.forward_len(u)..self.params.degree - self.bridge_len(u)
    }

    pub fn keyword_edges(&self, u: u32) -> &[u32] {
        &self.keyword_edges[u as usize]
    }

    pub fn logical_edges(&self, u: u32) -> &[LogicalEdge] {
        &self.logical_edges[u as usize]
    }

    /// Logical edges of `u` whose source entity is `source`.
    pub fn logical_edges_from(&self, u: u32, source: u32) -> &[LogicalEdge] {
        let edges = &self.logical_edges[u as usize];
        let lo = edges.partition_point(|e| e.source < source);
        let hi = edges.partition_point(|e| e.source <= source);
        &edges[lo..hi]
    }

    pub fn entity_map(&self) -> &EntityMap {
        &self.entity_map
    }

    pub fn knowledge_graph(&self) -> Option<&KnowledgeGraph> {
        self.kg.as_ref()
    }

    /// The `count` nodes with the smallest squared norm.
    pub fn norm_entry_points(&self, count: usize) -> &[u32] {
        &self.entry_order[..count.min(self.entry_order.len())]
    }

    pub(crate) fn compute_entry_order(store: &DocumentStore) -> Vec<u32> {
        let mut order: Vec<u32> = (0..store.len() as u32).collect();
        order.sort_by(|&a, &b| {
            store.doc(a).vector.squared_norm().total_cmp(&store.doc(b).vector.squared_norm()).then(a.cmp(&b))
        });
        order
    }

    /// Nodes reachable from the default entry set over semantic edges.
    pub fn reachable_from_entries(&self) -> Vec<bool> {
        let mut seen = vec![false; self.len()];
        let mut stack: Vec<u32> = self.norm_entry_points(DEFAULT_ENTRY_POINTS).to_vec();
        for &s in &stack {
            seen[s as usize] = true;
        }
        self.flood(&mut seen, &mut stack);
        seen
    }

    fn flood(&self, seen: &mut [bool], stack: &mut Vec<u32>) {
        while let Some(u) = stack.pop() {
            for &v in self.semantic_edges(u) {
                if !seen[v as usize] {
                    seen[v as usize] = true;
                    stack.push(v);
                }
            }
        }
    }

    /// Makes every node reachable from the default entry set. For the
    /// component of the smallest unreached id, up to [`BRIDGES_PER_COMPONENT`]
    /// of its largest-norm members each get an in-edge from the best result
    /// of a unit-weight search for that member, so the bridge sits where
    /// greedy search for similar queries ends up. The head gives up the
    /// non-forward slot whose target has the highest in-degree, ties to the
    /// later slot. Returns the number of bridges added.
    pub(crate) fn repair_connectivity(&mut self) -> usize {
        let mut in_degree = vec![0u32; self.len()];
        self.semantic.iter().for_each(|&v| in_degree[v as usize] += 1);
        let mut bridges = self.bridge_components(&mut in_degree);
        let nav = self.repair_navigability(&mut in_degree);
        if nav > 0 {
            // an evicted target may have lost its only in-edge
            bridges += self.bridge_components(&mut in_degree);
        }
        bridges + nav
    }

    fn bridge_components(&mut self, in_degree: &mut [u32]) -> usize {
        let n = self.len();
        let mut seen = self.reachable_from_entries();
        let mut bridges = 0;
        while let Some(x) = seen.iter().position(|s| !s) {
            let mut members = self.component_of(x as u32, &seen);
            members.sort_by(|&a, &b| {
                let (na, nb) = (self.store.doc(a).vector.squared_norm(), self.store.doc(b).vector.squared_norm());
                nb.total_cmp(&na).then(a.cmp(&b))
            });
            members.truncate(BRIDGES_PER_COMPONENT);
            // all heads are found before any bridge changes the graph
            let heads: Vec<Vec<u32>> = par::map_slice(&members, |&m| {
                semantic_neighbors(self, &self.store.doc(m).vector, HEAD_CANDIDATES, REPAIR_BEAM)
                    .map(|hits| hits.into_iter().map(|h| h.0).filter(|&r| seen[r as usize]).collect())
                    .unwrap_or_default()
            });
            let before = bridges;
            for (&m, cands) in members.iter().zip(heads) {
                // best hit with a free replaceable slot, else the best hit
                // that can give up a forward slot
                let free = cands.iter().copied().find(|&r| !self.replaceable_slots(r).is_empty());
                let added = match free {
                    Some(r) => self.add_bridge(r, m, in_degree, false),
                    None => cands.iter().any(|&r| self.add_bridge(r, m, in_degree, true)),
                };
                let added = added || self.bridge_from_most_similar(m, &seen, in_degree);
                bridges += usize::from(added);
            }
            if bridges == before || bridges > n {
                log::warn!("connectivity repair stopped with unreachable nodes left");
                break;
            }
            // a displaced target may have lost its only in-edge
            seen = self.reachable_from_entries();
        }
        bridges
    }

    /// Exhaustive fallback: the reached node most similar to `m` that still
    /// has a non-bridge slot.
    fn bridge_from_most_similar(&mut self, m: u32, seen: &[bool], in_degree: &mut [u32]) -> bool {
        let d = self.params.degree;
        let target = &self.store.doc(m).vector;
        let best = (0..self.len() as u32)
            .filter(|&r| seen[r as usize] && self.bridge_len(r) < d)
            .map(|r| (unit_score(&self.store.doc(r).vector, target), r))
            .max_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));
        best.is_some_and(|(_, r)| self.add_bridge(r, m, in_degree, true))
    }

    /// Rounds of self-searches: a node missing from the top
    /// [`NAVIGATION_K`] of a unit-weight search for its own vector gets a
    /// bridge from the search's best hit. Each head takes at most one bridge
    /// per round, for its most similar lost node, and keeps at least half its
    /// row replaceable.
    fn repair_navigability(&mut self, in_degree: &mut [u32]) -> usize {
        let n = self.len();
        let mut bridges = 0;
        for _ in 0..NAVIGATION_ROUNDS {
            let lost: Vec<Option<(u32, f64)>> = par::map_range(n, |m| {
                let hits =
                    semantic_neighbors(self, &self.store.doc(m as u32).vector, NAVIGATION_K, REPAIR_BEAM).ok()?;
                if hits.iter().any(|h| h.0 == m as u32) {
                    return None;
                }
                let head = hits.first()?.0;
                Some((head, unit_score(&self.store.doc(head).vector, &self.store.doc(m as u32).vector)))
            });
            let mut best: BTreeMap<u32, (f64, u32)> = BTreeMap::new();
            for (m, entry) in lost.iter().enumerate() {
                let Some((head, score)) = *entry else { continue };
                let e = best.entry(head).or_insert((score, m as u32));
                if score > e.0 {
                    *e = (score, m as u32);
                }
            }
            let before = bridges;
            for (head, (_, m)) in best {
                if self.bridge_len[head as usize] as usize * 2 < self.params.degree {
                    bridges += usize::from(self.add_bridge(head, m, in_degree, false));
                }
            }
            log::debug!("navigability round: {} lost, {} bridges", lost.iter().flatten().count(), bridges - before);
            if bridges == before {
                break;
            }
        }
        bridges
    }

    /// Puts `m` into the protected tail of `r`'s row, evicting the
    /// replaceable slot whose target has the highest in-degree (ties to the
    /// later slot). With `forward` set and no replaceable slot left, a
    /// forward slot is evicted instead and the forward prefix shrinks.
    fn add_bridge(&mut self, r: u32, m: u32, in_degree: &mut [u32], forward: bool) -> bool {
        let d = self.params.degree;
        let mut slots = self.replaceable_slots(r);
        if slots.is_empty() && forward {
            slots = 0..slots.end;
        }
        if slots.is_empty() || r == m {
            return false;
        }
        let tail = slots.end - 1;
        let row = &mut self.semantic[r as usize * d..(r as usize + 1) * d];
        if row.contains(&m) {
            return false;
        }
        let Some(slot) = slots.max_by_key(|&s| in_degree[row[s] as usize]) else { return false };
        in_degree[row[slot] as usize] -= 1;
        row[slot] = row[tail];
        row[tail] = m;
        let fwd = &mut self.forward_len[r as usize];
        *fwd = (*fwd).min(tail as u32);
        self.bridge_len[r as usize] += 1;
        in_degree[m as usize] += 1;
        self.keyword_edges[r as usize].retain(|&v| v != m);
        true
    }

    /// Unreached nodes reachable from `x` without passing a reached node.
    fn component_of(&self, x: u32, seen: &[bool]) -> Vec<u32> {
        let mut local = seen.to_vec();
        local[x as usize] = true;
        let mut stack = vec![x];
        let mut out = vec![x];
        while let Some(u) = stack.pop() {
            for &v in self.semantic_edges(u) {
                if !local[v as usize] {
                    local[v as usize] = true;
                    out.push(v);
                    stack.push(v);
                }
            }
        }
        out
    }

    pub fn logical_edge_count(&self) -> usize {
        self.logical_edges.iter().map(Vec::len).sum()
    }

    pub fn keyword_edge_count(&self) -> usize {
        self.keyword_edges.iter().map(Vec::len).sum()
    }

    /// Structural scan: degree exactness, no self-loops or duplicate semantic
    /// edges, keyword/semantic disjointness, logical-edge soundness, and
    /// entity-map exactness.
    pub fn check_invariants(&self) -> Result<()> {
        let n = self.len();
        let d = self.params.degree;
        if self.semantic.len() != n * d
            || self.forward_len.len() != n
            || self.bridge_len.len() != n
            || self.keyword_edges.len() != n
            || self.logical_edges.len() != n
            || self.entry_order.len() != n
        {
            return Err(Error::Invariant("section lengths disagree with node count".into()));
        }
        for u in 0..n as u32 {
            let se = self.semantic_edges(u);
            let mut sorted = se.to_vec();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != d {
                return Err(Error::Invariant(format!("node {u}: semantic edges not {d} distinct ids")));
            }
            if se.iter().any(|&v| v == u || v as usize >= n) {
                return Err(Error::Invariant(format!("node {u}: self-loop or out-of-range semantic edge")));
            }
            if self.forward_len(u) > d / 2 {
                return Err(Error::Invariant(format!("node {u}: forward half exceeds d/2")));
            }
            if self.forward_len(u) + self.bridge_len(u) > d {
                return Err(Error::Invariant(format!("node {u}: forward and bridge slots overlap")));
            }
            let ke = self.keyword_edges(u);
            if ke.iter().any(|v| sorted.binary_search(v).is_ok() || *v == u || *v as usize >= n) {
                return Err(Error::Invariant(format!("node {u}: keyword edge overlaps semantic edges")));
            }
            let ents = &self.store.doc(u).entities;
            let edges = self.logical_edges(u);
            if edges.windows(2).any(|w| w[0].source > w[1].source) {
                return Err(Error::Invariant(format!("node {u}: logical edges not grouped by source")));
            }
            for e in edges {
                let sound = ents.binary_search(&e.source).is_ok()
                    && ents.binary_search(&e.target).is_err()
                    && (e.node as usize) < n
                    && e.node != u
                    && self.store.doc(e.node).has_entity(e.target)
                    && self.kg.as_ref().is_some_and(|kg| kg.are_related(e.source, e.target));
                if !sound {
                    return Err(Error::Invariant(format!("node {u}: unsound logical edge {e:?}")));
                }
            }
        }
        if self.entity_map != EntityMap::build(&self.store) {
            return Err(Error::Invariant("entity map is not the exact inverted map".into()));
        }
        if self.entry_order != Self::compute_entry_order(&self.store) {
            return Err(Error::Invariant("entry list not sorted by norm".into()));
        }
        Ok(())
    }
}
