//! Logical edges: document-graph links induced by knowledge-graph relations
//! whose endpoints live in different documents.

use std::collections::BTreeMap;

use crate::model::{DocumentStore, KnowledgeGraph};
use crate::par;

/// Max stored logical edges per (node, source entity).
pub const DEFAULT_FANOUT_CAP: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LogicalEdge {
    pub source: u32,
    pub relation: u32,
    pub target: u32,
    /// Document holding `target`.
    pub node: u32,
}

/// Entity id to the sorted node ids containing it.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EntityMap {
    map: BTreeMap<u32, Vec<u32>>,
}

impl EntityMap {
    pub fn build(store: &DocumentStore) -> Self {
        let mut map: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        for (u, doc) in store.docs().iter().enumerate() {
            for &e in &doc.entities {
                map.entry(e).or_default().push(u as u32);
            }
        }
        EntityMap { map }
    }

    pub fn nodes(&self, entity: u32) -> &[u32] {
        self.map.get(&entity).map_or(&[], Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &[u32])> {
        self.map.iter().map(|(e, v)| (*e, v.as_slice()))
    }

    pub(crate) fn from_map(map: BTreeMap<u32, Vec<u32>>) -> Self {
        EntityMap { map }
    }
}

pub fn build_entity_map(store: &DocumentStore) -> EntityMap {
    EntityMap::build(store)
}

/// Logical edges of node `u`, grouped by source entity. Within a source the
/// targets with the highest KG degree come first and at most `fanout_cap`
/// edges are kept.
pub fn derive_logical_edges(
    u: u32,
    store: &DocumentStore,
    kg: &KnowledgeGraph,
    emap: &EntityMap,
    fanout_cap: usize,
) -> Vec<LogicalEdge> {
    let ents = &store.doc(u).entities;
    let mut out = Vec::new();
    for &s in ents {
        let mut group: Vec<LogicalEdge> = Vec::new();
        // neighbors are sorted by (entity, relation): the first hit per
        // target carries the smallest relation id
        let mut last_target = None;
        for rel in kg.neighbors(s) {
            if last_target == Some(rel.entity) {
                continue;
            }
            last_target = Some(rel.entity);
            if ents.binary_search(&rel.entity).is_ok() {
                continue;
            }
            for &w in emap.nodes(rel.entity) {
                if w != u {
                    group.push(LogicalEdge { source: s, relation: rel.relation, target: rel.entity, node: w });
                }
            }
        }
        group.sort_by(|a, b| {
            kg.degree(b.target).cmp(&kg.degree(a.target)).then(a.target.cmp(&b.target)).then(a.node.cmp(&b.node))
        });
        group.truncate(fanout_cap);
        out.extend(group);
    }
    out
}

pub(crate) fn derive_all(
    store: &DocumentStore,
    kg: &KnowledgeGraph,
    emap: &EntityMap,
    cap: usize,
) -> Vec<Vec<LogicalEdge>> {
    par::map_range(store.len(), |u| derive_logical_edges(u as u32, store, kg, emap, cap))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DocumentRecord, FusedVector, SparseVector, Triplet};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeSet;

    fn store_with(entities: &[Vec<u32>]) -> DocumentStore {
        let docs = entities
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let v = FusedVector::new(vec![1.0].into(), SparseVector::default(), SparseVector::default());
                DocumentRecord::new(i as u64, v).with_entities(e.clone())
            })
            .collect();
        DocumentStore::new(docs).unwrap()
    }

    fn t(source: u32, relation: u32, target: u32) -> Triplet {
        Triplet { source, relation, target }
    }

    #[test]
    fn entity_map_examples() {
        let empty = store_with(&[vec![], vec![]]);
        assert!(build_entity_map(&empty).is_empty());
        let mut ents = vec![vec![]; 8];
        ents[3] = vec![5];
        ents[7] = vec![5];
        let m = build_entity_map(&store_with(&ents));
        assert_eq!(m.nodes(5), &[3, 7]);
    }

    #[test]
    fn entity_map_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ents: Vec<Vec<u32>> = (0..200)
            .map(|_| {
                let c = rng.random_range(0..4);
                (0..c).map(|_| rng.random_range(0..50)).collect::<BTreeSet<_>>().into_iter().collect()
            })
            .collect();
        let store = store_with(&ents);
        let m = build_entity_map(&store);
        for (u, e_list) in ents.iter().enumerate() {
            for e in 0..50u32 {
                assert_eq!(m.nodes(e).contains(&(u as u32)), e_list.contains(&e));
            }
        }
    }

    #[test]
    fn logical_edge_examples() {
        let store = store_with(&[vec![1], vec![2], vec![1, 2], vec![9]]);
        let emap = build_entity_map(&store);
        let kg = KnowledgeGraph::new(vec![t(1, 4, 2)]);
        assert!(derive_logical_edges(3, &store, &kg, &emap, 64).is_empty());
        assert_eq!(
            derive_logical_edges(0, &store, &kg, &emap, 64),
            vec![
                LogicalEdge { source: 1, relation: 4, target: 2, node: 1 },
                LogicalEdge { source: 1, relation: 4, target: 2, node: 2 },
            ]
        );
        // node 2 holds both endpoints: the target must lie outside the node
        assert!(derive_logical_edges(2, &store, &kg, &emap, 64).is_empty());
    }

    #[test]
    fn fanout_cap_prefers_high_degree_targets() {
        let store = store_with(&[vec![0], vec![1], vec![2], vec![3]]);
        let emap = build_entity_map(&store);
        let kg = KnowledgeGraph::new(vec![t(0, 1, 1), t(0, 1, 2), t(0, 1, 3), t(3, 2, 7), t(3, 2, 8)]);
        let edges = derive_logical_edges(0, &store, &kg, &emap, 1);
        assert_eq!(edges.len(), 1);
        assert_eq!(edges[0].target, 3);
    }

    #[test]
    fn matches_brute_force_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let ents: Vec<Vec<u32>> = (0..300)
            .map(|_| {
                let c = rng.random_range(0..3);
                (0..c).map(|_| rng.random_range(0..80)).collect::<BTreeSet<_>>().into_iter().collect()
            })
            .collect();
        let store = store_with(&ents);
        let triplets: Vec<Triplet> =
            (0..150).map(|_| t(rng.random_range(0..80), rng.random_range(0..5), rng.random_range(0..80))).collect();
        let kg = KnowledgeGraph::new(triplets.clone());
        let emap = build_entity_map(&store);
        for u in 0..store.len() {
            let got: BTreeSet<(u32, u32, u32)> = derive_logical_edges(u as u32, &store, &kg, &emap, usize::MAX)
                .into_iter()
                .map(|e| (e.source, e.target, e.node))
                .collect();
            let mut want = BTreeSet::new();
            for w in 0..store.len() {
                if w == u {
                    continue;
                }
                for tr in &triplets {
                    for (s, tgt) in [(tr.source, tr.target), (tr.target, tr.source)] {
                        if ents[u].contains(&s) && !ents[u].contains(&tgt) && ents[w].contains(&tgt) {
                            want.insert((s, tgt, w as u32));
                        }
                    }
                }
            }
            assert_eq!(got, want, "node {u}");
        }
    }
}
