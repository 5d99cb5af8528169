//! Online insertion and mark-deletion.
//!
//! A new node's k-NN list is the merge of an index search over existing
//! nodes and NN-Descent within the batch; it then goes through the same
//! refinement as a full build. Existing nodes only ever swap a weak
//! reverse slot for a better new neighbor.

use std::collections::BTreeSet;

use crate::distance::unit_score;
use crate::error::{Error, Result};
use crate::index::HybridIndex;
use crate::knn::{build_knn_graph, by_similarity, exact_knn_graph, Neighbor};
use crate::logical::{derive_logical_edges, EntityMap};
use crate::model::{DocumentRecord, DocumentStore};
use crate::par;
use crate::refinery::{assemble_row, keyword_row, refine_node, reverse_lists, NodeRefinement};
use crate::search::semantic_neighbors;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct InsertReport {
    pub inserted: usize,
    /// Reverse slots of existing nodes rewired to new nodes.
    pub reverse_updates: usize,
    /// Existing nodes whose logical edges were re-derived.
    pub logical_refreshed: usize,
    /// Edges added to keep every node reachable from the entry set.
    pub bridges: usize,
}

/// Candidate k-NN lists for the batch from NN-Descent (or exhaustive
/// scoring for batches too small for it), in batch-local ids.
fn batch_knn(new_docs: &[DocumentRecord], k: usize, iterations: usize, seed: u64) -> Result<Vec<Vec<Neighbor>>> {
    if new_docs.len() < 2 {
        return Ok(vec![Vec::new(); new_docs.len()]);
    }
    let local = DocumentStore::new(new_docs.to_vec())?;
    let kk = k.min(new_docs.len() - 1);
    let g = if new_docs.len() <= k + 1 {
        exact_knn_graph(&local, kk)?
    } else {
        build_knn_graph(&local, kk, iterations, seed)?
    };
    Ok(g.lists().to_vec())
}

pub fn insert_batch(index: &mut HybridIndex, new_docs: Vec<DocumentRecord>) -> Result<InsertReport> {
    if new_docs.is_empty() {
        return Ok(InsertReport::default());
    }
    index.store.check_additions(&new_docs)?;
    let k = index.params.knn_k;
    let d = index.params.degree;
    let n0 = index.len() as u32;
    let b = new_docs.len();

    // (a) search over the existing graph
    let found: Vec<Vec<(u32, f64)>> = {
        let idx: &HybridIndex = index;
        par::map_slice(&new_docs, |doc| semantic_neighbors(idx, &doc.vector, k, 2 * k))
            .into_iter()
            .collect::<Result<_>>()?
    };
    // (b) NN-Descent among the batch
    let local = batch_knn(&new_docs, k, index.params.iterations, index.params.seed ^ n0 as u64)?;

    let merged: Vec<Vec<Neighbor>> = (0..b)
        .map(|i| {
            let mut list: Vec<Neighbor> = found[i]
                .iter()
                .map(|&(id, score)| Neighbor { id, score, is_new: false })
                .chain(local[i].iter().map(|nb| Neighbor { id: nb.id + n0, score: nb.score, is_new: false }))
                .collect();
            list.sort_by(|a, b| by_similarity(a.score, a.id, b.score, b.id));
            list.dedup_by_key(|nb| nb.id);
            list.truncate(k);
            list
        })
        .collect();

    let new_entities: BTreeSet<u32> = new_docs.iter().flat_map(|doc| doc.entities.iter().copied()).collect();
    index.store.extend(new_docs);
    let store = &index.store;
    let rule = index.params.keyword_rule;
    let refined: Vec<NodeRefinement> = par::map_range(b, |i| refine_node(&merged[i], d, store, n0 + i as u32, rule));

    // reverse neighbors among the new nodes; existing forward lists are frozen
    let mut batch_view: Vec<NodeRefinement> = Vec::with_capacity(n0 as usize + b);
    batch_view.resize(n0 as usize, NodeRefinement { ordered: Vec::new(), retained: Vec::new(), pruned: Vec::new() });
    batch_view.extend(refined.iter().cloned());
    let reverse = reverse_lists(&batch_view);
    let mut rows = Vec::with_capacity(b);
    for (i, r) in refined.iter().enumerate() {
        let u = n0 + i as u32;
        let (row, fwd) = assemble_row(u, r, &reverse[u as usize], d);
        if row.len() != d {
            // nothing but the store has changed yet
            index.store.truncate(n0 as usize);
            return Err(Error::Invariant(format!("inserted node {u} found only {} neighbors", row.len())));
        }
        rows.push((row, fwd));
    }

    // proposals for existing nodes: v gains u when v is in u's retained list
    let mut proposals: Vec<Vec<(f64, u32)>> = vec![Vec::new(); n0 as usize];
    for (i, r) in refined.iter().enumerate() {
        let u = n0 + i as u32;
        for &v in &r.retained {
            if v < n0 {
                proposals[v as usize].push((unit_score(&store.doc(v).vector, &store.doc(u).vector), u));
            }
        }
    }
    // in-degrees over old and new rows; a slot is only rewired when its
    // target keeps another in-edge
    let mut in_degree = vec![0u32; n0 as usize + b];
    index.semantic.iter().chain(rows.iter().flat_map(|r| r.0.iter())).for_each(|&t| in_degree[t as usize] += 1);
    let mut reverse_updates = 0;
    for (v, props) in proposals.iter_mut().enumerate() {
        if props.is_empty() {
            continue;
        }
        props.sort_by(|a, b| by_similarity(a.0, a.1, b.0, b.1));
        let slots = index.replaceable_slots(v as u32);
        let row = &mut index.semantic[v * d..(v + 1) * d];
        let base = &index.store.doc(v as u32).vector;
        for &(score, u) in props.iter() {
            let weakest = slots
                .clone()
                .filter(|&slot| in_degree[row[slot] as usize] > 1)
                .map(|slot| (slot, unit_score(base, &index.store.doc(row[slot]).vector), row[slot]))
                .max_by(|a, b| by_similarity(a.1, a.2, b.1, b.2));
            match weakest {
                Some((slot, ws, wid)) if by_similarity(score, u, ws, wid).is_lt() => {
                    in_degree[wid as usize] -= 1;
                    in_degree[u as usize] += 1;
                    row[slot] = u;
                    reverse_updates += 1;
                }
                _ => break,
            }
        }
    }

    for (i, (row, fwd)) in rows.into_iter().enumerate() {
        index.keyword_edges.push(keyword_row(&refined[i], &row));
        index.semantic.extend(row);
        index.forward_len.push(fwd as u32);
        index.bridge_len.push(0);
    }

    index.entity_map = EntityMap::build(&index.store);
    let mut logical_refreshed = 0;
    index.logical_edges.resize(index.store.len(), Vec::new());
    if let Some(kg) = &index.kg {
        let mut touched: BTreeSet<u32> = (n0..n0 + b as u32).collect();
        for &e in &new_entities {
            for rel in kg.neighbors(e) {
                for &w in index.entity_map.nodes(rel.entity) {
                    if w < n0 && touched.insert(w) {
                        logical_refreshed += 1;
                    }
                }
            }
        }
        let touched: Vec<u32> = touched.into_iter().collect();
        let (store, emap, cap) = (&index.store, &index.entity_map, index.params.fanout_cap);
        let fresh = par::map_slice(&touched, |&u| derive_logical_edges(u, store, kg, emap, cap));
        for (u, edges) in touched.into_iter().zip(fresh) {
            index.logical_edges[u as usize] = edges;
        }
    }
    index.entry_order = HybridIndex::compute_entry_order(&index.store);
    let bridges = index.repair_connectivity();

    Ok(InsertReport { inserted: b, reverse_updates, logical_refreshed, bridges })
}

/// Flags documents as deleted. They keep routing traffic but never appear in
/// results. Fails without changes if any id is unknown.
pub fn mark_delete(index: &mut HybridIndex, doc_ids: &[u64]) -> Result<usize> {
    let nodes: Vec<u32> =
        doc_ids.iter().map(|&id| index.store.node_of(id).ok_or(Error::UnknownDocument(id))).collect::<Result<_>>()?;
    for &n in &nodes {
        index.store.set_deleted(n, true);
    }
    Ok(nodes.len())
}
