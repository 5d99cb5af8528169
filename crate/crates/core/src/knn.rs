//! Approximate k-NN graph over fused vectors via NN-Descent.
//!
//! Each iteration pulls candidates for node `u` from the neighborhoods
//! (forward and reverse) of its current neighbors, reading a frozen snapshot
//! and writing a fresh buffer, so the result is independent of scheduling.

use std::cmp::Ordering;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::distance::unit_score;
use crate::error::{Error, Result};
use crate::model::DocumentStore;
use crate::par;

pub const DEFAULT_KNN_K: usize = 32;
pub const DEFAULT_ITERATIONS: usize = 10;
/// Iteration stops once fewer than this fraction of list slots changed.
pub const EARLY_STOP_RATE: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Neighbor {
    pub id: u32,
    pub score: f64,
    pub is_new: bool,
}

/// Descending score, ties by ascending id.
#[inline]
pub(crate) fn by_similarity(a_score: f64, a_id: u32, b_score: f64, b_id: u32) -> Ordering {
    b_score.total_cmp(&a_score).then(a_id.cmp(&b_id))
}

#[derive(Clone, Debug, PartialEq)]
pub struct KnnGraph {
    k: usize,
    lists: Vec<Vec<Neighbor>>,
}

impl KnnGraph {
    /// Wraps explicit lists; each is sorted into canonical order.
    pub fn from_lists(k: usize, mut lists: Vec<Vec<Neighbor>>) -> Result<Self> {
        for (u, list) in lists.iter_mut().enumerate() {
            if list.len() > k {
                return Err(Error::InvalidParameter(format!("node {u} has {} > k neighbors", list.len())));
            }
            list.sort_by(|a, b| by_similarity(a.score, a.id, b.score, b.id));
        }
        let g = KnnGraph { k, lists };
        g.validate()?;
        Ok(g)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.lists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lists.is_empty()
    }

    pub fn neighbors(&self, u: u32) -> &[Neighbor] {
        &self.lists[u as usize]
    }

    pub fn lists(&self) -> &[Vec<Neighbor>] {
        &self.lists
    }

    /// Checks no self-loops, no duplicates, canonical order, ids in range.
    pub fn validate(&self) -> Result<()> {
        let n = self.lists.len();
        for (u, list) in self.lists.iter().enumerate() {
            let mut ids: Vec<u32> = list.iter().map(|x| x.id).collect();
            if ids.iter().any(|&v| v as usize == u || v as usize >= n) {
                return Err(Error::Invariant(format!("node {u} has a self-loop or out-of-range neighbor")));
            }
            ids.sort_unstable();
            if ids.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Invariant(format!("node {u} has duplicate neighbors")));
            }
            if list.windows(2).any(|w| by_similarity(w[0].score, w[0].id, w[1].score, w[1].id) != Ordering::Less) {
                return Err(Error::Invariant(format!("node {u} list is not in similarity order")));
            }
        }
        Ok(())
    }

    /// Mean similarity over all list entries.
    pub fn mean_similarity(&self) -> f64 {
        let (sum, count) = self.lists.iter().flatten().fold((0.0, 0usize), |(s, c), n| (s + n.score, c + 1));
        if count == 0 {
            0.0
        } else {
            sum / count as f64
        }
    }
}

fn node_rng(seed: u64, u: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u as u64);
    rng
}

/// Random k-regular start graph, scored under unit weights.
pub fn init_random_graph(store: &DocumentStore, k: usize, seed: u64) -> Result<KnnGraph> {
    let n = store.len();
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if n <= k {
        return Err(Error::InvalidParameter(format!("corpus of {n} documents needs more than k = {k}")));
    }
    let lists = par::map_range(n, |u| {
        let mut rng = node_rng(seed, u);
        let mut list: Vec<Neighbor> = sample(&mut rng, n - 1, k)
            .into_iter()
            .map(|i| if i >= u { i + 1 } else { i } as u32)
            .map(|v| Neighbor {
                id: v,
                score: unit_score(&store.doc(u as u32).vector, &store.doc(v).vector),
                is_new: true,
            })
            .collect();
        list.sort_by(|a, b| by_similarity(a.score, a.id, b.score, b.id));
        list
    });
    Ok(KnnGraph { k, lists })
}

/// Forward plus (capped) reverse neighborhood of every node, each entry
/// carrying whether the connecting edge is new.
fn neighborhoods(g: &KnnGraph) -> Vec<Vec<(u32, bool)>> {
    let n = g.len();
    let mut reverse: Vec<Vec<(f64, u32, bool)>> = vec![Vec::new(); n];
    for (u, list) in g.lists.iter().enumerate() {
        for nb in list {
            reverse[nb.id as usize].push((nb.score, u as u32, nb.is_new));
        }
    }
    let k = g.k;
    par::map_range(n, |u| {
        let mut rev = reverse[u].clone();
        rev.sort_by(|a, b| by_similarity(a.0, a.1, b.0, b.1));
        rev.truncate(k);
        let mut all: Vec<(u32, bool)> = g.lists[u].iter().map(|nb| (nb.id, nb.is_new)).collect();
        all.extend(rev.into_iter().map(|(_, v, new)| (v, new)));
        all.sort_unstable_by_key(|e| e.0);
        let mut merged: Vec<(u32, bool)> = Vec::with_capacity(all.len());
        for (v, new) in all {
            match merged.last_mut() {
                Some(last) if last.0 == v => last.1 |= new,
                _ => merged.push((v, new)),
            }
        }
        merged
    })
}

/// Two-hop candidates of `u`: `c` reached through `v` when either the
/// `u`-`v` or the `v`-`c` edge is new. Excludes `u` and its current list.
pub fn candidates_for(g: &KnnGraph, u: u32) -> Vec<u32> {
    candidates_from(g, &neighborhoods(g), u)
}

fn candidates_from(g: &KnnGraph, hoods: &[Vec<(u32, bool)>], u: u32) -> Vec<u32> {
    let current = &g.lists[u as usize];
    let mut out = Vec::new();
    for &(v, new_uv) in &hoods[u as usize] {
        for &(c, new_vc) in &hoods[v as usize] {
            if (new_uv || new_vc) && c != u {
                out.push(c);
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out.retain(|c| !current.iter().any(|nb| nb.id == *c));
    out
}

/// One NN-Descent round. Returns the refined graph and the number of list
/// slots whose occupant changed.
pub fn nn_descent_iterate(g: &KnnGraph, store: &DocumentStore) -> (KnnGraph, usize) {
    let hoods = neighborhoods(g);
    let k = g.k;
    let updated: Vec<(Vec<Neighbor>, usize)> = par::map_range(g.len(), |u| {
        let u = u as u32;
        let base = &store.doc(u).vector;
        let mut merged: Vec<Neighbor> =
            g.lists[u as usize].iter().map(|nb| Neighbor { is_new: false, ..*nb }).collect();
        let worst = if merged.len() >= k { merged.last().map(|nb| (nb.score, nb.id)) } else { None };
        for c in candidates_from(g, &hoods, u) {
            let score = unit_score(base, &store.doc(c).vector);
            if let Some((ws, wid)) = worst {
                if by_similarity(score, c, ws, wid) != Ordering::Less {
                    continue;
                }
            }
            merged.push(Neighbor { id: c, score, is_new: true });
        }
        merged.sort_by(|a, b| by_similarity(a.score, a.id, b.score, b.id));
        merged.truncate(k);
        let changes = merged.iter().filter(|nb| nb.is_new).count();
        (merged, changes)
    });
    let total = updated.iter().map(|x| x.1).sum();
    let lists = updated.into_iter().map(|x| x.0).collect();
    (KnnGraph { k, lists }, total)
}

/// Random init followed by at most `iterations` NN-Descent rounds, stopping
/// early once the update rate drops below [`EARLY_STOP_RATE`].
pub fn build_knn_graph(store: &DocumentStore, k: usize, iterations: usize, seed: u64) -> Result<KnnGraph> {
    let mut g = init_random_graph(store, k, seed)?;
    let slots = (store.len() * k) as f64;
    for it in 0..iterations {
        let (next, updates) = nn_descent_iterate(&g, store);
        g = next;
        log::debug!("nn-descent iteration {it}: {updates} updates");
        if (updates as f64) / slots < EARLY_STOP_RATE {
            break;
        }
    }
    Ok(g)
}

/// Exact k-NN lists by exhaustive scoring (test oracle and small-batch path).
pub fn exact_knn_graph(store: &DocumentStore, k: usize) -> Result<KnnGraph> {
    let n = store.len();
    if n <= k {
        return Err(Error::InvalidParameter(format!("corpus of {n} documents needs more than k = {k}")));
    }
    let lists = par::map_range(n, |u| {
        let base = &store.doc(u as u32).vector;
        let mut all: Vec<Neighbor> = (0..n as u32)
            .filter(|&v| v as usize != u)
            .map(|v| Neighbor { id: v, score: unit_score(base, &store.doc(v).vector), is_new: true })
            .collect();
        all.sort_by(|a, b| by_similarity(a.score, a.id, b.score, b.id));
        all.truncate(k);
        all
    });
    Ok(KnnGraph { k, lists })
}

/// Fraction of exact neighbors present in `g`.
pub fn knn_recall(g: &KnnGraph, exact: &KnnGraph) -> f64 {
    let mut hit = 0usize;
    let mut total = 0usize;
    for (a, b) in g.lists.iter().zip(&exact.lists) {
        total += b.len();
        hit += b.iter().filter(|x| a.iter().any(|y| y.id == x.id)).count();
    }
    hit as f64 / total.max(1) as f64
}
