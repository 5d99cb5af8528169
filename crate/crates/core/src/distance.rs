//! Composite similarity between fused vectors.
//!
//! All accumulation is in `f64` with a fixed order (dense, learned,
//! statistical; each in index order), so a pair always scores bit-identically
//! no matter which worker evaluates it.

use crate::error::{Error, Result};
use crate::model::{DocumentStore, FusedVector, SparseVector, WeightedQuery};
use crate::par;

/// Similarity value; larger is more similar. The distance used by every
/// pruning and search comparison is its negation.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Score(pub f64);

impl Score {
    pub fn value(self) -> f64 {
        self.0
    }

    pub fn distance(self) -> f64 {
        -self.0
    }
}

/// Size ratio at which sparse intersection switches from a two-pointer
/// merge to binary searching the smaller support in the larger one.
const GALLOP_RATIO: usize = 8;

pub fn dense_dot(a: &[f32], b: &[f32]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { left: a.len(), right: b.len() });
    }
    Ok(dense_dot_unchecked(a, b))
}

#[inline]
pub(crate) fn dense_dot_unchecked(a: &[f32], b: &[f32]) -> f64 {
    let mut acc = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        acc += *x as f64 * *y as f64;
    }
    acc
}

/// Visits shared indices of two sorted supports in ascending order.
#[inline]
fn intersect(a: &SparseVector, b: &SparseVector, mut on_match: impl FnMut(u32, f32, f32)) {
    let (ai, av, bi, bv) = (a.indices(), a.values(), b.indices(), b.values());
    if ai.is_empty() || bi.is_empty() {
        return;
    }
    let (small, large) = if ai.len() <= bi.len() { (0, 1) } else { (1, 0) };
    let sides = [(ai, av), (bi, bv)];
    let (si, sv) = sides[small];
    let (li, lv) = sides[large];
    if li.len() >= GALLOP_RATIO * si.len() {
        let mut lo = 0;
        for (pos, &idx) in si.iter().enumerate() {
            let rest = &li[lo..];
            let off = rest.partition_point(|&x| x < idx);
            lo += off;
            if lo == li.len() {
                break;
            }
            if li[lo] == idx {
                let (x, y) = (sv[pos], lv[lo]);
                if small == 0 {
                    on_match(idx, x, y)
                } else {
                    on_match(idx, y, x)
                }
                lo += 1;
            }
        }
    } else {
        let (mut i, mut j) = (0, 0);
        while i < ai.len() && j < bi.len() {
            match ai[i].cmp(&bi[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    on_match(ai[i], av[i], bv[j]);
                    i += 1;
                    j += 1;
                }
            }
        }
    }
}

/// Inner product over shared indices; 0 for disjoint supports.
pub fn sparse_dot(a: &SparseVector, b: &SparseVector) -> f64 {
    let mut acc = 0.0f64;
    intersect(a, b, |_, x, y| acc += x as f64 * y as f64);
    acc
}

/// [`sparse_dot`] that also appends the shared indices to `overlap`.
pub fn sparse_dot_overlap(a: &SparseVector, b: &SparseVector, overlap: &mut Vec<u32>) -> f64 {
    let mut acc = 0.0f64;
    intersect(a, b, |i, x, y| {
        acc += x as f64 * y as f64;
        overlap.push(i);
    });
    acc
}

#[inline]
fn combine(scales: [f64; 3], q: &FusedVector, d: &FusedVector, overlap: Option<&mut Vec<u32>>) -> f64 {
    let dense = if scales[0] == 0.0 {
        0.0
    } else {
        scales[0] * dense_dot_unchecked(q.dense().as_slice(), d.dense().as_slice())
    };
    let learned = if scales[1] == 0.0 { 0.0 } else { scales[1] * sparse_dot(q.learned(), d.learned()) };
    let stat = match overlap {
        Some(out) => scales[2] * sparse_dot_overlap(q.statistical(), d.statistical(), out),
        None if scales[2] == 0.0 => 0.0,
        None => scales[2] * sparse_dot(q.statistical(), d.statistical()),
    };
    dense + learned + stat
}

/// Unit-weight similarity between two stored vectors; no dimension check.
#[inline]
pub(crate) fn unit_score(a: &FusedVector, b: &FusedVector) -> f64 {
    combine([1.0; 3], a, b, None)
}

/// Unit-weight similarity that also reports the shared statistical terms.
#[inline]
pub(crate) fn unit_score_overlap(a: &FusedVector, b: &FusedVector, overlap: &mut Vec<u32>) -> f64 {
    combine([1.0; 3], a, b, Some(overlap))
}

/// Inner product between stored vectors under unit weights, as used for
/// index construction.
pub fn inner_product(a: &FusedVector, b: &FusedVector) -> Result<Score> {
    check_dims(a, b)?;
    Ok(Score(unit_score(a, b)))
}

/// `w_d*sim_d + w_s*sim_s + w_f*sim_f` for a weighted query against a document.
pub fn hybrid_score(q: &WeightedQuery, d: &FusedVector) -> Result<Score> {
    check_dims(q.raw(), d)?;
    Ok(Score(combine(q.scales(), q.raw(), d, None)))
}

/// [`hybrid_score`] plus the intersecting statistical terms.
pub fn hybrid_score_overlap(q: &WeightedQuery, d: &FusedVector, overlap: &mut Vec<u32>) -> Result<Score> {
    check_dims(q.raw(), d)?;
    Ok(Score(combine(q.scales(), q.raw(), d, Some(overlap))))
}

#[inline]
pub(crate) fn query_score(q: &WeightedQuery, d: &FusedVector) -> f64 {
    combine(q.scales(), q.raw(), d, None)
}

fn check_dims(a: &FusedVector, b: &FusedVector) -> Result<()> {
    if a.dense().len() != b.dense().len() {
        return Err(Error::LengthMismatch { left: a.dense().len(), right: b.dense().len() });
    }
    Ok(())
}

/// Scores `ids` against `q`; output order matches input order.
pub fn batch_scores(q: &WeightedQuery, ids: &[u32], store: &DocumentStore) -> Result<Vec<Score>> {
    if q.raw().dense().len() != store.dense_dim() {
        return Err(Error::LengthMismatch { left: q.raw().dense().len(), right: store.dense_dim() });
    }
    if let Some(&bad) = ids.iter().find(|&&id| id as usize >= store.len()) {
        return Err(Error::UnknownNode(bad));
    }
    Ok(par::map_slice(ids, |&id| Score(query_score(q, &store.doc(id).vector))))
}
