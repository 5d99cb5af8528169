//! Data model of the unified metric space: fused vectors, documents,
//! weights, queries, the knowledge graph and the validated document store.

use std::collections::{BTreeMap, HashMap};

use crate::distance;
use crate::error::{Error, Result};

/// Dense embedding part of a document.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DenseVector(Vec<f32>);

impl DenseVector {
    pub fn new(values: Vec<f32>) -> Self {
        DenseVector(values)
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn scaled(&self, w: f32) -> DenseVector {
        DenseVector(self.0.iter().map(|v| v * w).collect())
    }
}

impl From<Vec<f32>> for DenseVector {
    fn from(v: Vec<f32>) -> Self {
        DenseVector(v)
    }
}

/// Sparse term-weight vector in split index/value arrays.
///
/// Construction is permissive so that raw ingested data can be represented
/// and then rejected by [`validate_corpus`] with a precise error.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseVector {
    indices: Vec<u32>,
    values: Vec<f32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum SparseDefect {
    Unsorted,
    NonFinite,
    Zero(u32),
}

impl SparseVector {
    pub fn new(entries: impl IntoIterator<Item = (u32, f32)>) -> Self {
        let (indices, values) = entries.into_iter().unzip();
        SparseVector { indices, values }
    }

    /// Sorts, sums duplicate indices and drops zeros.
    pub fn from_unsorted(entries: impl IntoIterator<Item = (u32, f32)>) -> Self {
        let mut pairs: Vec<(u32, f32)> = entries.into_iter().collect();
        pairs.sort_by_key(|p| p.0);
        let mut out: Vec<(u32, f32)> = Vec::with_capacity(pairs.len());
        for (i, v) in pairs {
            match out.last_mut() {
                Some(last) if last.0 == i => last.1 += v,
                _ => out.push((i, v)),
            }
        }
        out.retain(|p| p.1 != 0.0);
        SparseVector::new(out)
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f32)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    /// One past the largest index, 0 when empty.
    pub fn dim(&self) -> usize {
        self.indices.last().map_or(0, |&i| i as usize + 1)
    }

    pub(crate) fn defect(&self) -> Option<SparseDefect> {
        if self.indices.windows(2).any(|w| w[0] >= w[1]) {
            return Some(SparseDefect::Unsorted);
        }
        for (i, v) in self.iter() {
            if !v.is_finite() {
                return Some(SparseDefect::NonFinite);
            }
            if v == 0.0 {
                return Some(SparseDefect::Zero(i));
            }
        }
        None
    }

    fn scaled(&self, w: f32) -> SparseVector {
        SparseVector::new(self.iter().map(|(i, v)| (i, v * w)).filter(|p| p.1 != 0.0))
    }
}

/// Concatenation of the three representations of one document, plus its
/// cached self inner product under unit weights.
#[derive(Clone, Debug, PartialEq)]
pub struct FusedVector {
    dense: DenseVector,
    learned: SparseVector,
    statistical: SparseVector,
    squared_norm: f64,
}

impl FusedVector {
    pub fn new(dense: DenseVector, learned: SparseVector, statistical: SparseVector) -> Self {
        let mut v = FusedVector { dense, learned, statistical, squared_norm: 0.0 };
        v.squared_norm = distance::unit_score(&v, &v);
        v
    }

    pub fn dense(&self) -> &DenseVector {
        &self.dense
    }

    pub fn learned(&self) -> &SparseVector {
        &self.learned
    }

    pub fn statistical(&self) -> &SparseVector {
        &self.statistical
    }

    pub fn squared_norm(&self) -> f64 {
        self.squared_norm
    }

    fn defect(&self) -> Option<(&'static str, SparseDefect)> {
        if self.dense.0.iter().any(|v| !v.is_finite()) {
            return Some(("dense", SparseDefect::NonFinite));
        }
        if let Some(d) = self.learned.defect() {
            return Some(("learned", d));
        }
        self.statistical.defect().map(|d| ("statistical", d))
    }
}

/// Per-path query weights `[w_d, w_s, w_f, w_k]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Weights {
    pub dense: f32,
    pub learned: f32,
    pub statistical: f32,
    /// Hop-reward weight, consumed only by the query engine.
    pub knowledge: f32,
}

impl Weights {
    pub const UNIT: Weights = Weights { dense: 1.0, learned: 1.0, statistical: 1.0, knowledge: 0.0 };

    pub fn new(dense: f32, learned: f32, statistical: f32, knowledge: f32) -> Self {
        Weights { dense, learned, statistical, knowledge }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.dense, self.learned, self.statistical, self.knowledge];
        if all.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidWeights(format!("weights must be finite and non-negative, got {all:?}")));
        }
        if self.dense == 0.0 && self.learned == 0.0 && self.statistical == 0.0 {
            return Err(Error::InvalidWeights("at least one vector path weight must be positive".into()));
        }
        Ok(())
    }

    pub fn as_array(&self) -> [f32; 4] {
        [self.dense, self.learned, self.statistical, self.knowledge]
    }
}

impl Default for Weights {
    fn default() -> Self {
        Weights::UNIT
    }
}

/// A query vector with per-path weights applied.
///
/// Scores are evaluated as `w_d*dense + w_s*learned + w_f*statistical` in
/// 64-bit arithmetic, which is the inner product of the weighted concatenation
/// without rounding the scaled query back to 32 bits. Paths with weight 0 are
/// dropped entirely.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedQuery {
    vector: FusedVector,
    scales: [f64; 3],
}

impl WeightedQuery {
    pub fn raw(&self) -> &FusedVector {
        &self.vector
    }

    pub fn scales(&self) -> [f64; 3] {
        self.scales
    }

    /// Materializes the scaled concatenation in storage precision.
    pub fn to_fused(&self) -> FusedVector {
        let [d, l, s] = self.scales.map(|x| x as f32);
        FusedVector::new(self.vector.dense.scaled(d), self.vector.learned.scaled(l), self.vector.statistical.scaled(s))
    }
}

/// Applies the weights of `w` to the three vector paths of `query`.
pub fn build_query_vector(query: &FusedVector, w: &Weights) -> Result<WeightedQuery> {
    w.validate()?;
    if let Some((path, _)) = query.defect() {
        return Err(Error::InvalidQuery(format!("malformed {path} part")));
    }
    let keep = |s: &SparseVector, w: f32| if w == 0.0 { SparseVector::default() } else { s.clone() };
    let dense = if w.dense == 0.0 { DenseVector(vec![0.0; query.dense.len()]) } else { query.dense.clone() };
    Ok(WeightedQuery {
        vector: FusedVector::new(dense, keep(&query.learned, w.learned), keep(&query.statistical, w.statistical)),
        scales: [w.dense as f64, w.learned as f64, w.statistical as f64],
    })
}

/// One graph node's payload.
#[derive(Clone, Debug, PartialEq)]
pub struct DocumentRecord {
    pub doc_id: u64,
    pub vector: FusedVector,
    /// Sorted, deduplicated term ids.
    pub keywords: Vec<u32>,
    /// Sorted, deduplicated entity ids.
    pub entities: Vec<u32>,
    pub deleted: bool,
}

impl DocumentRecord {
    /// Keywords default to the statistical support.
    pub fn new(doc_id: u64, vector: FusedVector) -> Self {
        let keywords = vector.statistical.indices.clone();
        DocumentRecord { doc_id, vector, keywords, entities: Vec::new(), deleted: false }
    }

    pub fn with_keywords(mut self, mut keywords: Vec<u32>) -> Self {
        keywords.sort_unstable();
        keywords.dedup();
        self.keywords = keywords;
        self
    }

    pub fn with_entities(mut self, mut entities: Vec<u32>) -> Self {
        entities.sort_unstable();
        entities.dedup();
        self.entities = entities;
        self
    }

    /// True when the keyword set is exactly the statistical support, which lets
    /// construction reuse the statistical intersection as the keyword overlap.
    pub(crate) fn keywords_are_statistical(&self) -> bool {
        self.keywords == self.vector.statistical.indices
    }

    pub fn has_keyword(&self, term: u32) -> bool {
        self.keywords.binary_search(&term).is_ok()
    }

    pub fn has_entity(&self, e: u32) -> bool {
        self.entities.binary_search(&e).is_ok()
    }
}

/// Shape statistics of a validated corpus.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct CorpusSummary {
    pub n: usize,
    pub dense_dim: usize,
    pub learned_dim: usize,
    pub statistical_dim: usize,
    pub mean_learned_nnz: f64,
    pub mean_statistical_nnz: f64,
    pub distinct_keywords: usize,
    pub distinct_entities: usize,
}

/// Checks a raw corpus and reports its per-path dimensions.
pub fn validate_corpus(docs: &[DocumentRecord]) -> Result<CorpusSummary> {
    let first = docs.first().ok_or(Error::EmptyCorpus)?;
    let m = first.vector.dense.len();
    check_docs(docs, m, &HashMap::new())?;
    Ok(summarize(docs, m))
}

fn check_docs(docs: &[DocumentRecord], m: usize, existing: &HashMap<u64, u32>) -> Result<()> {
    let mut seen = HashMap::with_capacity(docs.len());
    for doc in docs {
        if doc.vector.dense.len() != m {
            return Err(Error::DimensionMismatch { doc_id: doc.doc_id, expected: m, found: doc.vector.dense.len() });
        }
        if existing.contains_key(&doc.doc_id) || seen.insert(doc.doc_id, ()).is_some() {
            return Err(Error::DuplicateId(doc.doc_id));
        }
        if let Some((path, defect)) = doc.vector.defect() {
            let doc_id = doc.doc_id;
            return Err(match defect {
                SparseDefect::Unsorted => Error::UnsortedSparse { doc_id, path },
                SparseDefect::NonFinite => Error::NonFinite { doc_id, path },
                SparseDefect::Zero(index) => Error::ZeroEntry { doc_id, path, index },
            });
        }
        if doc.keywords.windows(2).any(|w| w[0] >= w[1]) || doc.entities.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::UnsortedSparse { doc_id: doc.doc_id, path: "keyword/entity" });
        }
    }
    Ok(())
}

fn summarize(docs: &[DocumentRecord], m: usize) -> CorpusSummary {
    let n = docs.len();
    let mut kw: Vec<u32> = docs.iter().flat_map(|d| d.keywords.iter().copied()).collect();
    kw.sort_unstable();
    kw.dedup();
    let mut ents: Vec<u32> = docs.iter().flat_map(|d| d.entities.iter().copied()).collect();
    ents.sort_unstable();
    ents.dedup();
    CorpusSummary {
        n,
        dense_dim: m,
        learned_dim: docs.iter().map(|d| d.vector.learned.dim()).max().unwrap_or(0),
        statistical_dim: docs.iter().map(|d| d.vector.statistical.dim()).max().unwrap_or(0),
        mean_learned_nnz: docs.iter().map(|d| d.vector.learned.nnz()).sum::<usize>() as f64 / n as f64,
        mean_statistical_nnz: docs.iter().map(|d| d.vector.statistical.nnz()).sum::<usize>() as f64 / n as f64,
        distinct_keywords: kw.len(),
        distinct_entities: ents.len(),
    }
}

/// Validated, immutable-by-default collection of documents addressed by
/// dense node ids `0..n`.
#[derive(Clone, Debug, PartialEq)]
pub struct DocumentStore {
    docs: Vec<DocumentRecord>,
    dense_dim: usize,
    by_id: HashMap<u64, u32>,
}

impl DocumentStore {
    pub fn new(docs: Vec<DocumentRecord>) -> Result<Self> {
        let summary = validate_corpus(&docs)?;
        if docs.len() > u32::MAX as usize {
            return Err(Error::InvalidParameter("corpus exceeds u32 node ids".into()));
        }
        let by_id = docs.iter().enumerate().map(|(i, d)| (d.doc_id, i as u32)).collect();
        Ok(DocumentStore { docs, dense_dim: summary.dense_dim, by_id })
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn dense_dim(&self) -> usize {
        self.dense_dim
    }

    /// Panics on an out-of-range node id.
    pub fn doc(&self, node: u32) -> &DocumentRecord {
        &self.docs[node as usize]
    }

    pub fn get(&self, node: u32) -> Result<&DocumentRecord> {
        self.docs.get(node as usize).ok_or(Error::UnknownNode(node))
    }

    pub fn node_of(&self, doc_id: u64) -> Option<u32> {
        self.by_id.get(&doc_id).copied()
    }

    pub fn docs(&self) -> &[DocumentRecord] {
        &self.docs
    }

    pub fn summary(&self) -> CorpusSummary {
        summarize(&self.docs, self.dense_dim)
    }

    /// Validates `new_docs` against this store (dimension, id uniqueness).
    pub(crate) fn check_additions(&self, new_docs: &[DocumentRecord]) -> Result<()> {
        check_docs(new_docs, self.dense_dim, &self.by_id)
    }

    pub(crate) fn extend(&mut self, new_docs: Vec<DocumentRecord>) {
        for doc in new_docs {
            self.by_id.insert(doc.doc_id, self.docs.len() as u32);
            self.docs.push(doc);
        }
    }

    /// Drops every node from `n` on; undoes a failed [`Self::extend`].
    pub(crate) fn truncate(&mut self, n: usize) {
        for doc in self.docs.drain(n.min(self.docs.len())..) {
            self.by_id.remove(&doc.doc_id);
        }
    }

    pub(crate) fn set_deleted(&mut self, node: u32, deleted: bool) {
        self.docs[node as usize].deleted = deleted;
    }

    pub fn check_query(&self, q: &QuerySpec) -> Result<()> {
        q.validate()?;
        if q.vector.dense.len() != self.dense_dim {
            return Err(Error::LengthMismatch { left: q.vector.dense.len(), right: self.dense_dim });
        }
        Ok(())
    }
}

/// A validated search request.
#[derive(Clone, Debug, PartialEq)]
pub struct QuerySpec {
    pub vector: FusedVector,
    pub weights: Weights,
    /// Terms every returned document must contain; may be empty.
    pub required_keywords: Vec<u32>,
    /// Query entities for entity entry points and hop rewards; may be empty.
    pub entities: Vec<u32>,
    pub k: usize,
    pub beam_width: usize,
    /// Hop cutoff for loading logical edges.
    pub max_hops: u32,
}

pub const DEFAULT_MAX_HOPS: u32 = 2;

impl QuerySpec {
    pub fn new(vector: FusedVector, weights: Weights, k: usize, beam_width: usize) -> Self {
        QuerySpec {
            vector,
            weights,
            required_keywords: Vec::new(),
            entities: Vec::new(),
            k,
            beam_width,
            max_hops: DEFAULT_MAX_HOPS,
        }
    }

    pub fn with_keywords(mut self, mut kw: Vec<u32>) -> Self {
        kw.sort_unstable();
        kw.dedup();
        self.required_keywords = kw;
        self
    }

    pub fn with_entities(mut self, mut e: Vec<u32>) -> Self {
        e.sort_unstable();
        e.dedup();
        self.entities = e;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        if self.k == 0 {
            return Err(Error::InvalidQuery("k must be positive".into()));
        }
        if self.beam_width < self.k {
            return Err(Error::InvalidQuery(format!("beam width {} < k {}", self.beam_width, self.k)));
        }
        if self.weights.knowledge > 0.0 && self.entities.is_empty() {
            return Err(Error::InvalidQuery("hop-reward weight set but no query entities".into()));
        }
        if let Some((path, _)) = self.vector.defect() {
            return Err(Error::InvalidQuery(format!("malformed {path} part")));
        }
        Ok(())
    }
}

/// One `(source, relation, target)` fact.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triplet {
    pub source: u32,
    pub relation: u32,
    pub target: u32,
}

/// Adjacency entry: the related entity and the relation id.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Relation {
    pub entity: u32,
    pub relation: u32,
}

/// Triplet store with an undirected adjacency view.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct KnowledgeGraph {
    triplets: Vec<Triplet>,
    /// Sorted by `(entity, relation)`, deduplicated.
    adjacency: BTreeMap<u32, Vec<Relation>>,
}

impl KnowledgeGraph {
    pub fn new(triplets: Vec<Triplet>) -> Self {
        let mut adjacency: BTreeMap<u32, Vec<Relation>> = BTreeMap::new();
        for t in &triplets {
            adjacency.entry(t.source).or_default().push(Relation { entity: t.target, relation: t.relation });
            adjacency.entry(t.target).or_default().push(Relation { entity: t.source, relation: t.relation });
        }
        for list in adjacency.values_mut() {
            list.sort_unstable();
            list.dedup();
        }
        KnowledgeGraph { triplets, adjacency }
    }

    pub fn triplets(&self) -> &[Triplet] {
        &self.triplets
    }

    pub fn neighbors(&self, entity: u32) -> &[Relation] {
        self.adjacency.get(&entity).map_or(&[], Vec::as_slice)
    }

    pub fn degree(&self, entity: u32) -> usize {
        self.neighbors(entity).len()
    }

    /// Smallest relation id linking `a` and `b`, if any.
    pub fn relation_between(&self, a: u32, b: u32) -> Option<u32> {
        let list = self.neighbors(a);
        let start = list.partition_point(|r| r.entity < b);
        list.get(start).filter(|r| r.entity == b).map(|r| r.relation)
    }

    pub fn are_related(&self, a: u32, b: u32) -> bool {
        self.relation_between(a, b).is_some()
    }

    pub fn entity_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triplets.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::{dense_dot, sparse_dot};

    fn fv(dense: Vec<f32>, learned: Vec<(u32, f32)>, stat: Vec<(u32, f32)>) -> FusedVector {
        FusedVector::new(dense.into(), SparseVector::new(learned), SparseVector::new(stat))
    }

    #[test]
    fn identity_weights_keep_vector() {
        let v = fv(vec![1.0, 2.0], vec![(3, 1.0)], vec![(5, 2.0)]);
        let q = build_query_vector(&v, &Weights::new(1.0, 1.0, 1.0, 0.0)).unwrap();
        assert_eq!(q.to_fused(), v);
    }

    #[test]
    fn scaling_drops_zero_weight_path() {
        let v = fv(vec![1.0, 2.0], vec![(3, 1.0)], vec![(5, 2.0)]);
        let q = build_query_vector(&v, &Weights::new(0.5, 0.0, 2.0, 0.0)).unwrap().to_fused();
        assert_eq!(q.dense().as_slice(), &[0.5, 1.0]);
        assert!(q.learned().is_empty());
        assert_eq!(q.statistical().iter().collect::<Vec<_>>(), vec![(5, 4.0)]);
    }

    #[test]
    fn weighted_score_matches_per_path_oracle() {
        let q = fv(vec![0.3, -1.2, 0.8], vec![(1, 0.5), (4, 2.0)], vec![(2, 1.5), (9, 0.25)]);
        let d = fv(vec![1.1, 0.4, -0.7], vec![(4, 0.75), (6, 1.0)], vec![(2, 3.0)]);
        let wq = build_query_vector(&q, &Weights::new(0.7, 0.3, 0.0, 0.0)).unwrap();
        let got = crate::distance::hybrid_score(&wq, &d).unwrap().value();
        let sim_d: f64 = [0.3f64 * 1.1, -1.2 * 0.4, 0.8 * -0.7].iter().sum();
        let expect = 0.7 * sim_d + 0.3 * (2.0 * 0.75);
        assert!(((got - expect) / expect).abs() <= 1e-6, "{got} vs {expect}");
    }

    #[test]
    fn squared_norm_is_self_score() {
        let v = fv(vec![3.0, 4.0], vec![(1, 2.0)], vec![(0, 1.0), (7, 2.0)]);
        let expect = 25.0 + 4.0 + 5.0;
        assert_eq!(v.squared_norm(), expect);
        assert_eq!(dense_dot(v.dense().as_slice(), v.dense().as_slice()).unwrap(), 25.0);
        assert_eq!(sparse_dot(v.statistical(), v.statistical()), 5.0);
    }

    #[test]
    fn invalid_weights_rejected() {
        let v = fv(vec![1.0], vec![], vec![]);
        assert!(build_query_vector(&v, &Weights::new(0.0, 0.0, 0.0, 1.0)).is_err());
        assert!(build_query_vector(&v, &Weights::new(-1.0, 1.0, 0.0, 0.0)).is_err());
        assert!(build_query_vector(&v, &Weights::new(f32::NAN, 1.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn corpus_validation_errors_are_distinct() {
        let a = DocumentRecord::new(1, fv(vec![1.0, 0.0], vec![], vec![(1, 1.0)]));
        let b = DocumentRecord::new(2, fv(vec![0.0, 1.0], vec![(2, 1.0)], vec![]));
        let s = validate_corpus(&[a.clone(), b.clone()]).unwrap();
        assert_eq!((s.n, s.dense_dim, s.learned_dim, s.statistical_dim), (2, 2, 3, 2));

        assert_eq!(validate_corpus(&[]).unwrap_err().code(), "empty-corpus");
        let unsorted = DocumentRecord::new(3, fv(vec![1.0, 1.0], vec![(5, 1.0), (2, 1.0)], vec![]));
        assert_eq!(validate_corpus(&[a.clone(), unsorted]).unwrap_err().code(), "unsorted-sparse");
        let short = DocumentRecord::new(4, fv(vec![1.0], vec![], vec![]));
        assert_eq!(validate_corpus(&[a.clone(), short]).unwrap_err().code(), "dimension-mismatch");
        let dup = DocumentRecord::new(1, fv(vec![1.0, 1.0], vec![], vec![]));
        assert_eq!(validate_corpus(&[a, b, dup]).unwrap_err().code(), "duplicate-id");
    }

    #[test]
    fn keywords_default_to_statistical_support() {
        let d = DocumentRecord::new(7, fv(vec![1.0], vec![(1, 1.0)], vec![(3, 1.0), (8, 0.5)]));
        assert_eq!(d.keywords, vec![3, 8]);
        assert!(d.keywords_are_statistical());
        let d = d.with_keywords(vec![9, 3, 9]);
        assert_eq!(d.keywords, vec![3, 9]);
        assert!(!d.keywords_are_statistical());
    }

    #[test]
    fn query_validation() {
        let v = fv(vec![1.0], vec![], vec![]);
        let q = QuerySpec::new(v.clone(), Weights::UNIT, 10, 5);
        assert!(q.validate().is_err());
        let q = QuerySpec::new(v.clone(), Weights::new(1.0, 0.0, 0.0, 0.5), 1, 5);
        assert!(q.validate().is_err());
        assert!(q.with_entities(vec![4]).validate().is_ok());
    }

    #[test]
    fn kg_adjacency_is_undirected_closure() {
        let kg = KnowledgeGraph::new(vec![
            Triplet { source: 1, relation: 7, target: 2 },
            Triplet { source: 2, relation: 3, target: 5 },
            Triplet { source: 1, relation: 7, target: 2 },
        ]);
        assert_eq!(kg.neighbors(2), &[Relation { entity: 1, relation: 7 }, Relation { entity: 5, relation: 3 }]);
        assert_eq!(kg.relation_between(5, 2), Some(3));
        assert!(!kg.are_related(1, 5));
        assert_eq!(kg.degree(9), 0);
    }
}
