//! Hybrid graph index over dense, learned-sparse and statistical-sparse
//! vectors, with keyword edges and knowledge-graph logical edges.
//!
//! Build with [`build_hybrid_index`], query with [`greedy_hybrid_search`],
//! maintain with [`insert_batch`] and [`mark_delete`], persist with
//! [`serialize_index`] and [`deserialize_index`].

pub mod distance;
pub mod error;
pub mod eval;
pub mod index;
pub mod io;
pub mod knn;
pub mod logical;
pub mod maintenance;
pub mod model;
pub mod par;
pub mod persist;
pub mod refinery;
pub mod search;
pub mod synth;

pub use distance::{batch_scores, hybrid_score, inner_product, Score};
pub use error::{Error, Result};
pub use eval::{brute_force_topk, ndcg_at_k, recall_at_k, run_benchmark, BenchRow, Judgment};
pub use index::{BuildParams, HybridIndex, KeywordRule};
pub use knn::{build_knn_graph, KnnGraph, Neighbor};
pub use logical::{build_entity_map, derive_logical_edges, EntityMap, LogicalEdge};
pub use maintenance::{insert_batch, mark_delete, InsertReport};
pub use model::{
    build_query_vector, validate_corpus, DenseVector, DocumentRecord, DocumentStore, FusedVector, KnowledgeGraph,
    QuerySpec, SparseVector, Triplet, WeightedQuery, Weights,
};
pub use persist::{deserialize_index, serialize_index};
pub use refinery::build_hybrid_index;
pub use search::{
    greedy_hybrid_search, greedy_hybrid_search_with, Hit, KeywordMatch, SearchOptions, SearchResult, Warning,
};
