//! Exhaustive oracles, retrieval metrics and the beam-width sweep.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use serde::Serialize;

use crate::distance::query_score;
use crate::error::{Error, Result};
use crate::index::HybridIndex;
use crate::model::{build_query_vector, DocumentStore, QuerySpec};
use crate::par;
use crate::search::{batch_query, SearchOptions};

/// Exact weighted top-k over non-deleted documents, keyword-filtered first
/// (all required terms). Ties by ascending node id. Hop rewards are not
/// applied. Returns `(node, score)`.
pub fn brute_force_topk(q: &QuerySpec, store: &DocumentStore) -> Result<Vec<(u32, f64)>> {
    store.check_query(q)?;
    let wq = build_query_vector(&q.vector, &q.weights)?;
    let scores = par::map_range(store.len(), |u| {
        let doc = store.doc(u as u32);
        let eligible = !doc.deleted && q.required_keywords.iter().all(|t| doc.has_keyword(*t));
        eligible.then(|| (u as u32, query_score(&wq, &doc.vector)))
    });
    let mut all: Vec<(u32, f64)> = scores.into_iter().flatten().collect();
    all.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    all.truncate(q.k);
    Ok(all)
}

/// `|result[..k] ∩ truth[..k]| / min(k, |truth|)`.
pub fn recall_at_k<T: Eq + std::hash::Hash>(result: &[T], truth: &[T], k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidParameter("recall cutoff k must be positive".into()));
    }
    if truth.is_empty() {
        return Err(Error::InvalidParameter("recall needs a non-empty truth list".into()));
    }
    let t: HashSet<&T> = truth.iter().take(k).collect();
    let hit = result.iter().take(k).collect::<HashSet<&T>>().intersection(&t).count();
    Ok(hit as f64 / k.min(truth.len()) as f64)
}

/// nDCG@k with `gain / log2(rank + 1)` discounting; 0 when no ideal gain.
pub fn ndcg_at_k<T: Eq + std::hash::Hash>(result: &[T], relevance: &HashMap<T, f64>, k: usize) -> f64 {
    let dcg: f64 = result
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, d)| relevance.get(d).copied().unwrap_or(0.0) / ((i + 2) as f64).log2())
        .sum();
    let mut ideal: Vec<f64> = relevance.values().copied().filter(|g| *g > 0.0).collect();
    ideal.sort_by(|a, b| b.total_cmp(a));
    let idcg: f64 = ideal.iter().take(k).enumerate().map(|(i, g)| g / ((i + 2) as f64).log2()).sum();
    if idcg == 0.0 {
        0.0
    } else {
        dcg / idcg
    }
}

/// Relevance judgments for one query.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Judgment {
    /// Ranked relevant doc ids.
    pub relevant: Vec<u64>,
    /// Graded gains aligned with `relevant`; binary when absent.
    pub gains: Option<Vec<f64>>,
}

impl Judgment {
    pub fn binary(relevant: Vec<u64>) -> Self {
        Judgment { relevant, gains: None }
    }

    pub fn gain_map(&self) -> HashMap<u64, f64> {
        match &self.gains {
            Some(g) => self.relevant.iter().copied().zip(g.iter().copied()).collect(),
            None => self.relevant.iter().map(|&d| (d, 1.0)).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub beam: usize,
    pub qps: f64,
    pub recall: f64,
    pub ndcg: f64,
    pub latency_ms: f64,
}

/// Sweeps beam widths over the query set; one row per width.
pub fn run_benchmark(
    index: &HybridIndex,
    queries: &[QuerySpec],
    truth: &[Judgment],
    beams: &[usize],
    k: usize,
) -> Result<Vec<BenchRow>> {
    if truth.len() < queries.len() {
        return Err(Error::MissingTruth(truth.len()));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("k must be positive".into()));
    }
    let gains: Vec<HashMap<u64, f64>> = truth.iter().map(Judgment::gain_map).collect();
    let mut rows = Vec::with_capacity(beams.len());
    for &beam in beams {
        let batch: Vec<QuerySpec> =
            queries.iter().map(|q| QuerySpec { k, beam_width: beam.max(k), ..q.clone() }).collect();
        let report = batch_query(&batch, index, &SearchOptions::default());
        let mut recall = 0.0;
        let mut ndcg = 0.0;
        let mut counted = 0usize;
        for (i, res) in report.results.into_iter().enumerate() {
            let ids = res?.doc_ids();
            if truth[i].relevant.is_empty() {
                continue;
            }
            recall += recall_at_k(&ids, &truth[i].relevant, k)?;
            ndcg += ndcg_at_k(&ids, &gains[i], k);
            counted += 1;
        }
        let c = counted.max(1) as f64;
        rows.push(BenchRow {
            beam,
            qps: report.qps.unwrap_or(0.0),
            recall: recall / c,
            ndcg: ndcg / c,
            latency_ms: 1e3 * report.elapsed.as_secs_f64() / queries.len().max(1) as f64,
        });
    }
    Ok(rows)
}

pub const BENCH_CSV_HEADER: &str = "beam,qps,recall,ndcg,latency_ms";

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from(BENCH_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{},{:.3},{:.6},{:.6},{:.6}", r.beam, r.qps, r.recall, r.ndcg, r.latency_ms);
    }
    out
}

pub fn bench_table(rows: &[BenchRow]) -> String {
    let mut out = format!("{:>6} {:>12} {:>8} {:>8} {:>12}\n", "beam", "qps", "recall", "ndcg", "latency_ms");
    for r in rows {
        let _ = writeln!(out, "{:>6} {:>12.1} {:>8.4} {:>8.4} {:>12.4}", r.beam, r.qps, r.recall, r.ndcg, r.latency_ms);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recall_examples() {
        assert_eq!(recall_at_k(&[1, 2, 3], &[1, 2, 3], 3).unwrap(), 1.0);
        assert_eq!(recall_at_k(&[1, 2, 3], &[4, 5, 6], 3).unwrap(), 0.0);
        let a: Vec<u32> = (0..10).collect();
        let b: Vec<u32> = (5..15).collect();
        assert_eq!(recall_at_k(&a, &b, 10).unwrap(), 0.5);
        assert!(recall_at_k(&a, &b, 0).is_err());
    }

    #[test]
    fn ndcg_examples() {
        let rel: HashMap<u32, f64> = [(7, 1.0)].into_iter().collect();
        assert!((ndcg_at_k(&[7, 1], &rel, 2) - 1.0).abs() < 1e-12);
        let expect = 1.0 / 3f64.log2();
        assert!((ndcg_at_k(&[1, 7], &rel, 2) - expect).abs() < 1e-12);
        assert!((expect - 0.6309).abs() < 1e-4);
        assert_eq!(ndcg_at_k(&[1, 2], &rel, 2), 0.0);
        assert_eq!(ndcg_at_k(&[1, 2], &HashMap::<u32, f64>::new(), 2), 0.0);
    }

    #[test]
    fn csv_header() {
        let rows = [BenchRow { beam: 16, qps: 100.0, recall: 0.5, ndcg: 0.25, latency_ms: 10.0 }];
        let csv = bench_csv(&rows);
        assert!(csv.starts_with("beam,qps,recall,ndcg,latency_ms\n16,"));
    }
}
