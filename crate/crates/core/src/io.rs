//! JSON-lines readers and writers for corpora, knowledge graphs, queries,
//! truth files and search results.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::Judgment;
use crate::model::{DenseVector, DocumentRecord, FusedVector, QuerySpec, SparseVector, Triplet, Weights};
use crate::search::SearchResult;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DocLine {
    pub id: u64,
    pub dense: Vec<f32>,
    #[serde(default)]
    pub learned: Vec<(u32, f32)>,
    #[serde(default)]
    pub statistical: Vec<(u32, f32)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub keywords: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub entities: Vec<u32>,
}

impl DocLine {
    pub fn from_record(doc: &DocumentRecord) -> Self {
        DocLine {
            id: doc.doc_id,
            dense: doc.vector.dense().as_slice().to_vec(),
            learned: doc.vector.learned().iter().collect(),
            statistical: doc.vector.statistical().iter().collect(),
            keywords: (doc.keywords.as_slice() != doc.vector.statistical().indices()).then(|| doc.keywords.clone()),
            entities: doc.entities.clone(),
        }
    }

    /// Sparse parts are taken as given; ordering defects surface during
    /// corpus validation.
    pub fn into_record(self) -> DocumentRecord {
        let v = FusedVector::new(
            DenseVector::new(self.dense),
            SparseVector::new(self.learned),
            SparseVector::new(self.statistical),
        );
        let mut doc = DocumentRecord::new(self.id, v);
        if let Some(kw) = self.keywords {
            doc = doc.with_keywords(kw);
        }
        doc.with_entities(self.entities)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripletLine {
    pub s: u32,
    pub r: u32,
    pub t: u32,
}

fn default_k() -> usize {
    10
}

fn default_beam() -> usize {
    64
}

fn unit_weights() -> [f32; 4] {
    [1.0, 1.0, 1.0, 0.0]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryLine {
    pub dense: Vec<f32>,
    #[serde(default)]
    pub learned: Vec<(u32, f32)>,
    #[serde(default)]
    pub statistical: Vec<(u32, f32)>,
    #[serde(default = "unit_weights")]
    pub weights: [f32; 4],
    #[serde(default)]
    pub keywords: Vec<u32>,
    #[serde(default)]
    pub entities: Vec<u32>,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_beam")]
    pub beam: usize,
}

impl QueryLine {
    pub fn from_spec(q: &QuerySpec) -> Self {
        QueryLine {
            dense: q.vector.dense().as_slice().to_vec(),
            learned: q.vector.learned().iter().collect(),
            statistical: q.vector.statistical().iter().collect(),
            weights: q.weights.as_array(),
            keywords: q.required_keywords.clone(),
            entities: q.entities.clone(),
            k: q.k,
            beam: q.beam_width,
        }
    }

    pub fn into_spec(self) -> QuerySpec {
        let v = FusedVector::new(
            DenseVector::new(self.dense),
            SparseVector::new(self.learned),
            SparseVector::new(self.statistical),
        );
        let [d, s, f, k] = self.weights;
        QuerySpec::new(v, Weights::new(d, s, f, k), self.k, self.beam)
            .with_keywords(self.keywords)
            .with_entities(self.entities)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthLine {
    pub qid: usize,
    pub relevant: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gains: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultEntry {
    pub id: u64,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultLine {
    pub qid: usize,
    pub results: Vec<ResultEntry>,
    pub warnings: Vec<String>,
}

impl ResultLine {
    pub fn from_result(qid: usize, r: &SearchResult) -> Self {
        ResultLine {
            qid,
            results: r.hits.iter().map(|h| ResultEntry { id: h.doc_id, score: h.score }).collect(),
            warnings: r.warnings.iter().map(|w| w.code().to_string()).collect(),
        }
    }
}

/// Parses every non-blank line of `reader` as `T`.
pub fn read_lines<T: for<'de> Deserialize<'de>>(reader: impl BufRead) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|e| Error::Parse { line: i + 1, msg: e.to_string() })?;
        out.push(item);
    }
    Ok(out)
}

pub fn read_file<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    read_lines(BufReader::new(File::open(path)?))
}

pub fn write_lines<T: Serialize>(mut writer: impl Write, items: &[T]) -> Result<()> {
    for item in items {
        serde_json::to_writer(&mut writer, item).map_err(|e| Error::Io(e.into()))?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_file<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    write_lines(BufWriter::new(File::create(path)?), items)
}

pub fn read_corpus(path: &Path) -> Result<Vec<DocumentRecord>> {
    Ok(read_file::<DocLine>(path)?.into_iter().map(DocLine::into_record).collect())
}

pub fn write_corpus(path: &Path, docs: &[DocumentRecord]) -> Result<()> {
    let lines: Vec<DocLine> = docs.iter().map(DocLine::from_record).collect();
    write_file(path, &lines)
}

pub fn read_kg(path: &Path) -> Result<Vec<Triplet>> {
    Ok(read_file::<TripletLine>(path)?
        .into_iter()
        .map(|t| Triplet { source: t.s, relation: t.r, target: t.t })
        .collect())
}

pub fn write_kg(path: &Path, triplets: &[Triplet]) -> Result<()> {
    let lines: Vec<TripletLine> =
        triplets.iter().map(|t| TripletLine { s: t.source, r: t.relation, t: t.target }).collect();
    write_file(path, &lines)
}

pub fn read_queries(path: &Path) -> Result<Vec<QuerySpec>> {
    Ok(read_file::<QueryLine>(path)?.into_iter().map(QueryLine::into_spec).collect())
}

pub fn write_queries(path: &Path, queries: &[QuerySpec]) -> Result<()> {
    let lines: Vec<QueryLine> = queries.iter().map(QueryLine::from_spec).collect();
    write_file(path, &lines)
}

/// Truth judgments indexed by `qid`; qids without a line get an empty
/// judgment.
pub fn read_truth(path: &Path, queries: usize) -> Result<Vec<Judgment>> {
    let mut out = vec![Judgment::default(); queries];
    for t in read_file::<TruthLine>(path)? {
        if t.qid >= queries {
            return Err(Error::Parse { line: t.qid, msg: format!("qid {} out of range", t.qid) });
        }
        if let Some(g) = &t.gains {
            if g.len() != t.relevant.len() {
                return Err(Error::LengthMismatch { left: g.len(), right: t.relevant.len() });
            }
        }
        out[t.qid] = Judgment { relevant: t.relevant, gains: t.gains };
    }
    Ok(out)
}

pub fn write_truth(path: &Path, truth: &[Judgment]) -> Result<()> {
    let lines: Vec<TruthLine> = truth
        .iter()
        .enumerate()
        .map(|(qid, j)| TruthLine { qid, relevant: j.relevant.clone(), gains: j.gains.clone() })
        .collect();
    write_file(path, &lines)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doc_line_round_trip() {
        let line = r#"{"id": 4, "dense": [0.5, -1.0], "learned": [[1, 0.5]], "statistical": [[2, 1.0], [9, 0.25]], "entities": [3]}"#;
        let docs: Vec<DocLine> = read_lines(line.as_bytes()).unwrap();
        let rec = docs[0].clone().into_record();
        assert_eq!(rec.doc_id, 4);
        assert_eq!(rec.keywords, vec![2, 9]);
        assert_eq!(rec.entities, vec![3]);
        assert_eq!(DocLine::from_record(&rec), docs[0]);
    }

    #[test]
    fn explicit_keywords_survive() {
        let line = r#"{"id": 1, "dense": [1.0], "statistical": [[2, 1.0]], "keywords": [7, 2]}"#;
        let rec = read_lines::<DocLine>(line.as_bytes()).unwrap().remove(0).into_record();
        assert_eq!(rec.keywords, vec![2, 7]);
        assert_eq!(DocLine::from_record(&rec).keywords, Some(vec![2, 7]));
    }

    #[test]
    fn query_defaults() {
        let q: QueryLine = serde_json::from_str(r#"{"dense": [1.0, 0.0]}"#).unwrap();
        let spec = q.into_spec();
        assert_eq!(spec.k, 10);
        assert_eq!(spec.beam_width, 64);
        assert_eq!(spec.weights.as_array(), [1.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn parse_error_reports_line() {
        let text = "{\"s\":1,\"r\":2,\"t\":3}\n\nnot json\n";
        match read_lines::<TripletLine>(text.as_bytes()) {
            Err(e @ Error::Parse { line: 3, .. }) => assert_eq!(e.code(), "parse-error"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
