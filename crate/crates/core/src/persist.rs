//! Binary index file.
//!
//! Layout: a fixed header followed by tagged sections in a fixed order. Every
//! section is `tag: u32, len: u64, payload, checksum: u64` where the checksum
//! is the first eight bytes of SHA-256 over tag and payload. Integers are
//! little-endian; vector values are stored as f32. Keyword-edge, logical-edge
//! and knowledge-graph sections are omitted when empty and flagged in the
//! header.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::index::{BuildParams, HybridIndex, KeywordRule};
use crate::logical::{EntityMap, LogicalEdge};
use crate::model::{DenseVector, DocumentRecord, DocumentStore, FusedVector, KnowledgeGraph, SparseVector, Triplet};

pub const MAGIC: [u8; 8] = *b"HYBIDX\0\x01";
pub const FORMAT_VERSION: u32 = 1;

const FLAG_KEYWORD: u32 = 1;
const FLAG_LOGICAL: u32 = 1 << 1;
const FLAG_KG: u32 = 1 << 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Section {
    Header,
    Vectors,
    Meta,
    Keywords,
    Entities,
    Semantic,
    KeywordEdges,
    LogicalEdges,
    Graph,
    EntityMap,
    EntryList,
}

impl Section {
    fn tag(self) -> u32 {
        self as u32 + 1
    }

    fn name(self) -> &'static str {
        match self {
            Section::Header => "header",
            Section::Vectors => "vectors",
            Section::Meta => "meta",
            Section::Keywords => "keywords",
            Section::Entities => "entities",
            Section::Semantic => "semantic-edges",
            Section::KeywordEdges => "keyword-edges",
            Section::LogicalEdges => "logical-edges",
            Section::Graph => "knowledge-graph",
            Section::EntityMap => "entity-map",
            Section::EntryList => "entry-list",
        }
    }
}

fn checksum(tag: u32, payload: &[u8]) -> u64 {
    let mut h = Sha256::new();
    h.update(tag.to_le_bytes());
    h.update(payload);
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

#[derive(Default)]
struct Buf(Vec<u8>);

impl Buf {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f32(&mut self, v: f32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn len(&mut self, v: usize) {
        self.u32(v as u32);
    }
    fn ids(&mut self, ids: &[u32]) {
        self.len(ids.len());
        ids.iter().for_each(|&i| self.u32(i));
    }
    fn sparse(&mut self, s: &SparseVector) {
        self.len(s.nnz());
        for (i, v) in s.iter() {
            self.u32(i);
            self.f32(v);
        }
    }
}

fn section(out: &mut Vec<u8>, s: Section, payload: Buf) {
    let tag = s.tag();
    out.extend_from_slice(&tag.to_le_bytes());
    out.extend_from_slice(&(payload.0.len() as u64).to_le_bytes());
    out.extend_from_slice(&payload.0);
    out.extend_from_slice(&checksum(tag, &payload.0).to_le_bytes());
}

/// The exact bytes [`serialize_index`] writes.
pub fn to_bytes(index: &HybridIndex) -> Vec<u8> {
    let store = &index.store;
    let n = store.len();
    let p = &index.params;
    let mut flags = 0;
    if index.keyword_edge_count() > 0 {
        flags |= FLAG_KEYWORD;
    }
    if index.logical_edge_count() > 0 {
        flags |= FLAG_LOGICAL;
    }
    if index.kg.is_some() {
        flags |= FLAG_KG;
    }

    let mut out = Vec::new();
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    let mut h = Buf::default();
    h.u64(n as u64);
    h.u64(store.dense_dim() as u64);
    h.u64(p.degree as u64);
    h.u32(flags);
    h.u32(p.max_hops);
    h.u64(p.fanout_cap as u64);
    h.u64(p.seed);
    h.u64(p.knn_k as u64);
    h.u64(p.iterations as u64);
    h.u32(match p.keyword_rule {
        KeywordRule::Union => 0,
        KeywordRule::PerNeighbor => 1,
    });
    section(&mut out, Section::Header, h);

    let mut b = Buf::default();
    for doc in store.docs() {
        doc.vector.dense().as_slice().iter().for_each(|&x| b.f32(x));
        b.sparse(doc.vector.learned());
        b.sparse(doc.vector.statistical());
    }
    section(&mut out, Section::Vectors, b);

    let mut b = Buf::default();
    for doc in store.docs() {
        b.u64(doc.doc_id);
        b.u8(doc.deleted as u8);
    }
    section(&mut out, Section::Meta, b);

    // keyword sets equal to the statistical support are stored as a marker
    let mut b = Buf::default();
    for doc in store.docs() {
        if doc.keywords_are_statistical() {
            b.u8(0);
        } else {
            b.u8(1);
            b.ids(&doc.keywords);
        }
    }
    section(&mut out, Section::Keywords, b);

    let mut b = Buf::default();
    store.docs().iter().for_each(|doc| b.ids(&doc.entities));
    section(&mut out, Section::Entities, b);

    let mut b = Buf::default();
    index.semantic.iter().for_each(|&v| b.u32(v));
    index.forward_len.iter().for_each(|&f| b.u32(f));
    index.bridge_len.iter().for_each(|&f| b.u32(f));
    section(&mut out, Section::Semantic, b);

    if flags & FLAG_KEYWORD != 0 {
        let mut b = Buf::default();
        index.keyword_edges.iter().for_each(|row| b.ids(row));
        section(&mut out, Section::KeywordEdges, b);
    }
    if flags & FLAG_LOGICAL != 0 {
        let mut b = Buf::default();
        for row in &index.logical_edges {
            b.len(row.len());
            for e in row {
                b.u32(e.source);
                b.u32(e.relation);
                b.u32(e.target);
                b.u32(e.node);
            }
        }
        section(&mut out, Section::LogicalEdges, b);
    }
    if let Some(kg) = &index.kg {
        let mut b = Buf::default();
        b.u64(kg.triplets().len() as u64);
        for t in kg.triplets() {
            b.u32(t.source);
            b.u32(t.relation);
            b.u32(t.target);
        }
        section(&mut out, Section::Graph, b);
    }

    let mut b = Buf::default();
    b.u64(index.entity_map.len() as u64);
    for (e, nodes) in index.entity_map.iter() {
        b.u32(e);
        b.ids(nodes);
    }
    section(&mut out, Section::EntityMap, b);

    let mut b = Buf::default();
    index.entry_order.iter().for_each(|&u| b.u32(u));
    section(&mut out, Section::EntryList, b);
    debug_assert_eq!(n, index.forward_len.len());
    out
}

/// Writes the index to `path`; returns the byte count.
pub fn serialize_index(index: &HybridIndex, path: &Path) -> Result<u64> {
    let bytes = to_bytes(index);
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&bytes)?;
    w.flush()?;
    Ok(bytes.len() as u64)
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(len).ok_or(Error::Truncated)?;
        let s = self.data.get(self.pos..end).ok_or(Error::Truncated)?;
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
    fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| Error::Malformed("size exceeds address space".into()))
    }
    fn len(&mut self) -> Result<usize> {
        let len = self.u32()? as usize;
        // every element occupies at least four bytes
        if len > (self.data.len() - self.pos) / 4 {
            return Err(Error::Malformed("list length exceeds section".into()));
        }
        Ok(len)
    }
    fn ids(&mut self) -> Result<Vec<u32>> {
        let len = self.len()?;
        (0..len).map(|_| self.u32()).collect()
    }
    fn sparse(&mut self) -> Result<SparseVector> {
        let len = self.len()?;
        let pairs = (0..len).map(|_| Ok((self.u32()?, self.f32()?))).collect::<Result<Vec<_>>>()?;
        Ok(SparseVector::new(pairs))
    }
    fn done(&self, s: Section) -> Result<()> {
        if self.pos != self.data.len() {
            return Err(Error::Malformed(format!("trailing bytes in {} section", s.name())));
        }
        Ok(())
    }
}

/// Reads the next section, which must be `expected`; verifies its checksum.
fn read_section<'a>(c: &mut Cursor<'a>, expected: Section) -> Result<Cursor<'a>> {
    let tag = c.u32()?;
    if tag != expected.tag() {
        return Err(Error::Malformed(format!("expected {} section, found tag {tag}", expected.name())));
    }
    let len = c.usize()?;
    let payload = c.take(len)?;
    let sum = c.u64()?;
    if sum != checksum(tag, payload) {
        return Err(Error::ChecksumFailure(expected.name()));
    }
    Ok(Cursor { data: payload, pos: 0 })
}

/// Parses an index from the bytes produced by [`to_bytes`].
pub fn from_bytes(data: &[u8], check_invariants: bool) -> Result<HybridIndex> {
    if data.len() < MAGIC.len() || data[..MAGIC.len()] != MAGIC {
        return Err(Error::NotAnIndex);
    }
    let mut c = Cursor { data, pos: MAGIC.len() };
    let version = c.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::VersionMismatch(version));
    }

    let mut h = read_section(&mut c, Section::Header)?;
    let n = h.usize()?;
    let m = h.usize()?;
    let d = h.usize()?;
    let flags = h.u32()?;
    let max_hops = h.u32()?;
    let fanout_cap = h.usize()?;
    let seed = h.u64()?;
    let knn_k = h.usize()?;
    let iterations = h.usize()?;
    let keyword_rule = match h.u32()? {
        0 => KeywordRule::Union,
        1 => KeywordRule::PerNeighbor,
        r => return Err(Error::Malformed(format!("unknown keyword rule {r}"))),
    };
    h.done(Section::Header)?;
    let params = BuildParams { knn_k, iterations, degree: d, seed, keyword_rule, fanout_cap, max_hops };
    // a header claiming more nodes than bytes remain is rejected before allocating
    if n == 0 || n > data.len() || d.checked_mul(n).is_none_or(|x| x > data.len()) {
        return Err(Error::Malformed(format!("implausible header: n = {n}, d = {d}")));
    }

    let mut s = read_section(&mut c, Section::Vectors)?;
    let mut vectors = Vec::with_capacity(n);
    for _ in 0..n {
        let dense = (0..m).map(|_| s.f32()).collect::<Result<Vec<_>>>()?;
        let learned = s.sparse()?;
        let stat = s.sparse()?;
        vectors.push(FusedVector::new(DenseVector::new(dense), learned, stat));
    }
    s.done(Section::Vectors)?;

    let mut s = read_section(&mut c, Section::Meta)?;
    let mut docs = Vec::with_capacity(n);
    for v in vectors {
        let id = s.u64()?;
        let mut doc = DocumentRecord::new(id, v);
        doc.deleted = match s.u8()? {
            0 => false,
            1 => true,
            b => return Err(Error::Malformed(format!("bad deleted flag {b}"))),
        };
        docs.push(doc);
    }
    s.done(Section::Meta)?;

    let mut s = read_section(&mut c, Section::Keywords)?;
    for doc in &mut docs {
        match s.u8()? {
            0 => {}
            1 => doc.keywords = s.ids()?,
            b => return Err(Error::Malformed(format!("bad keyword marker {b}"))),
        }
    }
    s.done(Section::Keywords)?;

    let mut s = read_section(&mut c, Section::Entities)?;
    for doc in &mut docs {
        doc.entities = s.ids()?;
    }
    s.done(Section::Entities)?;

    let mut s = read_section(&mut c, Section::Semantic)?;
    let semantic = (0..n * d).map(|_| s.u32()).collect::<Result<Vec<_>>>()?;
    let forward_len = (0..n).map(|_| s.u32()).collect::<Result<Vec<_>>>()?;
    let bridge_len = (0..n).map(|_| s.u32()).collect::<Result<Vec<_>>>()?;
    if forward_len.iter().zip(&bridge_len).any(|(&f, &b)| f as usize + b as usize > d) {
        return Err(Error::Malformed("slot counts exceed degree".into()));
    }
    s.done(Section::Semantic)?;

    let keyword_edges = if flags & FLAG_KEYWORD != 0 {
        let mut s = read_section(&mut c, Section::KeywordEdges)?;
        let rows = (0..n).map(|_| s.ids()).collect::<Result<Vec<_>>>()?;
        s.done(Section::KeywordEdges)?;
        rows
    } else {
        vec![Vec::new(); n]
    };

    let logical_edges = if flags & FLAG_LOGICAL != 0 {
        let mut s = read_section(&mut c, Section::LogicalEdges)?;
        let mut rows = Vec::with_capacity(n);
        for _ in 0..n {
            let len = s.len()?;
            let row = (0..len)
                .map(|_| Ok(LogicalEdge { source: s.u32()?, relation: s.u32()?, target: s.u32()?, node: s.u32()? }))
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        s.done(Section::LogicalEdges)?;
        rows
    } else {
        vec![Vec::new(); n]
    };

    let kg = if flags & FLAG_KG != 0 {
        let mut s = read_section(&mut c, Section::Graph)?;
        let count = s.usize()?;
        if count > s.data.len() / 12 {
            return Err(Error::Malformed("triplet count exceeds section".into()));
        }
        let triplets = (0..count)
            .map(|_| Ok(Triplet { source: s.u32()?, relation: s.u32()?, target: s.u32()? }))
            .collect::<Result<Vec<_>>>()?;
        s.done(Section::Graph)?;
        Some(KnowledgeGraph::new(triplets))
    } else {
        None
    };

    let mut s = read_section(&mut c, Section::EntityMap)?;
    let count = s.usize()?;
    if count > s.data.len() / 8 {
        return Err(Error::Malformed("entity count exceeds section".into()));
    }
    let mut map = BTreeMap::new();
    for _ in 0..count {
        let e = s.u32()?;
        map.insert(e, s.ids()?);
    }
    s.done(Section::EntityMap)?;

    let mut s = read_section(&mut c, Section::EntryList)?;
    let entry_order = (0..n).map(|_| s.u32()).collect::<Result<Vec<_>>>()?;
    s.done(Section::EntryList)?;
    if c.pos != data.len() {
        return Err(Error::Malformed("trailing bytes after last section".into()));
    }

    // node ids are range-checked even without the full scan so that search
    // never indexes out of bounds
    let in_range = |v: &u32| (*v as usize) < n;
    let ranges_ok = semantic.iter().all(in_range)
        && entry_order.iter().all(in_range)
        && keyword_edges.iter().flatten().all(in_range)
        && logical_edges.iter().flatten().all(|e| in_range(&e.node))
        && map.values().flatten().all(in_range);
    if !ranges_ok {
        return Err(Error::Malformed("node id out of range".into()));
    }
    let store = DocumentStore::new(docs)?;
    if store.dense_dim() != m {
        return Err(Error::Malformed(format!("header dimension {m} disagrees with vectors")));
    }
    let index = HybridIndex {
        store,
        params,
        semantic,
        forward_len,
        bridge_len,
        keyword_edges,
        logical_edges,
        entity_map: EntityMap::from_map(map),
        kg,
        entry_order,
    };
    if check_invariants {
        index.check_invariants()?;
    }
    Ok(index)
}

/// Loads an index file; `check_invariants` runs the structural scan too.
pub fn deserialize_index(path: &Path, check_invariants: bool) -> Result<HybridIndex> {
    let mut data = Vec::new();
    File::open(path)?.read_to_end(&mut data)?;
    from_bytes(&data, check_invariants)
}
