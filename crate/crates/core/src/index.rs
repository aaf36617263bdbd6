//! Bit-packed binary codes and exact Hamming-distance retrieval.
//!
//! Bit `i` of a code is component `i` (`+1 → 1`, `−1 → 0`), packed into
//! little-endian `u64` words. Ranking is ascending distance with ties broken
//! by ascending `graph_id`.

use std::collections::HashMap;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::binio::{read_file, write_file, Reader, Writer};
use crate::error::{Error, Result};
use crate::gcn::{binarize, embed_graph, GcnHashParams};
use crate::graphcons::{GraphLabel, TissueGraph};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryCode {
    bits: usize,
    words: Vec<u64>,
}

fn words_for(bits: usize) -> usize {
    bits.div_ceil(64)
}

impl BinaryCode {
    pub fn from_signs(signs: &[i8]) -> Self {
        let mut words = vec![0u64; words_for(signs.len())];
        for (i, &s) in signs.iter().enumerate() {
            if s > 0 {
                words[i / 64] |= 1 << (i % 64);
            }
        }
        BinaryCode {
            bits: signs.len(),
            words,
        }
    }

    pub fn from_words(bits: usize, words: Vec<u64>) -> Result<Self> {
        if words.len() != words_for(bits) {
            return Err(Error::Shape(format!(
                "{} words for a {bits}-bit code",
                words.len()
            )));
        }
        let mut code = BinaryCode { bits, words };
        code.mask_tail();
        Ok(code)
    }

    /// Uniformly random code.
    pub fn random(bits: usize, rng: &mut impl Rng) -> Self {
        let words = (0..words_for(bits)).map(|_| rng.random()).collect();
        let mut code = BinaryCode { bits, words };
        code.mask_tail();
        code
    }

    fn mask_tail(&mut self) {
        let rem = self.bits % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn to_signs(&self) -> Vec<i8> {
        (0..self.bits)
            .map(|i| {
                if self.words[i / 64] >> (i % 64) & 1 == 1 {
                    1
                } else {
                    -1
                }
            })
            .collect()
    }
}

/// Number of differing bits.
pub fn hamming(a: &BinaryCode, b: &BinaryCode) -> Result<u32> {
    if a.bits != b.bits {
        return Err(Error::Shape(format!(
            "hamming between {}-bit and {}-bit codes",
            a.bits, b.bits
        )));
    }
    Ok(hamming_words(&a.words, &b.words))
}

#[inline]
fn hamming_words(a: &[u64], b: &[u64]) -> u32 {
    a.iter().zip(b).map(|(x, y)| (x ^ y).count_ones()).sum()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexEntry {
    pub graph_id: String,
    pub wsi_id: String,
    pub label: GraphLabel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedHit {
    pub graph_id: String,
    pub distance: u32,
    pub label: GraphLabel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalResult {
    pub query_id: String,
    pub ranked: Vec<RankedHit>,
}

/// Immutable store of codes for exact top-k search.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryCodeIndex {
    code_bits: usize,
    entries: Vec<IndexEntry>,
    /// Flat codes, `words_for(code_bits)` words per entry.
    codes: Vec<u64>,
    /// Entry positions sorted by `graph_id`.
    id_order: Vec<u32>,
}

impl BinaryCodeIndex {
    pub fn new(code_bits: usize) -> Self {
        BinaryCodeIndex {
            code_bits,
            entries: Vec::new(),
            codes: Vec::new(),
            id_order: Vec::new(),
        }
    }

    pub fn from_entries(
        code_bits: usize,
        items: impl IntoIterator<Item = (IndexEntry, BinaryCode)>,
    ) -> Result<Self> {
        let mut index = BinaryCodeIndex::new(code_bits);
        for (entry, code) in items {
            if code.bits != code_bits {
                return Err(Error::Shape(format!(
                    "entry {} has a {}-bit code, index holds {code_bits}-bit codes",
                    entry.graph_id, code.bits
                )));
            }
            index.entries.push(entry);
            index.codes.extend_from_slice(&code.words);
        }
        index.finish()?;
        Ok(index)
    }

    fn finish(&mut self) -> Result<()> {
        let mut order: Vec<u32> = (0..self.entries.len() as u32).collect();
        order.sort_by(|&a, &b| {
            self.entries[a as usize]
                .graph_id
                .cmp(&self.entries[b as usize].graph_id)
        });
        for pair in order.windows(2) {
            let id = &self.entries[pair[0] as usize].graph_id;
            if *id == self.entries[pair[1] as usize].graph_id {
                return Err(Error::InvalidArgument(format!("duplicate graph id `{id}`")));
            }
        }
        self.id_order = order;
        Ok(())
    }

    pub fn code_bits(&self) -> usize {
        self.code_bits
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[IndexEntry] {
        &self.entries
    }

    pub fn code(&self, i: usize) -> BinaryCode {
        let w = words_for(self.code_bits);
        BinaryCode {
            bits: self.code_bits,
            words: self.codes[i * w..(i + 1) * w].to_vec(),
        }
    }

    fn check_query(&self, code: &BinaryCode) -> Result<()> {
        if self.entries.is_empty() {
            return Err(Error::InvalidArgument(
                "query against an empty index".into(),
            ));
        }
        if code.bits != self.code_bits {
            return Err(Error::Shape(format!(
                "{}-bit query against {}-bit index",
                code.bits, self.code_bits
            )));
        }
        Ok(())
    }

    fn hit(&self, pos: usize, distance: u32) -> RankedHit {
        let e = &self.entries[pos];
        RankedHit {
            graph_id: e.graph_id.clone(),
            distance,
            label: e.label,
        }
    }

    /// Exact top-`k` by linear scan; `k` is clamped to the index size.
    pub fn query(&self, query_id: &str, code: &BinaryCode, k: usize) -> Result<RetrievalResult> {
        self.check_query(code)?;
        if k == 0 {
            return Err(Error::InvalidArgument("k must be >= 1".into()));
        }
        let k = k.min(self.entries.len());
        let w = words_for(self.code_bits);
        // Distances in graph-id order, then a counting sort keeps ties in id order.
        let mut dist = Vec::with_capacity(self.entries.len());
        let mut histogram = vec![0usize; self.code_bits + 1];
        for &pos in &self.id_order {
            let p = pos as usize;
            let d = hamming_words(&self.codes[p * w..(p + 1) * w], &code.words);
            histogram[d as usize] += 1;
            dist.push(d);
        }
        let mut taken = 0;
        let mut start = vec![0usize; self.code_bits + 1];
        let mut cutoff = self.code_bits;
        for d in 0..=self.code_bits {
            start[d] = taken;
            taken += histogram[d];
            if taken >= k {
                cutoff = d;
                break;
            }
        }
        let mut slots: Vec<Option<RankedHit>> = vec![None; k];
        let mut next = start;
        for (rank, &d) in dist.iter().enumerate() {
            let d_us = d as usize;
            if d_us > cutoff || next[d_us] >= k {
                continue;
            }
            slots[next[d_us]] = Some(self.hit(self.id_order[rank] as usize, d));
            next[d_us] += 1;
        }
        Ok(RetrievalResult {
            query_id: query_id.to_string(),
            ranked: slots.into_iter().map(|s| s.expect("slot filled")).collect(),
        })
    }

    /// Full ranking of every entry.
    pub fn rank_all(&self, query_id: &str, code: &BinaryCode) -> Result<RetrievalResult> {
        self.query(query_id, code, self.entries.len().max(1))
    }

    /// Every entry within `radius`, ranked, by linear scan.
    pub fn within_radius(&self, code: &BinaryCode, radius: u32) -> Result<Vec<RankedHit>> {
        self.check_query(code)?;
        let w = words_for(self.code_bits);
        let mut hits: Vec<(u32, usize)> = self
            .id_order
            .iter()
            .map(|&p| {
                let p = p as usize;
                (
                    hamming_words(&self.codes[p * w..(p + 1) * w], &code.words),
                    p,
                )
            })
            .filter(|&(d, _)| d <= radius)
            .collect();
        hits.sort_by_key(|&(d, _)| d);
        Ok(hits.into_iter().map(|(d, p)| self.hit(p, d)).collect())
    }
}

/// Exact-code hash table for small-radius lookups.
///
/// Probes every code within the radius, so cost grows as `C(d_h, r)`; meant
/// for radii of 0–2.
pub struct BucketTable<'a> {
    index: &'a BinaryCodeIndex,
    buckets: HashMap<Vec<u64>, Vec<usize>>,
}

impl<'a> BucketTable<'a> {
    pub fn build(index: &'a BinaryCodeIndex) -> Self {
        let mut buckets: HashMap<Vec<u64>, Vec<usize>> = HashMap::new();
        for &p in &index.id_order {
            let p = p as usize;
            buckets.entry(index.code(p).words).or_default().push(p);
        }
        BucketTable { index, buckets }
    }

    pub fn within_radius(&self, code: &BinaryCode, radius: u32) -> Result<Vec<RankedHit>> {
        self.index.check_query(code)?;
        let mut by_distance: Vec<Vec<usize>> = vec![Vec::new(); radius as usize + 1];
        let mut probe = code.words.clone();
        self.probe(&mut probe, 0, 0, radius, &mut by_distance);
        let rank_of: HashMap<usize, usize> = self
            .index
            .id_order
            .iter()
            .enumerate()
            .map(|(r, &p)| (p as usize, r))
            .collect();
        let mut out = Vec::new();
        for (d, mut found) in by_distance.into_iter().enumerate() {
            found.sort_by_key(|p| rank_of[p]);
            out.extend(found.into_iter().map(|p| self.index.hit(p, d as u32)));
        }
        Ok(out)
    }

    fn probe(
        &self,
        words: &mut Vec<u64>,
        from_bit: usize,
        flipped: u32,
        radius: u32,
        out: &mut [Vec<usize>],
    ) {
        if let Some(list) = self.buckets.get(words.as_slice()) {
            out[flipped as usize].extend_from_slice(list);
        }
        if flipped == radius {
            return;
        }
        for bit in from_bit..self.index.code_bits {
            words[bit / 64] ^= 1 << (bit % 64);
            self.probe(words, bit + 1, flipped + 1, radius, out);
            words[bit / 64] ^= 1 << (bit % 64);
        }
    }
}

/// Inference-mode code of one graph.
pub fn encode_code(graph: &TissueGraph, params: &GcnHashParams) -> Result<BinaryCode> {
    let y = embed_graph(graph, params)?;
    Ok(BinaryCode::from_signs(&binarize(y.view())?))
}

/// Encode every non-excluded graph.
pub fn build_index(graphs: &[TissueGraph], params: &GcnHashParams) -> Result<BinaryCodeIndex> {
    let items = graphs
        .iter()
        .filter(|g| g.label != GraphLabel::Excluded)
        .map(|g| {
            let code = encode_code(g, params)?;
            Ok((
                IndexEntry {
                    graph_id: g.graph_id.clone(),
                    wsi_id: g.wsi_id.clone(),
                    label: g.label,
                },
                code,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    BinaryCodeIndex::from_entries(params.dims.code_bits, items)
}

// ---------------------------------------------------------------------------
// Index files

pub const INDEX_MAGIC: &[u8; 4] = b"GHIX";
pub const INDEX_VERSION: u32 = 1;

pub fn encode_index(index: &BinaryCodeIndex) -> Vec<u8> {
    let mut w = Writer::new();
    w.bytes(INDEX_MAGIC);
    w.u32(INDEX_VERSION);
    w.u32(index.code_bits as u32);
    w.u64(index.entries.len() as u64);
    let words = words_for(index.code_bits);
    for (i, e) in index.entries.iter().enumerate() {
        w.str(&e.graph_id);
        w.str(&e.wsi_id);
        w.u8(e.label.to_u8());
        for &word in &index.codes[i * words..(i + 1) * words] {
            w.u64(word);
        }
    }
    let crc = crc32fast::hash(&w.buf);
    w.u32(crc);
    w.buf
}

pub fn decode_index(data: &[u8]) -> Result<BinaryCodeIndex> {
    if data.len() < 24 {
        return Err(Error::Format("index: truncated header".into()));
    }
    if &data[..4] != INDEX_MAGIC {
        return Err(Error::Format("index: bad magic".into()));
    }
    let version = u32::from_le_bytes(data[4..8].try_into().unwrap());
    if version != INDEX_VERSION {
        return Err(Error::Format(format!(
            "index: version {version}, expected {INDEX_VERSION}"
        )));
    }
    let (body, tail) = data.split_at(data.len() - 4);
    if crc32fast::hash(body) != u32::from_le_bytes(tail.try_into().unwrap()) {
        return Err(Error::Format(
            "index: checksum mismatch (corrupt or truncated)".into(),
        ));
    }
    let mut r = Reader::new(body, "index");
    r.take(8)?;
    let code_bits = r.u32()? as usize;
    let count = r.u64()? as usize;
    let words = words_for(code_bits);
    let mut items = Vec::with_capacity(count.min(1 << 20));
    for _ in 0..count {
        let graph_id = r.str()?;
        let wsi_id = r.str()?;
        let label = GraphLabel::from_u8(r.u8()?)?;
        let mut code = Vec::with_capacity(words);
        for _ in 0..words {
            code.push(r.u64()?);
        }
        items.push((
            IndexEntry {
                graph_id,
                wsi_id,
                label,
            },
            BinaryCode::from_words(code_bits, code)?,
        ));
    }
    if r.remaining() != 0 {
        return Err(Error::Format(format!(
            "index: {} bytes after {} entries at offset {}",
            r.remaining(),
            count,
            r.position()
        )));
    }
    BinaryCodeIndex::from_entries(code_bits, items)
}

pub fn save_index(index: &BinaryCodeIndex, path: &Path) -> Result<()> {
    write_file(path, &encode_index(index))
}

pub fn load_index(path: &Path) -> Result<BinaryCodeIndex> {
    decode_index(&read_file(path)?)
}

// ---------------------------------------------------------------------------
// Benchmark

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub size: usize,
    pub code_bits: usize,
    pub queries: usize,
    pub k: usize,
    pub mean_query_ms: f64,
    pub max_query_ms: f64,
}

/// Random index of `size` codes; times `queries` single-threaded top-`k` scans.
pub fn bench_index(
    size: usize,
    code_bits: usize,
    queries: usize,
    k: usize,
    seed: u64,
) -> Result<BenchReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let items = (0..size).map(|i| {
        (
            IndexEntry {
                graph_id: format!("g{i:08}"),
                wsi_id: format!("w{:05}", i / 400),
                label: if rng.random::<bool>() {
                    GraphLabel::Cancerous
                } else {
                    GraphLabel::CancerFree
                },
            },
            BinaryCode::random(code_bits, &mut rng),
        )
    });
    let items: Vec<_> = items.collect();
    let index = BinaryCodeIndex::from_entries(code_bits, items)?;
    let probes: Vec<BinaryCode> = (0..queries)
        .map(|_| BinaryCode::random(code_bits, &mut rng))
        .collect();
    let mut total = 0.0;
    let mut worst = 0.0f64;
    for (i, q) in probes.iter().enumerate() {
        let t = Instant::now();
        let r = index.query("bench", q, k)?;
        let ms = t.elapsed().as_secs_f64() * 1e3;
        std::hint::black_box(&r);
        if i == 0 && queries > 1 {
            continue; // warm-up
        }
        total += ms;
        worst = worst.max(ms);
    }
    let timed = if queries > 1 { queries - 1 } else { queries };
    Ok(BenchReport {
        size,
        code_bits,
        queries,
        k,
        mean_query_ms: total / timed.max(1) as f64,
        max_query_ms: worst,
    })
}
