//! Word similarity graphs: exact blocked cosine kNN over an embedding matrix,
//! plus TSV import and export for externally computed graphs.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use indexmap::IndexMap;
use rayon::prelude::*;

use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};

pub const DEFAULT_TOP_N: usize = 200;
pub const DEFAULT_BLOCK_SIZE: usize = 1000;

/// A ranked `(neighbor, weight)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Neighbor {
    pub word: String,
    pub weight: f64,
}

/// Per-word ranked neighbor lists.
///
/// Lists are sorted by weight descending with ties broken by the
/// lexicographic order of the neighbor token, never contain the word itself,
/// and hold at most `top_n` entries.
#[derive(Debug, Clone, Default)]
pub struct SimilarityGraph {
    top_n: usize,
    entries: IndexMap<String, Vec<Neighbor>>,
}

impl PartialEq for SimilarityGraph {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}

impl SimilarityGraph {
    pub fn new(top_n: usize) -> Self {
        SimilarityGraph {
            top_n,
            entries: IndexMap::new(),
        }
    }

    /// Inserts or replaces the list for `word`, restoring the list
    /// invariants (self-edge removal, duplicate collapse, ordering, cap).
    /// Returns the number of self-edges dropped.
    pub fn insert(&mut self, word: impl Into<String>, neighbors: Vec<Neighbor>) -> usize {
        let word = word.into();
        let before = neighbors.len();
        let mut list: Vec<Neighbor> = neighbors.into_iter().filter(|n| n.word != word).collect();
        let self_edges = before - list.len();
        // Keep the heaviest copy of a repeated neighbor.
        list.sort_by(|a, b| a.word.cmp(&b.word).then(b.weight.total_cmp(&a.weight)));
        list.dedup_by(|a, b| a.word == b.word);
        list.sort_by(rank_order);
        list.truncate(self.top_n);
        self.entries.insert(word, list);
        self_edges
    }

    pub fn top_n(&self) -> usize {
        self.top_n
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains_key(word)
    }

    pub fn neighbors(&self, word: &str) -> Option<&[Neighbor]> {
        self.entries.get(word).map(Vec::as_slice)
    }

    pub fn words(&self) -> impl Iterator<Item = &str> + '_ {
        self.entries.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[Neighbor])> + '_ {
        self.entries.iter().map(|(w, l)| (w.as_str(), l.as_slice()))
    }

    pub fn edge_count(&self) -> usize {
        self.entries.values().map(Vec::len).sum()
    }

    pub fn load(path: impl AsRef<Path>, top_n: usize) -> Result<(Self, ImportStats)> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingFile(path.to_owned()),
            _ => Error::Io(e),
        })?;
        Self::read(BufReader::new(file), top_n)
    }

    /// Parses `word<TAB>neighbor<TAB>weight` lines. A line whose neighbor and
    /// weight fields are both empty declares a word with no neighbors.
    pub fn read<R: BufRead>(reader: R, top_n: usize) -> Result<(Self, ImportStats)> {
        if top_n == 0 {
            return Err(Error::InvalidParameter("topN must be at least 1".into()));
        }
        let mut raw: IndexMap<String, Vec<Neighbor>> = IndexMap::new();
        let mut stats = ImportStats::default();
        for (lineno, line) in reader.lines().enumerate() {
            let lineno = lineno + 1;
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split('\t');
            let (Some(word), Some(neighbor), Some(weight)) =
                (fields.next(), fields.next(), fields.next())
            else {
                return Err(Error::parse(lineno, "expected word<TAB>neighbor<TAB>weight"));
            };
            if word.is_empty() {
                return Err(Error::parse(lineno, "empty word"));
            }
            let list = raw.entry(word.to_owned()).or_default();
            if neighbor.is_empty() && weight.is_empty() {
                continue;
            }
            let weight: f64 = weight
                .trim()
                .parse()
                .map_err(|_| Error::parse(lineno, format!("unparsable weight {weight:?}")))?;
            if !weight.is_finite() {
                return Err(Error::parse(lineno, format!("non-finite weight {weight}")));
            }
            if neighbor.is_empty() {
                return Err(Error::parse(lineno, "empty neighbor"));
            }
            stats.edges_read += 1;
            list.push(Neighbor {
                word: neighbor.to_owned(),
                weight,
            });
        }
        let mut graph = SimilarityGraph::new(top_n);
        for (word, list) in raw {
            stats.self_edges_dropped += graph.insert(word, list);
        }
        if stats.self_edges_dropped > 0 {
            log::warn!("dropped {} self-edges", stats.self_edges_dropped);
        }
        Ok((graph, stats))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut writer = BufWriter::new(File::create(path)?);
        self.write(&mut writer)?;
        writer.flush()?;
        Ok(())
    }

    pub fn write<W: Write>(&self, mut writer: W) -> Result<()> {
        for (word, list) in &self.entries {
            if list.is_empty() {
                writeln!(writer, "{word}\t\t")?;
            }
            for n in list {
                // f64 Display is the shortest exact rendering.
                writeln!(writer, "{word}\t{}\t{}", n.word, n.weight)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ImportStats {
    pub edges_read: usize,
    pub self_edges_dropped: usize,
}

fn rank_order(a: &Neighbor, b: &Neighbor) -> Ordering {
    b.weight.total_cmp(&a.weight).then_with(|| a.word.cmp(&b.word))
}

/// Heap entry ordered so that the *worst* candidate sits at the top.
#[derive(Clone, Copy)]
struct Candidate {
    weight: f64,
    lex_rank: u32,
    index: u32,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    // Greater = worse: lower weight, then later token.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .weight
            .total_cmp(&self.weight)
            .then(self.lex_rank.cmp(&other.lex_rank))
    }
}

/// Builds the exact top-`top_n` cosine neighbor graph of `m`.
///
/// Rows are split into blocks of `block_size` handled by parallel workers;
/// each worker streams over column blocks of the same size. Every dot
/// product is summed in the same order regardless of blocking, so the graph
/// does not depend on `block_size` or on the number of workers.
pub fn build_knn_graph(m: &EmbeddingMatrix, top_n: usize, block_size: usize) -> Result<SimilarityGraph> {
    if top_n == 0 {
        return Err(Error::InvalidParameter("topN must be at least 1".into()));
    }
    if block_size == 0 {
        return Err(Error::InvalidParameter("block size must be at least 1".into()));
    }
    let v = m.len();
    if v < 2 {
        return Err(Error::InsufficientVocabulary(v));
    }
    let dim = m.dim();
    let norms = m.norms();
    let mut order: Vec<u32> = (0..v as u32).collect();
    order.sort_by(|&a, &b| m.vocab()[a as usize].cmp(&m.vocab()[b as usize]));
    let mut lex_rank = vec![0u32; v];
    for (rank, &i) in order.iter().enumerate() {
        lex_rank[i as usize] = rank as u32;
    }
    let k = top_n.min(v - 1);

    let row_blocks: Vec<(usize, usize)> = (0..v)
        .step_by(block_size)
        .map(|s| (s, (s + block_size).min(v)))
        .collect();

    let lists: Vec<Vec<Vec<Neighbor>>> = row_blocks
        .par_iter()
        .map(|&(r0, r1)| {
            let mut heaps: Vec<BinaryHeap<Candidate>> =
                (r0..r1).map(|_| BinaryHeap::with_capacity(k + 1)).collect();
            let mut block = vec![0.0f64; (r1 - r0) * block_size.min(v)];
            for c0 in (0..v).step_by(block_size) {
                let c1 = (c0 + block_size).min(v);
                let width = c1 - c0;
                // Dense product of the row block with the column block.
                for i in r0..r1 {
                    let a = m.row(i);
                    let out = &mut block[(i - r0) * width..(i - r0 + 1) * width];
                    for (j, slot) in (c0..c1).zip(out.iter_mut()) {
                        let b = m.row(j);
                        let mut s = 0.0f64;
                        for d in 0..dim {
                            s += f64::from(a[d]) * f64::from(b[d]);
                        }
                        *slot = s;
                    }
                }
                for i in r0..r1 {
                    let heap = &mut heaps[i - r0];
                    let out = &block[(i - r0) * width..(i - r0 + 1) * width];
                    for (j, &d) in (c0..c1).zip(out) {
                        if j == i {
                            continue;
                        }
                        let cand = Candidate {
                            weight: (d / (norms[i] * norms[j])).clamp(-1.0, 1.0),
                            lex_rank: lex_rank[j],
                            index: j as u32,
                        };
                        if heap.len() < k {
                            heap.push(cand);
                        } else if cand < *heap.peek().expect("k >= 1") {
                            heap.pop();
                            heap.push(cand);
                        }
                    }
                }
            }
            heaps
                .into_iter()
                .map(|heap| {
                    heap.into_sorted_vec()
                        .into_iter()
                        .map(|c| Neighbor {
                            word: m.vocab()[c.index as usize].clone(),
                            weight: c.weight,
                        })
                        .collect()
                })
                .collect()
        })
        .collect();

    let mut graph = SimilarityGraph::new(top_n);
    for (word, list) in m.vocab().iter().zip(lists.into_iter().flatten()) {
        graph.entries.insert(word.clone(), list);
    }
    Ok(graph)
}

/// Brute-force top-`k` cosine neighbors of an arbitrary query vector.
pub fn nearest_words(m: &EmbeddingMatrix, query: &[f64], k: usize, exclude: Option<&str>) -> Vec<Neighbor> {
    let qn = crate::embedding::l2_norm(query);
    let norms = m.norms();
    let mut all: Vec<Neighbor> = m
        .iter()
        .zip(&norms)
        .filter(|((w, _), _)| Some(*w) != exclude)
        .map(|((w, row), n)| {
            let d: f64 = row.iter().zip(query).map(|(&x, y)| f64::from(x) * y).sum();
            Neighbor {
                word: w.to_owned(),
                weight: (d / (n * qn)).clamp(-1.0, 1.0),
            }
        })
        .collect();
    all.sort_by(rank_order);
    all.truncate(k);
    all
}
