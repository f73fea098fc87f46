//! Word sense induction by Chinese Whispers clustering of ego-networks.
//!
//! For a target word `t`, the ego-network holds the `N` nearest neighbors of
//! `t` (without `t` itself). Each node is linked to those of its own top-`n`
//! neighbors that are also nodes. Clusters of the network with at least `k`
//! members become the senses of `t`.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use indexmap::IndexMap;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::knn::{Neighbor, SimilarityGraph};

/// Sense-cluster member: a word and its similarity to the target.
pub type Member = Neighbor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct InductionParams {
    /// `N`: number of target neighbors that form the ego-network.
    pub ego_size: usize,
    /// `n`: how many of its own neighbors each node may link to.
    pub connectivity: usize,
    /// `k`: smallest cluster kept as a sense.
    pub min_cluster_size: usize,
    pub max_iterations: usize,
    pub seed: u64,
}

pub const DEFAULT_MAX_ITERATIONS: usize = 20;
pub const DEFAULT_SEED: u64 = 42;

/// Named parameter settings. `Coarse` is the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Granularity {
    Fine,
    Medium,
    #[default]
    Coarse,
}

impl FromStr for Granularity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fine" => Ok(Granularity::Fine),
            "medium" => Ok(Granularity::Medium),
            "coarse" => Ok(Granularity::Coarse),
            other => Err(Error::InvalidParameter(format!("unknown preset {other:?}"))),
        }
    }
}

impl InductionParams {
    pub fn preset(granularity: Granularity) -> Self {
        let (connectivity, min_cluster_size) = match granularity {
            Granularity::Fine => (50, 5),
            Granularity::Medium => (100, 5),
            Granularity::Coarse => (200, 15),
        };
        InductionParams {
            ego_size: 200,
            connectivity,
            min_cluster_size,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            seed: DEFAULT_SEED,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.connectivity < 1 || self.ego_size < self.connectivity {
            return Err(Error::InvalidParameter(format!(
                "need N >= n >= 1, got N={} n={}",
                self.ego_size, self.connectivity
            )));
        }
        if self.min_cluster_size < 1 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        if self.max_iterations < 1 {
            return Err(Error::InvalidParameter(
                "maxIterations must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

impl Default for InductionParams {
    fn default() -> Self {
        InductionParams::preset(Granularity::Coarse)
    }
}

/// Undirected weighted graph over the neighbors of `ego`.
#[derive(Debug, Clone, PartialEq)]
pub struct EgoNetwork {
    pub ego: String,
    pub nodes: Vec<String>,
    /// Per node, `(other node, weight)` sorted by node index.
    pub adjacency: Vec<Vec<(usize, f64)>>,
}

impl EgoNetwork {
    /// Builds a network directly from nodes and undirected edges, collapsing
    /// parallel edges to their maximum weight and dropping self-loops.
    pub fn from_edges(ego: impl Into<String>, nodes: Vec<String>, edges: &[(usize, usize, f64)]) -> Self {
        let mut adj: Vec<HashMap<usize, f64>> = vec![HashMap::new(); nodes.len()];
        for &(a, b, w) in edges {
            if a == b {
                continue;
            }
            for (x, y) in [(a, b), (b, a)] {
                let slot = adj[x].entry(y).or_insert(w);
                if w > *slot {
                    *slot = w;
                }
            }
        }
        let adjacency = adj
            .into_iter()
            .map(|m| {
                let mut v: Vec<(usize, f64)> = m.into_iter().collect();
                v.sort_by_key(|e| e.0);
                v
            })
            .collect();
        EgoNetwork {
            ego: ego.into(),
            nodes,
            adjacency,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Each undirected edge once, as `(low, high, weight)`.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(a, list)| {
                list.iter()
                    .filter(move |&&(b, _)| a < b)
                    .map(move |&(b, w)| (a, b, w))
            })
            .collect()
    }
}

pub fn build_ego_network(
    target: &str,
    graph: &SimilarityGraph,
    ego_size: usize,
    connectivity: usize,
) -> Result<EgoNetwork> {
    let ranked = graph
        .neighbors(target)
        .ok_or_else(|| Error::WordNotInGraph(target.to_owned()))?;
    let nodes: Vec<String> = ranked
        .iter()
        .take(ego_size)
        .filter(|n| n.word != target)
        .map(|n| n.word.clone())
        .collect();
    let position: HashMap<&str, usize> = nodes
        .iter()
        .enumerate()
        .map(|(i, w)| (w.as_str(), i))
        .collect();
    let mut edges = Vec::new();
    for (i, node) in nodes.iter().enumerate() {
        let Some(own) = graph.neighbors(node) else {
            continue;
        };
        for n in own.iter().take(connectivity) {
            if let Some(&j) = position.get(n.word.as_str()) {
                edges.push((i, j, n.weight));
            }
        }
    }
    Ok(EgoNetwork::from_edges(target, nodes, &edges))
}

/// Result of a Chinese Whispers run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clustering {
    /// Class label per node.
    pub labels: Vec<usize>,
    /// Sweeps performed, including the final unchanged one.
    pub sweeps: usize,
    /// Whether a sweep without changes happened before the cap.
    pub converged: bool,
}

impl Clustering {
    /// Node indices grouped by class, each group sorted, groups ordered by
    /// their smallest node.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut groups: IndexMap<usize, Vec<usize>> = IndexMap::new();
        for (node, &label) in self.labels.iter().enumerate() {
            groups.entry(label).or_default().push(node);
        }
        groups.into_values().collect()
    }
}

/// Chinese Whispers label propagation.
///
/// Every node starts in its own class. A sweep visits the nodes in an order
/// drawn from `seed`; each node adopts the class with the largest sum of
/// incident edge weights, preferring the smallest label on ties. Updates are
/// visible immediately within the sweep. Stops after a sweep with no change
/// or after `max_iterations` sweeps.
pub fn chinese_whispers(g: &EgoNetwork, max_iterations: usize, seed: u64) -> Clustering {
    let n = g.len();
    let mut labels: Vec<usize> = (0..n).collect();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut score = vec![0.0f64; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut is_touched = vec![false; n];
    let mut sweeps = 0;
    let mut converged = false;

    while sweeps < max_iterations {
        sweeps += 1;
        order.shuffle(&mut rng);
        let mut changed = false;
        for &node in &order {
            let adj = &g.adjacency[node];
            if adj.is_empty() {
                continue;
            }
            for &(other, w) in adj {
                let l = labels[other];
                if !is_touched[l] {
                    is_touched[l] = true;
                    touched.push(l);
                }
                score[l] += w;
            }
            let mut best = labels[node];
            let mut best_score = f64::NEG_INFINITY;
            for &l in &touched {
                let s = score[l];
                if s > best_score || (s == best_score && l < best) {
                    best = l;
                    best_score = s;
                }
            }
            for &l in &touched {
                score[l] = 0.0;
                is_touched[l] = false;
            }
            touched.clear();
            if best != labels[node] {
                labels[node] = best;
                changed = true;
            }
        }
        if !changed {
            converged = true;
            break;
        }
    }
    Clustering {
        labels,
        sweeps,
        converged,
    }
}

/// Per-word seed that does not depend on processing order.
pub fn word_seed(global: u64, word: &str) -> u64 {
    // FNV-1a over the token, then a splitmix64 finalizer.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in word.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    let mut z = global ^ h;
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SenseCluster {
    pub word: String,
    pub sense_id: u32,
    pub members: Vec<Member>,
}

impl SenseCluster {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Where an inventory came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InventorySource {
    Induced(InductionParams),
    External,
}

impl fmt::Display for InventorySource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InventorySource::Induced(p) => write!(
                f,
                "induced(N={},n={},k={},seed={})",
                p.ego_size, p.connectivity, p.min_cluster_size, p.seed
            ),
            InventorySource::External => f.write_str("external"),
        }
    }
}

/// Per-word lists of sense clusters, ordered by sense id.
#[derive(Debug, Clone)]
pub struct SenseInventory {
    entries: IndexMap<String, Vec<SenseCluster>>,
    source: InventorySource,
}

impl PartialEq for SenseInventory {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}

impl SenseInventory {
    pub fn new(source: InventorySource) -> Self {
        SenseInventory {
            entries: IndexMap::new(),
            source,
        }
    }

    /// Adds the senses of `word`. Clusters are stored ordered by sense id;
    /// ids must be unique and members unique within a cluster.
    pub fn insert(&mut self, word: impl Into<String>, mut clusters: Vec<SenseCluster>) -> Result<()> {
        let word = word.into();
        clusters.sort_by_key(|c| c.sense_id);
        for pair in clusters.windows(2) {
            if pair[0].sense_id == pair[1].sense_id {
                return Err(Error::DuplicateSense {
                    word,
                    sense_id: pair[0].sense_id,
                });
            }
        }
        for c in &clusters {
            let mut seen = HashSet::new();
            if let Some(dup) = c.members.iter().find(|m| !seen.insert(m.word.as_str())) {
                return Err(Error::InvalidParameter(format!(
                    "member {:?} repeated in {}#{}",
                    dup.word, c.word, c.sense_id
                )));
            }
        }
        self.entries.insert(word, clusters);
        Ok(())
    }

    pub fn source(&self) -> InventorySource {
        self.source
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn senses(&self, word: &str) -> Option<&[SenseCluster]> {
        self.entries.get(word).map(Vec::as_slice)
    }

    pub fn sense(&self, word: &str, sense_id: u32) -> Option<&SenseCluster> {
        self.senses(word)?.iter().find(|c| c.sense_id == sense_id)
    }

    pub fn words(&self) -> impl Iterator<Item = &str> + '_ {
        self.entries.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[SenseCluster])> + '_ {
        self.entries.iter().map(|(w, c)| (w.as_str(), c.as_slice()))
    }

    pub fn clusters(&self) -> impl Iterator<Item = &SenseCluster> + '_ {
        self.entries.values().flatten()
    }

    pub fn sense_count(&self) -> usize {
        self.entries.values().map(Vec::len).sum()
    }

    /// Mean number of senses over all words with an entry, empty ones
    /// included.
    pub fn average_senses(&self) -> f64 {
        if self.entries.is_empty() {
            return 0.0;
        }
        self.sense_count() as f64 / self.entries.len() as f64
    }

    /// Mean number of senses over the given words that have an entry.
    pub fn average_senses_over<'a>(&self, words: impl IntoIterator<Item = &'a str>) -> f64 {
        let (total, count) = words
            .into_iter()
            .filter_map(|w| self.senses(w))
            .fold((0usize, 0usize), |(t, c), s| (t + s.len(), c + 1));
        if count == 0 {
            0.0
        } else {
            total as f64 / count as f64
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingFile(path.to_owned()),
            _ => Error::Io(e),
        })?;
        Self::read(BufReader::new(file))
    }

    /// Parses `word<TAB>senseId<TAB>member:weight,...` lines. A member
    /// without `:weight` gets weight 1. `word<TAB><TAB>` declares a word with
    /// no senses. Loaded inventories are tagged external.
    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut raw: IndexMap<String, Vec<SenseCluster>> = IndexMap::new();
        let mut seen: HashSet<(String, u32)> = HashSet::new();
        for (lineno, line) in reader.lines().enumerate() {
            let lineno = lineno + 1;
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split('\t');
            let (Some(word), Some(id), Some(members), None) =
                (fields.next(), fields.next(), fields.next(), fields.next())
            else {
                return Err(Error::parse(lineno, "expected word<TAB>senseId<TAB>members"));
            };
            if word.is_empty() {
                return Err(Error::parse(lineno, "empty word"));
            }
            let list = raw.entry(word.to_owned()).or_default();
            if id.is_empty() {
                if !members.is_empty() {
                    return Err(Error::parse(lineno, "members without a sense id"));
                }
                continue;
            }
            let sense_id: u32 = id
                .parse()
                .map_err(|_| Error::parse(lineno, format!("invalid sense id {id:?}")))?;
            if !seen.insert((word.to_owned(), sense_id)) {
                return Err(Error::DuplicateSense {
                    word: word.to_owned(),
                    sense_id,
                });
            }
            let members = parse_members(members).map_err(|m| Error::parse(lineno, m))?;
            list.push(SenseCluster {
                word: word.to_owned(),
                sense_id,
                members,
            });
        }
        let mut inv = SenseInventory::new(InventorySource::External);
        for (word, clusters) in raw {
            inv.insert(word, clusters)?;
        }
        Ok(inv)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut writer = BufWriter::new(File::create(path)?);
        self.write(&mut writer)?;
        writer.flush()?;
        Ok(())
    }

    pub fn write<W: Write>(&self, mut writer: W) -> Result<()> {
        for (word, clusters) in &self.entries {
            check_field(word)?;
            if clusters.is_empty() {
                writeln!(writer, "{word}\t\t")?;
            }
            for c in clusters {
                write!(writer, "{word}\t{}\t", c.sense_id)?;
                for (i, m) in c.members.iter().enumerate() {
                    check_field(&m.word)?;
                    if m.word.contains(',') {
                        return Err(Error::InvalidToken(m.word.clone()));
                    }
                    if i > 0 {
                        writer.write_all(b",")?;
                    }
                    write!(writer, "{}:{}", m.word, m.weight)?;
                }
                writer.write_all(b"\n")?;
            }
        }
        Ok(())
    }
}

fn check_field(token: &str) -> Result<()> {
    if token.is_empty() || token.contains(['\t', '\n', '\r']) {
        return Err(Error::InvalidToken(token.to_owned()));
    }
    Ok(())
}

fn parse_members(field: &str) -> std::result::Result<Vec<Member>, String> {
    if field.is_empty() {
        return Ok(Vec::new());
    }
    field
        .split(',')
        .map(|item| {
            let (word, weight) = match item.rsplit_once(':') {
                Some((w, x)) if !w.is_empty() => {
                    let weight: f64 = x
                        .parse()
                        .map_err(|_| format!("invalid member weight in {item:?}"))?;
                    (w, weight)
                }
                _ => (item, 1.0),
            };
            if word.is_empty() {
                return Err("empty member".to_owned());
            }
            if !weight.is_finite() {
                return Err(format!("non-finite member weight in {item:?}"));
            }
            Ok(Member {
                word: word.to_owned(),
                weight,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct InductionStats {
    pub words: usize,
    pub clusters_kept: usize,
    pub clusters_dropped: usize,
    pub empty_words: usize,
    pub max_sweeps: usize,
    pub not_converged: usize,
}

/// Clusters the ego-network of `target` and returns its sense clusters
/// (sizes >= k, ids assigned by decreasing size) along with the raw
/// Chinese Whispers run.
pub fn induce_word(
    target: &str,
    graph: &SimilarityGraph,
    params: &InductionParams,
) -> Result<(Vec<SenseCluster>, Clustering)> {
    let ego = build_ego_network(target, graph, params.ego_size, params.connectivity)?;
    let run = chinese_whispers(&ego, params.max_iterations, word_seed(params.seed, target));
    let weight_of: HashMap<&str, f64> = graph
        .neighbors(target)
        .unwrap_or_default()
        .iter()
        .map(|n| (n.word.as_str(), n.weight))
        .collect();

    let mut kept: Vec<Vec<Member>> = run
        .clusters()
        .into_iter()
        .filter(|c| c.len() >= params.min_cluster_size)
        .map(|c| {
            let mut members: Vec<Member> = c
                .into_iter()
                .map(|i| {
                    let word = ego.nodes[i].clone();
                    let weight = weight_of[word.as_str()];
                    Member { word, weight }
                })
                .collect();
            members.sort_by(|a, b| b.weight.total_cmp(&a.weight).then_with(|| a.word.cmp(&b.word)));
            members
        })
        .collect();
    kept.sort_by(|a, b| {
        b.len().cmp(&a.len()).then_with(|| smallest_member(a).cmp(smallest_member(b)))
    });
    let clusters = kept
        .into_iter()
        .enumerate()
        .map(|(id, members)| SenseCluster {
            word: target.to_owned(),
            sense_id: id as u32,
            members,
        })
        .collect();
    Ok((clusters, run))
}

fn smallest_member(members: &[Member]) -> &str {
    members.iter().map(|m| m.word.as_str()).min().unwrap_or("")
}

/// Induces senses for `targets` (or every word of the graph).
pub fn induce_inventory(
    graph: &SimilarityGraph,
    params: &InductionParams,
    targets: Option<&[String]>,
) -> Result<(SenseInventory, InductionStats)> {
    params.validate()?;
    let words: Vec<&str> = match targets {
        Some(t) => t.iter().map(String::as_str).collect(),
        None => graph.words().collect(),
    };
    let results: Vec<(&str, Vec<SenseCluster>, Clustering)> = words
        .par_iter()
        .map(|&w| induce_word(w, graph, params).map(|(c, run)| (w, c, run)))
        .collect::<Result<_>>()?;

    let mut inv = SenseInventory::new(InventorySource::Induced(*params));
    let mut stats = InductionStats::default();
    for (word, clusters, run) in results {
        stats.words += 1;
        let total = run.clusters().len();
        stats.clusters_kept += clusters.len();
        stats.clusters_dropped += total - clusters.len();
        stats.max_sweeps = stats.max_sweeps.max(run.sweeps);
        if !run.converged {
            stats.not_converged += 1;
        }
        if clusters.is_empty() {
            stats.empty_words += 1;
        }
        inv.insert(word, clusters)?;
    }
    Ok((inv, stats))
}
