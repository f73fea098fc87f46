//! Sense vectors as (weighted) averages of the word vectors of a sense
//! cluster, and nearest-neighbor queries between sense vectors.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use rayon::prelude::*;

use crate::embedding::{dot, l2_norm, widen, EmbeddingMatrix, VectorKind};
use crate::error::{Error, Result};
use crate::wsi::{SenseCluster, SenseInventory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PoolingMode {
    Unweighted,
    #[default]
    Weighted,
}

impl FromStr for PoolingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unweighted" | "mean" => Ok(PoolingMode::Unweighted),
            "weighted" => Ok(PoolingMode::Weighted),
            other => Err(Error::InvalidParameter(format!("unknown pooling mode {other:?}"))),
        }
    }
}

impl fmt::Display for PoolingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PoolingMode::Unweighted => "unweighted",
            PoolingMode::Weighted => "weighted",
        })
    }
}

/// `(word, senseId)`, rendered as `word#senseId`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SenseKey {
    pub word: String,
    pub sense_id: u32,
}

impl SenseKey {
    pub fn new(word: impl Into<String>, sense_id: u32) -> Self {
        SenseKey {
            word: word.into(),
            sense_id,
        }
    }
}

impl fmt::Display for SenseKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.word, self.sense_id)
    }
}

impl FromStr for SenseKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (word, id) = s
            .rsplit_once('#')
            .filter(|(w, _)| !w.is_empty())
            .ok_or_else(|| Error::InvalidToken(s.to_owned()))?;
        let sense_id = id.parse().map_err(|_| Error::InvalidToken(s.to_owned()))?;
        Ok(SenseKey::new(word, sense_id))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PooledVector {
    pub vector: Vec<f64>,
    pub used: usize,
    pub missing: usize,
}

/// Averages the vectors of the cluster members found in `m`.
///
/// Weighted pooling divides the weights by the largest present weight before
/// averaging; the result is the same weighted mean, and uniform weights
/// reduce exactly to the unweighted mean.
pub fn pool_sense(cluster: &SenseCluster, m: &EmbeddingMatrix, mode: PoolingMode) -> Result<PooledVector> {
    let present: Vec<(&[f32], f64)> = cluster
        .members
        .iter()
        .filter_map(|mem| m.get(&mem.word).map(|row| (row, mem.weight)))
        .collect();
    let missing = cluster.members.len() - present.len();
    if present.is_empty() {
        return Err(Error::NoMemberInVocabulary {
            word: cluster.word.clone(),
            sense_id: cluster.sense_id,
        });
    }
    let mut acc = vec![0.0f64; m.dim()];
    match mode {
        PoolingMode::Unweighted => {
            for (row, _) in &present {
                for (a, &x) in acc.iter_mut().zip(*row) {
                    *a += f64::from(x);
                }
            }
            let n = present.len() as f64;
            acc.iter_mut().for_each(|a| *a /= n);
        }
        PoolingMode::Weighted => {
            let total: f64 = present.iter().map(|p| p.1).sum();
            let max = present.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
            if total.is_nan() || total <= 0.0 {
                return Err(Error::NonPositiveWeight {
                    word: cluster.word.clone(),
                    sense_id: cluster.sense_id,
                });
            }
            let mut norm = 0.0;
            for (row, w) in &present {
                let r = w / max;
                norm += r;
                for (a, &x) in acc.iter_mut().zip(*row) {
                    *a += r * f64::from(x);
                }
            }
            acc.iter_mut().for_each(|a| *a /= norm);
        }
    }
    Ok(PooledVector {
        vector: acc,
        used: present.len(),
        missing,
    })
}

/// Sense vectors keyed by `(word, senseId)`, grouped per word in sense-id
/// order.
#[derive(Debug, Clone, PartialEq)]
pub struct SenseVectorStore {
    dim: usize,
    mode: PoolingMode,
    inventory_ref: String,
    keys: Vec<SenseKey>,
    vectors: Vec<f64>,
    index: HashMap<SenseKey, usize>,
    by_word: IndexMap<String, Vec<usize>>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SkipReport {
    /// Clusters with no member in the vocabulary (or no positive weight).
    pub skipped: Vec<SenseKey>,
    /// Members absent from the vocabulary, over all pooled clusters.
    pub missing_members: usize,
}

impl SenseVectorStore {
    pub fn new(dim: usize, mode: PoolingMode, inventory_ref: impl Into<String>) -> Self {
        SenseVectorStore {
            dim,
            mode,
            inventory_ref: inventory_ref.into(),
            keys: Vec::new(),
            vectors: Vec::new(),
            index: HashMap::new(),
            by_word: IndexMap::new(),
        }
    }

    /// Adds one sense vector; vectors must be finite, nonzero and of the
    /// store dimension.
    pub fn insert(&mut self, key: SenseKey, vector: &[f64]) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: vector.len(),
            });
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite(key.to_string()));
        }
        if vector.iter().all(|&x| x == 0.0) {
            return Err(Error::ZeroVector(key.to_string()));
        }
        if self.index.contains_key(&key) {
            return Err(Error::DuplicateSense {
                word: key.word,
                sense_id: key.sense_id,
            });
        }
        let slot = self.keys.len();
        let list = self.by_word.entry(key.word.clone()).or_default();
        list.push(slot);
        let keys = &self.keys;
        list.sort_by_key(|&i| if i == slot { key.sense_id } else { keys[i].sense_id });
        self.index.insert(key.clone(), slot);
        self.keys.push(key);
        self.vectors.extend_from_slice(vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mode(&self) -> PoolingMode {
        self.mode
    }

    pub fn inventory_ref(&self) -> &str {
        &self.inventory_ref
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn keys(&self) -> &[SenseKey] {
        &self.keys
    }

    pub fn get(&self, key: &SenseKey) -> Option<&[f64]> {
        self.index.get(key).map(|&i| self.slot(i))
    }

    /// Senses of `word` as `(senseId, vector)`, ascending by id.
    pub fn senses_of(&self, word: &str) -> Vec<(u32, &[f64])> {
        self.by_word
            .get(word)
            .map(|slots| {
                slots
                    .iter()
                    .map(|&i| (self.keys[i].sense_id, self.slot(i)))
                    .collect()
            })
            .unwrap_or_default()
    }

    pub fn words(&self) -> impl Iterator<Item = &str> + '_ {
        self.by_word.keys().map(String::as_str)
    }

    fn slot(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    /// Sense vectors as an embedding matrix with `word#senseId` tokens.
    pub fn to_matrix(&self) -> Result<EmbeddingMatrix> {
        let rows = self.keys.iter().enumerate().map(|(i, k)| {
            (
                k.to_string(),
                self.slot(i).iter().map(|&x| x as f32).collect::<Vec<f32>>(),
            )
        });
        EmbeddingMatrix::from_rows(rows, VectorKind::Word)
    }

    /// Reads sense vectors back from a matrix with `word#senseId` tokens.
    pub fn from_matrix(m: &EmbeddingMatrix, mode: PoolingMode, inventory_ref: impl Into<String>) -> Result<Self> {
        let mut store = SenseVectorStore::new(m.dim(), mode, inventory_ref);
        for (token, row) in m.iter() {
            store.insert(token.parse()?, &widen(row))?;
        }
        Ok(store)
    }
}

pub fn build_store(inv: &SenseInventory, m: &EmbeddingMatrix, mode: PoolingMode) -> (SenseVectorStore, SkipReport) {
    let clusters: Vec<&SenseCluster> = inv.clusters().collect();
    let pooled: Vec<Result<PooledVector>> = clusters
        .par_iter()
        .map(|c| pool_sense(c, m, mode))
        .collect();
    let mut store = SenseVectorStore::new(m.dim(), mode, inv.source().to_string());
    let mut report = SkipReport::default();
    for (c, p) in clusters.into_iter().zip(pooled) {
        let key = SenseKey::new(c.word.clone(), c.sense_id);
        match p.and_then(|p| {
            report.missing_members += p.missing;
            store.insert(key.clone(), &p.vector)
        }) {
            Ok(()) => {}
            Err(e) => {
                log::debug!("skipping {key}: {e}");
                report.skipped.push(key);
            }
        }
    }
    (store, report)
}

/// A ranked sense neighbor.
#[derive(Debug, Clone, PartialEq)]
pub struct SenseNeighbor {
    pub key: SenseKey,
    pub cosine: f64,
}

/// The `top_k` sense vectors closest to `key` by cosine, excluding `key`.
pub fn sense_neighbors(store: &SenseVectorStore, key: &SenseKey, top_k: usize) -> Result<Vec<SenseNeighbor>> {
    let query = store
        .get(key)
        .ok_or_else(|| Error::UnknownSense(key.to_string()))?;
    let qn = l2_norm(query);
    let mut all: Vec<SenseNeighbor> = store
        .keys
        .iter()
        .enumerate()
        .filter(|(_, k)| *k != key)
        .map(|(i, k)| {
            let v = store.slot(i);
            SenseNeighbor {
                key: k.clone(),
                cosine: (dot(query, v) / (qn * l2_norm(v))).clamp(-1.0, 1.0),
            }
        })
        .collect();
    all.sort_by(|a, b| match b.cosine.total_cmp(&a.cosine) {
        Ordering::Equal => a.key.to_string().cmp(&b.key.to_string()),
        o => o,
    });
    all.truncate(top_k);
    Ok(all)
}
