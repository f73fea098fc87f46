//! Flat `key = value` configuration. Flags are merged on top of the file
//! and win on conflicts.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use egosense::eval::BowWeighting;
use egosense::knn::{DEFAULT_BLOCK_SIZE, DEFAULT_TOP_N};
use egosense::wsd::DEFAULT_FILTER_P;
use egosense::wsi::Granularity;
use egosense::{Format, InductionParams, PoolingMode, Strategy};

use crate::error::{CliError, CliResult};

/// Per-sense cap applied by `balanced = true`.
pub const DEFAULT_BALANCED_PER_SENSE: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    Twsi,
    Semeval13,
}

impl FromStr for DatasetKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "twsi" => Ok(DatasetKind::Twsi),
            "semeval" | "semeval13" | "semeval2013" => Ok(DatasetKind::Semeval13),
            other => Err(format!("unknown dataset kind {other:?}")),
        }
    }
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DatasetKind::Twsi => "twsi",
            DatasetKind::Semeval13 => "semeval13",
        })
    }
}

/// Raw configuration entries keyed by canonical name.
pub type ConfigMap = BTreeMap<String, String>;

const ALIASES: [(&str, &str); 4] = [
    ("N", "ego_size"),
    ("n", "connectivity"),
    ("k", "min_cluster_size"),
    ("filter_p", "filter"),
];

/// Canonical form of a key: dashes become underscores, aliases resolve.
pub fn canonical_key(key: &str) -> String {
    let key = key.trim().replace('-', "_");
    ALIASES
        .iter()
        .find(|(alias, _)| *alias == key)
        .map_or(key, |(_, name)| (*name).to_owned())
}

/// Parses `key = value` lines. `#` starts a comment line; blank lines are
/// ignored; a key may appear once.
pub fn parse_config(text: &str) -> CliResult<ConfigMap> {
    let mut map = ConfigMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Config(format!("line {}: expected key = value", i + 1)));
        };
        let key = canonical_key(key);
        if key.is_empty() {
            return Err(CliError::Config(format!("line {}: empty key", i + 1)));
        }
        if map.insert(key.clone(), value.trim().to_owned()).is_some() {
            return Err(CliError::Config(format!("line {}: duplicate key {key}", i + 1)));
        }
    }
    Ok(map)
}

pub fn read_config_file(path: &Path) -> CliResult<ConfigMap> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

/// Everything a pipeline run or a single subcommand needs.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub embeddings: Option<PathBuf>,
    pub embeddings_format: Format,
    pub context_embeddings: Option<PathBuf>,
    pub graph: Option<PathBuf>,
    pub inventory: Option<PathBuf>,
    pub sense_vectors: Option<PathBuf>,
    pub sense_vectors_format: Format,
    pub targets: Option<PathBuf>,
    pub dataset: Option<DatasetKind>,
    pub dataset_dir: Option<PathBuf>,
    /// Per-sense cap for the balanced subset.
    pub balanced: Option<usize>,
    pub out_dir: PathBuf,
    pub induction: InductionParams,
    pub pooling: PoolingMode,
    pub strategy: Strategy,
    pub filter_p: Option<usize>,
    pub top_n: usize,
    pub block_size: usize,
    pub seed: u64,
    pub threads: Option<usize>,
    pub mapping_threshold: f64,
    pub induced_bow: BowWeighting,
    pub gold_bow: BowWeighting,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let induction = InductionParams::default();
        PipelineConfig {
            embeddings: None,
            embeddings_format: Format::Text,
            context_embeddings: None,
            graph: None,
            inventory: None,
            sense_vectors: None,
            sense_vectors_format: Format::Text,
            targets: None,
            dataset: None,
            dataset_dir: None,
            balanced: None,
            out_dir: PathBuf::from("egosense-out"),
            seed: induction.seed,
            induction,
            pooling: PoolingMode::default(),
            strategy: Strategy::default(),
            filter_p: Some(DEFAULT_FILTER_P),
            top_n: DEFAULT_TOP_N,
            block_size: DEFAULT_BLOCK_SIZE,
            threads: None,
            mapping_threshold: 0.0,
            induced_bow: BowWeighting::AsGiven,
            gold_bow: BowWeighting::AsGiven,
        }
    }
}

fn value<T: FromStr>(key: &str, raw: &str) -> CliResult<T>
where
    T::Err: fmt::Display,
{
    raw.parse()
        .map_err(|e| CliError::Config(format!("{key} = {raw:?}: {e}")))
}

fn positive(key: &str, raw: &str) -> CliResult<usize> {
    match value::<usize>(key, raw)? {
        0 => Err(CliError::Config(format!("{key} must be at least 1"))),
        v => Ok(v),
    }
}

fn flag(key: &str, raw: &str) -> CliResult<bool> {
    match raw {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(CliError::Config(format!("{key} = {raw:?}: expected true or false"))),
    }
}

fn bow(key: &str, raw: &str) -> CliResult<BowWeighting> {
    match raw {
        "weights" | "as-given" => Ok(BowWeighting::AsGiven),
        "binary" => Ok(BowWeighting::Binary),
        _ => Err(CliError::Config(format!("{key} = {raw:?}: expected weights or binary"))),
    }
}

impl PipelineConfig {
    /// Builds a config from merged entries. The granularity preset is
    /// applied before explicit N, n and k; `seed` also seeds induction.
    pub fn from_map(map: &ConfigMap) -> CliResult<Self> {
        let mut cfg = PipelineConfig::default();
        if let Some(g) = map.get("granularity") {
            let g: Granularity = value("granularity", g)?;
            cfg.induction = InductionParams::preset(g);
        }
        for (key, raw) in map {
            let path = || Some(PathBuf::from(raw));
            match key.as_str() {
                "granularity" => {}
                "embeddings" => cfg.embeddings = path(),
                "embeddings_format" => cfg.embeddings_format = value(key, raw)?,
                "context_embeddings" => cfg.context_embeddings = path(),
                "graph" => cfg.graph = path(),
                "inventory" => cfg.inventory = path(),
                "sense_vectors" => cfg.sense_vectors = path(),
                "sense_vectors_format" => cfg.sense_vectors_format = value(key, raw)?,
                "targets" => cfg.targets = path(),
                "dataset" => cfg.dataset = Some(value(key, raw)?),
                "dataset_dir" => cfg.dataset_dir = path(),
                "balanced" => {
                    cfg.balanced = match raw.parse::<usize>() {
                        Ok(0) => None,
                        Ok(n) => Some(n),
                        Err(_) => flag(key, raw)?.then_some(DEFAULT_BALANCED_PER_SENSE),
                    }
                }
                "out_dir" => cfg.out_dir = PathBuf::from(raw),
                "ego_size" => cfg.induction.ego_size = positive(key, raw)?,
                "connectivity" => cfg.induction.connectivity = positive(key, raw)?,
                "min_cluster_size" => cfg.induction.min_cluster_size = positive(key, raw)?,
                "max_iterations" => cfg.induction.max_iterations = positive(key, raw)?,
                "seed" => cfg.seed = value(key, raw)?,
                "pooling" => cfg.pooling = value(key, raw)?,
                "strategy" => cfg.strategy = value(key, raw)?,
                "filter" => {
                    cfg.filter_p = match raw.as_str() {
                        "none" | "off" => None,
                        _ => Some(positive(key, raw)?),
                    }
                }
                "top_n" => cfg.top_n = positive(key, raw)?,
                "block_size" => cfg.block_size = positive(key, raw)?,
                "threads" => cfg.threads = Some(positive(key, raw)?),
                "mapping_threshold" => {
                    cfg.mapping_threshold = value(key, raw)?;
                    if !cfg.mapping_threshold.is_finite() {
                        return Err(CliError::Config("mapping_threshold must be finite".into()));
                    }
                }
                "induced_bow" => cfg.induced_bow = bow(key, raw)?,
                "gold_bow" => cfg.gold_bow = bow(key, raw)?,
                other => return Err(CliError::Config(format!("unknown key {other:?}"))),
            }
        }
        cfg.induction.seed = cfg.seed;
        cfg.induction
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }

    /// File entries overlaid with flag entries.
    pub fn from_sources(file: Option<&Path>, overrides: &[(String, String)]) -> CliResult<Self> {
        let mut map = match file {
            Some(p) => read_config_file(p)?,
            None => ConfigMap::new(),
        };
        for (k, v) in overrides {
            map.insert(canonical_key(k), v.clone());
        }
        Self::from_map(&map)
    }
}

/// Returns the path behind an optional config entry, checking it exists.
pub fn require_input<'a>(key: &'static str, path: &'a Option<PathBuf>) -> CliResult<&'a Path> {
    let path = path.as_deref().ok_or(CliError::Required(key))?;
    check_input(key, path)?;
    Ok(path)
}

pub fn check_input(key: &'static str, path: &Path) -> CliResult<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::MissingInput {
            key,
            path: path.to_owned(),
        })
    }
}
