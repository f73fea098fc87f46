//! The four-stage pipeline: embeddings, similarity graph, sense inventory,
//! sense vectors, plus an optional evaluation. Every stage is skipped when
//! its artifact is supplied.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use egosense::eval::{
    baselines, evaluate_clustering, evaluate_wsd, load_semeval13, load_twsi, map_inventories, render_table,
    GoldDataset, Instance, MappingOptions, WsdReport,
};
use egosense::knn::build_knn_graph;
use egosense::pooling::build_store;
use egosense::wsd::DisambiguationRequest;
use egosense::{
    disambiguate, induce_inventory, EmbeddingMatrix, Format, SenseInventory, SenseVectorStore, SimilarityGraph,
    Strategy, VectorKind,
};

use crate::config::{check_input, require_input, DatasetKind, PipelineConfig};
use crate::error::{CliError, CliResult, StageExt};

/// Runs `f` on a pool of `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Config(format!("cannot start {n} threads: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Writes through a temporary sibling file so a failed stage leaves no
/// partial artifact behind.
pub fn write_atomic(
    path: &Path,
    stage: &'static str,
    f: impl FnOnce(&mut BufWriter<File>) -> egosense::Result<()>,
) -> CliResult<()> {
    let name = path
        .file_name()
        .ok_or_else(|| CliError::Config(format!("{} is not a file path", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    let result: egosense::Result<()> = (|| {
        let mut w = BufWriter::new(File::create(&tmp)?);
        f(&mut w)?;
        w.flush()?;
        drop(w);
        fs::rename(&tmp, path)?;
        Ok(())
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.stage(stage)
}

pub fn load_embeddings(path: &Path, format: Format, kind: VectorKind) -> CliResult<EmbeddingMatrix> {
    let start = Instant::now();
    let m = EmbeddingMatrix::load(path, format, kind).stage("embeddings")?;
    log::info!(
        "embeddings: loaded {} ({} words, dim {}) in {:.2?}",
        path.display(),
        m.len(),
        m.dim(),
        start.elapsed()
    );
    Ok(m)
}

pub fn word_embeddings(cfg: &PipelineConfig) -> CliResult<EmbeddingMatrix> {
    let path = require_input("embeddings", &cfg.embeddings)?;
    load_embeddings(path, cfg.embeddings_format, VectorKind::Word)
}

pub fn context_embeddings(cfg: &PipelineConfig) -> CliResult<Option<EmbeddingMatrix>> {
    match &cfg.context_embeddings {
        None => Ok(None),
        Some(p) => {
            check_input("context_embeddings", p)?;
            load_embeddings(p, cfg.embeddings_format, VectorKind::Context).map(Some)
        }
    }
}

pub fn import_graph(path: &Path, top_n: usize) -> CliResult<SimilarityGraph> {
    let start = Instant::now();
    let (g, stats) = SimilarityGraph::load(path, top_n).stage("graph")?;
    log::info!(
        "graph: imported {} words, {} edges kept of {} read, {} self-edges dropped in {:.2?}",
        g.len(),
        g.edge_count(),
        stats.edges_read,
        stats.self_edges_dropped,
        start.elapsed()
    );
    Ok(g)
}

pub fn build_graph(m: &EmbeddingMatrix, top_n: usize, block_size: usize) -> CliResult<SimilarityGraph> {
    let start = Instant::now();
    let g = build_knn_graph(m, top_n, block_size).stage("graph")?;
    log::info!(
        "graph: built {} words, {} edges (top {top_n}, block {block_size}) in {:.2?}",
        g.len(),
        g.edge_count(),
        start.elapsed()
    );
    Ok(g)
}

fn read_targets(path: &Path) -> CliResult<Vec<String>> {
    let file = File::open(path).stage("induce")?;
    let mut words = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.stage("induce")?;
        let w = line.trim();
        if !w.is_empty() {
            words.push(w.to_owned());
        }
    }
    Ok(words)
}

pub fn induce(cfg: &PipelineConfig, graph: &SimilarityGraph) -> CliResult<SenseInventory> {
    let start = Instant::now();
    let targets = match &cfg.targets {
        Some(p) => {
            check_input("targets", p)?;
            Some(read_targets(p)?)
        }
        None => None,
    };
    let (inv, stats) = induce_inventory(graph, &cfg.induction, targets.as_deref()).stage("induce")?;
    let p = &cfg.induction;
    log::info!(
        "induce: {} words (N={} n={} k={} seed={}), {} clusters kept, {} dropped, {} empty words, \
         max {} sweeps, {} not converged, {:.3} senses/word in {:.2?}",
        stats.words,
        p.ego_size,
        p.connectivity,
        p.min_cluster_size,
        p.seed,
        stats.clusters_kept,
        stats.clusters_dropped,
        stats.empty_words,
        stats.max_sweeps,
        stats.not_converged,
        inv.average_senses(),
        start.elapsed()
    );
    Ok(inv)
}

pub fn import_inventory(path: &Path) -> CliResult<SenseInventory> {
    let inv = SenseInventory::load(path).stage("inventory")?;
    log::info!(
        "inventory: imported {} words, {} senses from {}",
        inv.len(),
        inv.sense_count(),
        path.display()
    );
    Ok(inv)
}

pub fn pool(cfg: &PipelineConfig, inv: &SenseInventory, m: &EmbeddingMatrix) -> CliResult<SenseVectorStore> {
    let start = Instant::now();
    let (store, report) = build_store(inv, m, cfg.pooling);
    log::info!(
        "pool: {} sense vectors ({}), {} clusters skipped, {} members missing from the vocabulary in {:.2?}",
        store.len(),
        cfg.pooling,
        report.skipped.len(),
        report.missing_members,
        start.elapsed()
    );
    Ok(store)
}

pub fn import_sense_vectors(cfg: &PipelineConfig, path: &Path) -> CliResult<SenseVectorStore> {
    let m = EmbeddingMatrix::load(path, cfg.sense_vectors_format, VectorKind::Word).stage("pool")?;
    let store = SenseVectorStore::from_matrix(&m, cfg.pooling, path.display().to_string()).stage("pool")?;
    log::info!("pool: imported {} sense vectors from {}", store.len(), path.display());
    Ok(store)
}

pub fn save_sense_vectors(store: &SenseVectorStore, path: &Path, format: Format) -> CliResult<()> {
    let m = store.to_matrix().stage("pool")?;
    write_atomic(path, "pool", |w| m.write(w, format))
}

/// Inputs needed to score a dataset.
pub struct EvalInputs<'a> {
    pub inventory: &'a SenseInventory,
    pub store: &'a SenseVectorStore,
    pub words: &'a EmbeddingMatrix,
    pub contexts: Option<&'a EmbeddingMatrix>,
}

/// Evaluation output: a TSV report, a key-value summary and a readable
/// table.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalOutcome {
    pub report: String,
    pub summary: Vec<(String, String)>,
    pub table: String,
}

impl EvalOutcome {
    pub fn summary_tsv(&self) -> String {
        self.summary.iter().map(|(k, v)| format!("{k}\t{v}\n")).collect()
    }
}

pub fn load_dataset(cfg: &PipelineConfig) -> CliResult<GoldDataset> {
    let kind = cfg.dataset.ok_or(CliError::Required("dataset"))?;
    let dir = require_input("dataset_dir", &cfg.dataset_dir)?;
    let start = Instant::now();
    let full = match kind {
        DatasetKind::Twsi => load_twsi(dir),
        DatasetKind::Semeval13 => load_semeval13(dir),
    }
    .stage("eval")?;
    let dataset = match cfg.balanced {
        Some(n) => full.balanced(n),
        None => full,
    };
    log::info!(
        "eval: loaded {kind} dataset, {} instances over {} targets{} in {:.2?}",
        dataset.len(),
        dataset.targets().len(),
        cfg.balanced.map_or(String::new(), |n| format!(" (balanced, {n} per sense)")),
        start.elapsed()
    );
    Ok(dataset)
}

fn predictor<'a>(
    cfg: &'a PipelineConfig,
    inputs: &'a EvalInputs<'a>,
) -> impl Fn(&Instance) -> egosense::Result<u32> + Sync + 'a {
    move |inst| {
        let req = DisambiguationRequest {
            target: inst.target.clone(),
            context: inst.context.clone(),
            strategy: cfg.strategy,
            filter_p: cfg.filter_p,
        };
        disambiguate(&req, inputs.store, inputs.words, inputs.contexts).map(|r| r.chosen)
    }
}

fn system_name(cfg: &PipelineConfig) -> String {
    let filter = cfg.filter_p.map_or("none".to_owned(), |p| p.to_string());
    format!("senses-{}-{}-p{filter}", cfg.pooling, cfg.strategy)
}

pub fn evaluate(cfg: &PipelineConfig, dataset: &GoldDataset, inputs: &EvalInputs<'_>) -> CliResult<EvalOutcome> {
    if cfg.strategy == Strategy::Probability && inputs.contexts.is_none() {
        return Err(CliError::Required("context_embeddings"));
    }
    let start = Instant::now();
    let predict = predictor(cfg, inputs);
    let targets = dataset.targets();
    let mut summary = vec![
        ("dataset".to_owned(), cfg.dataset.map_or(String::new(), |d| d.to_string())),
        ("instances".to_owned(), dataset.len().to_string()),
        ("targets".to_owned(), targets.len().to_string()),
        (
            "gold_avg_senses".to_owned(),
            format!("{:.6}", dataset.gold_inventory.average_senses()),
        ),
        (
            "induced_avg_senses".to_owned(),
            format!("{:.6}", inputs.inventory.average_senses_over(targets.iter().copied())),
        ),
    ];
    let outcome = match cfg.dataset {
        Some(DatasetKind::Semeval13) => {
            let index: HashMap<&str, u32> = dataset
                .instances
                .iter()
                .enumerate()
                .map(|(i, inst)| (inst.id.as_str(), i as u32))
                .collect();
            let rows = [
                (system_name(cfg), evaluate_clustering(dataset, |i| predict(i).ok())),
                ("one-sense-for-all".to_owned(), evaluate_clustering(dataset, |_| Some(0))),
                (
                    "one-sense-per-instance".to_owned(),
                    evaluate_clustering(dataset, |i| index.get(i.id.as_str()).copied()),
                ),
            ];
            let mut report = String::from("system\tnmi\tbcubed_precision\tbcubed_recall\tbcubed_f\n");
            let mut table = format!("{:<32}  {:>6}  {:>6}\n", "system", "NMI", "B3-F");
            for (name, scores) in rows {
                let s = scores.stage("eval")?;
                let _ = writeln!(
                    report,
                    "{name}\t{:.6}\t{:.6}\t{:.6}\t{:.6}",
                    s.nmi, s.bcubed_precision, s.bcubed_recall, s.bcubed_f
                );
                let _ = writeln!(table, "{name:<32}  {:>6.3}  {:>6.3}", s.nmi, s.bcubed_f);
            }
            EvalOutcome {
                report,
                summary,
                table,
            }
        }
        _ => {
            let opts = MappingOptions {
                threshold: cfg.mapping_threshold,
                induced_weighting: cfg.induced_bow,
                gold_weighting: cfg.gold_bow,
            };
            let mapping = map_inventories(inputs.inventory, &dataset.gold_inventory, &opts);
            let report = evaluate_wsd(dataset, &predict, &mapping);
            let mut rows: Vec<(String, WsdReport)> = vec![(system_name(cfg), report)];
            rows.extend(baselines(dataset, inputs.inventory, &mapping, cfg.seed).named());
            summary.push(("mapped_senses".to_owned(), mapping.mapped().to_string()));
            summary.push(("unmapped_senses".to_owned(), mapping.unmapped().to_string()));
            summary.push(("failed_predictions".to_owned(), report.failed.to_string()));
            let mut tsv = format!("{}\n", WsdReport::TSV_HEADER);
            for (name, r) in &rows {
                tsv.push_str(&r.tsv_row(name));
                tsv.push('\n');
            }
            EvalOutcome {
                report: tsv,
                summary,
                table: render_table(&rows),
            }
        }
    };
    log::info!("eval: scored {} instances in {:.2?}", dataset.len(), start.elapsed());
    Ok(outcome)
}

/// Paths of the artifacts a pipeline run produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PipelineArtifacts {
    /// Absent when a supplied inventory made the graph unnecessary.
    pub graph: Option<PathBuf>,
    pub inventory: PathBuf,
    pub sense_vectors: PathBuf,
    pub report: Option<PathBuf>,
    pub summary: Option<PathBuf>,
}

/// Checks every input the run will touch before any artifact is written.
fn validate(cfg: &PipelineConfig) -> CliResult<()> {
    require_input("embeddings", &cfg.embeddings)?;
    let optional = [
        ("context_embeddings", &cfg.context_embeddings),
        ("graph", &cfg.graph),
        ("inventory", &cfg.inventory),
        ("sense_vectors", &cfg.sense_vectors),
        ("targets", &cfg.targets),
        ("dataset_dir", &cfg.dataset_dir),
    ];
    for (key, path) in optional {
        if let Some(p) = path {
            check_input(key, p)?;
        }
    }
    match (cfg.dataset, &cfg.dataset_dir) {
        (Some(_), None) => return Err(CliError::Required("dataset_dir")),
        (None, Some(_)) => return Err(CliError::Required("dataset")),
        (Some(_), Some(_)) if cfg.strategy == Strategy::Probability && cfg.context_embeddings.is_none() => {
            return Err(CliError::Required("context_embeddings"));
        }
        _ => {}
    }
    if cfg.out_dir.is_file() {
        return Err(CliError::Config(format!("out_dir {} is a file", cfg.out_dir.display())));
    }
    Ok(())
}

pub fn sense_vectors_file_name(format: Format) -> &'static str {
    match format {
        Format::Text => "sense_vectors.txt",
        Format::Binary => "sense_vectors.bin",
    }
}

/// Runs every stage whose artifact was not supplied and writes the results
/// into `cfg.out_dir`.
pub fn run_pipeline(cfg: &PipelineConfig) -> CliResult<PipelineArtifacts> {
    validate(cfg)?;
    let start = Instant::now();
    let words = word_embeddings(cfg)?;
    fs::create_dir_all(&cfg.out_dir).stage("pipeline")?;
    let out = |name: &str| cfg.out_dir.join(name);

    let mut graph_path = None;
    let inventory = match &cfg.inventory {
        Some(p) => {
            log::info!("graph: skipped, inventory supplied");
            import_inventory(p)?
        }
        None => {
            let graph = match &cfg.graph {
                Some(p) => import_graph(p, cfg.top_n)?,
                None => build_graph(&words, cfg.top_n, cfg.block_size)?,
            };
            let path = out("graph.tsv");
            write_atomic(&path, "graph", |w| graph.write(w))?;
            graph_path = Some(path);
            induce(cfg, &graph)?
        }
    };
    let inventory_path = out("inventory.tsv");
    write_atomic(&inventory_path, "induce", |w| inventory.write(w))?;

    let store = match &cfg.sense_vectors {
        Some(p) => import_sense_vectors(cfg, p)?,
        None => pool(cfg, &inventory, &words)?,
    };
    let vectors_path = out(sense_vectors_file_name(cfg.sense_vectors_format));
    save_sense_vectors(&store, &vectors_path, cfg.sense_vectors_format)?;

    let (mut report, mut summary) = (None, None);
    if cfg.dataset.is_some() {
        let contexts = context_embeddings(cfg)?;
        let dataset = load_dataset(cfg)?;
        let inputs = EvalInputs {
            inventory: &inventory,
            store: &store,
            words: &words,
            contexts: contexts.as_ref(),
        };
        let outcome = evaluate(cfg, &dataset, &inputs)?;
        let report_path = out("report.tsv");
        let summary_path = out("summary.tsv");
        write_atomic(&report_path, "eval", |w| Ok(w.write_all(outcome.report.as_bytes())?))?;
        write_atomic(&summary_path, "eval", |w| Ok(w.write_all(outcome.summary_tsv().as_bytes())?))?;
        log::info!("eval:\n{}", outcome.table);
        report = Some(report_path);
        summary = Some(summary_path);
    }
    log::info!("pipeline: finished in {:.2?}", start.elapsed());
    Ok(PipelineArtifacts {
        graph: graph_path,
        inventory: inventory_path,
        sense_vectors: vectors_path,
        report,
        summary,
    })
}
