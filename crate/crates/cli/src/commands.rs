//! Bodies of the individual subcommands. Human-readable output goes to the
//! supplied writer; artifacts go to files.

use std::io::Write;
use std::path::Path;

use egosense::knn::nearest_words;
use egosense::pooling::sense_neighbors;
use egosense::wsd::{read_batch, tokenize, write_batch_line, DisambiguationRequest};
use egosense::{disambiguate, SenseKey, SenseVectorStore, Strategy};
use rayon::prelude::*;

use crate::config::{require_input, PipelineConfig};
use crate::error::{CliError, CliResult, StageExt};
use crate::pipeline::{
    build_graph, context_embeddings, evaluate, import_graph, import_inventory, import_sense_vectors, induce,
    load_dataset, pool, save_sense_vectors, word_embeddings, write_atomic, EvalInputs,
};

pub fn graph_build(cfg: &PipelineConfig, out: &Path) -> CliResult<()> {
    let m = word_embeddings(cfg)?;
    let g = build_graph(&m, cfg.top_n, cfg.block_size)?;
    write_atomic(out, "graph", |w| g.write(w))
}

/// Loads an externally computed graph and writes it back normalized:
/// deduplicated, ranked and truncated to `top_n`.
pub fn graph_import(cfg: &PipelineConfig, out: &Path) -> CliResult<()> {
    let g = import_graph(require_input("graph", &cfg.graph)?, cfg.top_n)?;
    write_atomic(out, "graph", |w| g.write(w))
}

pub fn induce_command(cfg: &PipelineConfig, out: &Path) -> CliResult<()> {
    let g = import_graph(require_input("graph", &cfg.graph)?, cfg.top_n)?;
    let inv = induce(cfg, &g)?;
    write_atomic(out, "induce", |w| inv.write(w))
}

pub fn pool_command(cfg: &PipelineConfig, out: &Path) -> CliResult<()> {
    let inv = import_inventory(require_input("inventory", &cfg.inventory)?)?;
    let m = word_embeddings(cfg)?;
    let store = pool(cfg, &inv, &m)?;
    save_sense_vectors(&store, out, cfg.sense_vectors_format)
}

fn check_strategy(cfg: &PipelineConfig) -> CliResult<()> {
    if cfg.strategy == Strategy::Probability && cfg.context_embeddings.is_none() {
        return Err(CliError::Required("context_embeddings"));
    }
    Ok(())
}

fn sense_store(cfg: &PipelineConfig) -> CliResult<SenseVectorStore> {
    import_sense_vectors(cfg, require_input("sense_vectors", &cfg.sense_vectors)?)
}

pub fn wsd_single(cfg: &PipelineConfig, target: &str, context: &str, out: &mut dyn Write) -> CliResult<()> {
    check_strategy(cfg)?;
    let store = sense_store(cfg)?;
    let words = word_embeddings(cfg)?;
    let contexts = context_embeddings(cfg)?;
    let req = DisambiguationRequest {
        target: target.to_owned(),
        context: tokenize(context),
        strategy: cfg.strategy,
        filter_p: cfg.filter_p,
    };
    let r = disambiguate(&req, &store, &words, contexts.as_ref()).stage("wsd")?;
    let chosen = SenseKey::new(target, r.chosen);
    let io = |e: std::io::Error| CliError::Stage {
        stage: "wsd",
        source: e.into(),
    };
    match r.chosen_score() {
        Some(s) => writeln!(out, "chosen\t{chosen}\t{s}"),
        None => writeln!(out, "chosen\t{chosen}\tfallback"),
    }
    .map_err(io)?;
    for s in &r.scores {
        writeln!(out, "score\t{}\t{}", SenseKey::new(target, s.sense_id), s.score).map_err(io)?;
    }
    writeln!(out, "context\t{}", r.used_context.join(" ")).map_err(io)?;
    Ok(())
}

/// Disambiguates every line of a batch file, writing results in input
/// order. Items whose target has no senses are reported and skipped.
pub fn wsd_batch(cfg: &PipelineConfig, batch: &Path, out: &mut dyn Write) -> CliResult<usize> {
    check_strategy(cfg)?;
    crate::config::check_input("batch", batch)?;
    let store = sense_store(cfg)?;
    let words = word_embeddings(cfg)?;
    let contexts = context_embeddings(cfg)?;
    let file = std::fs::File::open(batch).stage("wsd")?;
    let items = read_batch(std::io::BufReader::new(file)).stage("wsd")?;
    let results: Vec<_> = items
        .par_iter()
        .map(|it| {
            let req = DisambiguationRequest {
                target: it.target.clone(),
                context: it.context.clone(),
                strategy: cfg.strategy,
                filter_p: cfg.filter_p,
            };
            disambiguate(&req, &store, &words, contexts.as_ref())
        })
        .collect();
    let mut skipped = 0;
    let mut fallbacks = 0;
    for (it, r) in items.iter().zip(results) {
        match r {
            Ok(r) => {
                fallbacks += usize::from(r.fallback);
                write_batch_line(&mut *out, &it.id, &it.target, &r).stage("wsd")?;
            }
            Err(egosense::Error::UnknownTarget(t)) => {
                log::warn!("wsd: {}: no senses for {t}", it.id);
                skipped += 1;
            }
            Err(e) => return Err(CliError::Stage { stage: "wsd", source: e }),
        }
    }
    log::info!(
        "wsd: {} items, {} without senses, {} fallbacks",
        items.len(),
        skipped,
        fallbacks
    );
    Ok(items.len() - skipped)
}

pub fn eval_command(cfg: &PipelineConfig, out: Option<&Path>, stdout: &mut dyn Write) -> CliResult<()> {
    check_strategy(cfg)?;
    let inventory = import_inventory(require_input("inventory", &cfg.inventory)?)?;
    let words = word_embeddings(cfg)?;
    let contexts = context_embeddings(cfg)?;
    let store = match &cfg.sense_vectors {
        Some(_) => sense_store(cfg)?,
        None => pool(cfg, &inventory, &words)?,
    };
    let dataset = load_dataset(cfg)?;
    let inputs = EvalInputs {
        inventory: &inventory,
        store: &store,
        words: &words,
        contexts: contexts.as_ref(),
    };
    let outcome = evaluate(cfg, &dataset, &inputs)?;
    if let Some(path) = out {
        write_atomic(path, "eval", |w| Ok(w.write_all(outcome.report.as_bytes())?))?;
    }
    let text = format!("{}\n{}", outcome.summary_tsv(), outcome.table);
    stdout.write_all(text.as_bytes()).stage("eval")
}

pub fn inspect_word(cfg: &PipelineConfig, word: &str, top: usize, out: &mut dyn Write) -> CliResult<()> {
    let mut lines = Vec::new();
    if let Some(path) = &cfg.graph {
        let g = import_graph(require_input("graph", &Some(path.clone()))?, cfg.top_n)?;
        let ns = g
            .neighbors(word)
            .ok_or_else(|| CliError::Stage {
                stage: "inspect",
                source: egosense::Error::WordNotInGraph(word.to_owned()),
            })?;
        for n in ns.iter().take(top) {
            lines.push(format!("neighbor\t{}\t{}", n.word, n.weight));
        }
    } else if cfg.embeddings.is_some() {
        let m = word_embeddings(cfg)?;
        let q = m
            .lookup(word, Default::default())
            .ok_or_else(|| CliError::Stage {
                stage: "inspect",
                source: egosense::Error::UnknownTarget(word.to_owned()),
            })?;
        for n in nearest_words(&m, &q, top, Some(word)) {
            lines.push(format!("neighbor\t{}\t{}", n.word, n.weight));
        }
    }
    if let Some(path) = &cfg.inventory {
        let inv = import_inventory(path)?;
        for s in inv.senses(word).unwrap_or_default() {
            let members: Vec<&str> = s.members.iter().take(top).map(|m| m.word.as_str()).collect();
            lines.push(format!(
                "sense\t{}\t{}\t{}",
                SenseKey::new(word, s.sense_id),
                s.members.len(),
                members.join(",")
            ));
        }
    }
    if lines.is_empty() {
        return Err(CliError::Required("graph, embeddings or inventory"));
    }
    for l in lines {
        writeln!(out, "{l}").stage("inspect")?;
    }
    Ok(())
}

pub fn inspect_sense(cfg: &PipelineConfig, key: &str, top: usize, out: &mut dyn Write) -> CliResult<()> {
    let key: SenseKey = key
        .parse()
        .map_err(|e: egosense::Error| CliError::Config(e.to_string()))?;
    let store = sense_store(cfg)?;
    for n in sense_neighbors(&store, &key, top).stage("inspect")? {
        writeln!(out, "sense\t{}\t{}", n.key, n.cosine).stage("inspect")?;
    }
    if cfg.embeddings.is_some() {
        let m = word_embeddings(cfg)?;
        let v = store.get(&key).expect("key checked by sense_neighbors");
        for n in nearest_words(&m, v, top, Some(&key.word)) {
            writeln!(out, "word\t{}\t{}", n.word, n.weight).stage("inspect")?;
        }
    }
    Ok(())
}
