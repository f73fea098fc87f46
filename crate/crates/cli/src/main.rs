use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use egosense_cli::commands;
use egosense_cli::pipeline::{run_pipeline, write_atomic};
use egosense_cli::{with_threads, CliResult, PipelineConfig};

/// Multi-prototype sense embeddings from word embeddings.
#[derive(Parser)]
#[command(name = "egosense", version)]
struct Cli {
    /// Flat `key = value` file; flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for every stage [default: all cores].
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build or import a nearest-neighbor similarity graph.
    #[command(subcommand)]
    Graph(GraphCommand),
    /// Cluster ego-networks of the graph into a sense inventory.
    Induce {
        #[command(flatten)]
        graph: GraphInput,
        #[command(flatten)]
        induction: InductionArgs,
        /// Word list restricting which words get senses.
        #[arg(long)]
        targets: Option<PathBuf>,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Average member word vectors into sense vectors.
    Pool {
        #[command(flatten)]
        embeddings: EmbeddingArgs,
        #[arg(long)]
        inventory: Option<PathBuf>,
        #[command(flatten)]
        pooling: PoolingArgs,
        /// Output format, `text` or `binary`.
        #[arg(long)]
        sense_vectors_format: Option<String>,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Disambiguate a word in context, or every line of a batch file.
    Wsd {
        #[command(flatten)]
        embeddings: EmbeddingArgs,
        #[command(flatten)]
        senses: SenseInput,
        #[command(flatten)]
        wsd: WsdArgs,
        #[arg(long, required_unless_present = "batch", requires = "context")]
        target: Option<String>,
        #[arg(long)]
        context: Option<String>,
        /// TSV lines `id<TAB>target<TAB>context`.
        #[arg(long, conflicts_with = "target")]
        batch: Option<PathBuf>,
        /// Batch output file [default: stdout].
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Score sense predictions on a TWSI- or SemEval-style dataset.
    Eval {
        #[command(flatten)]
        embeddings: EmbeddingArgs,
        #[arg(long)]
        inventory: Option<PathBuf>,
        #[command(flatten)]
        senses: SenseInput,
        #[command(flatten)]
        pooling: PoolingArgs,
        #[command(flatten)]
        wsd: WsdArgs,
        #[command(flatten)]
        dataset: DatasetArgs,
        #[arg(long)]
        seed: Option<u64>,
        /// Report TSV path.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Look up neighbors and senses.
    #[command(subcommand)]
    Inspect(InspectCommand),
    /// Run every stage, skipping those whose artifact is supplied.
    Pipeline {
        #[command(flatten)]
        embeddings: EmbeddingArgs,
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long)]
        inventory: Option<PathBuf>,
        #[command(flatten)]
        senses: SenseInput,
        #[command(flatten)]
        knn: KnnArgs,
        #[command(flatten)]
        induction: InductionArgs,
        #[arg(long)]
        targets: Option<PathBuf>,
        #[command(flatten)]
        pooling: PoolingArgs,
        #[command(flatten)]
        wsd: WsdArgs,
        #[command(flatten)]
        dataset: DatasetArgs,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum GraphCommand {
    /// Exact cosine kNN over an embedding matrix.
    Build {
        #[command(flatten)]
        embeddings: EmbeddingArgs,
        #[command(flatten)]
        knn: KnnArgs,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Normalize an external `word<TAB>neighbor<TAB>weight` graph.
    Import {
        #[arg(long = "input", alias = "graph")]
        input: Option<PathBuf>,
        #[arg(long)]
        top_n: Option<usize>,
        #[arg(long, short)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum InspectCommand {
    /// Graph or embedding neighbors of a word, and its senses.
    Word {
        word: String,
        #[arg(long)]
        graph: Option<PathBuf>,
        #[command(flatten)]
        embeddings: EmbeddingArgs,
        #[arg(long)]
        inventory: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        top: usize,
    },
    /// Nearest senses (and words) of a `word#senseId` vector.
    Sense {
        key: String,
        #[command(flatten)]
        senses: SenseInput,
        #[command(flatten)]
        embeddings: EmbeddingArgs,
        #[arg(long, default_value_t = 10)]
        top: usize,
    },
}

type Overrides = Vec<(String, String)>;

fn set<T: ToString>(o: &mut Overrides, key: &str, v: &Option<T>) {
    if let Some(v) = v {
        o.push((key.to_owned(), v.to_string()));
    }
}

fn set_path(o: &mut Overrides, key: &str, v: &Option<PathBuf>) {
    set(o, key, &v.as_ref().map(|p| p.display().to_string()));
}

#[derive(Args)]
struct EmbeddingArgs {
    /// Word embeddings in word2vec format.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// `text` or `binary`.
    #[arg(long)]
    embeddings_format: Option<String>,
    /// Context embeddings, needed by the probability strategy.
    #[arg(long)]
    context_embeddings: Option<PathBuf>,
}

impl EmbeddingArgs {
    fn push(&self, o: &mut Overrides) {
        set_path(o, "embeddings", &self.embeddings);
        set(o, "embeddings_format", &self.embeddings_format);
        set_path(o, "context_embeddings", &self.context_embeddings);
    }
}

#[derive(Args)]
struct GraphInput {
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Neighbors kept per word when reading the graph.
    #[arg(long)]
    top_n: Option<usize>,
}

#[derive(Args)]
struct SenseInput {
    #[arg(long)]
    sense_vectors: Option<PathBuf>,
    /// `text` or `binary`.
    #[arg(long)]
    sense_vectors_format: Option<String>,
}

impl SenseInput {
    fn push(&self, o: &mut Overrides) {
        set_path(o, "sense_vectors", &self.sense_vectors);
        set(o, "sense_vectors_format", &self.sense_vectors_format);
    }
}

#[derive(Args)]
struct KnnArgs {
    #[arg(long)]
    top_n: Option<usize>,
    #[arg(long)]
    block_size: Option<usize>,
}

#[derive(Args)]
struct InductionArgs {
    /// `fine`, `medium` or `coarse`.
    #[arg(long)]
    granularity: Option<String>,
    /// Ego-network size N.
    #[arg(long = "ego-size", visible_alias = "N")]
    ego_size: Option<usize>,
    /// Ego-network connectivity n.
    #[arg(long = "n", visible_alias = "connectivity")]
    connectivity: Option<usize>,
    /// Minimum cluster size k.
    #[arg(long = "k", visible_alias = "min-cluster-size")]
    min_cluster_size: Option<usize>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

impl InductionArgs {
    fn push(&self, o: &mut Overrides) {
        set(o, "granularity", &self.granularity);
        set(o, "ego_size", &self.ego_size);
        set(o, "connectivity", &self.connectivity);
        set(o, "min_cluster_size", &self.min_cluster_size);
        set(o, "max_iterations", &self.max_iterations);
        set(o, "seed", &self.seed);
    }
}

#[derive(Args)]
struct PoolingArgs {
    /// `weighted` or `unweighted`.
    #[arg(long)]
    pooling: Option<String>,
}

#[derive(Args)]
struct WsdArgs {
    /// `sim` or `prob`.
    #[arg(long)]
    strategy: Option<String>,
    /// Most discriminative context words kept, or `none`.
    #[arg(long)]
    filter: Option<String>,
}

impl WsdArgs {
    fn push(&self, o: &mut Overrides) {
        set(o, "strategy", &self.strategy);
        set(o, "filter", &self.filter);
    }
}

#[derive(Args)]
struct DatasetArgs {
    /// `twsi` or `semeval`.
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long)]
    dataset_dir: Option<PathBuf>,
    /// Keep at most five contexts per gold sense and drop monosemous words.
    #[arg(long)]
    balanced: bool,
}

impl DatasetArgs {
    fn push(&self, o: &mut Overrides) {
        set(o, "dataset", &self.dataset);
        set_path(o, "dataset_dir", &self.dataset_dir);
        if self.balanced {
            o.push(("balanced".into(), "true".into()));
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let mut o = Overrides::new();
    set(&mut o, "threads", &cli.threads);
    let mut out_handle = io::stdout();
    let stdout = &mut out_handle;
    let config = |o: &Overrides| PipelineConfig::from_sources(cli.config.as_deref(), o);
    match &cli.command {
        Command::Graph(GraphCommand::Build { embeddings, knn, out }) => {
            embeddings.push(&mut o);
            set(&mut o, "top_n", &knn.top_n);
            set(&mut o, "block_size", &knn.block_size);
            let cfg = config(&o)?;
            with_threads(cfg.threads, || commands::graph_build(&cfg, out))?
        }
        Command::Graph(GraphCommand::Import { input, top_n, out }) => {
            set_path(&mut o, "graph", input);
            set(&mut o, "top_n", top_n);
            let cfg = config(&o)?;
            commands::graph_import(&cfg, out)
        }
        Command::Induce {
            graph,
            induction,
            targets,
            out,
        } => {
            set_path(&mut o, "graph", &graph.graph);
            set(&mut o, "top_n", &graph.top_n);
            induction.push(&mut o);
            set_path(&mut o, "targets", targets);
            let cfg = config(&o)?;
            with_threads(cfg.threads, || commands::induce_command(&cfg, out))?
        }
        Command::Pool {
            embeddings,
            inventory,
            pooling,
            sense_vectors_format,
            out,
        } => {
            embeddings.push(&mut o);
            set_path(&mut o, "inventory", inventory);
            set(&mut o, "pooling", &pooling.pooling);
            set(&mut o, "sense_vectors_format", sense_vectors_format);
            let cfg = config(&o)?;
            with_threads(cfg.threads, || commands::pool_command(&cfg, out))?
        }
        Command::Wsd {
            embeddings,
            senses,
            wsd,
            target,
            context,
            batch,
            out,
        } => {
            embeddings.push(&mut o);
            senses.push(&mut o);
            wsd.push(&mut o);
            let cfg = config(&o)?;
            match (batch, target) {
                (Some(batch), _) => with_threads(cfg.threads, || -> CliResult<()> {
                    match out {
                        Some(path) => {
                            let mut buf = Vec::new();
                            commands::wsd_batch(&cfg, batch, &mut buf)?;
                            write_atomic(path, "wsd", |w| Ok(w.write_all(&buf)?))
                        }
                        None => commands::wsd_batch(&cfg, batch, stdout).map(drop),
                    }
                })?,
                (None, Some(target)) => {
                    commands::wsd_single(&cfg, target, context.as_deref().unwrap_or(""), stdout)
                }
                (None, None) => unreachable!("clap requires --target or --batch"),
            }
        }
        Command::Eval {
            embeddings,
            inventory,
            senses,
            pooling,
            wsd,
            dataset,
            seed,
            out,
        } => {
            embeddings.push(&mut o);
            set_path(&mut o, "inventory", inventory);
            senses.push(&mut o);
            set(&mut o, "pooling", &pooling.pooling);
            wsd.push(&mut o);
            dataset.push(&mut o);
            set(&mut o, "seed", seed);
            let cfg = config(&o)?;
            with_threads(cfg.threads, || commands::eval_command(&cfg, out.as_deref(), stdout))?
        }
        Command::Inspect(InspectCommand::Word {
            word,
            graph,
            embeddings,
            inventory,
            top,
        }) => {
            set_path(&mut o, "graph", graph);
            embeddings.push(&mut o);
            set_path(&mut o, "inventory", inventory);
            let cfg = config(&o)?;
            commands::inspect_word(&cfg, word, *top, stdout)
        }
        Command::Inspect(InspectCommand::Sense {
            key,
            senses,
            embeddings,
            top,
        }) => {
            senses.push(&mut o);
            embeddings.push(&mut o);
            let cfg = config(&o)?;
            commands::inspect_sense(&cfg, key, *top, stdout)
        }
        Command::Pipeline {
            embeddings,
            graph,
            inventory,
            senses,
            knn,
            induction,
            targets,
            pooling,
            wsd,
            dataset,
            out_dir,
        } => {
            embeddings.push(&mut o);
            set_path(&mut o, "graph", graph);
            set_path(&mut o, "inventory", inventory);
            senses.push(&mut o);
            set(&mut o, "top_n", &knn.top_n);
            set(&mut o, "block_size", &knn.block_size);
            induction.push(&mut o);
            set_path(&mut o, "targets", targets);
            set(&mut o, "pooling", &pooling.pooling);
            wsd.push(&mut o);
            dataset.push(&mut o);
            set_path(&mut o, "out_dir", out_dir);
            let cfg = config(&o)?;
            with_threads(cfg.threads, || run_pipeline(&cfg).map(|a| report_artifacts(&a, stdout)))?
        }
    }
}

fn report_artifacts(a: &egosense_cli::PipelineArtifacts, out: &mut dyn Write) {
    let paths: [(&str, Option<&Path>); 5] = [
        ("graph", a.graph.as_deref()),
        ("inventory", Some(&a.inventory)),
        ("sense_vectors", Some(&a.sense_vectors)),
        ("report", a.report.as_deref()),
        ("summary", a.summary.as_deref()),
    ];
    for (name, p) in paths {
        if let Some(p) = p {
            let _ = writeln!(out, "{name}\t{}", p.display());
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
