//! Command-line entry point: ingestion, training, and the evaluation
//! harness, wired for reproducible runs. Exit codes: 0 success, 1 internal
//! error, 2 usage or input error.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use coane::config;
use coane::encoder::{export_embeddings, import_embeddings, EmbeddingMatrix};
use coane::error::{Error, Result};
use coane::eval::classify::classification_eval;
use coane::eval::cluster::clustering_eval;
use coane::eval::linkpred::{link_prediction_eval, make_link_split, LinkSplit};
use coane::eval::logreg::LogRegConfig;
use coane::eval::metrics::NmiNorm;
use coane::graph::{AttrFormat, AttributedGraph};
use coane::sampler::build_corpus;
use coane::trainer::{preprocess, train_full, write_telemetry, TrainCheckpoint, TrainConfig};

#[derive(Parser)]
#[command(
    name = "coane",
    about = "Attributed network embeddings from context co-occurrence, with evaluation tools",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct DatasetArgs {
    /// Dataset spec: `linqs:<prefix>` (reads <prefix>.content/<prefix>.cites,
    /// bare names resolve to data/<name>/<name>) or `edges:<path>` edge list.
    #[arg(long)]
    dataset: String,

    /// Attribute file for `edges:` datasets.
    #[arg(long)]
    attrs: Option<PathBuf>,

    /// Attribute file layout: dense | sparse.
    #[arg(long, default_value = "dense")]
    attr_format: String,

    /// Label file ("node_id label" lines) for `edges:` datasets.
    #[arg(long)]
    labels: Option<PathBuf>,

    /// Parse a third weight column in edge lists.
    #[arg(long)]
    weighted: bool,
}

/// Flags mirroring the training config keys one-to-one (defaults shown by
/// --help come from the built-in defaults; a --config file sits between).
#[derive(Args, Clone, Default)]
struct ConfigArgs {
    /// Flat key=value config file applied before the flags below.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Walks started per node (default 1).
    #[arg(long)]
    walks_per_node: Option<String>,
    /// Walk length in nodes (default 80).
    #[arg(long)]
    walk_length: Option<String>,
    /// Context window size, odd (default 5; typical grid 3,5,7,9,11).
    #[arg(long)]
    context_size: Option<String>,
    /// Subsampling threshold t (default 1e-5).
    #[arg(long)]
    subsample_threshold: Option<String>,
    /// Subsampling reading: keep | discard (default keep).
    #[arg(long)]
    subsample_sense: Option<String>,
    /// Embedding dimension d', even (default 128).
    #[arg(long)]
    embedding_dim: Option<String>,
    /// Decoder hidden width 1 (default 128).
    #[arg(long)]
    hidden1: Option<String>,
    /// Decoder hidden width 2 (default 128).
    #[arg(long)]
    hidden2: Option<String>,
    /// Negative samples per node k (default 20).
    #[arg(long)]
    negatives: Option<String>,
    /// Positive-loss multiplier (default 1; 0 ablates).
    #[arg(long)]
    pos_weight: Option<String>,
    /// Negative-loss strength a (default 1e-3; typical grid 1e-5..1e-1).
    #[arg(long)]
    neg_strength: Option<String>,
    /// Attribute-loss weight gamma (default 1e5; typical grid 1e3..1e7).
    #[arg(long)]
    attr_weight: Option<String>,
    /// Adam learning rate (default 1e-3).
    #[arg(long)]
    learning_rate: Option<String>,
    /// Adam beta1 (default 0.9).
    #[arg(long)]
    beta1: Option<String>,
    /// Adam beta2 (default 0.999).
    #[arg(long)]
    beta2: Option<String>,
    /// Adam epsilon (default 1e-8).
    #[arg(long)]
    epsilon: Option<String>,
    /// Per-tensor L2 gradient clip; 0 disables (default 0).
    #[arg(long)]
    clip: Option<String>,
    /// Positive-target matrix: dn_plus_d1 | norm_sum | dn | d1.
    #[arg(long)]
    target_matrix: Option<String>,
    /// Negative sampling: auto | pre | batch (auto: batch below density 0.005).
    #[arg(long)]
    sampling_mode: Option<String>,
    /// Maximum epochs (default 50).
    #[arg(long)]
    max_epochs: Option<String>,
    /// Nodes per batch (default 256).
    #[arg(long)]
    batch_size: Option<String>,
    /// Early-stop patience in epochs, 0 disables (default 10).
    #[arg(long)]
    patience: Option<String>,
    /// Relative improvement threshold for early stopping (default 1e-4).
    #[arg(long)]
    min_delta: Option<String>,
    /// Checkpoint every N epochs, 0 disables (default 0).
    #[arg(long)]
    checkpoint_every: Option<String>,
    /// Pre-sampling pool size factor (pool = factor*k*n, default 10).
    #[arg(long)]
    pool_factor: Option<String>,
    /// Worker threads for parallel sections (default 4).
    #[arg(long)]
    workers: Option<String>,
    /// Run seed (default 0).
    #[arg(long)]
    seed: Option<String>,
}

impl ConfigArgs {
    fn build(&self) -> Result<TrainConfig> {
        let pairs: [(&str, &Option<String>); 27] = [
            ("walks_per_node", &self.walks_per_node),
            ("walk_length", &self.walk_length),
            ("context_size", &self.context_size),
            ("subsample_threshold", &self.subsample_threshold),
            ("subsample_sense", &self.subsample_sense),
            ("embedding_dim", &self.embedding_dim),
            ("hidden1", &self.hidden1),
            ("hidden2", &self.hidden2),
            ("negatives", &self.negatives),
            ("pos_weight", &self.pos_weight),
            ("neg_strength", &self.neg_strength),
            ("attr_weight", &self.attr_weight),
            ("learning_rate", &self.learning_rate),
            ("beta1", &self.beta1),
            ("beta2", &self.beta2),
            ("epsilon", &self.epsilon),
            ("clip", &self.clip),
            ("target_matrix", &self.target_matrix),
            ("sampling_mode", &self.sampling_mode),
            ("max_epochs", &self.max_epochs),
            ("batch_size", &self.batch_size),
            ("patience", &self.patience),
            ("min_delta", &self.min_delta),
            ("checkpoint_every", &self.checkpoint_every),
            ("pool_factor", &self.pool_factor),
            ("workers", &self.workers),
            ("seed", &self.seed),
        ];
        let overrides: Vec<(String, String)> = pairs
            .iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
            .collect();
        config::build_config(self.config.as_deref(), &overrides)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train embeddings and write checkpoint, embeddings, telemetry, and a
    /// config echo into --out.
    Train {
        #[command(flatten)]
        dataset: DatasetArgs,
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory.
        #[arg(long, default_value = "runs/out")]
        out: PathBuf,
        /// Resume from a checkpoint file.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Recompute embeddings from a checkpoint without training.
    Embed {
        #[command(flatten)]
        dataset: DatasetArgs,
        #[command(flatten)]
        config: ConfigArgs,
        /// Checkpoint to load.
        #[arg(long)]
        checkpoint: PathBuf,
        /// Output embedding file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Link prediction: Hadamard pair features, logistic regression, AUC.
    EvalLp {
        #[command(flatten)]
        dataset: DatasetArgs,
        /// Embedding file (should be trained on the residual graph of the split).
        #[arg(long)]
        embeddings: PathBuf,
        /// Directory with a saved split; omitted = generate one from --split-seed.
        #[arg(long)]
        split_dir: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        split_seed: u64,
        #[arg(long, default_value_t = 1.0)]
        l2: f64,
        #[arg(long, default_value_t = 500)]
        iters: usize,
        #[arg(long, default_value_t = 1e-3)]
        lp_learning_rate: f64,
        /// Report file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Node classification: one-vs-rest logistic regression, macro/micro F1.
    EvalNc {
        #[command(flatten)]
        dataset: DatasetArgs,
        #[arg(long)]
        embeddings: PathBuf,
        /// Training percentage (e.g. 5, 20, 50).
        #[arg(long, default_value_t = 50.0)]
        train_pct: f64,
        #[arg(long, default_value_t = 0)]
        eval_seed: u64,
        #[arg(long, default_value_t = 1.0)]
        l2: f64,
        #[arg(long, default_value_t = 500)]
        iters: usize,
        #[arg(long, default_value_t = 1e-3)]
        lp_learning_rate: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Node clustering: k-means (k = number of classes), NMI.
    EvalClu {
        #[command(flatten)]
        dataset: DatasetArgs,
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long, default_value_t = 0)]
        eval_seed: u64,
        #[arg(long, default_value_t = 10)]
        restarts: usize,
        /// NMI normalization: arithmetic | geometric | min | max.
        #[arg(long, default_value = "arithmetic")]
        nmi_norm: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Make a link-prediction split and export it with the residual dataset.
    SplitLp {
        #[command(flatten)]
        dataset: DatasetArgs,
        #[arg(long, default_value_t = 0)]
        split_seed: u64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Dump the context corpus and co-occurrence statistics.
    Inspect {
        #[command(flatten)]
        dataset: DatasetArgs,
        #[command(flatten)]
        config: ConfigArgs,
        /// Corpus dump path ("midst<TAB>slots" lines, PAD = -1).
        #[arg(long)]
        corpus_out: Option<PathBuf>,
        /// Statistics dump path ("i j D D1" lines with a k_p header).
        #[arg(long)]
        stats_out: Option<PathBuf>,
    },
}

fn load_dataset(args: &DatasetArgs) -> Result<AttributedGraph> {
    let spec = &args.dataset;
    if let Some(prefix) = spec.strip_prefix("linqs:") {
        let prefix = if prefix.contains('/') || prefix.contains('.') {
            prefix.to_string()
        } else {
            format!("data/{prefix}/{prefix}")
        };
        let (graph, warnings) = AttributedGraph::load_linqs(
            format!("{prefix}.content"),
            format!("{prefix}.cites"),
        )?;
        for w in warnings {
            eprintln!("warning: {w}");
        }
        Ok(graph)
    } else if let Some(path) = spec.strip_prefix("edges:") {
        let mut graph = AttributedGraph::load_edge_list(path, args.weighted)?;
        if let Some(attrs) = &args.attrs {
            let format = match args.attr_format.as_str() {
                "dense" => AttrFormat::Dense,
                "sparse" => AttrFormat::SparseTriplet,
                other => {
                    return Err(Error::Config(format!(
                        "attr format must be dense|sparse, got `{other}`"
                    )))
                }
            };
            for w in graph.load_attributes(attrs, format)? {
                eprintln!("warning: {w}");
            }
        }
        if let Some(labels) = &args.labels {
            graph.load_labels(labels)?;
        }
        Ok(graph)
    } else {
        Err(Error::Config(format!(
            "dataset spec must start with linqs: or edges:, got `{spec}`"
        )))
    }
}

/// Load an embedding file and align its rows to the graph's node order.
fn load_aligned_embeddings(path: &Path, graph: &AttributedGraph) -> Result<EmbeddingMatrix> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let (names, z) = import_embeddings(&text)?;
    let by_name: HashMap<&str, usize> = names.iter().map(|s| s.as_str()).zip(0..).collect();
    let mut aligned = EmbeddingMatrix::zeros(graph.n(), z.dim);
    for v in 0..graph.n() {
        let name = graph.node_name(v as u32);
        let row = by_name.get(name).ok_or_else(|| {
            Error::Validation(format!("embedding file lacks node `{name}`"))
        })?;
        aligned
            .row_mut(v as u32)
            .copy_from_slice(z.row(*row as u32));
    }
    Ok(aligned)
}

fn require_labels(graph: &AttributedGraph) -> Result<Vec<u32>> {
    graph
        .labels()
        .map(|l| l.to_vec())
        .ok_or_else(|| Error::Validation("dataset has no labels".into()))
}

fn emit_report(report: &coane::eval::EvalReport, out: Option<&Path>) -> Result<()> {
    print!("{}", report.to_text());
    if let Some(path) = out {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).ok();
        }
        report.write(path)?;
    }
    Ok(())
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Train {
            dataset,
            config: cfg_args,
            out,
            resume,
        } => {
            let graph = load_dataset(&dataset)?;
            let cfg = cfg_args.build()?;
            std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            std::fs::write(out.join("config_echo.txt"), config::echo(&cfg))
                .map_err(|e| Error::io(out.join("config_echo.txt"), e))?;
            let resume_state = match resume {
                Some(p) => Some(TrainCheckpoint::load(p)?),
                None => None,
            };
            let ckpt_path = out.join("checkpoint.bin");
            let run = train_full(&graph, &cfg, resume_state, Some(&ckpt_path))?;
            run.checkpoint.save(&ckpt_path)?;
            let emb_path = out.join("embeddings.txt");
            std::fs::write(&emb_path, export_embeddings(&run.embeddings, graph.names()))
                .map_err(|e| Error::io(&emb_path, e))?;
            write_telemetry(&run, out.join("telemetry.log"))?;
            println!(
                "trained {} nodes x {} dims, {} epochs, sampling {}, final objective {:.6}",
                graph.n(),
                cfg.embedding_dim,
                run.epochs.len(),
                run.resolved_mode,
                run.epochs.last().map(|e| e.l_obj).unwrap_or(f64::NAN),
            );
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Embed {
            dataset,
            config: cfg_args,
            checkpoint,
            out,
        } => {
            let graph = load_dataset(&dataset)?;
            let cfg = cfg_args.build()?;
            let state = TrainCheckpoint::load(checkpoint)?;
            let (corpus, _, _) = preprocess(&graph, &cfg)?;
            let attrs = coane::encoder::SparseAttrs::from_graph(&graph);
            let z = coane::encoder::refresh_all_embeddings(&corpus, &attrs, &state.model.bank)?;
            if let Some(parent) = out.parent() {
                std::fs::create_dir_all(parent).ok();
            }
            std::fs::write(&out, export_embeddings(&z, graph.names()))
                .map_err(|e| Error::io(&out, e))?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::EvalLp {
            dataset,
            embeddings,
            split_dir,
            split_seed,
            l2,
            iters,
            lp_learning_rate,
            out,
        } => {
            let graph = load_dataset(&dataset)?;
            let z = load_aligned_embeddings(&embeddings, &graph)?;
            let split = match &split_dir {
                Some(dir) => LinkSplit::load(dir, &graph)?,
                None => {
                    eprintln!("no split directory given; generating split with seed {split_seed}");
                    make_link_split(&graph, split_seed)?
                }
            };
            let cfg = LogRegConfig {
                l2,
                iters,
                learning_rate: lp_learning_rate,
            };
            let report = link_prediction_eval(&z, &split, &cfg)?;
            emit_report(&report, out.as_deref())
        }
        Command::EvalNc {
            dataset,
            embeddings,
            train_pct,
            eval_seed,
            l2,
            iters,
            lp_learning_rate,
            out,
        } => {
            let graph = load_dataset(&dataset)?;
            let z = load_aligned_embeddings(&embeddings, &graph)?;
            let labels = require_labels(&graph)?;
            let cfg = LogRegConfig {
                l2,
                iters,
                learning_rate: lp_learning_rate,
            };
            let report =
                classification_eval(&z, &labels, train_pct / 100.0, eval_seed, &cfg)?;
            emit_report(&report, out.as_deref())
        }
        Command::EvalClu {
            dataset,
            embeddings,
            eval_seed,
            restarts,
            nmi_norm,
            out,
        } => {
            let graph = load_dataset(&dataset)?;
            let z = load_aligned_embeddings(&embeddings, &graph)?;
            let labels = require_labels(&graph)?;
            let norm: NmiNorm = nmi_norm.parse()?;
            let report = clustering_eval(&z, &labels, eval_seed, restarts, norm)?;
            emit_report(&report, out.as_deref())
        }
        Command::SplitLp {
            dataset,
            split_seed,
            out,
        } => {
            let graph = load_dataset(&dataset)?;
            let split = make_link_split(&graph, split_seed)?;
            std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            split.save(&out, &graph)?;
            let residual = split.residual_graph(&graph);
            residual.save_edge_list(out.join("residual_edges.tsv"))?;
            residual.save_attributes_dense(out.join("residual_attrs.txt"))?;
            if residual.labels().is_some() {
                residual.save_labels(out.join("residual_labels.txt"))?;
            }
            println!(
                "split {} edges into {}/{}/{} (+ equal negatives); residual graph has {} edges",
                graph.edge_count(),
                split.train_pos.len(),
                split.valid_pos.len(),
                split.test_pos.len(),
                residual.edge_count()
            );
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Inspect {
            dataset,
            config: cfg_args,
            corpus_out,
            stats_out,
        } => {
            let graph = load_dataset(&dataset)?;
            let cfg = cfg_args.build()?;
            let corpus = build_corpus(&graph, &cfg.walk_config())?;
            let stats = coane::cooccur::build_cooccurrence(&corpus, &graph, cfg.target_matrix);
            println!(
                "n={} d={} edges={} density={:.6} windows={} k_p={}",
                graph.n(),
                graph.d(),
                graph.edge_count(),
                graph.density(),
                corpus.total_windows(),
                stats.k_p
            );
            if let Some(path) = corpus_out {
                std::fs::write(&path, corpus.dump()).map_err(|e| Error::io(&path, e))?;
                println!("wrote {}", path.display());
            }
            if let Some(path) = stats_out {
                std::fs::write(&path, stats.dump()).map_err(|e| Error::io(&path, e))?;
                println!("wrote {}", path.display());
            }
            Ok(())
        }
    }
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
