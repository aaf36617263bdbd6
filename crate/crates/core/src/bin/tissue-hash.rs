//! Command-line front end: one subcommand per pipeline stage.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tissue_hash::config::KeyValues;
use tissue_hash::error::{Error, Result};
use tissue_hash::eval::{write_metrics_csv, write_pr_curve_csv};
use tissue_hash::gcn::{load_checkpoint, save_checkpoint};
use tissue_hash::graphcons::{load_graph_dir, load_graphs, MergeCriterion};
use tissue_hash::index::{bench_index, build_index, encode_code, load_index, save_index};
use tissue_hash::ingest::{
    generate_synthetic_wsi_named, read_manifest, save_patch_grid, write_manifest, SyntheticSpec,
};
use tissue_hash::pipeline::{build_graph_dir, evaluate, run_pipeline, PipelineConfig};
use tissue_hash::train::{train, write_history_csv, TrainConfig};

#[derive(Parser)]
#[command(
    name = "tissue-hash",
    version,
    about = "Hash-based region retrieval over slide patch grids"
)]
struct Cli {
    /// Master seed (overrides the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Flat key=value config file; command-line flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Feature-grid ingestion.
    #[command(subcommand)]
    Ingest(IngestCmd),
    /// Tissue-graph construction.
    #[command(subcommand)]
    Graphs(GraphsCmd),
    /// Train a model on a directory of graph files.
    Train(TrainArgs),
    /// Binary-code index operations.
    #[command(subcommand)]
    Index(IndexCmd),
    /// Retrieval evaluation.
    #[command(subcommand)]
    Eval(EvalCmd),
    /// Whole pipeline.
    #[command(subcommand)]
    Pipeline(PipelineCmd),
}

#[derive(Subcommand)]
enum IngestCmd {
    /// Generate one synthetic slide.
    Gen {
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum GraphsCmd {
    Build {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        nbar: usize,
        #[arg(long)]
        out: PathBuf,
        /// union_ees (default) or ward
        #[arg(long, default_value = "union_ees")]
        criterion: MergeCriterion,
    },
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    graphs: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Per-epoch loss CSV.
    #[arg(long)]
    history: Option<PathBuf>,
}

#[derive(Args)]
struct ModelPaths {
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    index: Option<PathBuf>,
}

#[derive(Subcommand)]
enum IndexCmd {
    Build {
        #[arg(long)]
        graphs: PathBuf,
        #[command(flatten)]
        paths: ModelPaths,
    },
    Query {
        /// Graph file whose graphs are used as queries.
        #[arg(long)]
        code_from: PathBuf,
        /// Only query this graph.
        #[arg(long)]
        graph_id: Option<String>,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[command(flatten)]
        paths: ModelPaths,
    },
    Bench {
        #[arg(long, default_value_t = 50_000)]
        size: usize,
        #[arg(long, default_value_t = 48)]
        bits: usize,
        #[arg(long, default_value_t = 200)]
        queries: usize,
        #[arg(long, default_value_t = 50)]
        k: usize,
    },
}

#[derive(Subcommand)]
enum EvalCmd {
    Run {
        /// Directory of query graph files.
        #[arg(long)]
        queries: PathBuf,
        #[arg(long)]
        nbar: usize,
        #[arg(long, default_value_t = 50)]
        depth: usize,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        paths: ModelPaths,
    },
}

#[derive(Subcommand)]
enum PipelineCmd {
    All {
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Comma-separated n_bar values.
        #[arg(long)]
        nbar: Option<String>,
    },
}

fn load_kv(path: Option<&Path>) -> Result<KeyValues> {
    match path {
        Some(p) => KeyValues::load(p).map_err(|e| match e {
            Error::Io { .. } => Error::Config(e.to_string()),
            other => other,
        }),
        None => Ok(KeyValues::new()),
    }
}

fn resolve(flag: Option<PathBuf>, kv: &KeyValues, key: &str) -> Result<PathBuf> {
    flag.or_else(|| kv.get(key).filter(|v| !v.is_empty()).map(PathBuf::from))
        .ok_or_else(|| Error::Config(format!("missing --{key} (or `{key}` in config)")))
}

fn run(cli: Cli) -> Result<()> {
    let mut kv = load_kv(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        kv.set("seed", seed.to_string());
    }
    match cli.command {
        Command::Ingest(IngestCmd::Gen { spec, out }) => {
            let spec = match spec {
                Some(p) => SyntheticSpec::from_key_values(&load_kv(Some(&p))?)?,
                None => SyntheticSpec::default(),
            };
            let seed = cli.seed.unwrap_or(0);
            let id = out
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "wsi".into());
            let grid = generate_synthetic_wsi_named(&spec, seed, &id)?;
            save_patch_grid(&grid, &out)?;
            let dir = out
                .parent()
                .filter(|p| !p.as_os_str().is_empty())
                .unwrap_or(Path::new("."));
            let mut entries = read_manifest(dir).unwrap_or_default();
            let file = out.file_name().unwrap().to_string_lossy().into_owned();
            entries.retain(|(f, _)| *f != file);
            entries.push((file, id));
            entries.sort();
            write_manifest(dir, &entries)?;
            println!("wrote {} ({} patches)", out.display(), grid.num_patches());
        }
        Command::Graphs(GraphsCmd::Build {
            features,
            nbar,
            out,
            criterion,
        }) => {
            if nbar == 0 {
                return Err(Error::Config("--nbar must be >= 1".into()));
            }
            let n = build_graph_dir(&features, nbar, criterion, &out)?;
            println!("wrote {n} graphs to {}", out.display());
        }
        Command::Train(args) => {
            let cfg = TrainConfig::from_key_values(&kv)?;
            let graphs = load_graph_dir(&args.graphs)?;
            let mut cfg = cfg;
            if kv.get("feature_dim").is_none() {
                if let Some(g) = graphs.first() {
                    cfg.dims.feature_dim = g.feature_dim();
                }
            }
            let outcome = train(&graphs, &cfg)?;
            save_checkpoint(&outcome.params, &args.out)?;
            if let Some(h) = &args.history {
                write_history_csv(h, &outcome.history)?;
            }
            println!(
                "trained {} epochs, final loss {}",
                outcome.history.len(),
                outcome.history.last().copied().unwrap_or(f64::NAN)
            );
        }
        Command::Index(IndexCmd::Build { graphs, paths }) => {
            let checkpoint = resolve(paths.checkpoint, &kv, "checkpoint")?;
            let out = resolve(paths.index, &kv, "index")?;
            let params = load_checkpoint(&checkpoint)?;
            let index = build_index(&load_graph_dir(&graphs)?, &params)?;
            save_index(&index, &out)?;
            println!("indexed {} graphs into {}", index.len(), out.display());
        }
        Command::Index(IndexCmd::Query {
            code_from,
            graph_id,
            k,
            paths,
        }) => {
            let checkpoint = resolve(paths.checkpoint, &kv, "checkpoint")?;
            let index_path = resolve(paths.index, &kv, "index")?;
            if k == 0 {
                return Err(Error::Config("--k must be >= 1".into()));
            }
            let params = load_checkpoint(&checkpoint)?;
            let index = load_index(&index_path)?;
            let graphs = load_graphs(&code_from)?;
            let mut any = false;
            let mut text = String::from("query_id\trank\tgraph_id\tdistance\tlabel\n");
            for g in graphs
                .iter()
                .filter(|g| graph_id.as_deref().is_none_or(|id| id == g.graph_id))
            {
                any = true;
                let result = index.query(&g.graph_id, &encode_code(g, &params)?, k)?;
                for (rank, hit) in result.ranked.iter().enumerate() {
                    text.push_str(&format!(
                        "{}\t{}\t{}\t{}\t{}\n",
                        result.query_id,
                        rank + 1,
                        hit.graph_id,
                        hit.distance,
                        hit.label
                    ));
                }
            }
            if !any {
                return Err(Error::InvalidGrid(format!(
                    "no matching graph in {}",
                    code_from.display()
                )));
            }
            // A closed pipe (e.g. `| head`) is not an error worth reporting.
            let _ = std::io::stdout().lock().write_all(text.as_bytes());
        }
        Command::Index(IndexCmd::Bench {
            size,
            bits,
            queries,
            k,
        }) => {
            if size == 0 || bits == 0 || queries == 0 || k == 0 {
                return Err(Error::Config("bench sizes must be >= 1".into()));
            }
            let seed = cli.seed.unwrap_or(0);
            let r = bench_index(size, bits, queries, k, seed)?;
            println!(
                "size={} bits={} queries={} k={} mean_query_ms={:.4} max_query_ms={:.4}",
                r.size, r.code_bits, r.queries, r.k, r.mean_query_ms, r.max_query_ms
            );
        }
        Command::Eval(EvalCmd::Run {
            queries,
            nbar,
            depth,
            out,
            paths,
        }) => {
            let checkpoint = resolve(paths.checkpoint, &kv, "checkpoint")?;
            let index_path = resolve(paths.index, &kv, "index")?;
            let report = evaluate(&index_path, &checkpoint, &queries, nbar, depth)?;
            write_metrics_csv(&out.join("metrics.csv"), &[report.row])?;
            write_pr_curve_csv(&out.join("pr_curve.csv"), &report.pr_curve)?;
            println!(
                "queries={} database={} AP50={} mAP={}",
                report.queries, report.database, report.row.ap_at_50, report.row.map
            );
        }
        Command::Pipeline(PipelineCmd::All { out_dir, nbar }) => {
            if let Some(d) = out_dir {
                kv.set("out_dir", d.to_string_lossy());
            }
            if let Some(n) = nbar {
                kv.set("n_bar", n);
            }
            let cfg = PipelineConfig::from_key_values(&kv)?;
            let report = run_pipeline(&cfg)?;
            for s in &report.skipped {
                println!("skipped (up to date): {s}");
            }
            println!("n_bar,AP50,mAP");
            for row in &report.metrics {
                println!("{},{},{}", row.n_bar, row.ap_at_50, row.map);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "debug" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!(
                "error kind={} code={} message={}",
                e.kind(),
                e.exit_code(),
                e
            );
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
