use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use llmfs_core::bench::{self, BenchConfig, FsMethod, GridRunner};
use llmfs_core::data::{self, SynthSpec};
use llmfs_core::llm::BackendKind;
use llmfs_core::selection::{write_selection_csv, DEFAULT_K};
use llmfs_core::stats::{self, DEFAULT_SAMPLES_PER_CLASS};
use llmfs_core::util::derive_seed;
use llmfs_core::Averaging;

#[derive(Parser)]
#[command(name = "llmfs", version, about = "Feature selection and classifier benchmarking for tabular binary tasks")]
struct Cli {
    /// Log verbosity (error, warn, info, debug, trace).
    #[arg(long, global = true, default_value = "warn")]
    log_level: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-feature descriptors of the training split as CSV.
    Stats(StatsArgs),
    /// Rank features with one method and write the top k.
    Select(SelectArgs),
    /// Run the method x classifier grid.
    Bench(BenchArgs),
    /// Write a synthetic dataset with planted informative features.
    Synth(SynthArgs),
}

#[derive(Args)]
struct DataArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = data::DEFAULT_LABEL_COLUMN)]
    label_column: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Http,
    Mock,
}

impl From<BackendArg> for BackendKind {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Http => BackendKind::Http,
            BackendArg::Mock => BackendKind::Mock,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AveragingArg {
    Weighted,
    Binary,
}

impl From<AveragingArg> for Averaging {
    fn from(a: AveragingArg) -> Self {
        match a {
            AveragingArg::Weighted => Averaging::Weighted,
            AveragingArg::Binary => Averaging::Binary,
        }
    }
}

#[derive(Args)]
struct StatsArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.8)]
    train_fraction: f64,
    /// Describe every row instead of the training split.
    #[arg(long)]
    full: bool,
    #[arg(long, default_value_t = DEFAULT_SAMPLES_PER_CLASS)]
    samples_per_class: usize,
    /// Output CSV (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SelectArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    method: String,
    #[arg(long, default_value_t = DEFAULT_K)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Config file for LLM and prefilter settings.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    backend: Option<BackendArg>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    label_column: Option<String>,
    /// Comma-separated method keys.
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    backend: Option<BackendArg>,
    #[arg(long, value_enum)]
    averaging: Option<AveragingArg>,
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory for report.csv, heatmap.csv and run.log.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 1000)]
    n_samples: usize,
    #[arg(long, default_value_t = 50)]
    n_features: usize,
    #[arg(long, default_value_t = 5)]
    n_informative: usize,
    #[arg(long, default_value_t = 2.0)]
    mean_shift: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = data::DEFAULT_LABEL_COLUMN)]
    label_column: String,
    #[arg(long)]
    out: PathBuf,
}

fn output(path: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn stats_cmd(args: StatsArgs) -> Result<()> {
    let ds = data::load_csv(&args.data.data, &args.data.label_column)?;
    let target = if args.full {
        ds
    } else {
        data::split(&ds, args.train_fraction, derive_seed(args.seed, "split"))?.0
    };
    let descriptors = stats::describe_all(&target, args.samples_per_class, args.seed)?;
    stats::write_descriptors_csv(&descriptors, output(args.out.as_ref())?)?;
    Ok(())
}

fn select_cmd(args: SelectArgs) -> Result<()> {
    let method: FsMethod = args.method.parse()?;
    let mut cfg = match &args.config {
        Some(p) => BenchConfig::load(p)?,
        None => BenchConfig::default(),
    };
    cfg.methods = vec![method];
    cfg.k = args.k;
    cfg.master_seed = args.seed;
    cfg.label_column = args.data.label_column.clone();
    if let Some(b) = args.backend {
        cfg.llm.backend_kind = b.into();
    }
    let ds = data::load_csv(&args.data.data, &cfg.label_column)?;
    let (_, sel) = GridRunner::new(cfg)
        .selections(&ds)?
        .pop()
        .context("no selection produced")?;
    write_selection_csv(&sel, ds.feature_names(), output(args.out.as_ref())?)?;
    Ok(())
}

fn bench_cmd(args: BenchArgs) -> Result<()> {
    let mut cfg = match &args.config {
        Some(p) => BenchConfig::load(p).with_context(|| format!("reading {}", p.display()))?,
        None => BenchConfig::default(),
    };
    if let Some(d) = args.data {
        cfg.data_path = Some(d);
    }
    if let Some(l) = args.label_column {
        cfg.label_column = l;
    }
    if let Some(m) = &args.method {
        cfg.set("methods", m)?;
    }
    if let Some(k) = args.k {
        cfg.k = k;
    }
    if let Some(s) = args.seed {
        cfg.master_seed = s;
    }
    if let Some(b) = args.backend {
        cfg.llm.backend_kind = b.into();
    }
    if let Some(a) = args.averaging {
        cfg.averaging = a.into();
    }
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    if let Some(o) = args.out {
        cfg.output_dir = o;
    }
    cfg.validate()?;
    let Some(path) = &cfg.data_path else {
        bail!("no dataset: pass --data or set data_path in the config");
    };
    let ds = data::load_csv(path, &cfg.label_column)?;
    let report = GridRunner::new(cfg.clone()).run(&ds)?;
    bench::write_outputs(&report, &cfg.output_dir)?;
    eprintln!(
        "{} cells ({} failed) written to {}",
        report.rows.len(),
        report.failed_cells(),
        cfg.output_dir.display()
    );
    Ok(())
}

fn synth_cmd(args: SynthArgs) -> Result<()> {
    let spec = SynthSpec::new(args.n_samples, args.n_features, args.n_informative, args.mean_shift, args.seed);
    let ds = data::generate_synthetic(&spec)?;
    data::save_csv(&ds, &args.out, &args.label_column)?;
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    env_logger::Builder::new().parse_filters(&cli.log_level).init();
    match cli.command {
        Command::Stats(a) => stats_cmd(a),
        Command::Select(a) => select_cmd(a),
        Command::Bench(a) => bench_cmd(a),
        Command::Synth(a) => synth_cmd(a),
    }
}
