//! `sigaug` command line: dataset statistics, balance reports, augmentation,
//! experiments and parameter sweeps.

mod config;

pub use config::{DatasetConfig, RunConfig};

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::augment::augment;
use crate::balance::{balance_report, enumerate_triangles, write_profiles_csv, BalanceSummary};
use crate::curriculum::write_schedule_csv;
use crate::encoder::{write_checkpoint, InputFeatures, OptimizerKind};
use crate::error::{Error, Result};
use crate::evalbench::{
    run_experiment, sensitivity_sweep, write_plot_data, write_seed_csv, write_sweep_csv, Dataset, Metric, Pipeline,
    PretrainCache, SweepParam,
};
use crate::graph::{split_train_test, write_sign_tsv, DatasetFormat, GraphStats, SignedGraph};
use crate::augment::CandidateScope;

pub const THREADS_ENV: &str = "SIGAUG_THREADS";

#[derive(Debug, Parser)]
#[command(name = "sigaug", version, about = "Signed graph augmentation and link sign prediction")]
pub struct Cli {
    /// Worker threads (overrides SIGAUG_THREADS).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Node, link and triangle statistics of a dataset.
    Stats(StatsArgs),
    /// Triangle counts and per-edge difficulty scores.
    BalanceReport(BalanceArgs),
    /// Pre-train on one training split and write the augmented edge list.
    Augment(RunArgs),
    /// Run a pipeline over all seeds.
    Run(RunArgs),
    /// Run one experiment per value of a parameter.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct DatasetArgs {
    /// Dataset name (bitcoin-alpha, bitcoin-otc, epinions, slashdot) or file path.
    pub dataset: String,
    #[arg(long)]
    pub format: Option<DatasetFormat>,
    /// Directory holding named datasets (default: $SIGAUG_DATA_DIR or ./datasets).
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub dataset: DatasetArgs,
    /// Print JSON instead of a table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct BalanceArgs {
    #[command(flatten)]
    pub dataset: DatasetArgs,
    /// Output directory for `balance.json` and `edge_profiles.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also report the training split drawn with this seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.8)]
    pub split_ratio: f64,
}

/// Flags that override values from `--config`.
#[derive(Debug, Default, Args)]
pub struct Overrides {
    /// TOML (or resolved JSON) run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub dataset: Option<String>,
    #[arg(long)]
    pub format: Option<DatasetFormat>,
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// baseline, sga, sa-only, tp-only or random:<kind>,<ratio>.
    #[arg(long)]
    pub pipeline: Option<Pipeline>,
    /// Number of seeds, used as 0..N.
    #[arg(long, conflicts_with = "seed_list")]
    pub seeds: Option<u64>,
    /// Explicit comma-separated seeds.
    #[arg(long, value_delimiter = ',')]
    pub seed_list: Option<Vec<u64>>,
    #[arg(long)]
    pub split_ratio: Option<f64>,
    #[arg(long)]
    pub embed_dim: Option<usize>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub optimizer: Option<String>,
    #[arg(long)]
    pub input_features: Option<String>,
    #[arg(long)]
    pub eps_add_pos: Option<f64>,
    #[arg(long)]
    pub eps_add_neg: Option<f64>,
    #[arg(long)]
    pub eps_del_pos: Option<f64>,
    #[arg(long)]
    pub eps_del_neg: Option<f64>,
    /// two-hop or all-pairs.
    #[arg(long)]
    pub candidate_scope: Option<String>,
    #[arg(long)]
    pub max_additions: Option<usize>,
    #[arg(long)]
    pub lambda0: Option<f64>,
    #[arg(long)]
    pub big_t: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub overrides: Overrides,
    /// Also write binary encoder checkpoints.
    #[arg(long)]
    pub checkpoints: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub overrides: Overrides,
    /// eps_add_pos, eps_add_neg, eps_del_pos, eps_del_neg, big_t or lambda0.
    #[arg(long)]
    pub param: String,
    #[arg(long, value_delimiter = ',', required = true)]
    pub values: Vec<f64>,
}

fn parse_kebab<T: serde::de::DeserializeOwned>(what: &str, s: &str) -> Result<T> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| Error::InvalidArgument(format!("unknown {what} `{s}`")))
}

impl Overrides {
    /// Loads `--config` (or defaults) and applies the flags on top.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(d) = &self.dataset {
            cfg.dataset.name = d.clone();
        }
        if self.format.is_some() {
            cfg.dataset.format = self.format;
        }
        if self.data_dir.is_some() {
            cfg.dataset.data_dir = self.data_dir.clone();
        }
        if let Some(o) = &self.out {
            cfg.output_dir = o.clone();
        }
        let e = &mut cfg.experiment;
        if let Some(p) = self.pipeline {
            e.pipeline = p;
        }
        if let Some(n) = self.seeds {
            e.seeds = (0..n).collect();
        }
        if let Some(list) = &self.seed_list {
            e.seeds = list.clone();
        }
        if let Some(r) = self.split_ratio {
            e.split_ratio = r;
        }
        if let Some(v) = self.embed_dim {
            e.encoder.embed_dim = v;
        }
        if let Some(v) = self.layers {
            e.encoder.layers = v;
        }
        if let Some(v) = self.lr {
            e.encoder.learning_rate = v;
        }
        if let Some(v) = self.epochs {
            e.encoder.epochs = v;
        }
        if let Some(v) = &self.optimizer {
            e.encoder.optimizer = parse_kebab::<OptimizerKind>("optimizer", v)?;
        }
        if let Some(v) = &self.input_features {
            e.encoder.input_features = parse_kebab::<InputFeatures>("input features", v)?;
        }
        for (flag, slot) in [
            (self.eps_add_pos, &mut e.augment.eps_add_pos),
            (self.eps_add_neg, &mut e.augment.eps_add_neg),
            (self.eps_del_pos, &mut e.augment.eps_del_pos),
            (self.eps_del_neg, &mut e.augment.eps_del_neg),
        ] {
            if let Some(v) = flag {
                *slot = v;
            }
        }
        if let Some(v) = &self.candidate_scope {
            e.augment.candidate_scope = parse_kebab::<CandidateScope>("candidate scope", v)?;
        }
        if self.max_additions.is_some() {
            e.augment.max_additions = self.max_additions;
        }
        if let Some(v) = self.lambda0 {
            e.curriculum.lambda0 = v;
        }
        if self.big_t.is_some() {
            e.curriculum.big_t = self.big_t;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn open_dataset(args: &DatasetArgs) -> Result<Dataset> {
    let dir = args.data_dir.clone().unwrap_or_else(crate::evalbench::default_data_dir);
    Dataset::open(&args.dataset, args.format, &dir)
}

fn sha256_file(path: &Path) -> Result<String> {
    let mut reader = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = reader.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect())
}

#[derive(Debug, Serialize)]
struct StatsOutput {
    dataset: String,
    path: PathBuf,
    sha256: String,
    #[serde(flatten)]
    stats: GraphStats,
    balance: BalanceSummary,
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn create_file(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create_file(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

fn cmd_stats(args: &StatsArgs) -> Result<()> {
    let ds = open_dataset(&args.dataset)?;
    let stats = GraphStats::compute(&ds.list, &ds.graph, &ds.build)?;
    let out = StatsOutput {
        dataset: ds.name.clone(),
        sha256: sha256_file(&ds.list.path)?,
        path: ds.list.path.clone(),
        stats,
        balance: BalanceSummary::from(&enumerate_triangles(&ds.graph)),
    };
    if args.json {
        println!("{}", serde_json::to_string_pretty(&out)?);
        return Ok(());
    }
    let s = &out.stats;
    let bd = out.balance.bd.map(|b| format!("{:.2}%", 100.0 * b)).unwrap_or_else(|| "n/a".into());
    println!("dataset          {}", out.dataset);
    println!("sha256           {}", out.sha256);
    println!("nodes            {}", s.nodes);
    println!("links            {}", s.links);
    println!("positive links   {}", s.positive_links);
    println!("negative links   {}", s.negative_links);
    println!("density          {:.3e}", s.density);
    println!("undirected edges {} ({} +, {} -)", s.undirected_edges, s.positive_edges, s.negative_edges);
    println!("graph density    {:.3e}", s.graph_density);
    println!("BT               {}", out.balance.bt);
    println!("UT               {}", out.balance.ut);
    println!("BD               {bd}");
    Ok(())
}

#[derive(Debug, Serialize)]
struct BalanceOutput {
    dataset: String,
    full: BalanceSummary,
    train: BalanceSummary,
    train_seed: u64,
    split_ratio: f64,
}

fn cmd_balance(args: &BalanceArgs) -> Result<()> {
    let ds = open_dataset(&args.dataset)?;
    let report = balance_report(&ds.graph);
    let split = split_train_test(&ds.graph.edges(), args.split_ratio, args.seed)?;
    let train_graph = SignedGraph::from_edges(ds.graph.num_nodes(), &split.train)?;
    let out = BalanceOutput {
        dataset: ds.name.clone(),
        full: BalanceSummary::from(&report.stats),
        train: BalanceSummary::from(&enumerate_triangles(&train_graph)),
        train_seed: args.seed,
        split_ratio: args.split_ratio,
    };
    println!("{}", serde_json::to_string_pretty(&out)?);
    if let Some(dir) = &args.out {
        create_dir(dir)?;
        write_json(&dir.join("balance.json"), &out)?;
        write_profiles_csv(&report.profiles, create_file(&dir.join("edge_profiles.csv"))?)?;
    }
    Ok(())
}

fn write_edges(path: &Path, ds: &Dataset, edges: &[crate::graph::EdgeSample]) -> Result<()> {
    write_sign_tsv(edges, Some(&ds.list.node_labels), create_file(path)?).map_err(|e| Error::io(path, e))
}

fn load_run(overrides: &Overrides) -> Result<(RunConfig, Dataset)> {
    let cfg = overrides.resolve()?;
    let ds = cfg.dataset.open()?;
    create_dir(&cfg.output_dir)?;
    write_json(&cfg.output_dir.join("config.resolved.json"), &cfg)?;
    Ok((cfg, ds))
}

fn cmd_augment(args: &RunArgs) -> Result<()> {
    let (cfg, ds) = load_run(&args.overrides)?;
    let e = &cfg.experiment;
    let seed = e.seeds[0];
    let split = split_train_test(&ds.graph.edges(), e.split_ratio, seed)?;
    let train_graph = SignedGraph::from_edges(ds.graph.num_nodes(), &split.train)?;
    let enc = crate::encoder::EncoderConfig { seed: crate::rng::derive_seed(seed, "pretrain"), ..e.encoder.clone() };
    let (outcome, encoder) = augment(&train_graph, &split.train, &enc, &e.augment)?;
    let dir = &cfg.output_dir;
    write_edges(&dir.join("train.tsv"), &ds, &split.train)?;
    write_edges(&dir.join("test.tsv"), &ds, &split.test)?;
    write_edges(&dir.join("augmented.tsv"), &ds, &outcome.train)?;
    write_json(&dir.join("augmentation.json"), &outcome.log)?;
    if args.checkpoints {
        let path = dir.join("pretrain.ckpt");
        write_checkpoint(&encoder, create_file(&path)?)?;
    }
    println!("{}", serde_json::to_string_pretty(&outcome.log)?);
    Ok(())
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let (cfg, ds) = load_run(&args.overrides)?;
    let outcome = run_experiment(&ds, &cfg.experiment, None)?;
    let dir = &cfg.output_dir;
    write_json(&dir.join("report.json"), &outcome.report)?;
    write_seed_csv(&outcome.report, create_file(&dir.join("seeds.csv"))?)?;
    for a in &outcome.artifacts {
        let sd = dir.join(format!("seed-{}", a.seed));
        create_dir(&sd)?;
        write_edges(&sd.join("train_final.tsv"), &ds, &a.final_train)?;
        if let Some(schedule) = &a.schedule {
            write_schedule_csv(schedule, create_file(&sd.join("schedule.csv"))?)?;
        }
        if let Some(log) = outcome.report.seeds.iter().find(|s| s.seed == a.seed).and_then(|s| s.augmentation.as_ref()) {
            write_json(&sd.join("augmentation.json"), log)?;
        }
        if args.checkpoints {
            write_checkpoint(&a.encoder, create_file(&sd.join("encoder.ckpt"))?)?;
            if let Some(pre) = &a.pretrain {
                write_checkpoint(pre, create_file(&sd.join("pretrain.ckpt"))?)?;
            }
        }
    }
    println!("{}", outcome.report.summary_row());
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let param: SweepParam = args.param.parse()?;
    let (cfg, ds) = load_run(&args.overrides)?;
    let cache = PretrainCache::new();
    let sweep = sensitivity_sweep(&ds, &cfg.experiment, param, &args.values, &cache)?;
    let dir = &cfg.output_dir;
    write_json(&dir.join("sweep.json"), &sweep)?;
    write_sweep_csv(&sweep, create_file(&dir.join("sweep.csv"))?)?;
    for m in Metric::ALL {
        let path = dir.join(format!("sweep-{}.dat", m.name()));
        write_plot_data(&sweep, m, create_file(&path)?)?;
    }
    for row in &sweep.rows {
        println!("{param}={:<8} {}", row.value, row.report.summary_row());
    }
    Ok(())
}

fn configure_threads(flag: Option<usize>) -> Result<()> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => Some(
                v.trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?,
            ),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(Error::Config("thread count must be >= 1".into()));
        }
        // a second call in the same process (tests) keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

pub fn run(cli: &Cli) -> Result<()> {
    configure_threads(cli.threads)?;
    match &cli.command {
        Command::Stats(a) => cmd_stats(a),
        Command::BalanceReport(a) => cmd_balance(a),
        Command::Augment(a) => cmd_augment(a),
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
    }
}

/// Exit code for an error: 2 for usage and configuration problems, 1 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_usage() {
        2
    } else {
        1
    }
}

/// Full error chain on one line.
pub fn describe(err: &Error) -> String {
    let mut msg = err.to_string();
    let mut source = std::error::Error::source(err);
    while let Some(s) = source {
        let text = s.to_string();
        if !msg.contains(&text) {
            msg.push_str(": ");
            msg.push_str(&text);
        }
        source = s.source();
    }
    msg
}
