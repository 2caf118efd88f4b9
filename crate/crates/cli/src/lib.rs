//! `imbf` command-line driver: inspect a transactions CSV, resample it, train
//! a model, run cross-validated evaluations and build comparison grids.
//!
//! Every command writes its files plus a `manifest.json` into the output
//! directory. Exit codes: 0 success, 1 some comparison cells failed, 2 bad
//! input or configuration, 3 a resampling or training step failed.

pub mod config;
mod model_file;
mod output;

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use imbf_core::data::{inspect, parse_csv, subsample_majority, write_csv};
use imbf_core::evaluation::{
    auc_grid_csv, auc_grid_markdown, crossval_evaluate, metrics_csv, metrics_table_markdown, roc_tsv, EvalReport,
    GridCell,
};
use imbf_core::rng::derive_seed;
use imbf_core::{Dataset, Estimator, SamplerChoice, SchemaMode, Standardizer};
use log::{error, info};
use rayon::prelude::*;
use serde::Serialize;

pub use config::{CompareMatrix, ConfigError, ExperimentConfig, Overrides, SamplerKind};
pub use model_file::TrainedModel;
use output::{sha256_hex, OutputDir};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARTIAL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "imbf", version, about = "Imbalanced fraud detection experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Summarize class balance, missing values and per-column statistics.
    Inspect(CommonArgs),
    /// Write a resampled copy of the input with an `origin` column.
    Resample(CommonArgs),
    /// Fit the configured estimator on the whole (resampled) input.
    Train(CommonArgs),
    /// Stratified k-fold evaluation of one sampler and estimator.
    Evaluate(CommonArgs),
    /// AUC grid over every sampler and estimator in the config matrix.
    Compare(CommonArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Inspect(_) => "inspect",
            Command::Resample(_) => "resample",
            Command::Train(_) => "train",
            Command::Evaluate(_) => "evaluate",
            Command::Compare(_) => "compare",
        }
    }

    fn args(&self) -> &CommonArgs {
        match self {
            Command::Inspect(a)
            | Command::Resample(a)
            | Command::Train(a)
            | Command::Evaluate(a)
            | Command::Compare(a) => a,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Input CSV file.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Column layout: `kaggle_creditcard` or `generic`.
    #[arg(long)]
    pub schema: Option<SchemaMode>,
    /// Resampling applied to training data.
    #[arg(long, value_enum)]
    pub sampler: Option<SamplerKind>,
    /// JSON experiment config.
    #[arg(long, alias = "config-matrix")]
    pub config: Option<PathBuf>,
    /// Master seed; overrides IMBF_SEED, which overrides the config.
    #[arg(long, env = "IMBF_SEED")]
    pub seed: Option<u64>,
    /// Outer cross-validation folds.
    #[arg(long)]
    pub folds: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
}

/// A failed run: exit code plus a message for stderr.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

fn input_error(e: impl Display) -> Failure {
    Failure {
        code: EXIT_INPUT,
        message: e.to_string(),
    }
}

fn runtime_error(e: impl Display) -> Failure {
    Failure {
        code: EXIT_RUNTIME,
        message: e.to_string(),
    }
}

/// Where the rows came from and how many were used.
#[derive(Debug, Serialize)]
struct InputRecord {
    path: String,
    sha256: String,
    rows_loaded: usize,
    fraud_loaded: usize,
    rows_used: usize,
    fraud_used: usize,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    tool_version: &'static str,
    command: &'a str,
    seed: u64,
    config: &'a ExperimentConfig,
    input: &'a InputRecord,
    outputs: &'a BTreeMap<String, String>,
}

struct Loaded {
    data: Dataset,
    record: InputRecord,
}

fn load_input(cfg: &ExperimentConfig, for_training: bool) -> Result<Loaded, Failure> {
    let path = cfg.input().map_err(input_error)?;
    let bytes = std::fs::read(path).map_err(|e| input_error(format!("cannot read {}: {e}", path.display())))?;
    let text = std::str::from_utf8(&bytes).map_err(|e| input_error(format!("{} is not UTF-8: {e}", path.display())))?;
    let loaded = parse_csv(text, cfg.schema).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    let mut data = loaded.clone();
    if for_training {
        data = cfg.missing.apply(&data).map_err(input_error)?;
        if let Some(cap) = cfg.max_majority {
            data = subsample_majority(&data, cap, cfg.seed).map_err(input_error)?;
        }
    }
    let record = InputRecord {
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
        rows_loaded: loaded.n_rows(),
        fraud_loaded: loaded.n_positive(),
        rows_used: data.n_rows(),
        fraud_used: data.n_positive(),
    };
    Ok(Loaded { data, record })
}

fn resolve_config(args: &CommonArgs) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &args.config {
        Some(p) => ExperimentConfig::load(p).map_err(input_error)?,
        None => ExperimentConfig::default(),
    };
    cfg.apply(&Overrides {
        input: args.input.clone(),
        schema: args.schema,
        sampler: args.sampler,
        seed: args.seed,
        folds: args.folds,
        out: args.out.clone(),
    });
    cfg.validate().map_err(input_error)?;
    Ok(cfg)
}

/// Parses `argv` and runs the command; returns the process exit code.
pub fn run_from<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(argv) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                EXIT_INPUT
            } else {
                EXIT_OK
            }
        }
    }
}

pub fn run(cli: &Cli) -> i32 {
    let args = cli.command.args();
    let work = || match execute(&cli.command) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    };
    match args.jobs {
        Some(0) => {
            eprintln!("error: --jobs must be at least 1");
            EXIT_INPUT
        }
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(work),
            Err(e) => {
                eprintln!("error: cannot start {n} worker threads: {e}");
                EXIT_RUNTIME
            }
        },
        None => work(),
    }
}

fn execute(command: &Command) -> Result<i32, Failure> {
    let cfg = resolve_config(command.args())?;
    let loaded = load_input(&cfg, !matches!(command, Command::Inspect(_)))?;
    let mut out = OutputDir::create(&cfg.out_dir())
        .map_err(|e| input_error(format!("cannot create {}: {e}", cfg.out_dir().display())))?;
    let result = match command {
        Command::Inspect(_) => cmd_inspect(&loaded, &mut out),
        Command::Resample(_) => cmd_resample(&cfg, &loaded, &mut out),
        Command::Train(_) => cmd_train(&cfg, &loaded, &mut out),
        Command::Evaluate(_) => cmd_evaluate(&cfg, &loaded, &mut out),
        Command::Compare(_) => cmd_compare(&cfg, &loaded, &mut out),
    }
    .and_then(|code| {
        write_manifest(command.name(), &cfg, &loaded.record, &mut out)?;
        Ok(code)
    });
    match result {
        Ok(code) => {
            info!("outputs in {}", out.path().display());
            Ok(code)
        }
        Err(f) => {
            out.discard();
            Err(f)
        }
    }
}

fn write_file(out: &mut OutputDir, name: &str, bytes: &[u8]) -> Result<(), Failure> {
    out.write(name, bytes)
        .map(|_| ())
        .map_err(|e| runtime_error(format!("cannot write {name}: {e}")))
}

fn write_manifest(command: &str, cfg: &ExperimentConfig, input: &InputRecord, out: &mut OutputDir) -> Result<(), Failure> {
    let outputs = out.hashes().clone();
    let manifest = Manifest {
        tool: "imbf",
        tool_version: env!("CARGO_PKG_VERSION"),
        command,
        seed: cfg.seed,
        config: cfg,
        input,
        outputs: &outputs,
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    write_file(out, "manifest.json", text.as_bytes())
}

fn cmd_inspect(loaded: &Loaded, out: &mut OutputDir) -> Result<i32, Failure> {
    let report = inspect(&loaded.data);
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    write_file(out, "inspection.json", text.as_bytes())?;
    println!("{}", report.summary_line());
    for (col, n) in report.missing_per_column.iter().filter(|(_, &n)| n > 0) {
        println!("missing {col}={n}");
    }
    Ok(EXIT_OK)
}

/// Standardizes on every row, resamples, and maps synthetic rows back to input
/// units. Original rows are copied through untouched.
fn resample_in_input_units(cfg: &ExperimentConfig, ds: &Dataset) -> Result<(Dataset, imbf_core::ResampleResult), Failure> {
    let standardizer = Standardizer::fit(ds);
    let result = cfg
        .sampler
        .apply(&standardizer.transform(ds), derive_seed(cfg.seed, "sampler", 0))
        .map_err(runtime_error)?;
    let restored = standardizer.inverse_transform(&result.dataset);
    let n = ds.n_rows() * ds.n_cols();
    let mut features = ds.features().to_vec();
    features.extend_from_slice(&restored.features()[n..]);
    let data = Dataset::with_ids(
        features,
        ds.n_cols(),
        result.dataset.labels().to_vec(),
        ds.feature_names().to_vec(),
        result.dataset.row_ids().to_vec(),
        result.dataset.id_space(),
    )
    .map_err(runtime_error)?;
    Ok((data, result))
}

fn cmd_resample(cfg: &ExperimentConfig, loaded: &Loaded, out: &mut OutputDir) -> Result<i32, Failure> {
    let (data, result) = resample_in_input_units(cfg, &loaded.data)?;
    let tags: Vec<&str> = result.provenance.iter().map(|p| p.tag()).collect();
    let mut buf = Vec::new();
    write_csv(&data, &mut buf, &[("origin", &tags)]).map_err(runtime_error)?;
    write_file(out, "resampled.csv", &buf)?;
    println!(
        "original={} syn1={} syn2={} removed={} minority={} majority={}",
        loaded.data.n_rows(),
        result.count(imbf_core::Provenance::SyntheticPass1),
        result.count(imbf_core::Provenance::SyntheticPass2),
        result.removed_as_noise,
        data.n_positive().min(data.n_negative()),
        data.n_positive().max(data.n_negative()),
    );
    Ok(EXIT_OK)
}

fn cmd_train(cfg: &ExperimentConfig, loaded: &Loaded, out: &mut OutputDir) -> Result<i32, Failure> {
    let standardizer = Standardizer::fit(&loaded.data);
    let resampled = cfg
        .sampler
        .apply(&standardizer.transform(&loaded.data), derive_seed(cfg.seed, "sampler", 0))
        .map_err(runtime_error)?;
    let fitted = cfg
        .estimator
        .fit(&resampled.dataset, derive_seed(cfg.seed, "fit", 0))
        .map_err(runtime_error)?;
    let trained = TrainedModel::new(standardizer, fitted);
    trained.save(out).map_err(runtime_error)?;
    println!(
        "trained {} on {} rows ({} after resampling)",
        cfg.estimator.label(),
        loaded.data.n_rows(),
        resampled.dataset.n_rows()
    );
    Ok(EXIT_OK)
}

fn summary_row(report: &EvalReport, label: &str) -> String {
    format!(
        "{label}: accuracy={:.4} recall={:.4} precision={:.4} auc={:.4} (+/- {:.4})",
        report.mean.accuracy, report.mean.recall, report.mean.precision, report.mean.auc, report.std.auc
    )
}

fn cmd_evaluate(cfg: &ExperimentConfig, loaded: &Loaded, out: &mut OutputDir) -> Result<i32, Failure> {
    let report =
        crossval_evaluate(&loaded.data, &cfg.sampler, &cfg.estimator, cfg.folds, cfg.seed).map_err(runtime_error)?;
    let label = cfg.estimator.label().to_string();
    write_file(out, "metrics.csv", metrics_csv(&report).as_bytes())?;
    write_file(out, "roc.tsv", roc_tsv(&report).as_bytes())?;
    write_file(out, "table.md", metrics_table_markdown(&[(label.clone(), report.mean)]).as_bytes())?;
    println!("{}", summary_row(&report, &label));
    Ok(EXIT_OK)
}

struct CellOutcome {
    sampler: usize,
    estimator: usize,
    report: Option<EvalReport>,
}

fn cmd_compare(cfg: &ExperimentConfig, loaded: &Loaded, out: &mut OutputDir) -> Result<i32, Failure> {
    let m = &cfg.compare;
    let cells: Vec<(usize, usize)> = (0..m.estimators.len())
        .flat_map(|e| (0..m.samplers.len()).map(move |s| (s, e)))
        .collect();
    // Every cell shares the master seed, so all cells see the same outer folds.
    let outcomes: Vec<CellOutcome> = cells
        .par_iter()
        .map(|&(s, e)| {
            let sampler: &SamplerChoice = &m.samplers[s];
            let estimator: &Estimator = &m.estimators[e];
            let report = match crossval_evaluate(&loaded.data, sampler, estimator, cfg.folds, cfg.seed) {
                Ok(r) => Some(r),
                Err(err) => {
                    error!("cell {} x {} failed: {err}", estimator.label(), sampler.label());
                    None
                }
            };
            CellOutcome {
                sampler: s,
                estimator: e,
                report,
            }
        })
        .collect();

    let sampler_names: Vec<String> = m.samplers.iter().map(|s| s.label().to_string()).collect();
    let mut grid: Vec<(String, Vec<GridCell>)> = m
        .estimators
        .iter()
        .map(|e| (e.label().to_string(), vec![None; m.samplers.len()]))
        .collect();
    let mut long = String::from("method,sampler,status,accuracy,recall,precision,auc,auc_std\n");
    let mut raw_rows = Vec::new();
    let mut failed = 0;
    for o in &outcomes {
        let method = m.estimators[o.estimator].label();
        let sampler = m.samplers[o.sampler].label();
        match &o.report {
            Some(r) => {
                grid[o.estimator].1[o.sampler] = Some(r.mean.auc);
                long.push_str(&format!(
                    "{method},{sampler},ok,{:.6},{:.6},{:.6},{:.6},{:.6}\n",
                    r.mean.accuracy, r.mean.recall, r.mean.precision, r.mean.auc, r.std.auc
                ));
                if m.samplers[o.sampler] == SamplerChoice::None {
                    raw_rows.push((method.to_string(), r.mean));
                }
                println!("{}", summary_row(r, &format!("{method} / {sampler}")));
            }
            None => {
                failed += 1;
                long.push_str(&format!("{method},{sampler},FAILED,,,,,\n"));
                println!("{method} / {sampler}: FAILED");
            }
        }
    }

    let mut table = String::new();
    if !raw_rows.is_empty() {
        table.push_str("## Without resampling\n\n");
        table.push_str(&metrics_table_markdown(&raw_rows));
        table.push('\n');
    }
    table.push_str("## AUC by sampler\n\n");
    table.push_str(&auc_grid_markdown(&sampler_names, &grid));
    write_file(out, "table.md", table.as_bytes())?;
    write_file(out, "grid.csv", auc_grid_csv(&sampler_names, &grid).as_bytes())?;
    write_file(out, "metrics.csv", long.as_bytes())?;
    print!("{}", auc_grid_markdown(&sampler_names, &grid));
    Ok(if failed > 0 { EXIT_PARTIAL } else { EXIT_OK })
}
