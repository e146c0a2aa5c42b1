//! The `scnplus` command-line tool.
//!
//! Settings are merged from built-in defaults, an optional config file
//! (`--config`, TOML or JSON) and flags, later sources winning. Exit codes:
//! 0 success, 1 usage or parameter error, 2 data or I/O error, 3 training or
//! experiment aborted.
//!
//! Config file layout (every key optional):
//!
//! ```toml
//! [dataset]
//! path = "wine.csv"        # relative paths resolve against the config file
//! target = "last"          # "last", "#<index>" or a header name
//! task = "classification"  # or "regression"
//! n_train = 100
//! split = "split.json"     # fixed feature split
//!
//! [train]
//! variant = "scn+"         # scn, scn+, irvfl, irvfl+
//! l_max = 50
//! epsilon = 0.0
//! lambdas = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10]
//! t_max = 10
//! r_init = 0.9
//! activation = "sigmoid"   # or "tanh"
//! stop_metric = "rmse"     # or "frobenius"
//! renewal_cap = 10
//! seed = 0
//!
//! [lupi]
//! c = 0.1
//! gamma = 1e5
//!
//! [experiment]
//! trials = 50
//! fixed_mode = "fixed_l_max"   # or "fixed_epsilon"
//! metric = "accuracy"          # or "rmse"
//! irvfl_l_max = 200
//! variants = ["scn", "scn+", "irvfl", "irvfl+"]
//! jobs = 0
//!
//! [sweep]
//! mode = "grid"                # or "random"
//! c_values = [0.01, 0.1, 1, 2, 5, 10]
//! gamma_values = [1e2, 1e3, 1e4, 1e5, 1e6]
//! c_bounds = [0.01, 10]
//! gamma_bounds = [1e2, 1e6]
//! draws = 30
//! trials = 10
//! ```

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::{
    csv_width, load_csv, load_features, split_indices, split_privileged, DataTable, FeatureSplit, Preprocessor,
    TargetColumn, TargetEncoding, TaskKind,
};
use crate::error::ScnError;
use crate::experiment::{
    emit_table, hyper_search, run_trials, sweep_csv, trials_csv, ExperimentConfig, FixedMode, Metric, SweepGrid,
    SweepMode,
};
use crate::model::Model;
use crate::random_config::{Activation, ScaleSchedule};
use crate::solvers::LupiParams;
use crate::trainers::{train, StopMetric, TrainConfig, TrainData, TrainReport, Variant};

pub const SEED_ENV: &str = "SCNPLUS_DEFAULT_SEED";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_ABORTED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "scnplus", version, about = "Stochastic configuration networks with privileged information")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train one network and write model.json, manifest.json and rmse_history.csv.
    Train(TrainArgs),
    /// Apply a saved model to a CSV and write predictions.csv.
    Predict(PredictArgs),
    /// Repeated seeded trials of several variants; writes summary tables.
    Bench(BenchArgs),
    /// SCN+ performance over a (C, gamma) grid or random search.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
struct DataArgs {
    /// TOML or JSON settings file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset CSV.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Target column: "last", "#<index>" or a header name.
    #[arg(long)]
    target: Option<String>,
    /// regression or classification.
    #[arg(long)]
    task: Option<TaskKind>,
    /// Number of training rows; the rest are held out.
    #[arg(long = "n-train")]
    n_train: Option<usize>,
    /// Feature split JSON to use instead of a seeded random split.
    #[arg(long)]
    split: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct HyperArgs {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    lmax: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    activation: Option<Activation>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    hyper: HyperArgs,
    #[arg(long)]
    variant: Option<Variant>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    /// Target column of a labeled file; by default a file with one column more
    /// than the model's attributes is read as labeled with the target last.
    #[arg(long)]
    target: Option<String>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    jobs: Option<usize>,
    /// fixed_l_max or fixed_epsilon; defaults by task.
    #[arg(long)]
    mode: Option<FixedMode>,
    #[arg(long = "irvfl-lmax")]
    irvfl_lmax: Option<usize>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    hyper: HyperArgs,
    #[command(flatten)]
    exp: ExperimentArgs,
    /// Variants to compare (repeat or comma-separate); default all four.
    #[arg(long, value_delimiter = ',')]
    variant: Vec<Variant>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    hyper: HyperArgs,
    #[command(flatten)]
    exp: ExperimentArgs,
    /// grid or random.
    #[arg(long = "search")]
    search: Option<SweepMode>,
    #[arg(long)]
    draws: Option<usize>,
    #[arg(long = "c-values", value_delimiter = ',')]
    c_values: Vec<f64>,
    #[arg(long = "gamma-values", value_delimiter = ',')]
    gamma_values: Vec<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    dataset: DatasetSection,
    train: TrainSection,
    lupi: LupiSection,
    experiment: ExperimentSection,
    sweep: SweepSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct DatasetSection {
    path: Option<PathBuf>,
    target: Option<String>,
    task: Option<TaskKind>,
    n_train: Option<usize>,
    split: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct TrainSection {
    variant: Option<Variant>,
    l_max: Option<usize>,
    epsilon: Option<f64>,
    lambdas: Option<Vec<f64>>,
    t_max: Option<usize>,
    r_init: Option<f64>,
    activation: Option<Activation>,
    stop_metric: Option<StopMetric>,
    renewal_cap: Option<usize>,
    seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct LupiSection {
    c: Option<f64>,
    gamma: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ExperimentSection {
    trials: Option<usize>,
    fixed_mode: Option<FixedMode>,
    metric: Option<Metric>,
    irvfl_l_max: Option<usize>,
    variants: Option<Vec<Variant>>,
    jobs: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SweepSection {
    mode: Option<SweepMode>,
    c_values: Option<Vec<f64>>,
    gamma_values: Option<Vec<f64>>,
    c_bounds: Option<(f64, f64)>,
    gamma_bounds: Option<(f64, f64)>,
    draws: Option<usize>,
    trials: Option<usize>,
}

/// An error message with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<ScnError> for Failure {
    fn from(e: ScnError) -> Self {
        let code = match &e {
            ScnError::Parameter(_) => EXIT_USAGE,
            ScnError::TrainingAborted(_) | ScnError::Degenerate(_) | ScnError::Experiment(_) => EXIT_ABORTED,
            _ => EXIT_DATA,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Everything needed to reproduce a run.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub dataset: DatasetRecord,
    pub target: String,
    pub task: TaskKind,
    pub base_seed: u64,
    pub n_train: Option<usize>,
    pub split: Option<FeatureSplit>,
    pub config: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcome: Option<serde_json::Value>,
}

#[derive(Debug, Serialize)]
pub struct DatasetRecord {
    pub path: String,
    pub sha256: String,
    pub rows: usize,
    pub attributes: usize,
}

fn read_config(path: &Path) -> CliResult<FileConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read config {}: {e}", path.display())))?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
        || text.trim_start().starts_with('{');
    let mut cfg: FileConfig = if is_json {
        serde_json::from_str(&text).map_err(|e| Failure::usage(format!("bad config {}: {e}", path.display())))?
    } else {
        toml::from_str(&text).map_err(|e| Failure::usage(format!("bad config {}: {e}", path.display())))?
    };
    let base = path.parent().unwrap_or(Path::new(""));
    for p in [&mut cfg.dataset.path, &mut cfg.dataset.split].into_iter().flatten() {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    }
    Ok(cfg)
}

fn env_seed() -> CliResult<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Failure::usage(format!("{SEED_ENV} must be an unsigned integer, got '{s}'"))),
        Err(_) => Ok(None),
    }
}

/// Data-related settings after merging.
struct DataSetup {
    path: PathBuf,
    target: TargetColumn,
    target_text: String,
    task: TaskKind,
    n_train: Option<usize>,
    split: Option<FeatureSplit>,
}

fn resolve_data(args: &DataArgs, file: &FileConfig) -> CliResult<DataSetup> {
    let path = args
        .dataset
        .clone()
        .or_else(|| file.dataset.path.clone())
        .ok_or_else(|| Failure::usage("no dataset given (use --dataset or [dataset] path)"))?;
    let target_text = args
        .target
        .clone()
        .or_else(|| file.dataset.target.clone())
        .unwrap_or_else(|| "last".into());
    let target: TargetColumn = target_text.parse()?;
    let task = args
        .task
        .or(file.dataset.task)
        .ok_or_else(|| Failure::usage("no task given (use --task regression|classification)"))?;
    let split = match args.split.as_ref().or(file.dataset.split.as_ref()) {
        Some(p) => {
            let s = std::fs::read_to_string(p).map_err(|e| ScnError::io(p, e))?;
            Some(FeatureSplit::from_json(&s)?)
        }
        None => None,
    };
    Ok(DataSetup {
        path,
        target,
        target_text,
        task,
        n_train: args.n_train.or(file.dataset.n_train),
        split,
    })
}

fn resolve_train_config(variant: Variant, hyper: &HyperArgs, file: &FileConfig) -> CliResult<TrainConfig> {
    let t = &file.train;
    let mut cfg = TrainConfig::new(variant);
    if let Some(v) = hyper.lmax.or(t.l_max) {
        cfg.l_max = v;
    }
    if let Some(v) = hyper.epsilon.or(t.epsilon) {
        cfg.epsilon = v;
    }
    if t.lambdas.is_some() || t.t_max.is_some() {
        cfg.schedule = ScaleSchedule::new(
            t.lambdas.clone().unwrap_or_else(|| cfg.schedule.lambdas.clone()),
            t.t_max.unwrap_or(cfg.schedule.t_max),
        )?;
    }
    if let Some(v) = t.r_init {
        cfg.r_init = v;
    }
    if let Some(v) = hyper.activation.or(t.activation) {
        cfg.activation = v;
    }
    if let Some(v) = t.stop_metric {
        cfg.stop_metric = v;
    }
    if let Some(v) = t.renewal_cap {
        cfg.renewal_cap = v;
    }
    let c = hyper.c.or(file.lupi.c).unwrap_or(cfg.lupi.c);
    let gamma = hyper.gamma.or(file.lupi.gamma).unwrap_or(cfg.lupi.gamma);
    cfg.lupi = LupiParams::new(c, gamma)?;
    cfg.seed = match hyper.seed.or(t.seed) {
        Some(s) => s,
        None => env_seed()?.unwrap_or(0),
    };
    if cfg.l_max == 0 {
        return Err(Failure::usage("l_max must be at least 1"));
    }
    cfg.validate()?;
    Ok(cfg)
}

fn fingerprint_file(path: &Path) -> CliResult<String> {
    let bytes = std::fs::read(path).map_err(|e| ScnError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn dataset_record(setup: &DataSetup, table: &DataTable) -> CliResult<DatasetRecord> {
    Ok(DatasetRecord {
        path: setup.path.display().to_string(),
        sha256: fingerprint_file(&setup.path)?,
        rows: table.n_samples(),
        attributes: table.n_attributes(),
    })
}

fn write_out(dir: &Path, name: &str, contents: &str) -> CliResult<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| ScnError::io(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| ScnError::io(&path, e))?;
    Ok(path)
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn to_value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("serializable")
}

fn history_csv(report: &TrainReport) -> String {
    let mut s = String::from("L,rmse\n");
    for (i, r) in report.rmse_history.iter().enumerate() {
        s.push_str(&format!("{},{}\n", i + 1, r));
    }
    s
}

fn cmd_train(args: TrainArgs) -> CliResult<()> {
    let file = match &args.data.config {
        Some(p) => read_config(p)?,
        None => FileConfig::default(),
    };
    let setup = resolve_data(&args.data, &file)?;
    let variant = args.variant.or(file.train.variant).unwrap_or(Variant::ScnPlus);
    let cfg = resolve_train_config(variant, &args.hyper, &file)?;
    let table = load_csv(&setup.path, &setup.target)?;

    let (train_rows, test_rows) = match setup.n_train {
        Some(n) => split_indices(table.n_samples(), n, cfg.seed)?,
        None => ((0..table.n_samples()).collect(), Vec::new()),
    };
    let split = match &setup.split {
        Some(s) => s.clone(),
        None => split_privileged(&table, cfg.seed)?,
    };
    let pre = Preprocessor::fit(&table, &train_rows, split.clone(), setup.task)?;
    let tr = pre.prepare(&table, &train_rows)?;
    let data = TrainData {
        x: tr.x.view(),
        x_priv: Some(tr.x_priv.view()),
        t: tr.t.view(),
    };
    let (network, report) = train(data, &cfg)?;
    let model = Model::new(network, pre)?;

    let metric = Metric::for_task(setup.task);
    let train_metric = metric.evaluate(model.network.predict(tr.x.view())?.view(), tr.t.view());
    let test_metric = if test_rows.is_empty() {
        None
    } else {
        let te = model.preprocessor.prepare(&table, &test_rows)?;
        Some(metric.evaluate(model.network.predict(te.x.view())?.view(), te.t.view()))
    };

    let model_path = write_out(&args.out, "model.json", &model.to_json())?;
    let manifest = RunManifest {
        tool: "scnplus",
        version: env!("CARGO_PKG_VERSION"),
        command: "train",
        dataset: dataset_record(&setup, &table)?,
        target: setup.target_text.clone(),
        task: setup.task,
        base_seed: cfg.seed,
        n_train: setup.n_train,
        split: Some(split),
        config: to_value(&cfg),
        outcome: Some(serde_json::json!({
            "final_l": report.final_l,
            "stop_reason": report.stop_reason,
            "r_renewals": report.r_renewals,
            "candidates_evaluated": report.candidates_evaluated,
            "train_metric": train_metric,
            "test_metric": test_metric,
        })),
    };
    write_out(&args.out, "manifest.json", &to_json(&manifest))?;
    write_out(&args.out, "rmse_history.csv", &history_csv(&report))?;

    let name = match metric {
        Metric::Accuracy => "accuracy(%)",
        Metric::Rmse => "rmse",
    };
    println!("{} trained: L = {} ({:?})", variant, report.final_l, report.stop_reason);
    println!("train {name}: {train_metric}");
    if let Some(t) = test_metric {
        println!("test {name}: {t}");
    }
    println!("model written to {}", model_path.display());
    Ok(())
}

fn cmd_predict(args: PredictArgs) -> CliResult<()> {
    let model = Model::load(&args.model)?;
    let p = model.preprocessor.n_attributes();
    let width = csv_width(&args.dataset)?;
    let labeled = args.target.is_some() || width == p + 1;
    let (z, labels) = if labeled {
        let target: TargetColumn = args.target.as_deref().unwrap_or("last").parse()?;
        let t = load_csv(&args.dataset, &target)?;
        (t.features, Some(t.targets_raw))
    } else {
        (load_features(&args.dataset)?, None)
    };
    if z.ncols() != p {
        return Err(ScnError::Dimension(format!(
            "model expects {p} attributes, {} has {}",
            args.dataset.display(),
            z.ncols()
        ))
        .into());
    }
    let scores = model.predict(z.view())?;

    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Failure {
        code: EXIT_DATA,
        message: e.to_string(),
    };
    match &model.preprocessor.targets {
        TargetEncoding::Regression { .. } => {
            w.write_record(["prediction"]).map_err(csv_err)?;
            for v in scores.column(0) {
                let y = model.preprocessor.targets.decode_regression(*v).expect("regression");
                w.write_record([y.to_string()]).map_err(csv_err)?;
            }
        }
        TargetEncoding::Classification { class_labels } => {
            let mut header: Vec<String> = class_labels.iter().map(|l| format!("score_{l}")).collect();
            header.push("label".into());
            w.write_record(&header).map_err(csv_err)?;
            let predicted = model.predict_labels(z.view())?;
            for (row, label) in scores.rows().into_iter().zip(predicted) {
                let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                rec.push(label);
                w.write_record(&rec).map_err(csv_err)?;
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| Failure {
        code: EXIT_DATA,
        message: e.to_string(),
    })?;
    let out = write_out(&args.out, "predictions.csv", &String::from_utf8(bytes).expect("utf-8"))?;

    if let Some(labels) = labels {
        let t = model.preprocessor.targets.encode(&labels)?;
        let metric = Metric::for_task(model.task_kind());
        let value = metric.evaluate(scores.view(), t.view());
        match metric {
            Metric::Accuracy => println!("accuracy(%): {value}"),
            Metric::Rmse => println!("rmse: {value}"),
        }
    }
    println!("predictions written to {}", out.display());
    Ok(())
}

/// Shared setup of bench and sweep.
fn experiment_setup(
    data: &DataArgs,
    hyper: &HyperArgs,
    exp: &ExperimentArgs,
) -> CliResult<(FileConfig, DataSetup, DataTable, ExperimentConfig)> {
    let file = match &data.config {
        Some(p) => read_config(p)?,
        None => FileConfig::default(),
    };
    let setup = resolve_data(data, &file)?;
    let train_cfg = resolve_train_config(Variant::ScnPlus, hyper, &file)?;
    let table = load_csv(&setup.path, &setup.target)?;
    let n_train = setup
        .n_train
        .ok_or_else(|| Failure::usage("n_train is required (use --n-train or [dataset] n_train)"))?;
    let mut cfg = ExperimentConfig::new(setup.task, n_train);
    cfg.base_seed = train_cfg.seed;
    cfg.train_config = train_cfg;
    let e = &file.experiment;
    if let Some(v) = exp.trials.or(e.trials) {
        cfg.trials = v;
    }
    if let Some(v) = exp.mode.or(e.fixed_mode) {
        cfg.fixed_mode = v;
    }
    if let Some(v) = e.metric {
        cfg.metric = v;
    }
    cfg.irvfl_l_max = exp.irvfl_lmax.or(e.irvfl_l_max);
    if let Some(v) = &e.variants {
        cfg.variants = v.clone();
    }
    cfg.jobs = exp.jobs.or(e.jobs).unwrap_or(0);
    cfg.feature_split = setup.split.clone();
    cfg.validate(table.n_samples())?;
    Ok((file, setup, table, cfg))
}

fn experiment_manifest(command: &'static str, setup: &DataSetup, table: &DataTable, config: serde_json::Value, seed: u64, n_train: usize) -> CliResult<RunManifest> {
    Ok(RunManifest {
        tool: "scnplus",
        version: env!("CARGO_PKG_VERSION"),
        command,
        dataset: dataset_record(setup, table)?,
        target: setup.target_text.clone(),
        task: setup.task,
        base_seed: seed,
        n_train: Some(n_train),
        split: setup.split.clone(),
        config,
        outcome: None,
    })
}

fn cmd_bench(args: BenchArgs) -> CliResult<()> {
    let (_, setup, table, mut cfg) = experiment_setup(&args.data, &args.hyper, &args.exp)?;
    if !args.variant.is_empty() {
        cfg.variants = args.variant.clone();
    }
    let result = run_trials(&table, &cfg)?;
    for w in result.warnings() {
        eprintln!("warning: {w}");
    }
    let table_out = emit_table(&result.stats, result.fixed_mode, result.metric);
    print!("{}", table_out.text);
    write_out(&args.exp.out, "bench.csv", &table_out.csv)?;
    write_out(&args.exp.out, "trials.csv", &trials_csv(&result))?;
    let manifest = experiment_manifest("bench", &setup, &table, to_value(&cfg), cfg.base_seed, cfg.n_train)?;
    write_out(&args.exp.out, "manifest.json", &to_json(&manifest))?;
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> CliResult<()> {
    let (file, setup, table, cfg) = experiment_setup(&args.data, &args.hyper, &args.exp)?;
    let s = &file.sweep;
    let mut grid = SweepGrid::default();
    if let Some(v) = args.search.or(s.mode) {
        grid.mode = v;
    }
    if !args.c_values.is_empty() {
        grid.c_values = args.c_values.clone();
    } else if let Some(v) = &s.c_values {
        grid.c_values = v.clone();
    }
    if !args.gamma_values.is_empty() {
        grid.gamma_values = args.gamma_values.clone();
    } else if let Some(v) = &s.gamma_values {
        grid.gamma_values = v.clone();
    }
    if let Some(v) = s.c_bounds {
        grid.c_bounds = v;
    }
    if let Some(v) = s.gamma_bounds {
        grid.gamma_bounds = v;
    }
    if let Some(v) = args.draws.or(s.draws) {
        grid.draws = v;
    }
    if let Some(v) = args.exp.trials.or(s.trials) {
        grid.trials = v;
    }
    let result = hyper_search(&table, &cfg, &grid)?;
    write_out(&args.exp.out, "sweep.csv", &sweep_csv(&result))?;
    let config = serde_json::json!({ "experiment": to_value(&cfg), "grid": to_value(&grid) });
    let manifest = experiment_manifest("sweep", &setup, &table, config, cfg.base_seed, cfg.n_train)?;
    write_out(&args.exp.out, "manifest.json", &to_json(&manifest))?;
    let best = result.recommended();
    println!(
        "recommended C = {}, gamma = {} (train {}, test {})",
        best.c, best.gamma, best.train_metric, best.test_metric
    );
    Ok(())
}

/// Parses `args` (including the program name) and runs the command, returning
/// the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Sweep(a) => cmd_sweep(a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

pub fn main() -> i32 {
    run(std::env::args_os())
}
