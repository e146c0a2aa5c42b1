//! Multi-trial benchmarks, (C, γ) sweeps and result tables.

use std::fmt::Write as _;
use std::str::FromStr;

use ndarray::ArrayView2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::{argmax_rows, split_indices, split_privileged, DataTable, FeatureSplit, Preprocessor, TaskKind};
use crate::error::{Result, ScnError};
use crate::solvers::LupiParams;
use crate::trainers::{train, TrainConfig, TrainData, Variant};

/// Stream used for random (C, γ) draws.
const SWEEP_STREAM: u64 = (1 << 62) | 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// Percentage of rows whose argmax matches the one-hot target.
    Accuracy,
    /// RMSE in normalized target units.
    Rmse,
}

impl Metric {
    pub fn for_task(kind: TaskKind) -> Self {
        match kind {
            TaskKind::Classification => Metric::Accuracy,
            TaskKind::Regression => Metric::Rmse,
        }
    }

    pub fn higher_is_better(self) -> bool {
        self == Metric::Accuracy
    }

    pub fn evaluate(self, pred: ArrayView2<f64>, t: ArrayView2<f64>) -> f64 {
        match self {
            Metric::Accuracy => accuracy(pred, t),
            Metric::Rmse => rmse(pred, t),
        }
    }

    /// `Less` when `a` is the better score.
    fn compare(self, a: f64, b: f64) -> std::cmp::Ordering {
        let ord = a.total_cmp(&b);
        if self.higher_is_better() {
            ord.reverse()
        } else {
            ord
        }
    }
}

impl FromStr for Metric {
    type Err = ScnError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "accuracy" | "acc" => Ok(Metric::Accuracy),
            "rmse" => Ok(Metric::Rmse),
            _ => Err(ScnError::Parameter(format!("unknown metric '{s}'"))),
        }
    }
}

pub fn accuracy(pred: ArrayView2<f64>, t: ArrayView2<f64>) -> f64 {
    let n = pred.nrows();
    if n == 0 {
        return 0.0;
    }
    let hits = argmax_rows(pred)
        .into_iter()
        .zip(argmax_rows(t))
        .filter(|(a, b)| a == b)
        .count();
    100.0 * hits as f64 / n as f64
}

pub fn rmse(pred: ArrayView2<f64>, t: ArrayView2<f64>) -> f64 {
    let len = pred.len();
    if len == 0 {
        return 0.0;
    }
    let ss: f64 = pred.iter().zip(t.iter()).map(|(p, y)| (p - y) * (p - y)).sum();
    (ss / len as f64).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixedMode {
    /// Every run grows exactly to `l_max` (tolerance 0).
    FixedLMax,
    /// Runs stop at tolerance `epsilon`; node counts are compared.
    FixedEpsilon,
}

impl FixedMode {
    pub fn for_task(kind: TaskKind) -> Self {
        match kind {
            TaskKind::Classification => FixedMode::FixedLMax,
            TaskKind::Regression => FixedMode::FixedEpsilon,
        }
    }
}

impl FromStr for FixedMode {
    type Err = ScnError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "fixed_l_max" | "fixed_lmax" | "lmax" => Ok(FixedMode::FixedLMax),
            "fixed_epsilon" | "epsilon" => Ok(FixedMode::FixedEpsilon),
            _ => Err(ScnError::Parameter(format!("unknown fixed mode '{s}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub task_kind: TaskKind,
    pub n_train: usize,
    pub trials: usize,
    pub base_seed: u64,
    /// Shared settings; the variant field is overridden per run.
    pub train_config: TrainConfig,
    pub metric: Metric,
    pub fixed_mode: FixedMode,
    /// Node budget for the unsupervised baselines, when it differs from `l_max`.
    pub irvfl_l_max: Option<usize>,
    pub variants: Vec<Variant>,
    /// Reused in every trial instead of a fresh per-trial split.
    pub feature_split: Option<FeatureSplit>,
    /// Worker threads; 0 uses the global pool.
    pub jobs: usize,
}

impl ExperimentConfig {
    pub fn new(task_kind: TaskKind, n_train: usize) -> Self {
        ExperimentConfig {
            task_kind,
            n_train,
            trials: 50,
            base_seed: 0,
            train_config: TrainConfig::new(Variant::ScnPlus),
            metric: Metric::for_task(task_kind),
            fixed_mode: FixedMode::for_task(task_kind),
            irvfl_l_max: None,
            variants: Variant::ALL.to_vec(),
            feature_split: None,
            jobs: 0,
        }
    }

    pub fn validate(&self, n_rows: usize) -> Result<()> {
        if self.trials == 0 {
            return Err(ScnError::Parameter("trials must be at least 1".into()));
        }
        if self.variants.is_empty() {
            return Err(ScnError::Parameter("no variants selected".into()));
        }
        if self.n_train == 0 || self.n_train >= n_rows {
            return Err(ScnError::Parameter(format!(
                "n_train must lie in [1, {}), got {}",
                n_rows, self.n_train
            )));
        }
        if self.fixed_mode == FixedMode::FixedEpsilon && !(self.train_config.epsilon > 0.0) {
            return Err(ScnError::Parameter("fixed_epsilon mode needs epsilon > 0".into()));
        }
        self.train_config.validate()
    }

    /// Training settings for one variant in one trial.
    pub fn run_config(&self, variant: Variant, seed: u64) -> TrainConfig {
        let mut c = self.train_config.for_variant(variant);
        c.seed = seed;
        if self.fixed_mode == FixedMode::FixedLMax {
            c.epsilon = 0.0;
        }
        if !variant.is_supervised() {
            if let Some(l) = self.irvfl_l_max {
                c.l_max = l;
            }
        }
        c
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub variant: Variant,
    pub train_metric: f64,
    pub test_metric: f64,
    pub final_l: usize,
    /// Seconds; the only field that varies between identical runs.
    pub wall_time: f64,
    /// Hash of the train rows and feature split used by this trial.
    pub split_fingerprint: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbortedRun {
    pub trial: usize,
    pub seed: u64,
    pub variant: Variant,
    pub message: String,
}

/// Summary over the surviving trials of one variant. `ave`/`dev` refer to the
/// test metric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialStats {
    pub variant: Variant,
    pub ave: f64,
    pub dev: f64,
    pub train_ave: f64,
    pub train_dev: f64,
    pub ave_nodes: f64,
    pub per_trial: Vec<TrialRecord>,
}

impl TrialStats {
    pub fn from_records(variant: Variant, per_trial: Vec<TrialRecord>) -> Self {
        let test: Vec<f64> = per_trial.iter().map(|r| r.test_metric).collect();
        let tr: Vec<f64> = per_trial.iter().map(|r| r.train_metric).collect();
        let nodes: Vec<f64> = per_trial.iter().map(|r| r.final_l as f64).collect();
        let (ave, dev) = mean_sd(&test);
        let (train_ave, train_dev) = mean_sd(&tr);
        TrialStats {
            variant,
            ave,
            dev,
            train_ave,
            train_dev,
            ave_nodes: mean_sd(&nodes).0,
            per_trial,
        }
    }
}

/// Mean and sample standard deviation; the deviation of a single value is 0.
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, (ss / (n - 1) as f64).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub fixed_mode: FixedMode,
    pub metric: Metric,
    pub stats: Vec<TrialStats>,
    pub aborted: Vec<AbortedRun>,
}

impl ExperimentResult {
    pub fn get(&self, variant: Variant) -> Option<&TrialStats> {
        self.stats.iter().find(|s| s.variant == variant)
    }

    pub fn records(&self) -> impl Iterator<Item = &TrialRecord> {
        let mut all: Vec<&TrialRecord> = self.stats.iter().flat_map(|s| s.per_trial.iter()).collect();
        all.sort_by_key(|r| (r.trial, Variant::ALL.iter().position(|v| *v == r.variant)));
        all.into_iter()
    }

    pub fn warnings(&self) -> Vec<String> {
        self.aborted
            .iter()
            .map(|a| format!("trial {} (seed {}) {} aborted: {}", a.trial, a.seed, a.variant, a.message))
            .collect()
    }
}

fn split_fingerprint(train_rows: &[usize], split: &FeatureSplit) -> String {
    let mut h = Sha256::new();
    for r in train_rows {
        h.update((*r as u64).to_le_bytes());
    }
    h.update(split.to_json().as_bytes());
    hex::encode(&h.finalize()[..8])
}

enum Outcome {
    Done(TrialRecord),
    Aborted(AbortedRun),
}

fn run_one_trial(table: &DataTable, cfg: &ExperimentConfig, trial: usize) -> Result<Vec<Outcome>> {
    let seed = cfg.base_seed.wrapping_add(trial as u64);
    let (train_rows, test_rows) = split_indices(table.n_samples(), cfg.n_train, seed)?;
    let split = match &cfg.feature_split {
        Some(s) => s.clone(),
        None => split_privileged(table, seed)?,
    };
    let fingerprint = split_fingerprint(&train_rows, &split);
    let pre = Preprocessor::fit(table, &train_rows, split, cfg.task_kind)?;
    let tr = pre.prepare(table, &train_rows)?;
    let te = pre.prepare(table, &test_rows)?;

    let mut out = Vec::with_capacity(cfg.variants.len());
    for &variant in &cfg.variants {
        let rc = cfg.run_config(variant, seed);
        let data = TrainData {
            x: tr.x.view(),
            x_priv: Some(tr.x_priv.view()),
            t: tr.t.view(),
        };
        match train(data, &rc) {
            Ok((net, report)) => {
                let train_pred = net.predict(tr.x.view())?;
                let test_pred = net.predict(te.x.view())?;
                out.push(Outcome::Done(TrialRecord {
                    trial,
                    seed,
                    variant,
                    train_metric: cfg.metric.evaluate(train_pred.view(), tr.t.view()),
                    test_metric: cfg.metric.evaluate(test_pred.view(), te.t.view()),
                    final_l: report.final_l,
                    wall_time: report.wall_time.as_secs_f64(),
                    split_fingerprint: fingerprint.clone(),
                }));
            }
            Err(e @ (ScnError::TrainingAborted(_) | ScnError::Degenerate(_))) => {
                out.push(Outcome::Aborted(AbortedRun {
                    trial,
                    seed,
                    variant,
                    message: e.to_string(),
                }));
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

fn in_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if jobs == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| ScnError::Parameter(format!("cannot start {jobs} workers: {e}")))?;
    Ok(pool.install(f))
}

/// Runs `cfg.trials` seeded trials of every selected variant. Trial `k` uses
/// seed `base_seed + k` for its train/test shuffle, feature split and training.
pub fn run_trials(table: &DataTable, cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate(table.n_samples())?;
    let per_trial: Vec<Result<Vec<Outcome>>> = in_pool(cfg.jobs, || {
        (0..cfg.trials)
            .into_par_iter()
            .map(|k| run_one_trial(table, cfg, k))
            .collect()
    })?;

    let mut done: Vec<Vec<TrialRecord>> = vec![Vec::new(); cfg.variants.len()];
    let mut aborted = Vec::new();
    for outcomes in per_trial {
        for (i, o) in outcomes?.into_iter().enumerate() {
            match o {
                Outcome::Done(r) => done[i].push(r),
                Outcome::Aborted(a) => aborted.push(a),
            }
        }
    }

    let min_ok = (9 * cfg.trials).div_ceil(10);
    let mut stats = Vec::with_capacity(cfg.variants.len());
    for (variant, records) in cfg.variants.iter().zip(done) {
        if records.len() < min_ok {
            return Err(ScnError::Experiment(format!(
                "{variant}: only {} of {} trials completed",
                records.len(),
                cfg.trials
            )));
        }
        stats.push(TrialStats::from_records(*variant, records));
    }
    Ok(ExperimentResult {
        fixed_mode: cfg.fixed_mode,
        metric: cfg.metric,
        stats,
        aborted,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepMode {
    #[default]
    Grid,
    /// Log-uniform draws inside the bounds.
    Random,
}

impl FromStr for SweepMode {
    type Err = ScnError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "grid" => Ok(SweepMode::Grid),
            "random" => Ok(SweepMode::Random),
            _ => Err(ScnError::Parameter(format!("unknown sweep mode '{s}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub c_values: Vec<f64>,
    pub gamma_values: Vec<f64>,
    pub mode: SweepMode,
    pub c_bounds: (f64, f64),
    pub gamma_bounds: (f64, f64),
    pub draws: usize,
    /// Trials per point.
    pub trials: usize,
}

impl Default for SweepGrid {
    fn default() -> Self {
        SweepGrid {
            c_values: vec![1e-2, 1e-1, 1.0, 2.0, 5.0, 10.0],
            gamma_values: vec![1e2, 1e3, 1e4, 1e5, 1e6],
            mode: SweepMode::Grid,
            c_bounds: (1e-2, 1e1),
            gamma_bounds: (1e2, 1e6),
            draws: 30,
            trials: 10,
        }
    }
}

impl SweepGrid {
    /// A grid over explicit values.
    pub fn grid(c_values: Vec<f64>, gamma_values: Vec<f64>) -> Self {
        SweepGrid {
            c_values,
            gamma_values,
            ..SweepGrid::default()
        }
    }

    /// `(C, γ)` pairs in evaluation order: C-major for grids.
    pub fn points(&self, seed: u64) -> Result<Vec<(f64, f64)>> {
        let pts: Vec<(f64, f64)> = match self.mode {
            SweepMode::Grid => self
                .c_values
                .iter()
                .flat_map(|&c| self.gamma_values.iter().map(move |&g| (c, g)))
                .collect(),
            SweepMode::Random => {
                let (c0, c1) = self.c_bounds;
                let (g0, g1) = self.gamma_bounds;
                if !(c0 > 0.0 && c1 >= c0 && g0 > 0.0 && g1 >= g0) {
                    return Err(ScnError::Parameter("sweep bounds must be positive and ordered".into()));
                }
                let mut rng = ChaCha20Rng::seed_from_u64(seed);
                rng.set_stream(SWEEP_STREAM);
                let mut log_uniform = |lo: f64, hi: f64| -> f64 {
                    let u: f64 = rng.random();
                    (lo.ln() + u * (hi.ln() - lo.ln())).exp()
                };
                (0..self.draws)
                    .map(|_| {
                        let c = log_uniform(c0, c1);
                        (c, log_uniform(g0, g1))
                    })
                    .collect()
            }
        };
        if pts.is_empty() {
            return Err(ScnError::Parameter("empty sweep grid".into()));
        }
        for &(c, g) in &pts {
            LupiParams::new(c, g)?;
        }
        Ok(pts)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub c: f64,
    pub gamma: f64,
    pub train_metric: f64,
    pub test_metric: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub metric: Metric,
    /// In evaluation order.
    pub points: Vec<SweepPoint>,
    /// Indices into `points`, best first.
    pub ranking: Vec<usize>,
}

impl SweepResult {
    pub fn recommended(&self) -> &SweepPoint {
        &self.points[self.ranking[0]]
    }

    pub fn ranked(&self) -> impl Iterator<Item = &SweepPoint> {
        self.ranking.iter().map(|&i| &self.points[i])
    }
}

/// Best test metric first; ties go to the better train metric, then to the
/// earlier point.
pub fn rank_points(points: &[SweepPoint], metric: Metric) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&a, &b| {
        let (pa, pb) = (&points[a], &points[b]);
        metric
            .compare(pa.test_metric, pb.test_metric)
            .then(metric.compare(pa.train_metric, pb.train_metric))
            .then(a.cmp(&b))
    });
    idx
}

/// Evaluates SCN+ at every `(C, γ)` point with `grid.trials` trials each.
pub fn hyper_search(table: &DataTable, cfg: &ExperimentConfig, grid: &SweepGrid) -> Result<SweepResult> {
    let pts = grid.points(cfg.base_seed)?;
    let mut points = Vec::with_capacity(pts.len());
    for (c, gamma) in pts {
        let mut sub = cfg.clone();
        sub.variants = vec![Variant::ScnPlus];
        sub.trials = grid.trials;
        sub.train_config.lupi = LupiParams::new(c, gamma)?;
        let res = run_trials(table, &sub)?;
        let s = &res.stats[0];
        points.push(SweepPoint {
            c,
            gamma,
            train_metric: s.train_ave,
            test_metric: s.ave,
        });
    }
    let ranking = rank_points(&points, cfg.metric);
    Ok(SweepResult {
        metric: cfg.metric,
        points,
        ranking,
    })
}

/// Human-readable table and its CSV twin.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub text: String,
    pub csv: String,
}

fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    for r in rows {
        w.write_record(&r).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv")
}

/// Train/test AVE and DEV per variant, plus the mean node count in
/// fixed-tolerance mode.
pub fn emit_table(stats: &[TrialStats], mode: FixedMode, metric: Metric) -> Table {
    let with_l = mode == FixedMode::FixedEpsilon;
    let unit = match metric {
        Metric::Accuracy => "acc(%)",
        Metric::Rmse => "rmse",
    };
    let mut header = vec!["variant", "train_ave", "train_dev", "test_ave", "test_dev"];
    if with_l {
        header.push("nodes");
    }
    let csv = csv_string(
        &header,
        stats.iter().map(|s| {
            let mut r = vec![
                s.variant.name().to_string(),
                s.train_ave.to_string(),
                s.train_dev.to_string(),
                s.ave.to_string(),
                s.dev.to_string(),
            ];
            if with_l {
                r.push(s.ave_nodes.to_string());
            }
            r
        }),
    );

    let mut text = String::new();
    let _ = write!(
        text,
        "{:<8} {:>12} {:>10} {:>12} {:>10}",
        "", format!("train {unit}"), "DEV", format!("test {unit}"), "DEV"
    );
    if with_l {
        let _ = write!(text, " {:>8}", "L");
    }
    text.push('\n');
    let digits = if metric == Metric::Accuracy { 2 } else { 4 };
    for s in stats {
        let _ = write!(
            text,
            "{:<8} {:>12.d$} {:>10.d$} {:>12.d$} {:>10.d$}",
            s.variant.name(),
            s.train_ave,
            s.train_dev,
            s.ave,
            s.dev,
            d = digits
        );
        if with_l {
            let _ = write!(text, " {:>8.2}", s.ave_nodes);
        }
        text.push('\n');
    }
    Table { text, csv }
}

/// One row per (trial, variant).
pub fn trials_csv(result: &ExperimentResult) -> String {
    csv_string(
        &["seed", "variant", "train_metric", "test_metric", "final_L", "wall_time"],
        result.records().map(|r| {
            vec![
                r.seed.to_string(),
                r.variant.slug().to_string(),
                r.train_metric.to_string(),
                r.test_metric.to_string(),
                r.final_l.to_string(),
                format!("{:.6}", r.wall_time),
            ]
        }),
    )
}

/// One row per point, in evaluation order.
pub fn sweep_csv(result: &SweepResult) -> String {
    csv_string(
        &["C", "gamma", "train_metric", "test_metric"],
        result.points.iter().map(|p| {
            vec![
                p.c.to_string(),
                p.gamma.to_string(),
                p.train_metric.to_string(),
                p.test_metric.to_string(),
            ]
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic;
    use ndarray::array;

    fn sine_cfg(trials: usize) -> (DataTable, ExperimentConfig) {
        let (table, split) = synthetic::sine_table(80, 3);
        let mut cfg = ExperimentConfig::new(TaskKind::Regression, 60);
        cfg.trials = trials;
        cfg.base_seed = 11;
        cfg.train_config.epsilon = 0.08;
        cfg.train_config.l_max = 40;
        cfg.feature_split = Some(split);
        (table, cfg)
    }

    fn blobs_cfg(trials: usize) -> (DataTable, ExperimentConfig) {
        let table = synthetic::blobs_table(90, 3, 4, 0.15, 5);
        let mut cfg = ExperimentConfig::new(TaskKind::Classification, 60);
        cfg.trials = trials;
        cfg.train_config.l_max = 10;
        (table, cfg)
    }

    fn outcome(r: &TrialRecord) -> (usize, u64, Variant, u64, u64, usize, String) {
        (
            r.trial,
            r.seed,
            r.variant,
            r.train_metric.to_bits(),
            r.test_metric.to_bits(),
            r.final_l,
            r.split_fingerprint.clone(),
        )
    }

    #[test]
    fn metrics_on_small_cases() {
        let t = array![[1.0, 0.0], [0.0, 1.0], [1.0, 0.0], [0.0, 1.0]];
        let p = array![[0.9, 0.1], [0.2, 0.8], [0.3, 0.7], [0.5, 0.5]];
        assert_eq!(accuracy(p.view(), t.view()), 50.0);
        let a = array![[1.0], [3.0]];
        let b = array![[0.0], [0.0]];
        assert!((rmse(a.view(), b.view()) - 5.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn single_trial_has_zero_dev() {
        assert_eq!(mean_sd(&[3.5]), (3.5, 0.0));
        let (table, cfg) = sine_cfg(1);
        let res = run_trials(&table, &cfg).unwrap();
        assert!(res.stats.iter().all(|s| s.dev == 0.0 && s.per_trial.len() == 1));
    }

    #[test]
    fn statistics_match_streaming_oracle() {
        let (table, cfg) = blobs_cfg(6);
        let res = run_trials(&table, &cfg).unwrap();
        for s in &res.stats {
            // Welford's online update as an independent reference.
            let (mut n, mut mean, mut m2) = (0.0, 0.0, 0.0);
            for r in &s.per_trial {
                n += 1.0;
                let d = r.test_metric - mean;
                mean += d / n;
                m2 += d * (r.test_metric - mean);
            }
            assert!((s.ave - mean).abs() < 1e-12);
            assert!((s.dev - (m2 / (n - 1.0)).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn trials_are_reproducible_and_parallel_safe() {
        let (table, mut cfg) = sine_cfg(4);
        cfg.jobs = 1;
        let a = run_trials(&table, &cfg).unwrap();
        cfg.jobs = 3;
        let b = run_trials(&table, &cfg).unwrap();
        let ka: Vec<_> = a.records().map(outcome).collect();
        let kb: Vec<_> = b.records().map(outcome).collect();
        assert_eq!(ka.len(), 16);
        assert_eq!(ka, kb);
    }

    #[test]
    fn variants_share_each_trials_split() {
        let (table, cfg) = blobs_cfg(3);
        let res = run_trials(&table, &cfg).unwrap();
        for k in 0..3 {
            let fps: Vec<&str> = res
                .records()
                .filter(|r| r.trial == k)
                .map(|r| r.split_fingerprint.as_str())
                .collect();
            assert_eq!(fps.len(), 4);
            assert!(fps.iter().all(|f| *f == fps[0]));
        }
        let first: Vec<&str> = res.records().map(|r| r.split_fingerprint.as_str()).collect();
        assert_ne!(first[0], first[4]);
    }

    #[test]
    fn fixed_l_max_grows_to_budget() {
        let (table, mut cfg) = blobs_cfg(2);
        cfg.irvfl_l_max = Some(15);
        cfg.train_config.epsilon = 0.5;
        let res = run_trials(&table, &cfg).unwrap();
        for s in &res.stats {
            let want = if s.variant.is_supervised() { 10 } else { 15 };
            assert!(s.per_trial.iter().all(|r| r.final_l == want));
        }
    }

    #[test]
    fn config_validation() {
        let (table, mut cfg) = sine_cfg(1);
        cfg.train_config.epsilon = 0.0;
        assert!(run_trials(&table, &cfg).is_err());
        let (table, mut cfg) = sine_cfg(1);
        cfg.n_train = 80;
        assert!(run_trials(&table, &cfg).is_err());
        let (table, mut cfg) = sine_cfg(1);
        cfg.variants.clear();
        assert!(run_trials(&table, &cfg).is_err());
    }

    #[test]
    fn single_point_sweep_is_recommended() {
        let (table, cfg) = blobs_cfg(2);
        let mut grid = SweepGrid::grid(vec![0.5], vec![1e3]);
        grid.trials = 2;
        let res = hyper_search(&table, &cfg, &grid).unwrap();
        assert_eq!(res.points.len(), 1);
        assert_eq!((res.recommended().c, res.recommended().gamma), (0.5, 1e3));
        let empty = SweepGrid::grid(vec![], vec![1e3]);
        assert!(hyper_search(&table, &cfg, &empty).is_err());
    }

    #[test]
    fn equal_gammas_rank_by_c_alone() {
        let (table, cfg) = sine_cfg(1);
        let mut one = SweepGrid::grid(vec![0.01, 1.0, 10.0], vec![1e4]);
        one.trials = 1;
        let mut two = one.clone();
        two.gamma_values = vec![1e4, 1e4];
        let a = hyper_search(&table, &cfg, &one).unwrap();
        let b = hyper_search(&table, &cfg, &two).unwrap();
        let ca: Vec<f64> = a.ranked().map(|p| p.c).collect();
        let cb: Vec<f64> = b.ranked().map(|p| p.c).collect();
        let doubled: Vec<f64> = ca.iter().flat_map(|&c| [c, c]).collect();
        assert_eq!(cb, doubled);
    }

    #[test]
    fn ranking_rule() {
        let p = |test, train| SweepPoint {
            c: 1.0,
            gamma: 1e2,
            train_metric: train,
            test_metric: test,
        };
        let pts = vec![p(80.0, 90.0), p(85.0, 88.0), p(85.0, 95.0), p(70.0, 99.0)];
        assert_eq!(rank_points(&pts, Metric::Accuracy), vec![2, 1, 0, 3]);
        assert_eq!(rank_points(&pts, Metric::Rmse), vec![3, 0, 1, 2]);
    }

    #[test]
    fn random_sweep_stays_in_bounds() {
        let g = SweepGrid {
            mode: SweepMode::Random,
            draws: 200,
            ..SweepGrid::default()
        };
        let pts = g.points(4).unwrap();
        assert_eq!(pts.len(), 200);
        assert!(pts.iter().all(|&(c, y)| (1e-2..=1e1).contains(&c) && (1e2..=1e6).contains(&y)));
        assert_eq!(pts, g.points(4).unwrap());
        assert_eq!(SweepGrid::default().points(0).unwrap().len(), 30);
    }

    #[test]
    fn table_shapes_and_csv_round_trip() {
        let (table, cfg) = sine_cfg(3);
        let res = run_trials(&table, &cfg).unwrap();
        let t = emit_table(&res.stats, FixedMode::FixedEpsilon, Metric::Rmse);
        assert_eq!(t.text.lines().count(), 5);
        let mut rd = csv::Reader::from_reader(t.csv.as_bytes());
        assert_eq!(rd.headers().unwrap().len(), 6);
        for (row, s) in rd.records().zip(&res.stats) {
            let row = row.unwrap();
            assert_eq!(&row[0], s.variant.name());
            let vals: Vec<f64> = (1..6).map(|i| row[i].parse().unwrap()).collect();
            assert_eq!(vals, vec![s.train_ave, s.train_dev, s.ave, s.dev, s.ave_nodes]);
        }
        let one = emit_table(&res.stats[..1], FixedMode::FixedLMax, Metric::Rmse);
        assert_eq!(one.text.lines().count(), 2);
        assert!(one.csv.lines().next().unwrap().ends_with("test_dev"));
        assert_eq!(trials_csv(&res).lines().count(), 13);
    }
}
