//! Multi-seed forecasting experiments.
//!
//! An [`ExperimentConfig`] names a series (CSV or synthetic), how to average,
//! window and split it, and a list of methods. [`run_experiment`] runs every
//! (method, seed) cell and [`emit_report`] writes the tables and per-run
//! artifacts. Nothing in the output depends on wall-clock time or thread
//! scheduling, so the same config always produces the same bytes.

use std::fmt;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::Deserialize;

use crate::data::{
    block_average, load_csv, synth_series, Dataset, Samples, SplitConfig, SynthConfig, TimeSeries,
};
use crate::error::{Result, SfnError};
use crate::mlp::{train_bbp, train_esbp, MlpConfig};
use crate::search::{build, Algorithm, SearchConfig, SearchData, SearchTrace, Selection};
use crate::train::TrainConfig;

/// One entry of the `algorithms` list.
///
/// Accepted spellings: `B-BP(9)`, `ES-BP(15)`, `FLK`, `FLY`, `B`, `FB`,
/// `FB(K=5)`, `FRS`, `FRS(RF=0.5)`. A `-SFN` suffix is allowed.
#[derive(Clone, Debug, PartialEq)]
pub enum MethodSpec {
    Mlp {
        early_stopping: bool,
        hidden: usize,
    },
    Sfn {
        algorithm: Algorithm,
        k: Option<usize>,
        rf: Option<f64>,
    },
}

impl MethodSpec {
    /// File-name friendly form of the label.
    pub fn slug(&self) -> String {
        let mut s: String = self
            .to_string()
            .chars()
            .map(|c| {
                if c.is_ascii_alphanumeric() || c == '-' || c == '.' {
                    c
                } else {
                    '_'
                }
            })
            .collect();
        while s.ends_with('_') {
            s.pop();
        }
        s
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MethodSpec::Mlp {
                early_stopping,
                hidden,
            } => {
                write!(f, "{}-BP({hidden})", if *early_stopping { "ES" } else { "B" })
            }
            MethodSpec::Sfn { algorithm, k, rf } => {
                write!(f, "{algorithm}-SFN")?;
                match (k, rf) {
                    (Some(k), _) => write!(f, "(K={k})"),
                    (_, Some(rf)) => write!(f, "(RF={rf})"),
                    _ => Ok(()),
                }
            }
        }
    }
}

impl FromStr for MethodSpec {
    type Err = SfnError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || SfnError::InvalidConfig(format!("cannot parse method `{s}`"));
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let (name, arg) = match t.find('(') {
            Some(i) if t.ends_with(')') => (&t[..i], Some(&t[i + 1..t.len() - 1])),
            Some(_) => return Err(bad()),
            None => (t.as_str(), None),
        };
        let name = name.to_ascii_uppercase();
        if let Some(kind) = name.strip_suffix("-BP") {
            let early_stopping = match kind {
                "B" => false,
                "ES" => true,
                _ => return Err(bad()),
            };
            let hidden = match arg {
                Some(a) => a.parse().map_err(|_| bad())?,
                None => 9,
            };
            if hidden == 0 {
                return Err(bad());
            }
            return Ok(MethodSpec::Mlp {
                early_stopping,
                hidden,
            });
        }
        let algorithm: Algorithm = name.strip_suffix("-SFN").unwrap_or(&name).parse()?;
        let (mut k, mut rf) = (None, None);
        if let Some(a) = arg {
            let (key, value) = a.split_once('=').ok_or_else(bad)?;
            match (algorithm, key.to_ascii_uppercase().as_str()) {
                (Algorithm::ForwardBackward, "K") => {
                    k = Some(value.parse().ok().filter(|k| *k > 0).ok_or_else(bad)?)
                }
                (Algorithm::ForwardReducedRandom, "RF") => {
                    rf = Some(
                        value
                            .parse()
                            .ok()
                            .filter(|r: &f64| *r > 0.0 && *r <= 1.0)
                            .ok_or_else(bad)?,
                    )
                }
                _ => return Err(bad()),
            }
        }
        Ok(MethodSpec::Sfn { algorithm, k, rf })
    }
}

/// Flat TOML experiment description. Every key is optional; see the README
/// for the full list and defaults.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// `"synth"` or `"csv"`.
    pub source: String,
    pub csv_path: Option<PathBuf>,
    pub synth_length: usize,
    pub synth_base: f64,
    pub synth_trend: f64,
    pub synth_amplitude: f64,
    pub synth_period: f64,
    pub synth_noise: f64,
    pub synth_ar: f64,
    pub synth_seed: u64,

    pub block: usize,
    pub lags: usize,
    pub horizon: usize,
    pub test_fraction: f64,
    pub validation_fraction: f64,
    /// Draw the validation rows at random with this seed instead of taking
    /// the chronologically last ones.
    pub random_validation_seed: Option<u64>,

    pub algorithms: Vec<String>,
    pub runs: usize,
    /// Run `i` uses seed `seed + i`.
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Report MSE after undoing the min-max scaling.
    pub original_scale: bool,

    pub learning_rate: f64,
    pub momentum: f64,
    pub max_epochs: usize,
    pub tolerance: f64,
    pub patience_epochs: usize,
    pub mean_loss: bool,

    pub max_depth: usize,
    pub admission_threshold: f64,
    pub rf: f64,
    pub k_prune_interval: usize,
    pub max_links: usize,
    pub candidate_epochs: usize,
    pub topup_epochs: usize,
    /// `"best"` or `"first"`.
    pub selection: String,
    pub prune_retrain: bool,
    pub max_sweeps: usize,

    pub esbp_patience: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let synth = SynthConfig::default();
        let split = SplitConfig::default();
        let train = TrainConfig::default();
        let search = SearchConfig::default();
        ExperimentConfig {
            source: "synth".into(),
            csv_path: None,
            synth_length: synth.length,
            synth_base: synth.base,
            synth_trend: synth.trend,
            synth_amplitude: synth.amplitude,
            synth_period: synth.period,
            synth_noise: synth.noise,
            synth_ar: synth.ar,
            synth_seed: synth.seed,
            block: 10,
            lags: 4,
            horizon: 1,
            test_fraction: split.test_fraction,
            validation_fraction: split.validation_fraction,
            random_validation_seed: None,
            algorithms: ["B-BP(9)", "ES-BP(9)", "FLY", "FLK", "B", "FB(K=5)", "FRS(RF=0.5)"]
                .map(String::from)
                .to_vec(),
            runs: 5,
            seed: 0,
            output_dir: PathBuf::from("sfn-report"),
            original_scale: false,
            learning_rate: train.learning_rate,
            momentum: train.momentum,
            max_epochs: train.max_epochs,
            tolerance: train.tolerance,
            patience_epochs: train.patience_epochs,
            mean_loss: train.mean_loss,
            max_depth: search.max_depth,
            admission_threshold: search.admission_threshold,
            rf: search.rf,
            k_prune_interval: search.k_prune_interval,
            max_links: search.max_links,
            candidate_epochs: search.candidate_epochs,
            topup_epochs: search.topup_epochs,
            selection: "best".into(),
            prune_retrain: search.prune_retrain,
            max_sweeps: search.max_sweeps,
            esbp_patience: 200,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| SfnError::InvalidConfig(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| SfnError::io(path, e))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| match e {
            SfnError::InvalidConfig(m) => SfnError::InvalidConfig(format!("{}: {m}", path.display())),
            e => e,
        })?;
        // Relative CSV paths are taken relative to the config file.
        if let (Some(p), Some(dir)) = (&cfg.csv_path, path.parent()) {
            if p.is_relative() {
                cfg.csv_path = Some(dir.join(p));
            }
        }
        Ok(cfg)
    }

    pub fn methods(&self) -> Result<Vec<MethodSpec>> {
        if self.algorithms.is_empty() {
            return Err(SfnError::InvalidConfig("algorithms list is empty".into()));
        }
        self.algorithms.iter().map(|s| s.parse()).collect()
    }

    pub fn synth_config(&self) -> SynthConfig {
        SynthConfig {
            length: self.synth_length,
            base: self.synth_base,
            trend: self.synth_trend,
            amplitude: self.synth_amplitude,
            period: self.synth_period,
            noise: self.synth_noise,
            ar: self.synth_ar,
            seed: self.synth_seed,
        }
    }

    pub fn split_config(&self) -> SplitConfig {
        SplitConfig {
            test_fraction: self.test_fraction,
            validation_fraction: self.validation_fraction,
            random_validation: self.random_validation_seed,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            momentum: self.momentum,
            max_epochs: self.max_epochs,
            tolerance: self.tolerance,
            patience_epochs: self.patience_epochs,
            mean_loss: self.mean_loss,
        }
    }

    pub fn selection(&self) -> Result<Selection> {
        match self.selection.to_ascii_lowercase().as_str() {
            "best" => Ok(Selection::BestOfSweep),
            "first" => Ok(Selection::FirstImprovement),
            other => Err(SfnError::InvalidConfig(format!(
                "selection must be `best` or `first`, got `{other}`"
            ))),
        }
    }

    pub fn search_config(&self, algorithm: Algorithm, seed: u64) -> Result<SearchConfig> {
        Ok(SearchConfig {
            algorithm,
            max_depth: self.max_depth,
            admission_threshold: self.admission_threshold,
            rf: self.rf,
            k_prune_interval: self.k_prune_interval,
            max_links: self.max_links,
            seed,
            candidate_epochs: self.candidate_epochs,
            topup_epochs: self.topup_epochs,
            selection: self.selection()?,
            prune_retrain: self.prune_retrain,
            max_sweeps: self.max_sweeps,
        })
    }

    pub fn mlp_config(&self, hidden: usize, seed: u64) -> MlpConfig {
        MlpConfig {
            hidden,
            learning_rate: self.learning_rate,
            momentum: self.momentum,
            max_epochs: self.max_epochs,
            patience: Some(self.esbp_patience),
            mean_loss: self.mean_loss,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(SfnError::InvalidConfig("runs must be at least 1".into()));
        }
        if self.block == 0 {
            return Err(SfnError::InvalidConfig("block must be at least 1".into()));
        }
        self.methods()?;
        self.train_config().validate()?;
        self.search_config(Algorithm::ForwardLinkByLink, 0)?.validate()
    }

    /// The raw series, before averaging.
    pub fn load_series(&self) -> Result<TimeSeries> {
        match self.source.as_str() {
            "synth" => synth_series(&self.synth_config()),
            "csv" => {
                let path = self
                    .csv_path
                    .as_ref()
                    .ok_or_else(|| SfnError::InvalidConfig("source = \"csv\" needs csv_path".into()))?;
                load_csv(path)
            }
            other => Err(SfnError::InvalidConfig(format!(
                "source must be `synth` or `csv`, got `{other}`"
            ))),
        }
    }

    /// Averaged, windowed, partitioned and scaled data.
    pub fn dataset(&self) -> Result<Dataset> {
        let averaged = block_average(&self.load_series()?, self.block)?;
        Dataset::from_series(&averaged, self.lags, self.horizon, &self.split_config())
    }
}

/// One (method, seed) result.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub seed: u64,
    pub train_mse: f64,
    pub validation_mse: f64,
    pub test_mse: f64,
    pub weights: usize,
    /// Formula for SFN runs, a short description for MLP runs.
    pub model_summary: String,
    /// Serialized model.
    pub model_text: String,
    /// `(series index, actual, predicted)` for every test row.
    pub predictions: Vec<(usize, f64, f64)>,
    pub trace: Option<SearchTrace>,
}

/// `(best, worst, average)` of a column; lower is better.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub best: f64,
    pub worst: f64,
    pub average: f64,
}

impl Summary {
    fn of(values: impl Iterator<Item = f64> + Clone) -> Option<Summary> {
        let n = values.clone().count();
        if n == 0 {
            return None;
        }
        Some(Summary {
            best: values.clone().fold(f64::INFINITY, f64::min),
            worst: values.clone().fold(f64::NEG_INFINITY, f64::max),
            average: values.sum::<f64>() / n as f64,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MethodReport {
    pub method: MethodSpec,
    /// Successful runs in seed order.
    pub runs: Vec<RunRecord>,
    /// Seeds whose run failed, with the error.
    pub failures: Vec<(u64, String)>,
}

impl MethodReport {
    pub fn train(&self) -> Option<Summary> {
        Summary::of(self.runs.iter().map(|r| r.train_mse))
    }

    pub fn test(&self) -> Option<Summary> {
        Summary::of(self.runs.iter().map(|r| r.test_mse))
    }

    pub fn average_weights(&self) -> Option<f64> {
        Summary::of(self.runs.iter().map(|r| r.weights as f64)).map(|s| s.average)
    }

    /// All runs ended with the same model, so one row stands for all of them.
    pub fn collapsed(&self) -> bool {
        self.runs.len() > 1 && self.runs.windows(2).all(|w| w[0].model_text == w[1].model_text)
    }

    /// The run with the lowest validation MSE (earliest seed on ties).
    pub fn best_run(&self) -> Option<&RunRecord> {
        self.runs
            .iter()
            .fold(None, |best: Option<&RunRecord>, r| match best {
                Some(b) if b.validation_mse <= r.validation_mse => Some(b),
                _ => Some(r),
            })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub methods: Vec<MethodReport>,
    pub original_scale: bool,
    /// One-line description of the data used.
    pub data: String,
    pub train_rows: usize,
    pub validation_rows: usize,
    pub test_rows: usize,
}

type Predictor = Box<dyn Fn(&Samples) -> Result<Vec<f64>>>;

fn run_cell(
    config: &ExperimentConfig,
    dataset: &Dataset,
    parts: &(Samples, Samples, Samples),
    method: &MethodSpec,
    seed: u64,
) -> Result<RunRecord> {
    let (train, validation, test) = parts;
    let original = config.original_scale;
    let unscale = |ys: Vec<f64>| match (&dataset.scaling, original) {
        (Some(s), true) => s.invert_all(&ys),
        _ => ys,
    };
    let score = |pred: Vec<f64>, s: &Samples| -> f64 {
        let pred = unscale(pred);
        let actual = unscale(s.targets.clone());
        pred.iter()
            .zip(&actual)
            .map(|(p, a)| (p - a) * (p - a))
            .sum::<f64>()
            / s.len().max(1) as f64
    };

    let (predict, weights, summary, text, trace): (Predictor, _, _, _, _) = match method {
        MethodSpec::Mlp {
            early_stopping,
            hidden,
        } => {
            let cfg = config.mlp_config(*hidden, seed);
            let fit = if *early_stopping {
                train_esbp(train, validation, &cfg)?
            } else {
                train_bbp(train, &cfg)?
            };
            let model = fit.model;
            let weights = model.weight_count();
            let summary = format!("mlp inputs={} hidden={hidden}", model.inputs());
            let mut text = format!("{summary} best_epoch={}\n", fit.best_epoch);
            for w in model.flatten() {
                let _ = writeln!(text, "{w}");
            }
            (
                Box::new(move |s: &Samples| Ok(model.predict(&s.inputs))),
                weights,
                summary,
                text,
                None,
            )
        }
        MethodSpec::Sfn { algorithm, k, rf } => {
            let mut sc = config.search_config(*algorithm, seed)?;
            if let Some(k) = k {
                sc.k_prune_interval = *k;
            }
            if let Some(rf) = rf {
                sc.rf = *rf;
            }
            let data = SearchData { train, validation };
            let (model, trace) = build(data, &config.train_config(), &sc)?;
            let weights = model.count_weights();
            let summary = model.render_symbolic();
            let text = model.to_text();
            (
                Box::new(move |s: &Samples| model.predict(&s.inputs)),
                weights,
                summary,
                text,
                Some(trace),
            )
        }
    };

    let test_pred = predict(test)?;
    let predictions = dataset
        .test_indices()
        .into_iter()
        .zip(unscale(test.targets.clone()))
        .zip(unscale(test_pred.clone()))
        .map(|((i, a), p)| (i, a, p))
        .collect();
    Ok(RunRecord {
        seed,
        train_mse: score(predict(train)?, train),
        validation_mse: score(predict(validation)?, validation),
        test_mse: score(test_pred, test),
        weights,
        model_summary: summary,
        model_text: text,
        predictions,
        trace,
    })
}

/// Runs every (method, seed) cell. A failing cell is recorded in its
/// method's `failures` and does not stop the others; configuration and data
/// errors abort the whole experiment.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunReport> {
    config.validate()?;
    let methods = config.methods()?;
    let dataset = config.dataset()?;
    let parts = (dataset.train(), dataset.validation(), dataset.test());
    if parts.0.is_empty() || parts.1.is_empty() || parts.2.is_empty() {
        return Err(SfnError::InvalidConfig(format!(
            "split left {} train, {} validation, {} test rows; all three must be non-empty",
            parts.0.len(),
            parts.1.len(),
            parts.2.len()
        )));
    }
    let seeds: Vec<u64> = (0..config.runs as u64).map(|i| config.seed + i).collect();
    let cells: Vec<(usize, u64)> = (0..methods.len())
        .flat_map(|m| seeds.iter().map(move |&s| (m, s)))
        .collect();
    // `collect` keeps cell order, so scheduling cannot leak into the report.
    let results: Vec<Result<RunRecord>> = cells
        .par_iter()
        .map(|&(m, seed)| run_cell(config, &dataset, &parts, &methods[m], seed))
        .collect();

    let mut reports: Vec<MethodReport> = methods
        .into_iter()
        .map(|method| MethodReport {
            method,
            runs: Vec::new(),
            failures: Vec::new(),
        })
        .collect();
    for (&(m, seed), result) in cells.iter().zip(results) {
        match result {
            Ok(r) => reports[m].runs.push(r),
            Err(e) => reports[m].failures.push((seed, e.to_string())),
        }
    }
    let data = match config.source.as_str() {
        "csv" => format!(
            "csv {}",
            config
                .csv_path
                .as_ref()
                .map_or(String::new(), |p| p.display().to_string())
        ),
        _ => format!(
            "synthetic ({} points, seed {})",
            config.synth_length, config.synth_seed
        ),
    };
    Ok(RunReport {
        methods: reports,
        original_scale: config.original_scale,
        data: format!(
            "{data}, block {}, lags {}, horizon {}",
            config.block, config.lags, config.horizon
        ),
        train_rows: parts.0.len(),
        validation_rows: parts.1.len(),
        test_rows: parts.2.len(),
    })
}

fn num(x: f64) -> String {
    format!("{x:.4e}")
}

/// Table with the columns Method, train Best/Worst/Average MSE, test
/// Best/Worst/Average MSE and Average # Weights, followed by the best model
/// of every SFN method.
pub fn render_markdown(report: &RunReport) -> String {
    let mut s = String::from("# Experiment report\n\n");
    let _ = writeln!(s, "Data: {}.", report.data);
    let _ = writeln!(
        s,
        "Rows: {} train, {} validation, {} test. MSE in {} space.\n",
        report.train_rows,
        report.validation_rows,
        report.test_rows,
        if report.original_scale {
            "original"
        } else {
            "scaled"
        }
    );
    s.push_str("| Method | Runs | Train best | Train worst | Train average | Test best | Test worst | Test average | Average # weights |\n");
    s.push_str("|---|---|---|---|---|---|---|---|---|\n");
    for m in &report.methods {
        let runs = if m.collapsed() {
            format!("{} (identical)", m.runs.len())
        } else {
            m.runs.len().to_string()
        };
        match (m.train(), m.test(), m.average_weights()) {
            (Some(tr), Some(te), Some(w)) => {
                let _ = writeln!(
                    s,
                    "| {} | {runs} | {} | {} | {} | {} | {} | {} | {w:.1} |",
                    m.method,
                    num(tr.best),
                    num(tr.worst),
                    num(tr.average),
                    num(te.best),
                    num(te.worst),
                    num(te.average)
                );
            }
            _ => {
                let _ = writeln!(s, "| {} | 0 | - | - | - | - | - | - | - |", m.method);
            }
        }
    }
    let sfn: Vec<_> = report
        .methods
        .iter()
        .filter(|m| matches!(m.method, MethodSpec::Sfn { .. }))
        .filter_map(|m| m.best_run().map(|r| (m, r)))
        .collect();
    if !sfn.is_empty() {
        s.push_str("\n## Best models (lowest validation MSE)\n\n");
        for (m, r) in sfn {
            let _ = writeln!(
                s,
                "- {} (seed {}, {} weights): `{}`",
                m.method, r.seed, r.weights, r.model_summary
            );
        }
    }
    let failures: Vec<_> = report
        .methods
        .iter()
        .flat_map(|m| m.failures.iter().map(move |f| (m, f)))
        .collect();
    if !failures.is_empty() {
        s.push_str("\n## Failed runs\n\n");
        for (m, (seed, e)) in failures {
            let _ = writeln!(s, "- {} seed {seed}: {e}", m.method);
        }
    }
    s
}

/// One row of `report.csv`.
#[derive(Clone, Debug, PartialEq, serde::Serialize, Deserialize)]
pub struct ReportRow {
    /// `run`, `best`, `worst` or `average`.
    pub row: String,
    pub method: String,
    pub seed: Option<u64>,
    pub train_mse: f64,
    pub validation_mse: Option<f64>,
    pub test_mse: f64,
    pub weights: f64,
}

/// Per-run rows followed by best/worst/average rows for each method. Values
/// are written with full precision so the file reads back exactly.
pub fn report_rows(report: &RunReport) -> Vec<ReportRow> {
    let mut rows = Vec::new();
    for m in &report.methods {
        let method = m.method.to_string();
        for r in &m.runs {
            rows.push(ReportRow {
                row: "run".into(),
                method: method.clone(),
                seed: Some(r.seed),
                train_mse: r.train_mse,
                validation_mse: Some(r.validation_mse),
                test_mse: r.test_mse,
                weights: r.weights as f64,
            });
        }
        if let (Some(tr), Some(te), Some(w)) = (m.train(), m.test(), m.average_weights()) {
            for (name, a, b) in [
                ("best", tr.best, te.best),
                ("worst", tr.worst, te.worst),
                ("average", tr.average, te.average),
            ] {
                rows.push(ReportRow {
                    row: name.into(),
                    method: method.clone(),
                    seed: None,
                    train_mse: a,
                    validation_mse: None,
                    test_mse: b,
                    weights: w,
                });
            }
        }
    }
    rows
}

pub fn read_report_csv(path: impl AsRef<Path>) -> Result<Vec<ReportRow>> {
    let mut r = csv::Reader::from_path(path.as_ref())?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| SfnError::io(path, e))
}

/// Writes `report.md`, `report.csv` and, per run,
/// `predictions_<method>_<seed>.csv`, `model_<method>_<seed>.txt` and (SFN
/// only) `trace_<method>_<seed>.csv` into `dir`. Returns the paths written.
pub fn emit_report(report: &RunReport, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| SfnError::io(dir, e))?;
    let mut written = Vec::new();

    let md = dir.join("report.md");
    write_file(&md, &render_markdown(report))?;
    written.push(md);

    let csv_path = dir.join("report.csv");
    let mut w = csv::Writer::from_path(&csv_path)?;
    for row in report_rows(report) {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| SfnError::io(&csv_path, e))?;
    written.push(csv_path);

    for m in &report.methods {
        let slug = m.method.slug();
        for r in &m.runs {
            let p = dir.join(format!("predictions_{slug}_{}.csv", r.seed));
            let mut s = String::from("index,actual,predicted\n");
            for (i, a, y) in &r.predictions {
                let _ = writeln!(s, "{i},{a},{y}");
            }
            write_file(&p, &s)?;
            written.push(p);

            let p = dir.join(format!("model_{slug}_{}.txt", r.seed));
            write_file(&p, &format!("# {}\n{}", r.model_summary, r.model_text))?;
            written.push(p);

            if let Some(trace) = &r.trace {
                let p = dir.join(format!("trace_{slug}_{}.csv", r.seed));
                trace.write_csv(&p)?;
                written.push(p);
            }
        }
    }
    Ok(written)
}
