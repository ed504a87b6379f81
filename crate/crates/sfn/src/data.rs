//! Series preparation: block averaging, min-max scaling, lag windows and
//! chronological partitioning.

use std::f64::consts::PI;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Result, SfnError};

#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    pub values: Vec<f64>,
    pub meta: String,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>, meta: impl Into<String>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(SfnError::InvalidConfig(format!("series value {i} is not finite")));
        }
        Ok(TimeSeries {
            values,
            meta: meta.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Means of consecutive blocks of `block` values. A trailing partial block is
/// dropped.
pub fn block_average(series: &TimeSeries, block: usize) -> Result<TimeSeries> {
    if block == 0 {
        return Err(SfnError::InvalidConfig("block size must be at least 1".into()));
    }
    let values = series
        .values
        .chunks_exact(block)
        .map(|c| c.iter().sum::<f64>() / block as f64)
        .collect();
    TimeSeries::new(values, format!("{} | block mean of {block}", series.meta))
}

/// Min-max map onto `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingRecord {
    pub min: f64,
    pub max: f64,
}

impl ScalingRecord {
    pub fn fit(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(SfnError::EmptyData);
        }
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max <= min {
            return Err(SfnError::DegenerateRange(min));
        }
        Ok(ScalingRecord { min, max })
    }

    pub fn apply(&self, x: f64) -> f64 {
        (x - self.min) / (self.max - self.min)
    }

    pub fn invert(&self, y: f64) -> f64 {
        y * (self.max - self.min) + self.min
    }

    pub fn apply_all(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.apply(x)).collect()
    }

    pub fn invert_all(&self, ys: &[f64]) -> Vec<f64> {
        ys.iter().map(|&y| self.invert(y)).collect()
    }
}

/// Fits the scaling on `series.values[range]` only.
pub fn fit_scale(series: &TimeSeries, range: std::ops::Range<usize>) -> Result<ScalingRecord> {
    let slice = series.values.get(range.clone()).ok_or_else(|| {
        SfnError::InvalidConfig(format!("range {range:?} outside a series of {}", series.len()))
    })?;
    ScalingRecord::fit(slice)
}

#[derive(Clone, Debug, PartialEq)]
pub struct WindowRow {
    /// `x(t-p+1), ..., x(t)`
    pub inputs: Vec<f64>,
    /// `x(t+k)`
    pub target: f64,
    /// Series index of the target.
    pub target_index: usize,
}

/// Rows of `lags` consecutive values predicting the value `horizon` steps
/// after the last one.
pub fn make_windows(values: &[f64], lags: usize, horizon: usize) -> Result<Vec<WindowRow>> {
    if lags == 0 || horizon == 0 {
        return Err(SfnError::InvalidConfig(
            "lags and horizon must be at least 1".into(),
        ));
    }
    let span = lags + horizon;
    if values.len() < span {
        return Ok(Vec::new());
    }
    Ok((0..=values.len() - span)
        .map(|start| {
            let target_index = start + lags - 1 + horizon;
            WindowRow {
                inputs: values[start..start + lags].to_vec(),
                target: values[target_index],
                target_index,
            }
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub fn label(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SplitConfig {
    /// Trailing fraction of rows held out for testing.
    pub test_fraction: f64,
    /// Fraction of the remaining rows used for validation.
    pub validation_fraction: f64,
    /// Draw validation rows at random (seeded) instead of taking the
    /// chronologically last ones.
    pub random_validation: Option<u64>,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            test_fraction: 0.5,
            validation_fraction: 0.25,
            random_validation: None,
        }
    }
}

/// Labels `rows` items in time order: training/validation first, test last.
pub fn partition(rows: usize, config: &SplitConfig) -> Result<Vec<Split>> {
    let (t, v) = (config.test_fraction, config.validation_fraction);
    if !(0.0..1.0).contains(&t) || !(0.0..1.0).contains(&v) || t + v > 1.0 {
        return Err(SfnError::InvalidConfig(format!(
            "bad split fractions: test {t}, validation {v}"
        )));
    }
    let n_test = (rows as f64 * t).round() as usize;
    let n_fit = rows - n_test;
    let n_val = (n_fit as f64 * v).round() as usize;
    if n_fit - n_val == 0 {
        return Err(SfnError::EmptyData);
    }
    let mut labels = vec![Split::Train; n_fit];
    labels.resize(rows, Split::Test);
    match config.random_validation {
        None => labels[n_fit - n_val..n_fit].fill(Split::Validation),
        Some(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for i in sample(&mut rng, n_fit, n_val) {
                labels[i] = Split::Validation;
            }
        }
    }
    Ok(labels)
}

/// Inputs and targets of one partition.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Samples {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
}

impl Samples {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn arity(&self) -> usize {
        self.inputs.first().map_or(0, Vec::len)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub labels: Vec<Split>,
    /// Source index of each row's target, when built from a series.
    pub target_index: Vec<usize>,
    pub scaling: Option<ScalingRecord>,
}

impl Dataset {
    /// Windows `series`, partitions the rows and min-max scales everything
    /// with statistics taken from the values the training and validation rows
    /// touch.
    pub fn from_series(
        series: &TimeSeries,
        lags: usize,
        horizon: usize,
        split: &SplitConfig,
    ) -> Result<Self> {
        let rows = make_windows(&series.values, lags, horizon)?;
        if rows.is_empty() {
            return Err(SfnError::InvalidConfig(format!(
                "series of {} points is too short for {lags} lags and horizon {horizon}",
                series.len()
            )));
        }
        let labels = partition(rows.len(), split)?;
        let last_fit_target = rows
            .iter()
            .zip(&labels)
            .filter(|(_, l)| **l != Split::Test)
            .map(|(r, _)| r.target_index)
            .max()
            .expect("partition keeps training rows");
        let scaling = fit_scale(series, 0..last_fit_target + 1)?;
        Ok(Dataset {
            inputs: rows.iter().map(|r| scaling.apply_all(&r.inputs)).collect(),
            targets: rows.iter().map(|r| scaling.apply(r.target)).collect(),
            target_index: rows.iter().map(|r| r.target_index).collect(),
            labels,
            scaling: Some(scaling),
        })
    }

    /// Partitions already-prepared regression rows, unscaled.
    pub fn from_samples(samples: Samples, split: &SplitConfig) -> Result<Self> {
        if samples.is_empty() {
            return Err(SfnError::EmptyData);
        }
        let labels = partition(samples.len(), split)?;
        Ok(Dataset {
            target_index: (0..samples.len()).collect(),
            inputs: samples.inputs,
            targets: samples.targets,
            labels,
            scaling: None,
        })
    }

    pub fn arity(&self) -> usize {
        self.inputs.first().map_or(0, Vec::len)
    }

    pub fn subset(&self, which: Split) -> Samples {
        let mut out = Samples::default();
        for ((x, d), l) in self.inputs.iter().zip(&self.targets).zip(&self.labels) {
            if *l == which {
                out.inputs.push(x.clone());
                out.targets.push(*d);
            }
        }
        out
    }

    pub fn train(&self) -> Samples {
        self.subset(Split::Train)
    }

    pub fn validation(&self) -> Samples {
        self.subset(Split::Validation)
    }

    pub fn test(&self) -> Samples {
        self.subset(Split::Test)
    }

    /// Source indices of the test targets, in order.
    pub fn test_indices(&self) -> Vec<usize> {
        self.target_index
            .iter()
            .zip(&self.labels)
            .filter(|(_, l)| **l == Split::Test)
            .map(|(i, _)| *i)
            .collect()
    }

    /// Dumps `row,target_index,split,x0..,target` for external audit.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["row".to_string(), "target_index".into(), "split".into()];
        header.extend((0..self.arity()).map(|i| format!("x{i}")));
        header.push("target".into());
        w.write_record(&header)?;
        for (row, ((x, d), l)) in self
            .inputs
            .iter()
            .zip(&self.targets)
            .zip(&self.labels)
            .enumerate()
        {
            let mut rec = vec![
                row.to_string(),
                self.target_index[row].to_string(),
                l.label().to_string(),
            ];
            rec.extend(x.iter().map(f64::to_string));
            rec.push(d.to_string());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| SfnError::io(path, e))?;
        Ok(())
    }
}

fn parse_error(path: &Path, line: u64, message: String) -> SfnError {
    SfnError::Parse {
        path: path.display().to_string(),
        line: line as usize,
        message,
    }
}

fn csv_reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| SfnError::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

/// Reads one value per line. A non-numeric first line is taken as a header;
/// with several columns (e.g. `date,value`) the last one is used.
pub fn load_csv(path: impl AsRef<Path>) -> Result<TimeSeries> {
    let path = path.as_ref();
    let mut values = Vec::new();
    for (i, rec) in csv_reader(path)?.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map_or(i as u64 + 1, |p| p.line());
        let field = rec.iter().next_back().unwrap_or("");
        match field.parse::<f64>() {
            Ok(v) if v.is_finite() => values.push(v),
            _ if i == 0 => continue,
            _ => {
                return Err(parse_error(
                    path,
                    line,
                    format!("`{field}` is not a finite number"),
                ))
            }
        }
    }
    TimeSeries::new(values, path.display().to_string())
}

pub fn write_csv(series: &TimeSeries, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut f = File::create(path).map_err(|e| SfnError::io(path, e))?;
    let mut s = String::from("value\n");
    for v in &series.values {
        s.push_str(&format!("{v}\n"));
    }
    f.write_all(s.as_bytes()).map_err(|e| SfnError::io(path, e))
}

/// Reads a regression table: a header row, then numeric rows whose last
/// column is the target and whose other columns are inputs.
pub fn load_table(path: impl AsRef<Path>) -> Result<Samples> {
    let path = path.as_ref();
    let mut out = Samples::default();
    let mut width = None;
    for (i, rec) in csv_reader(path)?.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map_or(i as u64 + 1, |p| p.line());
        if i == 0 && rec.iter().any(|f| f.parse::<f64>().is_err()) {
            continue;
        }
        let nums: Vec<f64> = rec
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| parse_error(path, line, "non-numeric field".into()))?;
        if nums.len() < 2 || *width.get_or_insert(nums.len()) != nums.len() {
            return Err(parse_error(
                path,
                line,
                format!("unexpected column count {}", nums.len()),
            ));
        }
        out.targets.push(nums[nums.len() - 1]);
        out.inputs.push(nums[..nums.len() - 1].to_vec());
    }
    if out.is_empty() {
        return Err(SfnError::EmptyData);
    }
    Ok(out)
}

/// Seeded synthetic flow-like series:
///
/// ```text
/// x(t) = base + trend * t + amplitude * sin(2 pi t / period) + n(t)
/// n(t) = ar * n(t-1) + noise * eps(t),   eps ~ N(0, 1)
/// ```
///
/// `n(0)` is drawn from the stationary distribution of the AR(1) process.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub length: usize,
    pub base: f64,
    pub trend: f64,
    pub amplitude: f64,
    pub period: f64,
    pub noise: f64,
    pub ar: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            length: 3600,
            base: 1000.0,
            trend: 0.0,
            amplitude: 700.0,
            period: 360.0,
            noise: 60.0,
            ar: 0.95,
            seed: 1,
        }
    }
}

pub fn synth_series(config: &SynthConfig) -> Result<TimeSeries> {
    if !(config.period > 0.0) || !(config.ar.abs() < 1.0) || !(config.noise >= 0.0) {
        return Err(SfnError::InvalidConfig(
            "synthetic series needs period > 0, |ar| < 1, noise >= 0".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut n = config.noise / (1.0 - config.ar * config.ar).sqrt() * normal.sample(&mut rng);
    let mut values = Vec::with_capacity(config.length);
    for t in 0..config.length {
        if t > 0 {
            n = config.ar * n + config.noise * normal.sample(&mut rng);
        }
        let tf = t as f64;
        values.push(
            config.base + config.trend * tf + config.amplitude * (2.0 * PI * tf / config.period).sin() + n,
        );
    }
    TimeSeries::new(
        values,
        format!(
            "synthetic(length={}, base={}, trend={}, amplitude={}, period={}, noise={}, ar={}, seed={})",
            config.length,
            config.base,
            config.trend,
            config.amplitude,
            config.period,
            config.noise,
            config.ar,
            config.seed
        ),
    )
}
