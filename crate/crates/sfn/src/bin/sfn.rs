use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sfn::check::gradient_check_suite;
use sfn::data::{
    block_average, load_csv, load_table, synth_series, write_csv, Dataset, SplitConfig, SynthConfig,
};
use sfn::fixtures::{log_fixture, recovery_fixture};
use sfn::harness::{emit_report, render_markdown, run_experiment, ExperimentConfig};
use sfn::search::{self, Selection};
use sfn::{mse, Algorithm, Result, SearchConfig, SearchData, SfnError, SfnModel, TrainConfig};

#[derive(Parser)]
#[command(name = "sfn", version, about = "Symbolic function networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build one model on one dataset and print it with its MSE.
    Fit {
        #[command(flatten)]
        data: DataArgs,
        /// FLK, FLY, FRS, B or FB.
        #[arg(long, default_value = "FLK")]
        algorithm: Algorithm,
        #[command(flatten)]
        search: SearchArgs,
        #[command(flatten)]
        train: TrainArgs,
        /// Write the model in text form.
        #[arg(long)]
        save: Option<PathBuf>,
    },
    /// Run a multi-seed comparison from a config file.
    Experiment {
        /// Flat TOML config; defaults are used for missing keys.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides `output_dir`.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        original_scale: bool,
        /// Overrides `seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides `runs`.
        #[arg(long)]
        runs: Option<usize>,
    },
    /// Write a synthetic seasonal series as CSV.
    Synth {
        #[arg(long, default_value_t = 3600)]
        length: usize,
        #[arg(long, default_value_t = 1000.0)]
        base: f64,
        #[arg(long, default_value_t = 0.0)]
        trend: f64,
        #[arg(long, default_value_t = 700.0)]
        amplitude: f64,
        #[arg(long, default_value_t = 360.0)]
        period: f64,
        #[arg(long, default_value_t = 60.0)]
        noise: f64,
        #[arg(long, default_value_t = 0.95)]
        ar: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Average blocks of this many points before writing.
        #[arg(long, default_value_t = 1)]
        block: usize,
        /// Output file; stdout when absent.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Compare analytic and finite-difference gradients on random trees.
    Gradcheck {
        #[arg(long, default_value_t = 200)]
        cases: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-6)]
        step: f64,
        /// Exit nonzero above this relative error.
        #[arg(long, default_value_t = 1e-5)]
        tolerance: f64,
    },
    /// Prune a saved model against a dataset.
    Prune {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        search: SearchArgs,
        #[command(flatten)]
        train: TrainArgs,
        #[arg(long)]
        save: Option<PathBuf>,
    },
}

#[derive(Args)]
struct DataArgs {
    /// Time series CSV (one value per line, last column used).
    #[arg(long, group = "source")]
    series: Option<PathBuf>,
    /// Regression table CSV (last column is the target).
    #[arg(long, group = "source")]
    table: Option<PathBuf>,
    /// Built-in fixture: `log` or `recovery`.
    #[arg(long, group = "source")]
    fixture: Option<String>,
    #[arg(long, default_value_t = 200)]
    fixture_points: usize,
    #[arg(long, default_value_t = 1)]
    block: usize,
    #[arg(long, default_value_t = 4)]
    lags: usize,
    #[arg(long, default_value_t = 1)]
    horizon: usize,
    #[arg(long, default_value_t = 0.5)]
    test_fraction: f64,
    #[arg(long, default_value_t = 0.25)]
    validation_fraction: f64,
    /// Draw validation rows at random (with --seed) instead of chronologically.
    #[arg(long)]
    random_validation: bool,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    max_depth: usize,
    #[arg(long, default_value_t = 1e-4)]
    admission_threshold: f64,
    #[arg(long, default_value_t = 0.5)]
    rf: f64,
    #[arg(long, default_value_t = 5)]
    k_prune_interval: usize,
    #[arg(long, default_value_t = 24)]
    max_links: usize,
    #[arg(long, default_value_t = 500)]
    candidate_epochs: usize,
    #[arg(long, default_value_t = 2000)]
    topup_epochs: usize,
    /// Take the first admissible candidate of a sweep instead of the best.
    #[arg(long)]
    first_improvement: bool,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, default_value_t = 0.05)]
    learning_rate: f64,
    #[arg(long, default_value_t = 0.2)]
    momentum: f64,
    #[arg(long, default_value_t = 10_000)]
    max_epochs: usize,
    #[arg(long, default_value_t = 1e-8)]
    tolerance: f64,
    #[arg(long, default_value_t = 50)]
    patience_epochs: usize,
    /// Step on the summed error instead of its mean.
    #[arg(long)]
    sum_loss: bool,
}

impl DataArgs {
    fn load(&self, seed: u64) -> Result<Dataset> {
        let split = SplitConfig {
            test_fraction: self.test_fraction,
            validation_fraction: self.validation_fraction,
            random_validation: self.random_validation.then_some(seed),
        };
        if let Some(path) = &self.series {
            let series = block_average(&load_csv(path)?, self.block)?;
            return Dataset::from_series(&series, self.lags, self.horizon, &split);
        }
        let samples = match (&self.table, self.fixture.as_deref()) {
            (Some(path), _) => load_table(path)?,
            (None, Some("log")) => log_fixture(self.fixture_points),
            (None, Some("recovery")) => recovery_fixture(self.fixture_points, seed),
            (None, Some(other)) => {
                return Err(SfnError::InvalidConfig(format!(
                    "unknown fixture `{other}` (log, recovery)"
                )))
            }
            (None, None) => {
                return Err(SfnError::InvalidConfig(
                    "one of --series, --table or --fixture is required".into(),
                ))
            }
        };
        Dataset::from_samples(samples, &split)
    }
}

impl SearchArgs {
    fn config(&self, algorithm: Algorithm) -> SearchConfig {
        SearchConfig {
            algorithm,
            max_depth: self.max_depth,
            admission_threshold: self.admission_threshold,
            rf: self.rf,
            k_prune_interval: self.k_prune_interval,
            max_links: self.max_links,
            seed: self.seed,
            candidate_epochs: self.candidate_epochs,
            topup_epochs: self.topup_epochs,
            selection: if self.first_improvement {
                Selection::FirstImprovement
            } else {
                Selection::BestOfSweep
            },
            ..SearchConfig::default()
        }
    }
}

impl TrainArgs {
    fn config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            momentum: self.momentum,
            max_epochs: self.max_epochs,
            tolerance: self.tolerance,
            patience_epochs: self.patience_epochs,
            mean_loss: !self.sum_loss,
        }
    }
}

fn report(model: &SfnModel, data: &Dataset) -> Result<()> {
    println!("{model}");
    println!("weights: {}", model.count_weights());
    for (name, s) in [
        ("train", data.train()),
        ("validation", data.validation()),
        ("test", data.test()),
    ] {
        if !s.is_empty() {
            println!(
                "{name} mse: {:.6e} ({} rows)",
                mse(model, &s.inputs, &s.targets)?,
                s.len()
            );
        }
    }
    Ok(())
}

fn save(model: &SfnModel, path: &Option<PathBuf>) -> Result<()> {
    if let Some(path) = path {
        let text = format!("# {model}\n{}", model.to_text());
        fs::write(path, text).map_err(|e| SfnError::io(path, e))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Fit {
            data,
            algorithm,
            search,
            train,
            save: out,
        } => {
            let ds = data.load(search.seed)?;
            let (tr, va) = (ds.train(), ds.validation());
            let (model, _) = search::build(
                SearchData {
                    train: &tr,
                    validation: &va,
                },
                &train.config(),
                &search.config(algorithm),
            )?;
            report(&model, &ds)?;
            save(&model, &out)?;
        }
        Command::Experiment {
            config,
            output,
            original_scale,
            seed,
            runs,
        } => {
            let mut cfg = match config {
                Some(path) => ExperimentConfig::load(path)?,
                None => ExperimentConfig::default(),
            };
            if let Some(o) = output {
                cfg.output_dir = o;
            }
            cfg.original_scale |= original_scale;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(r) = runs {
                cfg.runs = r;
            }
            let report = run_experiment(&cfg)?;
            print!("{}", render_markdown(&report));
            let files = emit_report(&report, &cfg.output_dir)?;
            eprintln!("wrote {} files to {}", files.len(), cfg.output_dir.display());
            return Ok(report.methods.iter().all(|m| m.failures.is_empty()));
        }
        Command::Synth {
            length,
            base,
            trend,
            amplitude,
            period,
            noise,
            ar,
            seed,
            block,
            output,
        } => {
            let series = synth_series(&SynthConfig {
                length,
                base,
                trend,
                amplitude,
                period,
                noise,
                ar,
                seed,
            })?;
            let series = block_average(&series, block)?;
            match output {
                Some(path) => write_csv(&series, &path)?,
                None => {
                    println!("value");
                    for v in &series.values {
                        println!("{v}");
                    }
                }
            }
        }
        Command::Gradcheck {
            cases,
            seed,
            step,
            tolerance,
        } => {
            let r = gradient_check_suite(cases, seed, step)?;
            println!(
                "cases: {} (redrawn {}), max relative error {:.3e} (case {})",
                r.cases, r.redrawn, r.max_rel_error, r.worst_case
            );
            return Ok(r.max_rel_error < tolerance);
        }
        Command::Prune {
            model,
            data,
            search,
            train,
            save: out,
        } => {
            let text = fs::read_to_string(&model).map_err(|e| SfnError::io(&model, e))?;
            let start = SfnModel::from_text(&text)?;
            let ds = data.load(search.seed)?;
            let (tr, va) = (ds.train(), ds.validation());
            println!("before: {start}");
            let (pruned, trace) = search::prune(
                &start,
                SearchData {
                    train: &tr,
                    validation: &va,
                },
                &train.config(),
                &search.config(Algorithm::Backward),
            )?;
            println!("removed {} link(s)", trace.accepted().count());
            report(&pruned, &ds)?;
            save(&pruned, &out)?;
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
