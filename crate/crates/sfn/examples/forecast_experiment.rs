//! Runs the default seven-method forecasting comparison on the synthetic
//! series and writes the report files.
//!
//! ```text
//! cargo run --release --example forecast_experiment [config.toml] [output-dir]
//! ```

use std::env;
use std::time::Instant;

use sfn::harness::{emit_report, render_markdown, run_experiment, ExperimentConfig};

fn main() -> sfn::Result<()> {
    let mut args = env::args().skip(1);
    let mut config = match args.next() {
        Some(path) if !path.is_empty() => ExperimentConfig::load(path)?,
        _ => ExperimentConfig::default(),
    };
    if let Some(dir) = args.next() {
        config.output_dir = dir.into();
    }
    let start = Instant::now();
    let report = run_experiment(&config)?;
    print!("{}", render_markdown(&report));
    let files = emit_report(&report, &config.output_dir)?;
    eprintln!(
        "{} files written to {} in {:.1?}",
        files.len(),
        config.output_dir.display(),
        start.elapsed()
    );
    Ok(())
}
