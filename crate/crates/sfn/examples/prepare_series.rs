//! Synthetic daily series -> ten-day and monthly averages -> lag windows ->
//! chronological split.

use sfn::data::{
    block_average, make_windows, partition, synth_series, Dataset, Split, SplitConfig, SynthConfig,
};

fn main() -> sfn::Result<()> {
    let daily = synth_series(&SynthConfig::default())?;
    println!("{}: {} points", daily.meta, daily.len());
    let ten_day = block_average(&daily, 10)?;
    let monthly = block_average(&daily, 30)?;
    println!(
        "ten-day: {} points, monthly: {} points",
        ten_day.len(),
        monthly.len()
    );

    let outer = partition(
        ten_day.len(),
        &SplitConfig {
            validation_fraction: 0.0,
            ..SplitConfig::default()
        },
    )?;
    let count = |s: &[Split], which| s.iter().filter(|l| **l == which).count();
    println!(
        "outer split: {} / {}",
        count(&outer, Split::Train),
        count(&outer, Split::Test)
    );

    let rows = make_windows(&ten_day.values, 4, 1)?;
    println!(
        "first window: {:?} -> {} (target index {})",
        rows[0].inputs, rows[0].target, rows[0].target_index
    );

    let data = Dataset::from_series(&ten_day, 4, 1, &SplitConfig::default())?;
    let scaling = data.scaling.as_ref().expect("series datasets are scaled");
    println!(
        "{} rows: {} train, {} validation, {} test; scaled with min {:.2}, max {:.2}",
        data.inputs.len(),
        data.train().len(),
        data.validation().len(),
        data.test().len(),
        scaling.min,
        scaling.max
    );
    let path = std::env::temp_dir().join("sfn_dataset.csv");
    data.write_csv(&path)?;
    println!("dataset written to {}", path.display());
    Ok(())
}
