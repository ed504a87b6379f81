//! All five builders on `y = 2 log(x0^2 + 1) + exp(0.5 x1)`, with their
//! search traces checked.

use std::time::Instant;

use sfn::data::{Dataset, SplitConfig};
use sfn::fixtures::recovery_fixture;
use sfn::search::build;
use sfn::{mse, Algorithm, SearchConfig, SearchData, TrainConfig};

fn main() -> sfn::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let split = SplitConfig {
        test_fraction: 0.0,
        ..SplitConfig::default()
    };
    let data = Dataset::from_samples(recovery_fixture(200, 42), &split)?;
    let (train, validation) = (data.train(), data.validation());
    let search_data = SearchData {
        train: &train,
        validation: &validation,
    };

    for algorithm in Algorithm::ALL {
        let cfg = SearchConfig {
            algorithm,
            seed,
            ..SearchConfig::default()
        };
        let start = Instant::now();
        let (model, trace) = build(search_data, &TrainConfig::default(), &cfg)?;
        let verified = trace.verify(cfg.admission_threshold).is_ok();
        println!(
            "{algorithm:>3}: train mse {:.2e}, {:>2} weights, {:>3} steps, trace ok: {verified}, {:.1?}",
            mse(&model, &train.inputs, &train.targets)?,
            model.count_weights(),
            trace.steps.len(),
            start.elapsed()
        );
        println!("     {model}");
    }
    Ok(())
}
