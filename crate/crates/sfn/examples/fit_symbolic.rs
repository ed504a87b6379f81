//! Grow a model on `y = 2 log(x^2 + 1)` and read the formula back.

use sfn::data::{Dataset, SplitConfig};
use sfn::fixtures::log_fixture;
use sfn::search::forward_link_by_link;
use sfn::{mse, SearchConfig, SearchData, SfnModel, TrainConfig};

fn main() -> sfn::Result<()> {
    let split = SplitConfig {
        test_fraction: 0.0,
        random_validation: Some(7),
        ..SplitConfig::default()
    };
    let data = Dataset::from_samples(log_fixture(200), &split)?;
    let (train, validation) = (data.train(), data.validation());

    let (model, trace) = forward_link_by_link(
        SearchData {
            train: &train,
            validation: &validation,
        },
        &TrainConfig::default(),
        &SearchConfig::default(),
    )?;
    println!("{model}");
    println!(
        "train mse {:.3e}, validation mse {:.3e}, {} weights, {} search steps",
        mse(&model, &train.inputs, &train.targets)?,
        mse(&model, &validation.inputs, &validation.targets)?,
        model.count_weights(),
        trace.steps.len()
    );

    let restored = SfnModel::from_text(&model.to_text())?;
    assert_eq!(restored, model);
    Ok(())
}
