//! Grow a full layer with FLY, then prune it back and write the trace.

use sfn::data::{Dataset, SplitConfig};
use sfn::fixtures::recovery_fixture;
use sfn::search::{forward_layer_by_layer, prune};
use sfn::{mse, SearchConfig, SearchData, TrainConfig};

fn main() -> sfn::Result<()> {
    let split = SplitConfig {
        test_fraction: 0.0,
        ..SplitConfig::default()
    };
    let data = Dataset::from_samples(recovery_fixture(200, 3), &split)?;
    let (train, validation) = (data.train(), data.validation());
    let sd = SearchData {
        train: &train,
        validation: &validation,
    };
    let (tc, sc) = (TrainConfig::default(), SearchConfig::default());

    let (grown, _) = forward_layer_by_layer(sd, &tc, &sc)?;
    let (pruned, trace) = prune(&grown, sd, &tc, &sc)?;
    for (name, m) in [("grown", &grown), ("pruned", &pruned)] {
        println!(
            "{name:>6}: {:>2} weights, validation mse {:.3e}\n        {m}",
            m.count_weights(),
            mse(m, &validation.inputs, &validation.targets)?
        );
    }
    for step in trace.accepted() {
        println!(
            "{} (validation {:.3e} -> {:.3e})",
            step.candidate, step.val_mse_before, step.val_mse_after
        );
    }
    let path = std::env::temp_dir().join("sfn_prune_trace.csv");
    trace.write_csv(&path)?;
    println!("trace written to {}", path.display());
    Ok(())
}
