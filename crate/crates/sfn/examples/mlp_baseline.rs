//! B-BP and ES-BP perceptrons on the averaged synthetic series, plus a
//! hidden-count sweep.

use sfn::data::{block_average, synth_series, Dataset, SplitConfig, SynthConfig};
use sfn::mlp::{mlp_weight_count, sweep_hidden, train_bbp, train_esbp, MlpConfig};

fn main() -> sfn::Result<()> {
    let series = block_average(&synth_series(&SynthConfig::default())?, 10)?;
    let data = Dataset::from_series(&series, 4, 1, &SplitConfig::default())?;
    let (train, validation, test) = (data.train(), data.validation(), data.test());

    let cfg = MlpConfig::default();
    let bbp = train_bbp(&train, &cfg)?;
    let esbp = train_esbp(&train, &validation, &cfg)?;
    for (name, fit) in [("B-BP", &bbp), ("ES-BP", &esbp)] {
        println!(
            "{name:>5}({}): {} weights, epochs {}, kept epoch {}, test mse {:.4e}",
            cfg.hidden,
            fit.model.weight_count(),
            fit.epochs_run,
            fit.best_epoch,
            fit.model.mse(&test)
        );
    }

    for h in [3, 6, 9, 12, 15] {
        print!("h={h}: {} weights  ", mlp_weight_count(4, h)?);
    }
    println!();
    let quick = MlpConfig {
        max_epochs: 2000,
        ..cfg
    };
    let (h, fit) = sweep_hidden(&train, &validation, &[3, 6, 9, 12, 15], &quick, true)?;
    println!(
        "best hidden count by validation: {h} (validation mse {:.4e})",
        fit.model.mse(&validation)
    );
    Ok(())
}
