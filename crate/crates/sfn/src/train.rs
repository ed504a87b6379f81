//! Steepest descent with momentum, one update per pass over the training set.

use rand::Rng;

use crate::error::{Result, SfnError};
use crate::grad::{batch_gradient, sum_squared_error};
use crate::tree::{FunctionKind, LinkWeights, SfnModel};

/// Learning-rate halvings tolerated before a run is declared diverged.
pub const MAX_HALVINGS: usize = 3;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Fraction of the previous update carried into the next one, in `[0, 1)`.
    pub momentum: f64,
    pub max_epochs: usize,
    /// Plateau threshold on the change of the loss between epochs.
    pub tolerance: f64,
    /// Consecutive plateau epochs that end training.
    pub patience_epochs: usize,
    /// Step on `J / M` instead of the raw sum `J`. The raw sum makes the
    /// effective step grow with the training-set size.
    pub mean_loss: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.05,
            momentum: 0.2,
            max_epochs: 10_000,
            tolerance: 1e-8,
            patience_epochs: 50,
            mean_loss: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(SfnError::InvalidConfig("learning_rate must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(SfnError::InvalidConfig("momentum must lie in [0, 1)".into()));
        }
        if self.max_epochs == 0 {
            return Err(SfnError::InvalidConfig("max_epochs must be at least 1".into()));
        }
        if !(self.tolerance >= 0.0) {
            return Err(SfnError::InvalidConfig("tolerance must be non-negative".into()));
        }
        Ok(())
    }

    pub fn with_epochs(&self, max_epochs: usize) -> Self {
        TrainConfig {
            max_epochs,
            ..self.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainResult {
    /// Sum of squared errors on the training set at the returned weights.
    pub final_train_j: f64,
    pub epochs_run: usize,
    pub diverged: bool,
    pub halvings: usize,
    pub weight_snapshot: Vec<f64>,
    /// `J` at the start of every completed epoch.
    pub j_history: Vec<f64>,
}

/// Trains every weight of `model` in place and leaves the lowest-`J`
/// weights seen loaded.
///
/// An epoch whose forward or backward pass overflows restores the best
/// weights so far, halves the learning rate and clears the momentum. The
/// run stops as diverged on the first failure after [`MAX_HALVINGS`]
/// halvings.
pub fn train(
    model: &mut SfnModel,
    inputs: &[Vec<f64>],
    targets: &[f64],
    config: &TrainConfig,
) -> Result<TrainResult> {
    config.validate()?;
    if model.count_weights() == 0 {
        return Err(SfnError::EmptyModel);
    }
    if inputs.is_empty() {
        return Err(SfnError::EmptyData);
    }
    if inputs.len() != targets.len() {
        return Err(SfnError::LengthMismatch {
            expected: inputs.len(),
            got: targets.len(),
        });
    }

    let scale = if config.mean_loss {
        1.0 / inputs.len() as f64
    } else {
        1.0
    };
    let mut lr = config.learning_rate;
    let mut weights = model.flatten_weights();
    let mut velocity = vec![0.0; weights.len()];
    let mut best = (f64::INFINITY, weights.clone());
    let mut prev_loss: Option<f64> = None;
    let mut flat_epochs = 0;
    let mut halvings = 0;
    let mut diverged = false;
    let mut epochs_run = 0;
    let mut history = Vec::new();

    while epochs_run < config.max_epochs {
        epochs_run += 1;
        let step = model
            .load_weights(&weights)
            .and_then(|_| batch_gradient(model, inputs, targets));
        let (j, grad) = match step {
            Ok(v) => v,
            Err(SfnError::NonFiniteResult { .. }) | Err(SfnError::InvalidWeights(_)) => {
                if halvings == MAX_HALVINGS {
                    diverged = true;
                    break;
                }
                halvings += 1;
                lr *= 0.5;
                weights.clone_from(&best.1);
                velocity.iter_mut().for_each(|v| *v = 0.0);
                prev_loss = None;
                flat_epochs = 0;
                continue;
            }
            Err(e) => return Err(e),
        };
        history.push(j);
        if j < best.0 {
            best = (j, weights.clone());
        }
        let loss = j * scale;
        if let Some(prev) = prev_loss {
            if (loss - prev).abs() < config.tolerance {
                flat_epochs += 1;
                if flat_epochs >= config.patience_epochs {
                    break;
                }
            } else {
                flat_epochs = 0;
            }
        }
        prev_loss = Some(loss);
        for ((w, v), g) in weights.iter_mut().zip(&mut velocity).zip(grad.iter()) {
            *v = -lr * scale * g + config.momentum * *v;
            *w += *v;
        }
    }

    // The last update has not been scored yet.
    if !diverged && weights.iter().all(|w| w.is_finite()) && model.load_weights(&weights).is_ok() {
        if let Ok(j) = sum_squared_error(model, inputs, targets) {
            if j < best.0 {
                best = (j, weights.clone());
            }
        }
    }
    model.load_weights(&best.1)?;
    Ok(TrainResult {
        final_train_j: best.0,
        epochs_run,
        diverged,
        halvings,
        weight_snapshot: best.1,
        j_history: history,
    })
}

/// Mean squared error; the empty model predicts zero everywhere.
pub fn mse(model: &SfnModel, inputs: &[Vec<f64>], targets: &[f64]) -> Result<f64> {
    Ok(sum_squared_error(model, inputs, targets)? / inputs.len() as f64)
}

/// Fresh weights for a candidate link: multiplier in `[-0.5, 0.5]`, E1 exponent
/// in `[0.5, 1.5]`, E2 rate in `[-0.5, 0.5]`.
pub fn init_weights<R: Rng + ?Sized>(kind: FunctionKind, rng: &mut R) -> LinkWeights {
    let multiplier = rng.random_range(-0.5..=0.5);
    match kind {
        FunctionKind::Power => LinkWeights::power(multiplier, rng.random_range(0.5..=1.5)),
        FunctionKind::Exponential => LinkWeights::exponential(multiplier, rng.random_range(-0.5..=0.5)),
        FunctionKind::Logarithm => LinkWeights::logarithm(multiplier),
    }
}
