//! Single-hidden-layer perceptron baselines.
//!
//! Sigmoid hidden units without biases, a linear output unit with a bias,
//! trained full-batch with momentum. With `p` inputs and `h` hidden units
//! that is `p h + h + 1` weights, the count the reported tables use
//! (46 for `p = 4, h = 9`).
//! B-BP runs the whole epoch budget; ES-BP keeps the weights of the epoch
//! with the lowest validation MSE and stops after `patience` epochs without
//! improvement.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::Samples;
use crate::error::{Result, SfnError};

/// `p h` input-to-hidden weights plus `h + 1` output weights (with bias).
pub fn mlp_weight_count(inputs: usize, hidden: usize) -> Result<usize> {
    if inputs == 0 || hidden == 0 {
        return Err(SfnError::InvalidConfig(
            "an MLP needs at least one input and one hidden unit".into(),
        ));
    }
    Ok(inputs * hidden + hidden + 1)
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlpModel {
    inputs: usize,
    hidden: usize,
    /// Row `j` holds the `inputs` weights of hidden unit `j`.
    hidden_weights: Vec<f64>,
    /// One weight per hidden unit, then the output bias.
    output_weights: Vec<f64>,
}

impl MlpModel {
    /// Weights drawn uniformly from `[-0.5, 0.5]`.
    pub fn new<R: Rng + ?Sized>(inputs: usize, hidden: usize, rng: &mut R) -> Result<Self> {
        mlp_weight_count(inputs, hidden)?;
        let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random_range(-0.5..=0.5)).collect() };
        Ok(MlpModel {
            inputs,
            hidden,
            hidden_weights: draw(inputs * hidden),
            output_weights: draw(hidden + 1),
        })
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn weight_count(&self) -> usize {
        self.hidden_weights.len() + self.output_weights.len()
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut w = self.hidden_weights.clone();
        w.extend_from_slice(&self.output_weights);
        w
    }

    pub fn load(&mut self, weights: &[f64]) -> Result<()> {
        if weights.len() != self.weight_count() {
            return Err(SfnError::LengthMismatch {
                expected: self.weight_count(),
                got: weights.len(),
            });
        }
        let split = self.hidden_weights.len();
        self.hidden_weights.copy_from_slice(&weights[..split]);
        self.output_weights.copy_from_slice(&weights[split..]);
        Ok(())
    }

    fn hidden_activations(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for row in self.hidden_weights.chunks_exact(self.inputs) {
            let a: f64 = row.iter().zip(x).map(|(w, xi)| w * xi).sum();
            out.push(sigmoid(a));
        }
    }

    pub fn predict_one(&self, x: &[f64]) -> f64 {
        let mut h = Vec::with_capacity(self.hidden);
        self.hidden_activations(x, &mut h);
        self.output(&h)
    }

    fn output(&self, h: &[f64]) -> f64 {
        h.iter()
            .zip(&self.output_weights)
            .map(|(a, w)| a * w)
            .sum::<f64>()
            + self.output_weights[self.hidden]
    }

    pub fn predict(&self, inputs: &[Vec<f64>]) -> Vec<f64> {
        inputs.iter().map(|x| self.predict_one(x)).collect()
    }

    pub fn mse(&self, samples: &Samples) -> f64 {
        sse(self, samples) / samples.len() as f64
    }
}

fn sse(model: &MlpModel, samples: &Samples) -> f64 {
    samples
        .inputs
        .iter()
        .zip(&samples.targets)
        .map(|(x, d)| {
            let e = model.predict_one(x) - d;
            e * e
        })
        .sum()
}

/// Sum of squared errors and its gradient in [`MlpModel::flatten`] order.
pub fn gradient(model: &MlpModel, samples: &Samples) -> (f64, Vec<f64>) {
    let stride = model.inputs;
    let split = model.hidden_weights.len();
    let mut g = vec![0.0; model.weight_count()];
    let mut j = 0.0;
    let mut h = Vec::with_capacity(model.hidden);
    for (x, d) in samples.inputs.iter().zip(&samples.targets) {
        model.hidden_activations(x, &mut h);
        let e = model.output(&h) - d;
        j += e * e;
        let de = 2.0 * e;
        for (k, a) in h.iter().enumerate() {
            g[split + k] += de * a;
            let delta = de * model.output_weights[k] * a * (1.0 - a);
            let row = &mut g[k * stride..(k + 1) * stride];
            for (gi, xi) in row.iter_mut().zip(x) {
                *gi += delta * xi;
            }
        }
        g[split + model.hidden] += de;
    }
    (j, g)
}

/// Central differences of the sum of squared errors.
pub fn finite_diff_gradient(model: &MlpModel, samples: &Samples, h: f64) -> Result<Vec<f64>> {
    if !(h.is_finite() && h > 0.0) {
        return Err(SfnError::InvalidStep(h));
    }
    let base = model.flatten();
    let mut probe = model.clone();
    let mut out = Vec::with_capacity(base.len());
    for i in 0..base.len() {
        let mut w = base.clone();
        w[i] += h;
        probe.load(&w)?;
        let plus = sse(&probe, samples);
        w[i] = base[i] - h;
        probe.load(&w)?;
        let minus = sse(&probe, samples);
        out.push((plus - minus) / (2.0 * h));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlpConfig {
    pub hidden: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub max_epochs: usize,
    /// ES-BP: epochs without a new validation minimum before stopping.
    /// `None` never stops early.
    pub patience: Option<usize>,
    pub mean_loss: bool,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            hidden: 9,
            learning_rate: 0.05,
            momentum: 0.2,
            max_epochs: 10_000,
            patience: Some(200),
            mean_loss: true,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlpFit {
    pub model: MlpModel,
    pub epochs_run: usize,
    /// Epoch whose weights were returned (0 = initial weights).
    pub best_epoch: usize,
    pub train_mse: f64,
    /// Validation MSE of the returned weights, when a validation set was used.
    pub validation_mse: Option<f64>,
    /// Validation MSE after the last epoch run.
    pub final_validation_mse: Option<f64>,
}

fn run(train: &Samples, validation: Option<&Samples>, config: &MlpConfig) -> Result<MlpFit> {
    if train.is_empty() || validation.is_some_and(Samples::is_empty) {
        return Err(SfnError::EmptyData);
    }
    if !(config.learning_rate > 0.0) || !(0.0..1.0).contains(&config.momentum) {
        return Err(SfnError::InvalidConfig(
            "learning_rate > 0 and momentum in [0, 1) required".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = MlpModel::new(train.arity(), config.hidden, &mut rng)?;
    let scale = if config.mean_loss {
        1.0 / train.len() as f64
    } else {
        1.0
    };
    let mut w = model.flatten();
    let mut velocity = vec![0.0; w.len()];
    let mut best = (validation.map_or(f64::INFINITY, |v| model.mse(v)), 0, w.clone());
    let mut last_val = validation.map(|v| model.mse(v));
    let mut epochs_run = 0;

    while epochs_run < config.max_epochs {
        let (j, g) = gradient(&model, train);
        if !j.is_finite() || g.iter().any(|x| !x.is_finite()) {
            break;
        }
        for ((wi, vi), gi) in w.iter_mut().zip(&mut velocity).zip(&g) {
            *vi = -config.learning_rate * scale * gi + config.momentum * *vi;
            *wi += *vi;
        }
        model.load(&w)?;
        epochs_run += 1;
        if let Some(v) = validation {
            let val = model.mse(v);
            last_val = Some(val);
            if val < best.0 {
                best = (val, epochs_run, w.clone());
            } else if config.patience.is_some_and(|p| epochs_run - best.1 >= p) {
                break;
            }
        }
    }
    if validation.is_some() {
        model.load(&best.2)?;
    } else {
        best.1 = epochs_run;
    }
    Ok(MlpFit {
        train_mse: model.mse(train),
        validation_mse: validation.map(|v| model.mse(v)),
        final_validation_mse: last_val,
        best_epoch: best.1,
        epochs_run,
        model,
    })
}

/// B-BP: plain gradient descent with momentum for the whole epoch budget.
pub fn train_bbp(train: &Samples, config: &MlpConfig) -> Result<MlpFit> {
    run(train, None, config)
}

/// ES-BP: B-BP returning the weights with the lowest validation MSE.
pub fn train_esbp(train: &Samples, validation: &Samples, config: &MlpConfig) -> Result<MlpFit> {
    run(train, Some(validation), config)
}

/// Tries each hidden count and returns the one with the lowest validation MSE
/// (earliest on ties) and its fit.
pub fn sweep_hidden(
    train: &Samples,
    validation: &Samples,
    counts: &[usize],
    config: &MlpConfig,
    early_stopping: bool,
) -> Result<(usize, MlpFit)> {
    let mut best: Option<(usize, MlpFit, f64)> = None;
    for &h in counts {
        let cfg = MlpConfig {
            hidden: h,
            ..config.clone()
        };
        let fit = if early_stopping {
            train_esbp(train, validation, &cfg)?
        } else {
            train_bbp(train, &cfg)?
        };
        let val = fit.model.mse(validation);
        if best.as_ref().is_none_or(|b| val < b.2) {
            best = Some((h, fit, val));
        }
    }
    best.map(|(h, f, _)| (h, f))
        .ok_or_else(|| SfnError::InvalidConfig("no hidden counts to sweep".into()))
}
