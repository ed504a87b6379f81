//! Small regression problems with known answers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::data::Samples;

/// `d(x) = 2 log(x^2 + 1)` on `n` evenly spaced points of `[-2, 2]`.
pub fn log_fixture(n: usize) -> Samples {
    let inputs: Vec<Vec<f64>> = (0..n)
        .map(|i| vec![-2.0 + 4.0 * i as f64 / (n.max(2) - 1) as f64])
        .collect();
    let targets = inputs.iter().map(|x| 2.0 * (x[0] * x[0] + 1.0).ln()).collect();
    Samples { inputs, targets }
}

/// `y = 2 log(x0^2 + 1) + exp(0.5 x1)` at `n` uniform points of `[-2, 2]^2`.
pub fn recovery_fixture(n: usize, seed: u64) -> Samples {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inputs: Vec<Vec<f64>> = (0..n)
        .map(|_| vec![rng.random_range(-2.0..=2.0), rng.random_range(-2.0..=2.0)])
        .collect();
    let targets = inputs
        .iter()
        .map(|x| 2.0 * (x[0] * x[0] + 1.0).ln() + (0.5 * x[1]).exp())
        .collect();
    Samples { inputs, targets }
}

/// Standard-normal targets unrelated to uniform inputs in `[-1, 1]^arity`.
pub fn noise_fixture(n: usize, arity: usize, seed: u64) -> Samples {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut out = Samples::default();
    for _ in 0..n {
        out.inputs
            .push((0..arity).map(|_| rng.random_range(-1.0..=1.0)).collect());
        out.targets.push(normal.sample(&mut rng));
    }
    out
}
