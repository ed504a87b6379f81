//! Random models and the analytic-vs-numeric gradient suite.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SfnError};
use crate::grad::{batch_gradient, finite_diff_gradient};
use crate::tree::{FunctionKind, LinkWeights, Parent, SfnModel};

/// Shape of the random trees drawn by [`random_model`].
#[derive(Clone, Debug, PartialEq)]
pub struct RandomTreeSpec {
    pub arity: usize,
    pub max_depth: usize,
    pub max_links: usize,
    /// Weights are drawn from `[-weight_range, weight_range]`.
    pub weight_range: f64,
}

pub fn random_model<R: Rng + ?Sized>(rng: &mut R, spec: &RandomTreeSpec) -> Result<SfnModel> {
    let mut model = SfnModel::new(spec.arity, spec.max_depth)?;
    let roots = rng.random_range(1..=3usize);
    let mut open: Vec<(Parent, usize)> = (0..roots).map(|_| (Parent::Root, 1)).collect();
    let mut added = 0;
    while let Some((parent, depth)) = open.pop() {
        if added == spec.max_links {
            break;
        }
        let kind = FunctionKind::ALL[rng.random_range(0..3)];
        let r = spec.weight_range;
        let m = rng.random_range(-r..=r);
        let weights = match kind {
            FunctionKind::Power => LinkWeights::power(m, rng.random_range(-r..=r)),
            FunctionKind::Exponential => LinkWeights::exponential(m, rng.random_range(-r..=r)),
            FunctionKind::Logarithm => LinkWeights::logarithm(m),
        };
        let id = model.add_link(parent, kind, rng.random_range(0..spec.arity), weights)?;
        added += 1;
        if depth < spec.max_depth {
            for _ in 0..rng.random_range(0..=2usize) {
                open.push((Parent::Link(id), depth + 1));
            }
        }
    }
    Ok(model)
}

/// Cases whose outputs exceed this magnitude are redrawn by
/// [`gradient_check_suite`].
pub const MAX_CHECKED_OUTPUT: f64 = 1e6;

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub cases: usize,
    /// Cases redrawn because the random tree overflowed on its batch or
    /// produced outputs above [`MAX_CHECKED_OUTPUT`].
    pub redrawn: usize,
    pub max_rel_error: f64,
    pub worst_case: usize,
}

/// Relative difference with the denominator guarded by `1e-9`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs().max(numeric.abs()) + 1e-9)
}

/// Compares tree-propagated gradients with central differences (`h`) on
/// `cases` random trees (depth up to 3, up to 4 inputs, weights and inputs
/// in `[-2, 2]`, batches of 1..=16 examples).
pub fn gradient_check_suite(cases: usize, seed: u64, h: f64) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = GradCheckReport {
        cases,
        redrawn: 0,
        max_rel_error: 0.0,
        worst_case: 0,
    };
    let mut case = 0;
    while case < cases {
        let spec = RandomTreeSpec {
            arity: rng.random_range(1..=4),
            max_depth: rng.random_range(1..=3),
            max_links: 8,
            weight_range: 2.0,
        };
        let model = random_model(&mut rng, &spec)?;
        let m = rng.random_range(1..=16usize);
        let inputs: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..spec.arity).map(|_| rng.random_range(-2.0..=2.0)).collect())
            .collect();
        let targets: Vec<f64> = (0..m).map(|_| rng.random_range(-2.0..=2.0)).collect();
        // Outputs this large put J so far above the smaller partials that
        // central differences cannot resolve them; treat like overflow.
        if model
            .predict(&inputs)
            .is_ok_and(|ys| ys.iter().any(|y| y.abs() > MAX_CHECKED_OUTPUT))
        {
            report.redrawn += 1;
            continue;
        }
        let pair = batch_gradient(&model, &inputs, &targets)
            .and_then(|(_, g)| Ok((g, finite_diff_gradient(&model, &inputs, &targets, h)?)));
        let (analytic, numeric) = match pair {
            Ok(p) => p,
            Err(SfnError::NonFiniteResult { .. }) => {
                report.redrawn += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        for (a, n) in analytic.iter().zip(numeric.iter()) {
            let err = relative_error(*a, *n);
            if err > report.max_rel_error {
                report.max_rel_error = err;
                report.worst_case = case;
            }
        }
        case += 1;
    }
    Ok(report)
}
