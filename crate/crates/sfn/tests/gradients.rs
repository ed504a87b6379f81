mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sfn::check::{random_model, relative_error, RandomTreeSpec};
use sfn::grad::{backward, forward_trace};
use sfn::{batch_gradient, finite_diff_gradient, FunctionKind, LinkWeights, Parent, SfnError, SfnModel};

fn draw_case(rng: &mut ChaCha8Rng) -> (SfnModel, Vec<Vec<f64>>, Vec<f64>) {
    let spec = RandomTreeSpec {
        arity: rng.random_range(1..=4),
        max_depth: rng.random_range(1..=3),
        max_links: 8,
        weight_range: 2.0,
    };
    let model = random_model(rng, &spec).unwrap();
    let m = rng.random_range(1..=16usize);
    let inputs = (0..m)
        .map(|_| (0..spec.arity).map(|_| rng.random_range(-2.0..=2.0)).collect())
        .collect();
    let targets = (0..m).map(|_| rng.random_range(-2.0..=2.0)).collect();
    (model, inputs, targets)
}

#[test]
fn matches_complex_step_on_many_seeds() {
    // The complex step has no subtractive cancellation, so agreement is
    // limited only by the rounding of the two evaluations.
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..100 {
            let (model, inputs, targets) = draw_case(&mut rng);
            let Ok((_, g)) = batch_gradient(&model, &inputs, &targets) else {
                continue;
            };
            let oracle = common::complex_step_gradient(&model, &inputs, &targets);
            if oracle.iter().any(|v| !v.is_finite()) {
                continue;
            }
            for (a, c) in g.iter().zip(&oracle) {
                let scale = g.max_abs().max(1e-300);
                worst = worst.max((a - c).abs() / (a.abs().max(c.abs()) + 1e-12 * scale));
            }
            checked += 1;
        }
    }
    assert!(checked > 900, "only {checked} finite cases");
    assert!(worst < 1e-9, "worst relative error {worst:e}");
}

#[test]
fn hand_differentiated_single_links() {
    // y = w (x^2+1)^v at w = v = 1, x = 1: dy/dw = 2, dy/dv = 2 log 2.
    let mut m = SfnModel::new(1, 1).unwrap();
    m.add_link(Parent::Root, FunctionKind::Power, 0, LinkWeights::power(1.0, 1.0))
        .unwrap();
    let (y, trace) = forward_trace(&m, &[1.0]).unwrap();
    assert_eq!(y, 2.0);
    let g = backward(&m, &trace, 1.0).unwrap();
    assert!((g[0] - 2.0).abs() < 1e-15);
    assert!((g[1] - 2.0 * 2f64.ln()).abs() < 1e-15);

    // y = q e^(a x): dy/dq = e^(a x), dy/da = q x e^(a x).
    let mut m = SfnModel::new(1, 1).unwrap();
    m.add_link(
        Parent::Root,
        FunctionKind::Exponential,
        0,
        LinkWeights::exponential(1.5, -0.4),
    )
    .unwrap();
    let (_, trace) = forward_trace(&m, &[0.7]).unwrap();
    let g = backward(&m, &trace, 1.0).unwrap();
    let e = (-0.4f64 * 0.7).exp();
    assert!((g[0] - e).abs() < 1e-15);
    assert!((g[1] - 1.5 * 0.7 * e).abs() < 1e-15);
}

#[test]
fn gradients_of_one_root_ignore_other_roots() {
    // dy/dw for weights inside one root's subtree depends only on that subtree.
    let mut a = SfnModel::new(2, 2).unwrap();
    let r = a
        .add_link(
            Parent::Root,
            FunctionKind::Logarithm,
            0,
            LinkWeights::logarithm(0.9),
        )
        .unwrap();
    a.add_link(
        Parent::Link(r),
        FunctionKind::Power,
        1,
        LinkWeights::power(0.4, 1.3),
    )
    .unwrap();
    let mut b = a.clone();
    a.add_link(
        Parent::Root,
        FunctionKind::Exponential,
        1,
        LinkWeights::exponential(0.2, 0.5),
    )
    .unwrap();
    b.add_link(
        Parent::Root,
        FunctionKind::Exponential,
        1,
        LinkWeights::exponential(-1.7, 1.9),
    )
    .unwrap();
    let x = [0.3, -1.2];
    let ga = backward(&a, &forward_trace(&a, &x).unwrap().1, 1.0).unwrap();
    let gb = backward(&b, &forward_trace(&b, &x).unwrap().1, 1.0).unwrap();
    assert_eq!(&ga[..3], &gb[..3]);
    assert_ne!(&ga[3..], &gb[3..]);
}

#[test]
fn trace_from_another_model_is_rejected() {
    let mut a = SfnModel::new(1, 1).unwrap();
    a.add_link(
        Parent::Root,
        FunctionKind::Logarithm,
        0,
        LinkWeights::logarithm(1.0),
    )
    .unwrap();
    let mut b = a.clone();
    b.add_link(
        Parent::Root,
        FunctionKind::Logarithm,
        0,
        LinkWeights::logarithm(1.0),
    )
    .unwrap();
    let (_, trace) = forward_trace(&a, &[0.5]).unwrap();
    assert!(matches!(
        backward(&b, &trace, 1.0),
        Err(SfnError::TraceMismatch(_))
    ));
}

#[test]
fn overflow_is_reported() {
    let mut m = SfnModel::new(1, 1).unwrap();
    m.add_link(
        Parent::Root,
        FunctionKind::Exponential,
        0,
        LinkWeights::exponential(1.0, 400.0),
    )
    .unwrap();
    assert!(matches!(
        batch_gradient(&m, &[vec![2.0]], &[0.0]),
        Err(SfnError::NonFiniteResult { .. })
    ));
    assert!(matches!(
        finite_diff_gradient(&m, &[vec![0.1]], &[0.0], 0.0),
        Err(SfnError::InvalidStep(_))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn batch_gradient_is_sum_of_example_gradients(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (model, inputs, targets) = draw_case(&mut rng);
        let Ok((j, g)) = batch_gradient(&model, &inputs, &targets) else { return Ok(()) };
        let mut sum_j = 0.0;
        let mut sum_g = vec![0.0; g.len()];
        for (x, d) in inputs.iter().zip(&targets) {
            let (jm, gm) = batch_gradient(&model, std::slice::from_ref(x), &[*d]).unwrap();
            sum_j += jm;
            for (s, v) in sum_g.iter_mut().zip(gm.iter()) {
                *s += v;
            }
        }
        prop_assert!(relative_error(j, sum_j) < 1e-12);
        for (a, b) in g.iter().zip(&sum_g) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + g.max_abs()));
        }
    }

    #[test]
    fn residual_scale_is_linear(seed in any::<u64>(), k in -3.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (model, inputs, _) = draw_case(&mut rng);
        let Ok((_, trace)) = forward_trace(&model, &inputs[0]) else { return Ok(()) };
        let g1 = backward(&model, &trace, 1.0).unwrap();
        let gk = backward(&model, &trace, k).unwrap();
        for (a, b) in g1.iter().zip(gk.iter()) {
            prop_assert!((a * k - b).abs() <= 1e-12 * (1.0 + a.abs() * k.abs()));
        }
    }
}
