mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sfn::check::{random_model, RandomTreeSpec};
use sfn::train::init_weights;
use sfn::{FunctionKind, LinkId, LinkWeights, Parent, SfnError, SfnModel};

fn spec(arity: usize, depth: usize) -> RandomTreeSpec {
    RandomTreeSpec {
        arity,
        max_depth: depth,
        max_links: 8,
        weight_range: 2.0,
    }
}

fn inputs(rng: &mut ChaCha8Rng, arity: usize, n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..arity).map(|_| rng.random_range(-2.0..=2.0)).collect())
        .collect()
}

#[test]
fn hand_built_rendering() {
    let mut m = SfnModel::new(2, 2).unwrap();
    assert_eq!(m.render_symbolic(), "0");
    let r = m
        .add_link(
            Parent::Root,
            FunctionKind::Logarithm,
            1,
            LinkWeights::logarithm(0.3),
        )
        .unwrap();
    m.add_link(
        Parent::Link(r),
        FunctionKind::Exponential,
        1,
        LinkWeights::exponential(0.9, 1.1),
    )
    .unwrap();
    m.add_link(
        Parent::Root,
        FunctionKind::Power,
        0,
        LinkWeights::power(-1.25, 0.5),
    )
    .unwrap();
    assert_eq!(
        m.render_symbolic(),
        "0.3*log((x1 + 0.9*exp(1.1*x1))^2+1) + (-1.25)*(x0^2+1)^0.5"
    );
    // Hand evaluation at x = (0.5, -1).
    let z = -1.0 + 0.9 * (-1.1f64).exp();
    let want = 0.3 * (z * z + 1.0).ln() - 1.25 * 1.25f64.sqrt();
    assert!((m.eval(&[0.5, -1.0]).unwrap() - want).abs() < 1e-15);
}

#[test]
fn structural_errors() {
    let mut m = SfnModel::new(2, 2).unwrap();
    let r = m
        .add_link(
            Parent::Root,
            FunctionKind::Logarithm,
            0,
            LinkWeights::logarithm(1.0),
        )
        .unwrap();
    let c = m
        .add_link(
            Parent::Link(r),
            FunctionKind::Logarithm,
            0,
            LinkWeights::logarithm(1.0),
        )
        .unwrap();
    assert!(matches!(
        m.add_link(
            Parent::Link(c),
            FunctionKind::Logarithm,
            0,
            LinkWeights::logarithm(1.0)
        ),
        Err(SfnError::DepthExceeded { .. })
    ));
    assert!(matches!(
        m.add_link(
            Parent::Link(LinkId(99)),
            FunctionKind::Logarithm,
            0,
            LinkWeights::logarithm(1.0)
        ),
        Err(SfnError::InvalidParent(_))
    ));
    assert!(matches!(
        m.add_link(
            Parent::Root,
            FunctionKind::Logarithm,
            2,
            LinkWeights::logarithm(1.0)
        ),
        Err(SfnError::InvalidBaseline { .. })
    ));
    assert!(m
        .add_link(
            Parent::Root,
            FunctionKind::Logarithm,
            0,
            LinkWeights::power(1.0, 1.0)
        )
        .is_err());
    assert!(matches!(m.eval(&[1.0]), Err(SfnError::LengthMismatch { .. })));
    assert!(matches!(m.remove_link(LinkId(42)), Err(SfnError::UnknownLink(_))));

    // Removing a link takes its subtree with it.
    m.remove_link(r).unwrap();
    assert!(m.is_empty());
    assert_eq!(m.eval(&[1.0, 2.0]).unwrap(), 0.0);
}

#[test]
fn text_format_rejects_garbage() {
    assert!(SfnModel::from_text("").is_err());
    assert!(SfnModel::from_text("sfn-model inputs=1 max_depth=1\n0 - E9 0 1\n").is_err());
    let err = SfnModel::from_text("sfn-model inputs=1 max_depth=1\n# note\n0 - E3 0 abc\n").unwrap_err();
    assert!(matches!(err, SfnError::Parse { line: 3, .. }), "{err}");
    let m = SfnModel::from_text("# comment\nsfn-model inputs=1 max_depth=1 next_id=1\n0 - E3 0 2\n").unwrap();
    assert_eq!(m.render_symbolic(), "2*log(x0^2+1)");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn rendered_formula_evaluates_like_the_model(seed in any::<u64>(), arity in 1usize..=4, depth in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = random_model(&mut rng, &spec(arity, depth)).unwrap();
        let text = model.render_symbolic();
        for x in inputs(&mut rng, arity, 10) {
            let Ok(y) = model.eval(&x) else { continue };
            let z = common::eval_expression(&text, &x).map_err(TestCaseError::fail)?;
            prop_assert!((y - z).abs() <= 1e-12 * (1.0 + y.abs()), "{text} at {x:?}: {y} vs {z}");
        }
    }

    #[test]
    fn text_round_trip_is_exact(seed in any::<u64>(), arity in 1usize..=4, depth in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = random_model(&mut rng, &spec(arity, depth)).unwrap();
        let back = SfnModel::from_text(&model.to_text()).unwrap();
        prop_assert_eq!(&back, &model);
        prop_assert_eq!(back.fingerprint(), model.fingerprint());
    }

    #[test]
    fn flatten_then_load_is_identity(seed in any::<u64>(), depth in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = random_model(&mut rng, &spec(3, depth)).unwrap();
        let w = model.flatten_weights();
        prop_assert_eq!(w.len(), model.count_weights());
        let mut other = model.clone();
        let scrambled: Vec<f64> = w.iter().map(|v| v * 0.5 + 0.1).collect();
        other.load_weights(&scrambled).unwrap();
        prop_assert_eq!(other.flatten_weights(), scrambled);
        other.load_weights(&w).unwrap();
        prop_assert_eq!(&other, &model);
        prop_assert!(other.load_weights(&w[1..]).is_err());
    }

    #[test]
    fn silent_link_keeps_outputs(seed in any::<u64>(), depth in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = random_model(&mut rng, &spec(3, depth)).unwrap();
        let links = model.links();
        let parents: Vec<Parent> = std::iter::once(Parent::Root)
            .chain(links.iter().filter(|v| v.depth < depth).map(|v| Parent::Link(v.link.id())))
            .collect();
        let parent = parents[rng.random_range(0..parents.len())];
        let kind = FunctionKind::ALL[rng.random_range(0..3)];
        let mut grown = model.clone();
        let mut w = init_weights(kind, &mut rng);
        w.multiplier = 0.0;
        grown.add_link(parent, kind, rng.random_range(0..3), w).unwrap();
        for x in inputs(&mut rng, 3, 20) {
            let (Ok(a), Ok(b)) = (model.eval(&x), grown.eval(&x)) else { continue };
            prop_assert!((a - b).abs() <= 1e-15 * (1.0 + a.abs()));
        }
    }
}
