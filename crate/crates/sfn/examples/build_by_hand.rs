//! Assemble a small tree by hand, evaluate it, differentiate it and print it.

use sfn::grad::{backward, forward_trace};
use sfn::{FunctionKind, LinkWeights, Parent, SfnModel};

fn main() -> sfn::Result<()> {
    // 0.8*log((x0 + 0.5*exp(0.3*x1))^2 + 1) + 1.2*(x1^2+1)^0.5
    let mut model = SfnModel::new(2, 2)?;
    let log = model.add_link(
        Parent::Root,
        FunctionKind::Logarithm,
        0,
        LinkWeights::logarithm(0.8),
    )?;
    model.add_link(
        Parent::Link(log),
        FunctionKind::Exponential,
        1,
        LinkWeights::exponential(0.5, 0.3),
    )?;
    model.add_link(Parent::Root, FunctionKind::Power, 1, LinkWeights::power(1.2, 0.5))?;

    println!("model:   {model}");
    println!(
        "links:   {}, weights: {}, depth: {}",
        model.link_count(),
        model.count_weights(),
        model.depth()
    );

    let x = [0.7, -1.1];
    let (y, trace) = forward_trace(&model, &x)?;
    println!("y({x:?}) = {y}");
    // residual_scale 1 gives dy/dw rather than the gradient of an error.
    let dy = backward(&model, &trace, 1.0)?;
    for (w, g) in model.flatten_weights().iter().zip(dy.iter()) {
        println!("  w = {w:>6}  dy/dw = {g:.6}");
    }

    let text = model.to_text();
    println!("\n{text}");
    let back = SfnModel::from_text(&text)?;
    assert_eq!(back.eval(&x)?, y);
    println!("fingerprint {}", model.fingerprint());
    Ok(())
}
