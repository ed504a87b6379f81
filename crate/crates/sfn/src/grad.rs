//! Exact gradients by tree propagation.
//!
//! One forward pass records every link's argument `z_j`. The backward pass
//! walks down the tree carrying `dy/d(out_j)`: it is 1 at every root because
//! the model output is the plain sum of the roots, and at a child it equals
//! the parent's `dy/dz = dy/d(out) * E'(z)`. Each weight's partial is then the
//! carried factor times the elementary function's derivative w.r.t. that
//! weight.

use std::ops::Deref;

use crate::error::{Result, SfnError};
use crate::tree::{apply, local, FunctionLink, LinkId, SfnModel};

/// Partial derivatives in canonical weight order (see
/// [`SfnModel::flatten_weights`]).
#[derive(Clone, Debug, PartialEq)]
pub struct GradientVector(pub Vec<f64>);

impl GradientVector {
    pub fn zeros(len: usize) -> Self {
        GradientVector(vec![0.0; len])
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, g| m.max(g.abs()))
    }
}

impl Deref for GradientVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceEntry {
    pub id: LinkId,
    /// Argument `z_j`: baseline input plus the children's outputs.
    pub arg: f64,
    pub output: f64,
}

/// Per-link arguments and outputs for one input, in canonical link order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EvalTrace {
    pub entries: Vec<TraceEntry>,
}

impl EvalTrace {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn forward_link(link: &FunctionLink, input: &[f64], entries: &mut Vec<TraceEntry>) -> Result<f64> {
    let slot = entries.len();
    entries.push(TraceEntry {
        id: link.id(),
        arg: 0.0,
        output: 0.0,
    });
    let mut z = input[link.baseline_input()];
    for child in link.children() {
        z += forward_link(child, input, entries)?;
    }
    let out = apply(link.kind(), link.weights(), z).ok_or(SfnError::NonFiniteResult { link: link.id() })?;
    entries[slot].arg = z;
    entries[slot].output = out;
    Ok(out)
}

pub fn forward_trace(model: &SfnModel, input: &[f64]) -> Result<(f64, EvalTrace)> {
    if input.len() != model.input_arity() {
        return Err(SfnError::LengthMismatch {
            expected: model.input_arity(),
            got: input.len(),
        });
    }
    let mut entries = Vec::with_capacity(8);
    let mut y = 0.0;
    for root in model.roots() {
        y += forward_link(root, input, &mut entries)?;
    }
    Ok((y, EvalTrace { entries }))
}

struct Backward<'a> {
    trace: &'a [TraceEntry],
    cursor: usize,
    weight: usize,
    scale: f64,
    acc: &'a mut [f64],
}

impl Backward<'_> {
    fn visit(&mut self, link: &FunctionLink, d_out: f64) -> Result<()> {
        let entry = self
            .trace
            .get(self.cursor)
            .filter(|e| e.id == link.id())
            .ok_or_else(|| SfnError::TraceMismatch(format!("no entry for link {}", link.id())))?;
        self.cursor += 1;
        let loc = local(link.kind(), link.weights(), entry.arg)
            .ok_or(SfnError::NonFiniteResult { link: link.id() })?;
        self.acc[self.weight] += self.scale * d_out * loc.d_multiplier;
        self.weight += 1;
        if link.kind().has_shape() {
            self.acc[self.weight] += self.scale * d_out * loc.d_shape;
            self.weight += 1;
        }
        let d_arg = d_out * loc.d_arg;
        for child in link.children() {
            self.visit(child, d_arg)?;
        }
        Ok(())
    }
}

fn accumulate(model: &SfnModel, trace: &EvalTrace, scale: f64, acc: &mut [f64]) -> Result<()> {
    let mut pass = Backward {
        trace: &trace.entries,
        cursor: 0,
        weight: 0,
        scale,
        acc,
    };
    for root in model.roots() {
        pass.visit(root, 1.0)?;
    }
    if pass.cursor != trace.entries.len() {
        return Err(SfnError::TraceMismatch(format!(
            "trace has {} entries, model has {} links",
            trace.entries.len(),
            pass.cursor
        )));
    }
    Ok(())
}

/// `residual_scale * dy/dw` for every weight, from a trace of the same model.
pub fn backward(model: &SfnModel, trace: &EvalTrace, residual_scale: f64) -> Result<GradientVector> {
    let mut g = GradientVector::zeros(model.count_weights());
    accumulate(model, trace, residual_scale, &mut g.0)?;
    if let Some(pos) = g.iter().position(|v| !v.is_finite()) {
        return Err(non_finite_at(model, pos));
    }
    Ok(g)
}

fn non_finite_at(model: &SfnModel, weight_index: usize) -> SfnError {
    let mut offset = 0;
    for view in model.links() {
        offset += view.link.kind().weight_count();
        if weight_index < offset {
            return SfnError::NonFiniteResult { link: view.link.id() };
        }
    }
    unreachable!("weight index within count")
}

fn check_batch(inputs: &[Vec<f64>], targets: &[f64]) -> Result<()> {
    if inputs.is_empty() {
        return Err(SfnError::EmptyData);
    }
    if inputs.len() != targets.len() {
        return Err(SfnError::LengthMismatch {
            expected: inputs.len(),
            got: targets.len(),
        });
    }
    Ok(())
}

/// `J = sum (y - d)^2` over the batch.
pub fn sum_squared_error(model: &SfnModel, inputs: &[Vec<f64>], targets: &[f64]) -> Result<f64> {
    check_batch(inputs, targets)?;
    let mut j = 0.0;
    for (x, d) in inputs.iter().zip(targets) {
        let e = model.eval(x)? - d;
        j += e * e;
    }
    Ok(j)
}

/// Returns `J` and `dJ/dw = 2 sum e(m) dy(m)/dw`, accumulated in example order.
pub fn batch_gradient(
    model: &SfnModel,
    inputs: &[Vec<f64>],
    targets: &[f64],
) -> Result<(f64, GradientVector)> {
    check_batch(inputs, targets)?;
    let mut j = 0.0;
    let mut g = GradientVector::zeros(model.count_weights());
    for (x, d) in inputs.iter().zip(targets) {
        let (y, trace) = forward_trace(model, x)?;
        let e = y - d;
        j += e * e;
        accumulate(model, &trace, 2.0 * e, &mut g.0)?;
    }
    if !j.is_finite() {
        return Err(SfnError::NonFiniteResult {
            link: model.roots()[0].id(),
        });
    }
    if let Some(pos) = g.iter().position(|v| !v.is_finite()) {
        return Err(non_finite_at(model, pos));
    }
    Ok((j, g))
}

/// Central differences `(J(w + h) - J(w - h)) / 2h`, one weight at a time.
///
/// The difference of the two sums is taken example by example as
/// `(y+ - y-)(e+ + e-)`, which is algebraically the same but avoids the
/// cancellation of subtracting two large totals, and the divisor is the step
/// actually representable around `w`.
pub fn finite_diff_gradient(
    model: &SfnModel,
    inputs: &[Vec<f64>],
    targets: &[f64],
    h: f64,
) -> Result<GradientVector> {
    if !(h.is_finite() && h > 0.0) {
        return Err(SfnError::InvalidStep(h));
    }
    check_batch(inputs, targets)?;
    let base = model.flatten_weights();
    let mut plus = model.clone();
    let mut minus = model.clone();
    let mut out = Vec::with_capacity(base.len());
    for i in 0..base.len() {
        let mut w = base.clone();
        w[i] = base[i] + h;
        let hi = w[i];
        plus.load_weights(&w)?;
        w[i] = base[i] - h;
        let lo = w[i];
        minus.load_weights(&w)?;
        let mut diff = 0.0;
        for (x, d) in inputs.iter().zip(targets) {
            let (yp, ym) = (plus.eval(x)?, minus.eval(x)?);
            diff += (yp - ym) * ((yp - d) + (ym - d));
        }
        out.push(diff / (hi - lo));
    }
    Ok(GradientVector(out))
}
