//! Numerical gradient checking by central finite differences.
//!
//! The checker perturbs every trainable parameter of a model clone and
//! re-evaluates the loss, so it is independent of the analytic backward
//! path it is used to verify.

use crate::encoder::CoaneModel;
use crate::objective::ModelGradients;

fn tensor_views(model: &mut CoaneModel) -> [&mut Vec<f64>; 7] {
    [
        &mut model.bank.weights,
        &mut model.decoder.w1,
        &mut model.decoder.b1,
        &mut model.decoder.w2,
        &mut model.decoder.b2,
        &mut model.decoder.w3,
        &mut model.decoder.b3,
    ]
}

/// Central-difference gradient of `f` with respect to every parameter:
/// (f(p + h) - f(p - h)) / (2h), one parameter at a time.
pub fn central_diff_gradients(
    model: &CoaneModel,
    f: &dyn Fn(&CoaneModel) -> f64,
    h: f64,
) -> ModelGradients {
    let mut out = ModelGradients::zeros_like(model);
    for t in 0..7 {
        let len = {
            let mut scratch = model.clone();
            tensor_views(&mut scratch)[t].len()
        };
        for i in 0..len {
            let mut plus = model.clone();
            tensor_views(&mut plus)[t][i] += h;
            let mut minus = model.clone();
            tensor_views(&mut minus)[t][i] -= h;
            let g = (f(&plus) - f(&minus)) / (2.0 * h);
            out.tensors_mut()[t][i] = g;
        }
    }
    out
}

/// Largest relative disagreement between two gradient sets. The denominator
/// is floored so that pairs that are both numerically zero do not blow up.
pub fn max_relative_error(a: &ModelGradients, b: &ModelGradients) -> f64 {
    let mut worst: f64 = 0.0;
    for (ta, tb) in a.tensors().into_iter().zip(b.tensors()) {
        for (&x, &y) in ta.iter().zip(tb) {
            let denom = x.abs().max(y.abs()).max(1e-7);
            worst = worst.max((x - y).abs() / denom);
        }
    }
    worst
}
