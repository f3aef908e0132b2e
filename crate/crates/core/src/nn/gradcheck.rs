//! Central finite-difference gradient checking.

use super::{backward, forward, softmax_xent, DenseMatrix, ParameterSet};
use crate::error::Result;

pub const FD_STEP: f64 = 1e-5;

/// Below this magnitude a gradient entry is compared absolutely. Central
/// differences at `FD_STEP` carry roundoff near `eps * |L| / h`, a few
/// 1e-11 for unit-scale losses, which would swamp a smaller entry.
pub const RELATIVE_FLOOR: f64 = 1e-6;

/// `|a - n| / max(|a|, |n|, RELATIVE_FLOOR)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(RELATIVE_FLOOR)
}

pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| relative_error(a, n))
        .fold(0.0, f64::max)
}

/// Central differences of `objective` with respect to every scalar of
/// `params`, in `ParameterSet::flatten` order.
pub fn numeric_gradient(
    params: &ParameterSet,
    step: f64,
    mut objective: impl FnMut(&ParameterSet) -> Result<f64>,
) -> Result<Vec<f64>> {
    let mut probe = params.clone();
    let mut out = Vec::with_capacity(params.num_params());
    for idx in 0..params.num_params() {
        let orig = *probe.param_mut(idx);
        *probe.param_mut(idx) = orig + step;
        let plus = objective(&probe)?;
        *probe.param_mut(idx) = orig - step;
        let minus = objective(&probe)?;
        *probe.param_mut(idx) = orig;
        out.push((plus - minus) / (2.0 * step));
    }
    Ok(out)
}

/// Compares an analytic gradient routine against central differences of
/// `objective` and returns the largest relative error.
pub fn check_gradient(
    params: &ParameterSet,
    objective: impl FnMut(&ParameterSet) -> Result<f64>,
    analytic: &ParameterSet,
) -> Result<f64> {
    let numeric = numeric_gradient(params, FD_STEP, objective)?;
    Ok(max_relative_error(&analytic.flatten(), &numeric))
}

/// Gradient check of a classifier under mean softmax cross-entropy.
pub fn grad_check(params: &ParameterSet, input: &DenseMatrix, labels: &[usize]) -> Result<f64> {
    let (logits, trace) = forward(params, input)?;
    let (_, logit_grad) = softmax_xent(&logits, labels)?;
    let (grads, _) = backward(params, &trace, &logit_grad)?;
    check_gradient(
        params,
        |p| {
            let (logits, _) = forward(p, input)?;
            Ok(softmax_xent(&logits, labels)?.0)
        },
        &grads,
    )
}
