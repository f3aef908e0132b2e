use super::DenseMatrix;
use crate::error::{Error, Result};

/// Row-wise softmax, stabilized by subtracting the row maximum.
pub fn softmax(logits: &DenseMatrix) -> DenseMatrix {
    let mut out = logits.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    out
}

/// Mean softmax cross-entropy over the batch and its gradient with respect
/// to the logits.
pub fn softmax_xent(logits: &DenseMatrix, labels: &[usize]) -> Result<(f64, DenseMatrix)> {
    if logits.rows() != labels.len() {
        return Err(Error::dim("softmax_xent labels", logits.rows(), labels.len()));
    }
    if labels.is_empty() {
        return Err(Error::Validation("softmax_xent on an empty batch".into()));
    }
    let classes = logits.cols();
    if let Some((i, &l)) = labels.iter().enumerate().find(|(_, &l)| l >= classes) {
        return Err(Error::Validation(format!(
            "label {l} at row {i} out of range for {classes} classes"
        )));
    }
    let n = labels.len() as f64;
    let mut grad = softmax(logits);
    let mut loss = 0.0;
    for (r, &label) in labels.iter().enumerate() {
        let row = logits.row(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        // log-sum-exp never drops below the label logit; clamp rounding
        loss += (lse - row[label]).max(0.0);
        let g = grad.row_mut(r);
        g[label] -= 1.0;
        for v in g.iter_mut() {
            *v /= n;
        }
    }
    Ok((loss / n, grad))
}
