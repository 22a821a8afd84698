use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

#[derive(Clone, Debug)]
pub struct SoftmaxLoss<T: Scalar> {
    pub probabilities: Tensor<T>,
    pub loss: f64,
    pub grad_logits: Tensor<T>,
}

/// Numerically stable softmax, computed in `f64`.
pub fn softmax_f64<T: Scalar>(logits: &Tensor<T>) -> Vec<f64> {
    let max = logits
        .data()
        .iter()
        .map(|v| v.as_f64())
        .fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.data().iter().map(|v| (v.as_f64() - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

pub fn softmax<T: Scalar>(logits: &Tensor<T>) -> Tensor<T> {
    let p = softmax_f64(logits);
    Tensor::from_vec(p.into_iter().map(T::from_f64_lossy).collect())
}

/// Softmax probabilities, cross-entropy `-ln p[label]`, and `p - onehot(label)`.
pub fn softmax_crossentropy<T: Scalar>(logits: &Tensor<T>, label: usize) -> Result<SoftmaxLoss<T>> {
    let k = logits.len();
    if k < 2 {
        return Err(Error::input(format!("softmax needs at least 2 classes, got {k}")));
    }
    if label >= k {
        return Err(Error::input(format!("label {label} out of range for {k} classes")));
    }
    let max = logits
        .data()
        .iter()
        .map(|v| v.as_f64())
        .fold(f64::NEG_INFINITY, f64::max);
    let shifted: Vec<f64> = logits.data().iter().map(|v| v.as_f64() - max).collect();
    let log_total = shifted.iter().map(|s| s.exp()).sum::<f64>().ln();
    let probs: Vec<f64> = shifted.iter().map(|s| (s - log_total).exp()).collect();
    let loss = log_total - shifted[label];
    let grad = probs
        .iter()
        .enumerate()
        .map(|(i, &p)| T::from_f64_lossy(if i == label { p - 1.0 } else { p }))
        .collect();
    Ok(SoftmaxLoss {
        probabilities: Tensor::from_vec(probs.into_iter().map(T::from_f64_lossy).collect()),
        loss,
        grad_logits: Tensor::from_vec(grad),
    })
}
