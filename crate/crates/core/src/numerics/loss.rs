//! Scalar losses over a network output. Each returns `(loss, d loss / d output)`.

use super::Tensor;

/// Multiclass hinge loss (one score per class, summed over violating classes):
/// `sum_{j != y} max(0, s_j - s_y + margin)`.
pub fn multiclass_hinge(scores: &Tensor, label: usize, margin: f64) -> (f64, Tensor) {
    let s = scores.values();
    let mut grad = vec![0.0; s.len()];
    let mut loss = 0.0;
    for j in 0..s.len() {
        if j == label {
            continue;
        }
        let slack = s[j] - s[label] + margin;
        if slack > 0.0 {
            loss += slack;
            grad[j] += 1.0;
            grad[label] -= 1.0;
        }
    }
    (loss, Tensor::from_vec(grad))
}

/// Negative log-likelihood of `label` under a probability vector (softmax output).
pub fn cross_entropy(probs: &Tensor, label: usize) -> (f64, Tensor) {
    let p = probs.values()[label].max(1e-300);
    let mut grad = vec![0.0; probs.len()];
    grad[label] = -1.0 / p;
    (-p.ln(), Tensor::from_vec(grad))
}

/// `0.5 * sum (y - target)^2`.
pub fn squared_error(output: &Tensor, target: &[f64]) -> (f64, Tensor) {
    let mut grad = Vec::with_capacity(target.len());
    let mut loss = 0.0;
    for (&y, &t) in output.values().iter().zip(target) {
        let d = y - t;
        loss += 0.5 * d * d;
        grad.push(d);
    }
    (loss, Tensor::from_vec(grad))
}
