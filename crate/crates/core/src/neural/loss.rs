use super::{NeuralError, Scalar};

/// Row-wise softmax with max subtraction.
pub fn softmax<T: Scalar>(logits: &[T], classes: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(logits.len());
    for row in logits.chunks(classes) {
        let m = row.iter().copied().fold(T::neg_infinity(), T::max);
        let e: Vec<T> = row.iter().map(|&z| (z - m).exp()).collect();
        let s: T = e.iter().copied().sum();
        out.extend(e.into_iter().map(|v| v / s));
    }
    out
}

pub fn one_hot<T: Scalar>(labels: &[usize], classes: usize) -> Vec<T> {
    let mut out = vec![T::zero(); labels.len() * classes];
    for (r, &l) in labels.iter().enumerate() {
        out[r * classes + l] = T::one();
    }
    out
}

/// Mean cross-entropy over the batch and its gradient `(softmax - y) / B`.
pub fn softmax_cross_entropy<T: Scalar>(logits: &[T], targets: &[T], classes: usize) -> Result<(T, Vec<T>), NeuralError> {
    if classes == 0 || logits.len() != targets.len() || logits.len() % classes != 0 {
        return Err(NeuralError::ShapeMismatch(format!("{} logits, {} targets, {} classes", logits.len(), targets.len(), classes)));
    }
    let batch = logits.len() / classes;
    let mut label = Vec::with_capacity(batch);
    for (r, row) in targets.chunks(classes).enumerate() {
        let ones: Vec<usize> = (0..classes).filter(|&j| row[j] == T::one()).collect();
        if ones.len() != 1 || row.iter().any(|&v| v != T::zero() && v != T::one()) {
            return Err(NeuralError::InvalidOneHot(r));
        }
        label.push(ones[0]);
    }
    let probs = softmax(logits, classes);
    let bt = T::of(batch as f64);
    let mut loss = T::zero();
    for (r, row) in logits.chunks(classes).enumerate() {
        let m = row.iter().copied().fold(T::neg_infinity(), T::max);
        let lse = m + row.iter().map(|&z| (z - m).exp()).sum::<T>().ln();
        loss = loss + (lse - row[label[r]]);
    }
    let grad = probs.iter().zip(targets).map(|(&p, &y)| (p - y) / bt).collect();
    Ok((loss / bt, grad))
}
