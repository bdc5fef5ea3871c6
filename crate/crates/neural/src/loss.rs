use crate::error::NeuralError;

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Softmax restricted to `legal`; entries outside the legal set are exactly 0.
pub fn masked_softmax(logits: &[f64], legal: &[usize]) -> Result<Vec<f64>, NeuralError> {
    if legal.is_empty() {
        return Err(NeuralError::EmptyLegalSet);
    }
    let sub: Vec<f64> = legal.iter().map(|&i| logits[i]).collect();
    let mut out = vec![0.0; logits.len()];
    for (&i, p) in legal.iter().zip(softmax(&sub)) {
        out[i] = p;
    }
    Ok(out)
}

/// Cross-entropy of a softmax over `logits` against class `target`.
/// Returns the loss and dL/d(logits) = softmax - onehot.
pub fn softmax_cross_entropy(logits: &[f64], target: usize) -> (f64, Vec<f64>) {
    let mut probs = softmax(logits);
    let loss = -probs[target].max(f64::MIN_POSITIVE).ln();
    probs[target] -= 1.0;
    (loss, probs)
}

/// Cross-entropy with the softmax taken over `legal` labels only. The
/// gradient is zero outside the legal set.
pub fn masked_cross_entropy(
    logits: &[f64],
    legal: &[usize],
    target: usize,
) -> Result<(f64, Vec<f64>), NeuralError> {
    if legal.is_empty() {
        return Err(NeuralError::EmptyLegalSet);
    }
    let pos = legal
        .iter()
        .position(|&l| l == target)
        .ok_or(NeuralError::TargetNotLegal(target))?;
    let sub: Vec<f64> = legal.iter().map(|&i| logits[i]).collect();
    let (loss, sub_grad) = softmax_cross_entropy(&sub, pos);
    let mut grad = vec![0.0; logits.len()];
    for (&i, g) in legal.iter().zip(sub_grad) {
        grad[i] = g;
    }
    Ok((loss, grad))
}

/// Neumaier-compensated sum; wide outputs (2304 per row) otherwise lose
/// the low bits that finite differences depend on.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut c) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Mean squared error over all entries, with its gradient.
pub fn mse(pred: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>), NeuralError> {
    if pred.len() != target.len() {
        return Err(NeuralError::shape(target.len(), pred.len()));
    }
    let n = pred.len().max(1) as f64;
    let loss = compensated_sum(pred.iter().zip(target).map(|(p, t)| (p - t) * (p - t))) / n;
    let grad = pred
        .iter()
        .zip(target)
        .map(|(p, t)| 2.0 * (p - t) / n)
        .collect();
    Ok((loss, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_logits_give_ln_n() {
        let logits = vec![0.3; 100];
        let legal: Vec<usize> = (10..30).collect();
        let (loss, grad) = masked_cross_entropy(&logits, &legal, 12).unwrap();
        assert!((loss - 20f64.ln()).abs() < 1e-12);
        assert!((loss - 2.9957).abs() < 1e-4);
        let legal_sum: f64 = legal.iter().map(|&i| grad[i]).sum();
        assert!(legal_sum.abs() < 1e-12);
        assert!(grad[..10].iter().chain(&grad[30..]).all(|&g| g == 0.0));
    }

    #[test]
    fn single_legal_label_has_zero_loss() {
        let logits = vec![5.0, -1.0, 2.0];
        let (loss, grad) = masked_cross_entropy(&logits, &[1], 1).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grad.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn illegal_target_and_empty_set_are_errors() {
        let logits = vec![0.0; 4];
        assert!(matches!(
            masked_cross_entropy(&logits, &[0, 1], 3),
            Err(NeuralError::TargetNotLegal(3))
        ));
        assert!(matches!(
            masked_cross_entropy(&logits, &[], 0),
            Err(NeuralError::EmptyLegalSet)
        ));
    }

    #[test]
    fn masked_softmax_support() {
        let logits = vec![1.0, 2.0, 3.0, 4.0];
        let p = masked_softmax(&logits, &[1, 3]).unwrap();
        assert_eq!(p[0], 0.0);
        assert_eq!(p[2], 0.0);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mse_and_gradient() {
        let (l, g) = mse(&[1.0, 3.0], &[0.0, 1.0]).unwrap();
        assert_eq!(l, 2.5);
        assert_eq!(g, vec![1.0, 2.0]);
        assert!(mse(&[1.0], &[1.0, 2.0]).is_err());
    }
}
