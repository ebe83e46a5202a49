//! Multinomial logistic regression trained by full-batch gradient descent
//! with backtracking (step halving) on the regularized cross-entropy loss.
//! Weights start at zero, so fitting is fully deterministic.

use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Clone, Debug)]
pub struct LogisticModel {
    /// Class ids in ascending order; probability columns follow this order.
    pub classes: Vec<u32>,
    /// `d x c` weight matrix.
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub epochs_run: usize,
    pub fingerprint: String,
}

/// Regularized cross-entropy loss and its analytic gradient.
///
/// `y_local[i]` is the class column of row `i`. The loss is
/// `-(1/n) sum_i log p(y_i | x_i) + (l2/2) * ||w||^2`; the bias is not
/// regularized. Exposed so the gradient can be verified against finite
/// differences.
pub fn loss_and_gradient(
    x: &Matrix,
    y_local: &[usize],
    class_count: usize,
    weights: &Matrix,
    bias: &[f64],
    l2: f64,
) -> (f64, Matrix, Vec<f64>) {
    let n = x.rows();
    let d = x.cols();
    let c = class_count;
    debug_assert_eq!(weights.rows(), d);
    debug_assert_eq!(weights.cols(), c);
    debug_assert_eq!(bias.len(), c);
    debug_assert_eq!(y_local.len(), n);

    let nf = n as f64;
    let mut loss = 0.0;
    let mut grad_w = Matrix::zeros(d, c);
    let mut grad_b = vec![0.0; c];
    let mut logits = vec![0.0; c];
    let mut probs = vec![0.0; c];

    for i in 0..n {
        let row = x.row(i);
        for k in 0..c {
            let mut z = bias[k];
            for j in 0..d {
                z += row[j] * weights.get(j, k);
            }
            logits[k] = z;
        }
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for k in 0..c {
            probs[k] = (logits[k] - max).exp();
            sum += probs[k];
        }
        let log_norm = max + sum.ln();
        loss -= (logits[y_local[i]] - log_norm) / nf;
        for k in 0..c {
            probs[k] /= sum;
            let resid = probs[k] - if k == y_local[i] { 1.0 } else { 0.0 };
            grad_b[k] += resid / nf;
            for j in 0..d {
                let g = grad_w.get(j, k) + row[j] * resid / nf;
                grad_w.set(j, k, g);
            }
        }
    }

    let mut penalty = 0.0;
    for j in 0..d {
        for k in 0..c {
            let w = weights.get(j, k);
            penalty += w * w;
            grad_w.set(j, k, grad_w.get(j, k) + l2 * w);
        }
    }
    loss += 0.5 * l2 * penalty;
    (loss, grad_w, grad_b)
}

pub fn fit_logistic(
    x: &Matrix,
    y: &[u32],
    l2: f64,
    learning_rate: f64,
    max_epochs: usize,
    tolerance: f64,
) -> Result<LogisticModel> {
    if x.rows() == 0 || x.rows() != y.len() {
        return Err(Error::Fit(format!(
            "logistic fit needs matching non-empty rows and labels, got {} rows, {} labels",
            x.rows(),
            y.len()
        )));
    }
    if !(l2 >= 0.0) || !(learning_rate > 0.0) || max_epochs == 0 || !(tolerance >= 0.0) {
        return Err(Error::Fit(
            "logistic hyperparameters must be non-negative with a positive learning rate".into(),
        ));
    }

    let mut classes: Vec<u32> = y.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let c = classes.len();
    let y_local: Vec<usize> = y
        .iter()
        .map(|v| classes.binary_search(v).expect("label in class set"))
        .collect();

    let d = x.cols();
    let mut weights = Matrix::zeros(d, c);
    let mut bias = vec![0.0; c];
    let mut lr = learning_rate;
    let mut epochs_run = 0;

    let (mut loss, mut grad_w, mut grad_b) =
        loss_and_gradient(x, &y_local, c, &weights, &bias, l2);

    'epochs: for _ in 0..max_epochs {
        let grad_norm = (grad_w.data().iter().map(|g| g * g).sum::<f64>()
            + grad_b.iter().map(|g| g * g).sum::<f64>())
        .sqrt();
        if grad_norm <= tolerance {
            break;
        }
        loop {
            let mut w_next = weights.clone();
            for j in 0..d {
                for k in 0..c {
                    w_next.set(j, k, weights.get(j, k) - lr * grad_w.get(j, k));
                }
            }
            let b_next: Vec<f64> = bias
                .iter()
                .zip(grad_b.iter())
                .map(|(b, g)| b - lr * g)
                .collect();
            let (next_loss, next_gw, next_gb) =
                loss_and_gradient(x, &y_local, c, &w_next, &b_next, l2);
            if next_loss <= loss + 1e-12 {
                weights = w_next;
                bias = b_next;
                loss = next_loss;
                grad_w = next_gw;
                grad_b = next_gb;
                lr = (lr * 2.0).min(learning_rate);
                break;
            }
            lr /= 2.0;
            if lr < 1e-12 {
                break 'epochs; // step size exhausted; accept current weights
            }
        }
        epochs_run += 1;
    }

    let fingerprint = super::training_fingerprint(x, y);
    Ok(LogisticModel {
        classes,
        weights,
        bias,
        epochs_run,
        fingerprint,
    })
}

impl LogisticModel {
    pub fn input_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn predict_proba(&self, x: &Matrix) -> Result<Matrix> {
        let d = self.weights.rows();
        if x.cols() != d {
            return Err(Error::Dimension {
                expected: d,
                got: x.cols(),
            });
        }
        let c = self.classes.len();
        let mut out = Matrix::zeros(x.rows(), c);
        for i in 0..x.rows() {
            let row = x.row(i);
            let probs = out.row_mut(i);
            for k in 0..c {
                let mut z = self.bias[k];
                for j in 0..d {
                    z += row[j] * self.weights.get(j, k);
                }
                probs[k] = z;
            }
            let max = probs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for p in probs.iter_mut() {
                *p = (*p - max).exp();
                sum += *p;
            }
            for p in probs.iter_mut() {
                *p /= sum;
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn separable_data() -> (Matrix, Vec<u32>) {
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..20 {
            let t = i as f64 / 10.0;
            rows.push(vec![t, 1.0 + t]);
            y.push(0);
            rows.push(vec![t + 4.0, -1.0 - t]);
            y.push(1);
        }
        (Matrix::from_rows(rows).unwrap(), y)
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let x = Matrix::from_rows(vec![
            vec![0.5, -1.2, 0.3],
            vec![1.5, 0.2, -0.7],
            vec![-0.5, 0.9, 1.1],
            vec![0.1, 0.4, -0.2],
        ])
        .unwrap();
        let y_local = vec![0, 1, 2, 1];
        let c = 3;
        let mut w = Matrix::zeros(3, c);
        for (idx, v) in [0.1, -0.2, 0.3, 0.0, 0.25, -0.15, 0.05, 0.4, -0.3]
            .iter()
            .enumerate()
        {
            w.set(idx / c, idx % c, *v);
        }
        let b = vec![0.1, -0.1, 0.05];
        let l2 = 0.01;
        let (_, gw, gb) = loss_and_gradient(&x, &y_local, c, &w, &b, l2);
        let eps = 1e-6;
        for j in 0..3 {
            for k in 0..c {
                let mut wp = w.clone();
                wp.set(j, k, w.get(j, k) + eps);
                let mut wm = w.clone();
                wm.set(j, k, w.get(j, k) - eps);
                let (lp, _, _) = loss_and_gradient(&x, &y_local, c, &wp, &b, l2);
                let (lm, _, _) = loss_and_gradient(&x, &y_local, c, &wm, &b, l2);
                let numeric = (lp - lm) / (2.0 * eps);
                let analytic = gw.get(j, k);
                assert!(
                    (numeric - analytic).abs() / numeric.abs().max(1.0) < 1e-6,
                    "w[{j}][{k}]: {numeric} vs {analytic}"
                );
            }
        }
        for k in 0..c {
            let mut bp = b.clone();
            bp[k] += eps;
            let mut bm = b.clone();
            bm[k] -= eps;
            let (lp, _, _) = loss_and_gradient(&x, &y_local, c, &w, &bp, l2);
            let (lm, _, _) = loss_and_gradient(&x, &y_local, c, &w, &bm, l2);
            let numeric = (lp - lm) / (2.0 * eps);
            assert!((numeric - gb[k]).abs() < 1e-6);
        }
    }

    #[test]
    fn learns_separable_data() {
        let (x, y) = separable_data();
        let model = fit_logistic(&x, &y, 1e-4, 1.0, 500, 1e-8).unwrap();
        let probs = model.predict_proba(&x).unwrap();
        for (i, &label) in y.iter().enumerate() {
            let p = probs.row(i);
            let pred = if p[0] >= p[1] { 0 } else { 1 };
            assert_eq!(pred, label as usize, "row {i}");
        }
    }

    #[test]
    fn probabilities_are_normalized() {
        let (x, y) = separable_data();
        let model = fit_logistic(&x, &y, 1e-3, 1.0, 50, 1e-8).unwrap();
        let probs = model.predict_proba(&x).unwrap();
        for i in 0..probs.rows() {
            let sum: f64 = probs.row(i).iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            assert!(probs.row(i).iter().all(|p| *p >= 0.0));
        }
    }

    #[test]
    fn fitting_is_deterministic() {
        let (x, y) = separable_data();
        let a = fit_logistic(&x, &y, 1e-4, 1.0, 100, 1e-8).unwrap();
        let b = fit_logistic(&x, &y, 1e-4, 1.0, 100, 1e-8).unwrap();
        assert_eq!(a.weights, b.weights);
        assert_eq!(a.bias, b.bias);
    }

    #[test]
    fn single_class_predicts_certainty() {
        let x = Matrix::from_rows(vec![vec![1.0], vec![2.0]]).unwrap();
        let model = fit_logistic(&x, &[3, 3], 0.0, 1.0, 10, 1e-8).unwrap();
        let probs = model.predict_proba(&x).unwrap();
        assert_eq!(probs.get(0, 0), 1.0);
        assert_eq!(model.classes, vec![3]);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let (x, y) = separable_data();
        let model = fit_logistic(&x, &y, 1e-4, 1.0, 10, 1e-8).unwrap();
        let bad = Matrix::from_rows(vec![vec![1.0, 2.0, 3.0]]).unwrap();
        assert!(model.predict_proba(&bad).is_err());
    }
}
