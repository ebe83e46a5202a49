//! Per-iteration evaluation metrics.
//!
//! Supervised: accuracy and macro F-score against the held-out test labels.
//! Unsupervised: agreement between the inductive model and a 1-NN on the
//! labeled pool, contradictions between consecutive models, hard/top
//! exploration (1-NN churn and nearest-distance progress), and conformance
//! violations of the labeled pool against the test distribution.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{covariance, symmetric_eigen, Matrix};

/// Canonical metric names, in reporting order. These exact strings appear in
/// result files and CLI output.
pub const METRIC_NAMES: [&str; 7] = [
    "Accuracy",
    "F-Score",
    "Agreement",
    "Contradictions",
    "Hard-Exploration",
    "Top-Exploration",
    "Violation",
];

/// All metric values for one (fold, iteration) cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    #[serde(rename = "Accuracy")]
    pub accuracy: f64,
    #[serde(rename = "F-Score")]
    pub f_score: f64,
    #[serde(rename = "Agreement")]
    pub agreement: f64,
    #[serde(rename = "Contradictions")]
    pub contradictions: f64,
    #[serde(rename = "Hard-Exploration")]
    pub hard_exploration: f64,
    #[serde(rename = "Top-Exploration")]
    pub top_exploration: f64,
    #[serde(rename = "Violation")]
    pub violations: f64,
}

impl MetricRecord {
    pub fn get(&self, name: &str) -> Result<f64> {
        Ok(match name {
            "Accuracy" => self.accuracy,
            "F-Score" => self.f_score,
            "Agreement" => self.agreement,
            "Contradictions" => self.contradictions,
            "Hard-Exploration" => self.hard_exploration,
            "Top-Exploration" => self.top_exploration,
            "Violation" => self.violations,
            other => {
                return Err(Error::UnknownMetric {
                    name: other.into(),
                    known: METRIC_NAMES.iter().map(|s| s.to_string()).collect(),
                })
            }
        })
    }
}

/// Everything measured about one iteration of one fold, as inputs to the
/// metric suite.
#[derive(Clone, Debug)]
pub struct IterationSnapshot {
    pub iteration: usize,
    /// Inductive-model predictions on the test rows.
    pub model_pred: Vec<u32>,
    /// 1-NN (labeled pool) predictions on the test rows.
    pub knn_pred: Vec<u32>,
    /// Distance from each test row to its nearest labeled row.
    pub nearest_dist: Vec<f64>,
    /// Encoded labeled-pool rows, in pool order.
    pub labeled_rows: Matrix,
    /// Encoded test rows (shared across iterations of a fold).
    pub test_rows: Arc<Matrix>,
}

fn check_nonempty_equal(a: usize, b: usize, what: &str) -> Result<()> {
    if a == 0 || b == 0 {
        return Err(Error::Metric(format!("{what}: empty input")));
    }
    if a != b {
        return Err(Error::Metric(format!("{what}: lengths {a} and {b} differ")));
    }
    Ok(())
}

/// Fraction of equal entries.
pub fn accuracy(pred: &[u32], truth: &[u32]) -> Result<f64> {
    check_nonempty_equal(pred.len(), truth.len(), "accuracy")?;
    let hits = pred.iter().zip(truth).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Macro-averaged F1 over the classes present in `truth`.
pub fn f_score(pred: &[u32], truth: &[u32]) -> Result<f64> {
    check_nonempty_equal(pred.len(), truth.len(), "f_score")?;
    let mut classes: Vec<u32> = truth.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let mut total = 0.0;
    for &c in &classes {
        let mut tp = 0usize;
        let mut fp = 0usize;
        let mut fn_ = 0usize;
        for (&p, &t) in pred.iter().zip(truth) {
            match (p == c, t == c) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => {}
            }
        }
        let denom = 2 * tp + fp + fn_;
        if denom > 0 {
            total += 2.0 * tp as f64 / denom as f64;
        }
    }
    Ok(total / classes.len() as f64)
}

/// Fraction of test samples where two classifiers emit the same label.
pub fn agreement(model_pred: &[u32], knn_pred: &[u32]) -> Result<f64> {
    check_nonempty_equal(model_pred.len(), knn_pred.len(), "agreement")?;
    let same = model_pred
        .iter()
        .zip(knn_pred)
        .filter(|(a, b)| a == b)
        .count();
    Ok(same as f64 / model_pred.len() as f64)
}

/// Fraction of test samples whose prediction changed between iterations.
pub fn contradictions(pred_prev: &[u32], pred_curr: &[u32]) -> Result<f64> {
    check_nonempty_equal(pred_prev.len(), pred_curr.len(), "contradictions")?;
    let flips = pred_prev
        .iter()
        .zip(pred_curr)
        .filter(|(a, b)| a != b)
        .count();
    Ok(flips as f64 / pred_prev.len() as f64)
}

/// Contradictions of the 1-NN predictions between iterations.
pub fn hard_exploration(knn_prev: &[u32], knn_curr: &[u32]) -> Result<f64> {
    check_nonempty_equal(knn_prev.len(), knn_curr.len(), "hard_exploration")?;
    contradictions(knn_prev, knn_curr)
}

/// Mean decrease of nearest-labeled distances from one iteration to the
/// next. The pool only grows, so every difference must be non-negative; a
/// negative one means the caller's pool shrank and is an error.
pub fn top_exploration(dist_prev: &[f64], dist_curr: &[f64]) -> Result<f64> {
    check_nonempty_equal(dist_prev.len(), dist_curr.len(), "top_exploration")?;
    let mut total = 0.0;
    for (i, (&p, &c)) in dist_prev.iter().zip(dist_curr).enumerate() {
        if c > p {
            return Err(Error::Metric(format!(
                "top_exploration: nearest distance of test sample {i} grew from {p} to {c}; \
                 the labeled pool can only grow"
            )));
        }
        total += p - c;
    }
    Ok(total / dist_prev.len() as f64)
}

/// Mean conformance-violation count of the labeled rows against boundaries
/// calibrated on the test rows.
///
/// Boundaries are per-component intervals `mean +/- alpha * std` of the test
/// rows projected onto the eigenvectors of the test covariance (unbiased,
/// all components). Each labeled row counts the components where its
/// projection leaves the interval; the mean count over labeled rows is
/// returned. With fewer than `min_labeled` labeled rows (default `d + 1`)
/// the statistic is meaningless and 0 is returned by convention.
pub fn conformance_violations(
    test_x: &Matrix,
    labeled_x: &Matrix,
    alpha: f64,
    min_labeled: Option<usize>,
) -> Result<f64> {
    if test_x.rows() == 0 {
        return Err(Error::Metric(
            "conformance_violations: empty test set".into(),
        ));
    }
    if labeled_x.rows() > 0 && labeled_x.cols() != test_x.cols() {
        return Err(Error::Dimension {
            expected: test_x.cols(),
            got: labeled_x.cols(),
        });
    }
    if !(alpha > 0.0) {
        return Err(Error::Metric(format!(
            "conformance_violations: alpha must be positive, got {alpha}"
        )));
    }
    let d = test_x.cols();
    let min_labeled = min_labeled.unwrap_or(d + 1);
    if labeled_x.rows() < min_labeled {
        return Ok(0.0);
    }

    let cov = covariance(test_x, 1)?;
    let (_, eigvecs) = symmetric_eigen(&cov)?;
    let mu: Vec<f64> = crate::linalg::mean_rows(test_x);

    // Projected test statistics per component.
    let n = test_x.rows();
    let mut proj_mean = vec![0.0; d];
    let mut proj_m2 = vec![0.0; d];
    let mut projections = vec![0.0; d];
    for i in 0..n {
        let row = test_x.row(i);
        for k in 0..d {
            let mut p = 0.0;
            for j in 0..d {
                p += (row[j] - mu[j]) * eigvecs.get(j, k);
            }
            projections[k] = p;
            proj_mean[k] += p;
        }
        for k in 0..d {
            proj_m2[k] += projections[k] * projections[k];
        }
    }
    let nf = n as f64;
    let mut half_width = vec![0.0; d];
    for k in 0..d {
        proj_mean[k] /= nf;
        let var = if n > 1 {
            (proj_m2[k] - nf * proj_mean[k] * proj_mean[k]).max(0.0) / (nf - 1.0)
        } else {
            0.0
        };
        let std = var.sqrt();
        // A zero-variance component collapses to a point; keep an exact-match
        // tolerance so fp noise on identical values does not count.
        half_width[k] = (alpha * std).max(1e-12);
    }

    let mut total = 0usize;
    for i in 0..labeled_x.rows() {
        let row = labeled_x.row(i);
        for k in 0..d {
            let mut p = 0.0;
            for j in 0..d {
                p += (row[j] - mu[j]) * eigvecs.get(j, k);
            }
            if (p - proj_mean[k]).abs() > half_width[k] {
                total += 1;
            }
        }
    }
    Ok(total as f64 / labeled_x.rows() as f64)
}

/// Assemble the full metric record for one iteration.
///
/// `prev` must be the immediately preceding iteration's snapshot of the same
/// fold (or `None` at iteration 0, where the differential metrics are 0 by
/// convention).
pub fn compute_record(
    prev: Option<&IterationSnapshot>,
    curr: &IterationSnapshot,
    truth: &[u32],
    alpha: f64,
) -> Result<MetricRecord> {
    let n_test = curr.test_rows.rows();
    for (len, what) in [
        (curr.model_pred.len(), "model predictions"),
        (curr.knn_pred.len(), "1-NN predictions"),
        (curr.nearest_dist.len(), "nearest distances"),
        (truth.len(), "truth labels"),
    ] {
        if len != n_test {
            return Err(Error::Metric(format!(
                "snapshot {what} have length {len}, test set has {n_test} rows"
            )));
        }
    }
    if let Some(p) = prev {
        if p.iteration + 1 != curr.iteration {
            return Err(Error::Metric(format!(
                "snapshots are not consecutive: {} then {}",
                p.iteration, curr.iteration
            )));
        }
        if !Arc::ptr_eq(&p.test_rows, &curr.test_rows) && *p.test_rows != *curr.test_rows {
            return Err(Error::Metric(
                "snapshots were taken on different test sets".into(),
            ));
        }
    } else if curr.iteration != 0 {
        return Err(Error::Metric(format!(
            "iteration {} needs the previous snapshot",
            curr.iteration
        )));
    }

    let (contra, hard, top) = match prev {
        None => (0.0, 0.0, 0.0),
        Some(p) => (
            contradictions(&p.model_pred, &curr.model_pred)?,
            hard_exploration(&p.knn_pred, &curr.knn_pred)?,
            top_exploration(&p.nearest_dist, &curr.nearest_dist)?,
        ),
    };

    Ok(MetricRecord {
        accuracy: accuracy(&curr.model_pred, truth)?,
        f_score: f_score(&curr.model_pred, truth)?,
        agreement: agreement(&curr.model_pred, &curr.knn_pred)?,
        contradictions: contra,
        hard_exploration: hard,
        top_exploration: top,
        violations: conformance_violations(&curr.test_rows, &curr.labeled_rows, alpha, None)?,
    })
}
