//! Uncertainty scores and the samplers built directly on them.
//!
//! All three scores are oriented so that higher means more uncertain:
//! confidence is `1 - max_k p_k`, margin is `1 - (p_(1) - p_(2))` (top two
//! probabilities), and entropy is `-sum_k p_k ln p_k` with `0 ln 0 = 0`.

use rand::seq::index::sample;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::rng_from;
use crate::samplers::{QueryContext, UncertaintyKind};

/// Check that every row is a probability vector: non-negative entries
/// summing to 1 within 1e-6.
pub fn validate_probabilities(probs: &Matrix) -> Result<()> {
    for i in 0..probs.rows() {
        let row = probs.row(i);
        let mut sum = 0.0;
        for &p in row {
            if !(p >= 0.0) {
                return Err(Error::Sampler(format!(
                    "probability row {i} has a negative or NaN entry: {p}"
                )));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > 1e-6 {
            return Err(Error::Sampler(format!(
                "probability row {i} sums to {sum}, not 1"
            )));
        }
    }
    Ok(())
}

fn confidence_score(row: &[f64]) -> f64 {
    1.0 - row.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

fn margin_score(row: &[f64]) -> f64 {
    let mut top1 = f64::NEG_INFINITY;
    let mut top2 = f64::NEG_INFINITY;
    for &p in row {
        if p > top1 {
            top2 = top1;
            top1 = p;
        } else if p > top2 {
            top2 = p;
        }
    }
    if top2 == f64::NEG_INFINITY {
        top2 = 0.0; // single-class model: no runner-up
    }
    1.0 - (top1 - top2)
}

fn entropy_score(row: &[f64]) -> f64 {
    -row.iter()
        .map(|&p| if p > 0.0 { p * p.ln() } else { 0.0 })
        .sum::<f64>()
}

/// Per-row uncertainty scores; higher = more uncertain.
pub fn uncertainty_scores(probs: &Matrix, kind: UncertaintyKind) -> Result<Vec<f64>> {
    validate_probabilities(probs)?;
    let score = match kind {
        UncertaintyKind::Confidence => confidence_score,
        UncertaintyKind::Margin => margin_score,
        UncertaintyKind::Entropy => entropy_score,
    };
    Ok((0..probs.rows()).map(|i| score(probs.row(i))).collect())
}

/// Positions of the `b` highest scores, most uncertain first; ties keep the
/// lowest position.
pub fn rank_top(scores: &[f64], b: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| {
        scores[j]
            .partial_cmp(&scores[i])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    order.truncate(b);
    order
}

/// Select the batch with the highest uncertainty scores.
pub fn select_uncertainty(ctx: &QueryContext, kind: UncertaintyKind) -> Result<Vec<usize>> {
    let scores = uncertainty_scores(ctx.probs, kind)?;
    Ok(rank_top(&scores, ctx.batch)
        .into_iter()
        .map(|p| ctx.unlabeled[p])
        .collect())
}

/// Select the batch uniformly at random without replacement.
pub fn select_random(ctx: &QueryContext, seed: u64) -> Result<Vec<usize>> {
    let mut rng = rng_from(seed, &["random"]);
    Ok(sample(&mut rng, ctx.unlabeled.len(), ctx.batch)
        .iter()
        .map(|p| ctx.unlabeled[p])
        .collect())
}
