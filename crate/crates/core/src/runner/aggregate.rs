//! Aggregation of result grids into curves with quantile bands, pairwise
//! dominance tables, and final-iteration summaries.

use serde::{Deserialize, Serialize};

use super::ResultSet;
use crate::error::{Error, Result};
use crate::metrics::METRIC_NAMES;
use crate::samplers::SamplerKind;

/// Linear-interpolation percentile between order statistics: the rank of
/// percentile `p` in `k` sorted values is `p/100 * (k - 1)`.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    debug_assert!((0.0..=100.0).contains(&p));
    if sorted.len() == 1 {
        return sorted[0];
    }
    let rank = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// One aggregated point: the fold distribution of `metric` for one sampler
/// at one iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub sampler: SamplerKind,
    pub iteration: usize,
    pub mean: f64,
    pub p10: f64,
    pub p90: f64,
}

fn check_metric(name: &str) -> Result<()> {
    if METRIC_NAMES.contains(&name) {
        Ok(())
    } else {
        Err(Error::UnknownMetric {
            name: name.into(),
            known: METRIC_NAMES.iter().map(|s| s.to_string()).collect(),
        })
    }
}

/// Per sampler and iteration: mean, 10th and 90th percentile of `metric`
/// over folds. Failed cells are excluded with a warning; fewer than 2
/// usable folds is an error.
pub fn aggregate(rs: &ResultSet, metric: &str) -> Result<Vec<CurvePoint>> {
    check_metric(metric)?;
    let mut points = Vec::new();
    for &kind in &rs.samplers {
        let folds = rs.folds_for(kind);
        if folds.len() < rs.config.folds {
            log::warn!(
                "sampler '{kind}': only {} of {} folds completed; aggregating the rest",
                folds.len(),
                rs.config.folds
            );
        }
        if folds.len() < 2 {
            return Err(Error::Config(format!(
                "sampler '{kind}' has {} usable folds; at least 2 required to aggregate",
                folds.len()
            )));
        }
        for t in 0..=rs.config.iterations {
            let mut values: Vec<f64> = Vec::with_capacity(folds.len());
            for &fold in &folds {
                let r = rs
                    .records
                    .iter()
                    .find(|r| r.sampler == kind && r.fold == fold && r.iteration == t)
                    .ok_or_else(|| {
                        Error::Integrity(format!(
                            "sampler '{kind}' fold {fold} is marked ok but iteration {t} is missing"
                        ))
                    })?;
                values.push(r.metrics.get(metric)?);
            }
            values.sort_by(|a, b| a.total_cmp(b));
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            points.push(CurvePoint {
                sampler: kind,
                iteration: t,
                mean,
                p10: percentile(&values, 10.0),
                p90: percentile(&values, 90.0),
            });
        }
    }
    Ok(points)
}

/// One row of a pairwise dominance table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub iteration: usize,
    pub mean_a: f64,
    pub mean_b: f64,
    /// `mean_a - mean_b`; the sign is the dominance direction.
    pub mean_diff: f64,
    /// Folds where `a` is strictly greater / strictly smaller / equal.
    pub wins_a: usize,
    pub wins_b: usize,
    pub ties: usize,
    /// Marks the final-iteration summary row.
    pub final_row: bool,
}

/// Fold-matched comparison of two samplers on `metric`, one row per
/// iteration. Both samplers must have completed the same folds
/// (incomparable grids are an error). Swapping `a` and `b` negates
/// `mean_diff` and swaps the win counts exactly.
pub fn compare(
    rs: &ResultSet,
    a: SamplerKind,
    b: SamplerKind,
    metric: &str,
) -> Result<Vec<ComparisonRow>> {
    check_metric(metric)?;
    let folds_a = rs.folds_for(a);
    let folds_b = rs.folds_for(b);
    if folds_a.is_empty() || folds_b.is_empty() {
        return Err(Error::Config(format!(
            "comparison needs completed cells for both '{a}' and '{b}'"
        )));
    }
    if folds_a != folds_b {
        return Err(Error::Config(format!(
            "incomparable grids: '{a}' completed folds {folds_a:?} but '{b}' completed {folds_b:?}"
        )));
    }
    let value = |kind: SamplerKind, fold: usize, t: usize| -> Result<f64> {
        rs.records
            .iter()
            .find(|r| r.sampler == kind && r.fold == fold && r.iteration == t)
            .ok_or_else(|| {
                Error::Integrity(format!(
                    "sampler '{kind}' fold {fold} is marked ok but iteration {t} is missing"
                ))
            })?
            .metrics
            .get(metric)
    };
    let mut rows = Vec::with_capacity(rs.config.iterations + 1);
    for t in 0..=rs.config.iterations {
        let mut wins_a = 0;
        let mut wins_b = 0;
        let mut ties = 0;
        let mut sum_a = 0.0;
        let mut sum_b = 0.0;
        for &fold in &folds_a {
            let va = value(a, fold, t)?;
            let vb = value(b, fold, t)?;
            sum_a += va;
            sum_b += vb;
            if va > vb {
                wins_a += 1;
            } else if vb > va {
                wins_b += 1;
            } else {
                ties += 1;
            }
        }
        let k = folds_a.len() as f64;
        let mean_a = sum_a / k;
        let mean_b = sum_b / k;
        rows.push(ComparisonRow {
            iteration: t,
            mean_a,
            mean_b,
            mean_diff: mean_a - mean_b,
            wins_a,
            wins_b,
            ties,
            final_row: t == rs.config.iterations,
        });
    }
    Ok(rows)
}

/// One sampler's final-iteration summary: mean with half the p10–p90 spread,
/// and a marker for the best mean (ties all marked).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryCell {
    pub sampler: SamplerKind,
    pub mean: f64,
    pub half_spread: f64,
    pub best: bool,
}

impl SummaryCell {
    /// Render as "0.871 ± 0.004".
    pub fn display(&self) -> String {
        format!("{:.3} ± {:.3}", self.mean, self.half_spread)
    }
}

/// Final-iteration summary of every requested sampler on `metric`.
pub fn final_summary(rs: &ResultSet, metric: &str) -> Result<Vec<SummaryCell>> {
    let points = aggregate(rs, metric)?;
    let last = rs.config.iterations;
    let mut cells: Vec<SummaryCell> = points
        .into_iter()
        .filter(|p| p.iteration == last)
        .map(|p| SummaryCell {
            sampler: p.sampler,
            mean: p.mean,
            half_spread: (p.p90 - p.p10) / 2.0,
            best: false,
        })
        .collect();
    if cells.is_empty() {
        return Err(Error::Config("no samplers to summarize".into()));
    }
    let best = cells
        .iter()
        .map(|c| c.mean)
        .fold(f64::NEG_INFINITY, f64::max);
    for c in &mut cells {
        c.best = c.mean == best;
    }
    Ok(cells)
}
