//! Weighted k-means and the clustering samplers built on it.
//!
//! The core routine is Lloyd's algorithm minimizing the weighted
//! within-cluster sum of squares `sum_i w_i ||z_i - c_a(i)||^2`, seeded by
//! weighted k-means++ and restarted `n_init` times (the lowest objective
//! wins, ties to the earlier restart). Centroids may include a frozen prefix
//! that is never moved: that variant clusters candidates *around* the
//! already-labeled points, so the free centroids are pushed into regions the
//! labeled pool does not cover yet.
//!
//! Every tie (assignment, seeding fallback, eviction, representatives) is
//! broken toward the lowest index, so results are exactly reproducible.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{squared_distance, Matrix};
use crate::rng::rng_from;
use crate::samplers::uncertainty::{rank_top, select_uncertainty, uncertainty_scores};
use crate::samplers::{QueryContext, UncertaintyKind};

/// Lloyd-iteration controls shared by all k-means samplers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KMeansParams {
    pub max_iter: usize,
    pub tol: f64,
    pub n_init: usize,
}

impl Default for KMeansParams {
    fn default() -> Self {
        KMeansParams {
            max_iter: 100,
            tol: 1e-6,
            n_init: 3,
        }
    }
}

impl KMeansParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 || self.n_init == 0 || !(self.tol >= 0.0) {
            return Err(Error::Config(
                "k-means needs max_iter >= 1, n_init >= 1, tol >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Result of one weighted k-means run: all centroids (frozen prefix first),
/// the per-point cluster assignment, and the weighted SSE objective.
#[derive(Clone, Debug)]
pub struct KMeansOutcome {
    pub centroids: Matrix,
    pub assignment: Vec<usize>,
    pub objective: f64,
    pub frozen: usize,
}

/// Weighted k-means without frozen centroids.
pub fn weighted_kmeans(
    z: &Matrix,
    weights: &[f64],
    k: usize,
    params: &KMeansParams,
    seed: u64,
) -> Result<KMeansOutcome> {
    let frozen = Matrix::zeros(0, z.cols());
    weighted_kmeans_frozen(z, weights, k, &frozen, params, seed)
}

/// Weighted k-means with `k_free` movable centroids plus a frozen prefix.
///
/// Data points are assigned to the nearest of *all* centroids; only the free
/// centroids are re-estimated (as weighted means of their members), and only
/// free clusters are repaired when empty. Empty frozen clusters are fine.
pub fn weighted_kmeans_frozen(
    z: &Matrix,
    weights: &[f64],
    k_free: usize,
    frozen: &Matrix,
    params: &KMeansParams,
    seed: u64,
) -> Result<KMeansOutcome> {
    params.validate()?;
    let n = z.rows();
    if weights.len() != n {
        return Err(Error::Sampler(format!(
            "{n} points but {} weights",
            weights.len()
        )));
    }
    if k_free == 0 {
        return Err(Error::Sampler("need at least one free cluster".into()));
    }
    if frozen.rows() > 0 && frozen.cols() != z.cols() {
        return Err(Error::Dimension {
            expected: z.cols(),
            got: frozen.cols(),
        });
    }
    for (i, &w) in weights.iter().enumerate() {
        if !(w >= 0.0) {
            return Err(Error::Sampler(format!(
                "weight of point {i} is negative or NaN: {w}"
            )));
        }
    }
    let positive = weights.iter().filter(|&&w| w > 0.0).count();
    if positive < k_free {
        return Err(Error::Sampler(format!(
            "{positive} positively weighted points cannot seed {k_free} clusters"
        )));
    }

    let mut best: Option<KMeansOutcome> = None;
    for restart in 0..params.n_init {
        let outcome = run_once(z, weights, k_free, frozen, params, seed, restart)?;
        let better = match &best {
            None => true,
            Some(b) => outcome.objective < b.objective,
        };
        if better {
            best = Some(outcome);
        }
    }
    Ok(best.expect("n_init >= 1"))
}

fn run_once(
    z: &Matrix,
    weights: &[f64],
    k_free: usize,
    frozen: &Matrix,
    params: &KMeansParams,
    seed: u64,
    restart: usize,
) -> Result<KMeansOutcome> {
    let n = z.rows();
    let n_frozen = frozen.rows();
    let k = n_frozen + k_free;
    let mut rng = rng_from(seed, &["kmeans", &restart.to_string()]);

    // --- weighted k-means++ seeding of the free centroids ---
    let mut centroids = frozen.clone();
    // Squared distance to the nearest centroid chosen so far (frozen ones
    // count); `None` until any centroid exists.
    let mut min_d2: Option<Vec<f64>> = if n_frozen > 0 {
        Some(
            (0..n)
                .map(|i| {
                    (0..n_frozen)
                        .map(|c| squared_distance(z.row(i), frozen.row(c)))
                        .fold(f64::INFINITY, f64::min)
                })
                .collect(),
        )
    } else {
        None
    };
    let mut seeded: Vec<usize> = Vec::with_capacity(k_free);
    for _ in 0..k_free {
        let probs: Vec<f64> = match &min_d2 {
            None => weights.to_vec(),
            Some(d2) => weights.iter().zip(d2.iter()).map(|(w, d)| w * d).collect(),
        };
        let total: f64 = probs.iter().sum();
        let pick = if total > 0.0 {
            let u = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = None;
            for (i, p) in probs.iter().enumerate() {
                acc += p;
                if u < acc {
                    chosen = Some(i);
                    break;
                }
            }
            chosen.unwrap_or_else(|| {
                probs
                    .iter()
                    .rposition(|&p| p > 0.0)
                    .expect("total > 0 implies a positive entry")
            })
        } else {
            // Every remaining point coincides with an existing centroid (or
            // has zero weight): take the lowest index not yet used as a seed.
            (0..n)
                .find(|i| !seeded.contains(i))
                .expect("k_free <= n points")
        };
        seeded.push(pick);
        centroids.push_row(z.row(pick))?;
        let d2 = min_d2.get_or_insert_with(|| vec![f64::INFINITY; n]);
        for i in 0..n {
            let d = squared_distance(z.row(i), z.row(pick));
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }

    // --- Lloyd iterations ---
    let mut assignment = vec![0usize; n];
    let mut objective = f64::INFINITY;
    for _ in 0..params.max_iter {
        // Assign to the nearest centroid; ties to the lowest centroid index.
        for i in 0..n {
            let mut best_c = 0usize;
            let mut best_d = f64::INFINITY;
            for c in 0..k {
                let d = squared_distance(z.row(i), centroids.row(c));
                if d < best_d {
                    best_d = d;
                    best_c = c;
                }
            }
            assignment[i] = best_c;
        }

        // Repair empty free clusters, ascending: move in the point with the
        // largest weighted distance to its current centroid, drawn from a
        // cluster that can spare it (a frozen cluster, or one with >= 2
        // members). Ties to the lowest point index.
        let mut counts = vec![0usize; k];
        for &a in &assignment {
            counts[a] += 1;
        }
        for c in n_frozen..k {
            if counts[c] > 0 {
                continue;
            }
            let mut pick: Option<(f64, usize)> = None;
            for i in 0..n {
                let home = assignment[i];
                let sparable = home < n_frozen || counts[home] >= 2;
                if !sparable {
                    continue;
                }
                let cost = weights[i] * squared_distance(z.row(i), centroids.row(home));
                let better = match pick {
                    None => true,
                    Some((best_cost, _)) => cost > best_cost,
                };
                if better {
                    pick = Some((cost, i));
                }
            }
            let (_, i) = pick.expect("a non-singleton source cluster exists");
            counts[assignment[i]] -= 1;
            counts[c] += 1;
            assignment[i] = c;
        }

        // Update free centroids to the weighted mean of their members
        // (unweighted mean when all member weights are zero).
        for c in n_frozen..k {
            let mut wsum = 0.0;
            let mut acc = vec![0.0; z.cols()];
            let mut members = 0usize;
            for i in 0..n {
                if assignment[i] != c {
                    continue;
                }
                members += 1;
                wsum += weights[i];
                for (a, v) in acc.iter_mut().zip(z.row(i)) {
                    *a += weights[i] * v;
                }
            }
            debug_assert!(members > 0, "repair left cluster {c} empty");
            if wsum > 0.0 {
                for a in &mut acc {
                    *a /= wsum;
                }
            } else {
                acc = vec![0.0; z.cols()];
                for i in 0..n {
                    if assignment[i] == c {
                        for (a, v) in acc.iter_mut().zip(z.row(i)) {
                            *a += v;
                        }
                    }
                }
                for a in &mut acc {
                    *a /= members as f64;
                }
            }
            centroids.row_mut(c).copy_from_slice(&acc);
        }

        let new_objective: f64 = (0..n)
            .map(|i| weights[i] * squared_distance(z.row(i), centroids.row(assignment[i])))
            .sum();
        let done = objective - new_objective <= params.tol;
        objective = new_objective;
        if done {
            break;
        }
    }

    Ok(KMeansOutcome {
        centroids,
        assignment,
        objective,
        frozen: n_frozen,
    })
}

/// One representative per free cluster: the member closest to its centroid
/// (ties to the lowest point index). Returned in ascending cluster order.
pub fn representatives(z: &Matrix, outcome: &KMeansOutcome) -> Vec<usize> {
    let k = outcome.centroids.rows();
    let mut reps = Vec::with_capacity(k - outcome.frozen);
    for c in outcome.frozen..k {
        let mut best: Option<(f64, usize)> = None;
        for (i, &a) in outcome.assignment.iter().enumerate() {
            if a != c {
                continue;
            }
            let d = squared_distance(z.row(i), outcome.centroids.row(c));
            let better = match best {
                None => true,
                Some((bd, _)) => d < bd,
            };
            if better {
                best = Some((d, i));
            }
        }
        if let Some((_, i)) = best {
            reps.push(i);
        }
    }
    reps
}

/// Batch selection by plain k-means over all candidates with uniform
/// weights; the batch is the per-cluster representatives.
pub fn select_kmeans(ctx: &QueryContext, params: &KMeansParams, seed: u64) -> Result<Vec<usize>> {
    let weights = vec![1.0; ctx.unlabeled.len()];
    let outcome = weighted_kmeans(ctx.z_unlabeled, &weights, ctx.batch, params, seed)?;
    Ok(representatives(ctx.z_unlabeled, &outcome)
        .into_iter()
        .map(|p| ctx.unlabeled[p])
        .collect())
}

/// Shared pipeline for the weighted variants: margin-score the candidates,
/// prefilter to the `min(floor(beta * batch), n)` most uncertain, cluster
/// them with scores as weights (optionally around frozen labeled
/// embeddings), and return the representatives.
fn select_weighted(
    ctx: &QueryContext,
    beta: f64,
    params: &KMeansParams,
    seed: u64,
    freeze_labeled: bool,
) -> Result<Vec<usize>> {
    if !(beta >= 1.0) {
        return Err(Error::Config(format!(
            "beta must be at least 1, got {beta}"
        )));
    }
    let scores = uncertainty_scores(ctx.probs, UncertaintyKind::Margin)?;
    let positive = scores.iter().filter(|&&s| s > 0.0).count();
    if positive < ctx.batch {
        log::warn!(
            "only {positive} candidates have positive uncertainty; falling back to margin ranking"
        );
        return select_uncertainty(ctx, UncertaintyKind::Margin);
    }

    let m = ((beta * ctx.batch as f64).floor() as usize)
        .max(ctx.batch)
        .min(ctx.unlabeled.len());
    let mut candidates = rank_top(&scores, m);
    candidates.sort_unstable();

    let z_cand = ctx.z_unlabeled.select_rows(&candidates);
    let w_cand: Vec<f64> = candidates.iter().map(|&p| scores[p]).collect();

    let empty = Matrix::zeros(0, ctx.z_unlabeled.cols());
    let frozen = if freeze_labeled { ctx.z_labeled } else { &empty };
    let outcome = weighted_kmeans_frozen(&z_cand, &w_cand, ctx.batch, frozen, params, seed)?;

    Ok(representatives(&z_cand, &outcome)
        .into_iter()
        .map(|p| ctx.unlabeled[candidates[p]])
        .collect())
}

/// Weighted k-means selection: cluster the most uncertain candidates with
/// their margin scores as weights.
pub fn select_wkmeans(
    ctx: &QueryContext,
    beta: f64,
    params: &KMeansParams,
    seed: u64,
) -> Result<Vec<usize>> {
    select_weighted(ctx, beta, params, seed, false)
}

/// Incremental weighted k-means selection: like wkmeans, but the labeled
/// pool's embeddings are frozen centroids, so new clusters are pushed away
/// from regions that are already labeled.
pub fn select_iwkmeans(
    ctx: &QueryContext,
    beta: f64,
    params: &KMeansParams,
    seed: u64,
) -> Result<Vec<usize>> {
    select_weighted(ctx, beta, params, seed, true)
}
