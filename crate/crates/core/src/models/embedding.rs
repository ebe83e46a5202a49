//! Tree-leaf PCA embedding.
//!
//! Each sample is represented by the one-hot indicator of the leaf it lands
//! in across all trees of a fitted forest. That sparse binary matrix is
//! centered and reduced by PCA. Two equivalent routes are used depending on
//! shape: when the total leaf count `L` fits (`L <= n`), the `L x L`
//! covariance is eigendecomposed directly; otherwise the `n x n` Gram matrix
//! of centered rows is eigendecomposed and eigenvectors are mapped back to
//! leaf space. Components carry a fixed sign convention (the entry of
//! largest magnitude is positive), so both routes produce identical output.

use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, Matrix};
use crate::models::forest::ForestModel;

/// Fitted PCA over centered leaf indicators.
#[derive(Clone, Debug)]
pub struct LeafPcaModel {
    mean: Vec<f64>,
    /// `L x k` with orthonormal columns.
    components: Matrix,
    /// Precomputed `mean . component_k` for fast projection.
    mean_projection: Vec<f64>,
    pub explained_variance: Vec<f64>,
    total_leaves: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum PcaRoute {
    Covariance,
    Gram,
}

/// Fit the leaf PCA on `x_fit`, keeping at most `max_dim` components
/// (clamped to the numerical rank of the centered indicator matrix).
pub fn fit_leaf_pca(forest: &ForestModel, x_fit: &Matrix, max_dim: usize) -> Result<LeafPcaModel> {
    if max_dim == 0 {
        return Err(Error::Fit("embedding dimension must be at least 1".into()));
    }
    let acts = forest.leaf_activations(x_fit)?;
    let n = acts.len();
    let l = forest.total_leaves();
    if n == 0 {
        return Err(Error::Fit("leaf PCA needs at least one fit row".into()));
    }
    let route = if l <= n {
        PcaRoute::Covariance
    } else {
        PcaRoute::Gram
    };
    fit_impl(&acts, l, max_dim, route)
}

pub(crate) fn fit_impl(
    acts: &[Vec<u32>],
    total_leaves: usize,
    max_dim: usize,
    route: PcaRoute,
) -> Result<LeafPcaModel> {
    let n = acts.len();
    let l = total_leaves;

    let mut mean = vec![0.0; l];
    for row in acts {
        for &leaf in row {
            mean[leaf as usize] += 1.0;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }

    if n < 2 {
        return Ok(degenerate(mean, total_leaves));
    }
    let denom = (n - 1) as f64;

    // (eigenvalue, component in leaf space) pairs, descending.
    let (eigenvalues, components): (Vec<f64>, Vec<Vec<f64>>) = match route {
        PcaRoute::Covariance => {
            // S = (A^T A - n mu mu^T) / (n - 1), computed sparsely.
            let mut s = Matrix::zeros(l, l);
            for row in acts {
                for &p in row {
                    for &q in row {
                        let v = s.get(p as usize, q as usize) + 1.0;
                        s.set(p as usize, q as usize, v);
                    }
                }
            }
            for p in 0..l {
                for q in 0..l {
                    let v = (s.get(p, q) - n as f64 * mean[p] * mean[q]) / denom;
                    s.set(p, q, v);
                }
            }
            let (vals, vecs) = symmetric_eigen(&s)?;
            let cols = (0..l)
                .map(|k| (0..l).map(|j| vecs.get(j, k)).collect())
                .collect();
            (vals, cols)
        }
        PcaRoute::Gram => {
            // G[i][j] = centered(a_i) . centered(a_j) / (n - 1); the dot of
            // two indicator rows is the number of trees where they share a
            // leaf.
            let mu_dot_mu: f64 = mean.iter().map(|m| m * m).sum();
            let row_mu: Vec<f64> = acts
                .iter()
                .map(|row| row.iter().map(|&leaf| mean[leaf as usize]).sum())
                .collect();
            let mut g = Matrix::zeros(n, n);
            for i in 0..n {
                for j in i..n {
                    let shared = acts[i]
                        .iter()
                        .zip(acts[j].iter())
                        .filter(|(a, b)| a == b)
                        .count() as f64;
                    let v = (shared - row_mu[i] - row_mu[j] + mu_dot_mu) / denom;
                    g.set(i, j, v);
                    g.set(j, i, v);
                }
            }
            let (vals, u) = symmetric_eigen(&g)?;
            // v_k = centered(A)^T u_k / sqrt((n-1) lambda_k)
            let tol = rank_tolerance(vals.first().copied().unwrap_or(0.0));
            let mut cols = Vec::new();
            for (k, &lambda) in vals.iter().enumerate() {
                if lambda <= tol {
                    break;
                }
                let mut atu = vec![0.0; l];
                let mut u_sum = 0.0;
                for i in 0..n {
                    let ui = u.get(i, k);
                    u_sum += ui;
                    for &leaf in &acts[i] {
                        atu[leaf as usize] += ui;
                    }
                }
                let scale = 1.0 / (denom * lambda).sqrt();
                let col: Vec<f64> = atu
                    .iter()
                    .zip(mean.iter())
                    .map(|(a, m)| (a - m * u_sum) * scale)
                    .collect();
                cols.push(col);
            }
            let vals = vals[..cols.len()].to_vec();
            (vals, cols)
        }
    };

    let tol = rank_tolerance(eigenvalues.first().copied().unwrap_or(0.0));
    let rank = eigenvalues.iter().take_while(|&&v| v > tol).count();
    if rank == 0 {
        return Ok(degenerate(mean, total_leaves));
    }
    if max_dim > rank {
        log::debug!("requested {max_dim} embedding dimensions, clamping to rank {rank}");
    }
    let k = max_dim.min(rank);

    let mut kept: Vec<Vec<f64>> = components.into_iter().take(k).collect();
    let explained_variance: Vec<f64> = eigenvalues.into_iter().take(k).collect();

    // The Gram-route back-mapping can lose a little orthogonality for small
    // eigenvalues; one modified Gram-Schmidt pass restores it to machine
    // precision on both routes.
    for i in 0..kept.len() {
        for j in 0..i {
            let proj: f64 = kept[i].iter().zip(kept[j].iter()).map(|(a, b)| a * b).sum();
            let (head, tail) = kept.split_at_mut(i);
            for (vi, vj) in tail[0].iter_mut().zip(head[j].iter()) {
                *vi -= proj * vj;
            }
        }
        let norm: f64 = kept[i].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for v in &mut kept[i] {
                *v /= norm;
            }
        }
    }

    // Sign convention: among entries within a small relative window of the
    // largest magnitude, the earliest one is made positive. A plain argmax
    // is unstable here: the indicator columns of a balanced two-leaf tree
    // are exactly anticorrelated, so a component routinely carries +c/-c
    // entries of identical magnitude and roundoff could anchor the sign on
    // either member of the pair.
    for col in &mut kept {
        let top = col.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let window = top * (1.0 - 1e-6);
        let anchor = col.iter().position(|v| v.abs() >= window).unwrap_or(0);
        if col[anchor] < 0.0 {
            for v in col.iter_mut() {
                *v = -*v;
            }
        }
    }

    let mut matrix = Matrix::zeros(l, k);
    for (col_idx, col) in kept.iter().enumerate() {
        for (j, v) in col.iter().enumerate() {
            matrix.set(j, col_idx, *v);
        }
    }
    let mean_projection: Vec<f64> = (0..k)
        .map(|col| (0..l).map(|j| mean[j] * matrix.get(j, col)).sum())
        .collect();

    Ok(LeafPcaModel {
        mean,
        components: matrix,
        mean_projection,
        explained_variance,
        total_leaves,
    })
}

fn rank_tolerance(top: f64) -> f64 {
    (top.max(0.0) * 1e-9).max(1e-12)
}

/// Rank-zero fallback (a single fit row, or all rows identical): one
/// placeholder direction with zero variance; every projection is zero.
fn degenerate(mean: Vec<f64>, total_leaves: usize) -> LeafPcaModel {
    let mut components = Matrix::zeros(total_leaves, 1);
    if total_leaves > 0 {
        components.set(0, 0, 1.0);
    }
    let mean_projection = vec![mean.first().copied().unwrap_or(0.0)];
    LeafPcaModel {
        mean,
        components,
        mean_projection,
        explained_variance: vec![0.0],
        total_leaves,
    }
}

impl LeafPcaModel {
    pub fn dim(&self) -> usize {
        self.components.cols()
    }

    pub fn total_leaves(&self) -> usize {
        self.total_leaves
    }

    pub fn components(&self) -> &Matrix {
        &self.components
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Project rows of `x` through the forest's leaves into the embedding.
    pub fn project(&self, forest: &ForestModel, x: &Matrix) -> Result<Matrix> {
        if forest.total_leaves() != self.total_leaves {
            return Err(Error::Fit(format!(
                "PCA was fit on a forest with {} leaves, given one with {}",
                self.total_leaves,
                forest.total_leaves()
            )));
        }
        let acts = forest.leaf_activations(x)?;
        let k = self.dim();
        // Degenerate model: centered matrix was zero, every projection is 0.
        if self.explained_variance.iter().all(|&v| v == 0.0) {
            return Ok(Matrix::zeros(acts.len(), k));
        }
        let mut z = Matrix::zeros(acts.len(), k);
        for (i, row) in acts.iter().enumerate() {
            let out = z.row_mut(i);
            for &leaf in row {
                for (c, o) in out.iter_mut().enumerate() {
                    *o += self.components.get(leaf as usize, c);
                }
            }
            for (c, o) in out.iter_mut().enumerate() {
                *o -= self.mean_projection[c];
            }
        }
        Ok(z)
    }
}
