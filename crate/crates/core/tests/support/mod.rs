//! Independent oracles for the acceptance suite.
//!
//! Everything here deliberately uses a *different* algorithm (or a naive
//! restatement of the definition) than the engine: greedy k-center is
//! re-derived from scratch each step with plain Euclidean distances, the
//! weighted k-means optimum is found by exhausting every assignment, and the
//! eigensolver is a Householder tridiagonalization + implicit-shift QL sweep
//! rather than the engine's cyclic Jacobi.

use openalx_core::linalg::Matrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// `n x d` matrix of i.i.d. standard normal draws.
pub fn normal_matrix(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Matrix {
    let mut m = Matrix::zeros(n, d);
    for i in 0..n {
        for j in 0..d {
            m.set(i, j, StandardNormal.sample(rng));
        }
    }
    m
}

/// Monte-Carlo estimate of `P(|Z| > alpha)` for a standard normal `Z`.
///
/// This is the expected per-component violation rate of a conformance
/// boundary placed at `mean ± alpha·std` when the evaluated points follow
/// the same distribution the boundary was calibrated on: for `alpha = 3`,
/// `2·Phi(-3) ≈ 0.0027`, so a d-dimensional mean count of `d·0.0027`.
pub fn mc_tail_rate(alpha: f64, samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    for _ in 0..samples {
        let z: f64 = StandardNormal.sample(&mut rng);
        if z.abs() > alpha {
            hits += 1;
        }
    }
    hits as f64 / samples as f64
}

/// Naive greedy k-center reference: each step recomputes, for every
/// remaining candidate, its true Euclidean distance to the nearest labeled
/// point or earlier pick, then takes the farthest (ties to the lowest
/// position). O(batch · n_u · (m + batch)) with no incremental state.
pub fn naive_kcenter(z_unlabeled: &Matrix, z_labeled: &Matrix, batch: usize) -> Vec<usize> {
    let n = z_unlabeled.rows();
    let dist = |a: &[f64], b: &[f64]| -> f64 {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    };
    let mut picks: Vec<usize> = Vec::with_capacity(batch);
    for _ in 0..batch {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..n {
            if picks.contains(&i) {
                continue;
            }
            let mut nearest = f64::INFINITY;
            for c in 0..z_labeled.rows() {
                nearest = nearest.min(dist(z_unlabeled.row(i), z_labeled.row(c)));
            }
            for &p in &picks {
                nearest = nearest.min(dist(z_unlabeled.row(i), z_unlabeled.row(p)));
            }
            let better = match best {
                None => true,
                Some((_, d)) => nearest > d,
            };
            if better {
                best = Some((i, nearest));
            }
        }
        picks.push(best.expect("batch <= n").0);
    }
    picks
}

/// Globally optimal weighted k-means objective by exhausting all `k^n`
/// assignments. Each cluster's optimal centroid is its weighted mean, so the
/// minimum over assignments equals the minimum over centroid placements.
pub fn exhaustive_wkmeans_objective(z: &Matrix, weights: &[f64], k: usize) -> f64 {
    let n = z.rows();
    let d = z.cols();
    assert!(n >= 1 && k >= 1);
    let mut assign = vec![0usize; n];
    let mut best = f64::INFINITY;
    loop {
        // Weighted centroid per cluster.
        let mut wsum = vec![0.0; k];
        let mut acc = vec![0.0; k * d];
        for i in 0..n {
            let c = assign[i];
            wsum[c] += weights[i];
            for j in 0..d {
                acc[c * d + j] += weights[i] * z.get(i, j);
            }
        }
        let mut cost = 0.0;
        for i in 0..n {
            let c = assign[i];
            if wsum[c] <= 0.0 {
                continue;
            }
            let mut d2 = 0.0;
            for j in 0..d {
                let diff = z.get(i, j) - acc[c * d + j] / wsum[c];
                d2 += diff * diff;
            }
            cost += weights[i] * d2;
        }
        if cost < best {
            best = cost;
        }

        // Next assignment in base-k counting order.
        let mut pos = 0;
        loop {
            if pos == n {
                return best;
            }
            assign[pos] += 1;
            if assign[pos] < k {
                break;
            }
            assign[pos] = 0;
            pos += 1;
        }
    }
}

/// Symmetric eigendecomposition by Householder tridiagonalization followed
/// by the implicit-shift QL iteration (the classic EISPACK tred2/tql2 pair).
/// Returns eigenvalues in descending order with matching eigenvector columns.
pub fn symmetric_eigen_oracle(a: &Matrix) -> (Vec<f64>, Matrix) {
    let n = a.rows();
    assert_eq!(a.cols(), n, "square matrix required");
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| a.row(i).to_vec()).collect();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(&mut v, &mut d, &mut e);
    tql2(&mut v, &mut d, &mut e);

    // tql2 leaves eigenvalues ascending; flip to descending.
    let vals: Vec<f64> = d.into_iter().rev().collect();
    let mut vecs = Matrix::zeros(n, n);
    for col in 0..n {
        for row in 0..n {
            vecs.set(row, col, v[row][n - 1 - col]);
        }
    }
    // Deterministic sign: largest-magnitude entry positive (window-free here;
    // the oracle only needs *a* consistent sign, comparisons re-align).
    for col in 0..n {
        let mut best = 0usize;
        for row in 0..n {
            if vecs.get(row, col).abs() > vecs.get(best, col).abs() {
                best = row;
            }
        }
        if vecs.get(best, col) < 0.0 {
            for row in 0..n {
                vecs.set(row, col, -vecs.get(row, col));
            }
        }
    }
    (vals, vecs)
}

/// Householder reduction of a symmetric matrix to tridiagonal form,
/// accumulating the transformation in `v` (EISPACK tred2).
fn tred2(v: &mut [Vec<f64>], d: &mut [f64], e: &mut [f64]) {
    let n = v.len();
    for j in 0..n {
        d[j] = v[n - 1][j];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for item in d.iter().take(i) {
            scale += item.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[i - 1][j];
                v[i][j] = 0.0;
                v[j][i] = 0.0;
            }
        } else {
            for item in d.iter_mut().take(i) {
                *item /= scale;
                h += *item * *item;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for item in e.iter_mut().take(i) {
                *item = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[j][i] = f;
                g = e[j] + v[j][j] * f;
                for k in (j + 1)..i {
                    g += v[k][j] * d[k];
                    e[k] += v[k][j] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[k][j] -= f * e[k] + g * d[k];
                }
                d[j] = v[i - 1][j];
                v[i][j] = 0.0;
            }
        }
        d[i] = h;
    }
    for i in 0..n.saturating_sub(1) {
        v[n - 1][i] = v[i][i];
        v[i][i] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for (k, item) in d.iter_mut().enumerate().take(i + 1) {
                *item = v[k][i + 1] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[k][i + 1] * v[k][j];
                }
                for k in 0..=i {
                    v[k][j] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[k][i + 1] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[n - 1][j];
        v[n - 1][j] = 0.0;
    }
    v[n - 1][n - 1] = 1.0;
    e[0] = 0.0;
}

/// Implicit-shift QL iteration on a symmetric tridiagonal matrix,
/// accumulating eigenvectors into `v` (EISPACK tql2). Eigenvalues end up in
/// `d`, ascending.
fn tql2(v: &mut [Vec<f64>], d: &mut [f64], e: &mut [f64]) {
    let n = v.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0f64;
    let mut tst1 = 0.0f64;
    let eps = 2.0f64.powi(-52);
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                assert!(iter < 1000, "tql2 failed to converge");

                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for item in d.iter_mut().take(n).skip(l + 2) {
                    *item -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0f64;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0f64;
                let mut s2 = 0.0f64;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for row in v.iter_mut().take(n) {
                        h = row[i + 1];
                        row[i + 1] = s * row[i] + c * h;
                        row[i] = c * row[i] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;

                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }

    // Ascending selection sort with matching column swaps.
    for i in 0..n.saturating_sub(1) {
        let mut k = i;
        let mut p = d[i];
        for j in (i + 1)..n {
            if d[j] < p {
                k = j;
                p = d[j];
            }
        }
        if k != i {
            d[k] = d[i];
            d[i] = p;
            for row in v.iter_mut().take(n) {
                row.swap(i, k);
            }
        }
    }
}

/// Expand per-tree leaf indices into a dense 0/1 indicator matrix
/// (`n x total_leaves`).
pub fn indicator_matrix(acts: &[Vec<u32>], total_leaves: usize) -> Matrix {
    let mut m = Matrix::zeros(acts.len(), total_leaves);
    for (i, row) in acts.iter().enumerate() {
        for &leaf in row {
            m.set(i, leaf as usize, 1.0);
        }
    }
    m
}

/// Uniform draw in `[lo, hi)`.
pub fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}
