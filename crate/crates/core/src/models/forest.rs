//! Random forest classifier: bagged CART trees with Gini impurity and
//! per-node feature subsampling. All tie-breaks are pinned (lowest feature
//! index, lowest threshold) and each tree derives its own RNG from the
//! configured seed and tree index, so results do not depend on thread
//! scheduling.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::rng_from;

use rand::Rng;

#[derive(Clone, Debug)]
enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        /// Class frequencies over the fit classes.
        probs: Vec<f64>,
        /// Tree-local leaf id, dense in DFS order.
        leaf: u32,
    },
}

#[derive(Clone, Debug)]
struct Tree {
    nodes: Vec<Node>,
    leaf_count: usize,
}

#[derive(Clone, Debug)]
pub struct ForestModel {
    pub classes: Vec<u32>,
    trees: Vec<Tree>,
    input_dim: usize,
    /// Global leaf-id offset of each tree.
    leaf_offsets: Vec<usize>,
    total_leaves: usize,
    pub fingerprint: String,
}

struct GrowContext<'a> {
    x: &'a Matrix,
    y_local: &'a [usize],
    class_count: usize,
    max_depth: usize,
    min_leaf: usize,
    mtry: usize,
}

fn gini(counts: &[usize], total: usize) -> f64 {
    let t = total as f64;
    1.0 - counts
        .iter()
        .map(|&c| {
            let p = c as f64 / t;
            p * p
        })
        .sum::<f64>()
}

fn grow(
    ctx: &GrowContext,
    indices: Vec<usize>,
    depth: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
    nodes: &mut Vec<Node>,
    next_leaf: &mut u32,
) -> u32 {
    let n = indices.len();
    let mut counts = vec![0usize; ctx.class_count];
    for &i in &indices {
        counts[ctx.y_local[i]] += 1;
    }
    let pure = counts.iter().any(|&c| c == n);

    let make_leaf = |nodes: &mut Vec<Node>, next_leaf: &mut u32, counts: &[usize]| -> u32 {
        let probs: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
        let id = nodes.len() as u32;
        nodes.push(Node::Leaf {
            probs,
            leaf: *next_leaf,
        });
        *next_leaf += 1;
        id
    };

    if pure || depth >= ctx.max_depth || n < 2 * ctx.min_leaf {
        return make_leaf(nodes, next_leaf, &counts);
    }

    let d = ctx.x.cols();
    let mut features: Vec<usize> = rand::seq::index::sample(rng, d, ctx.mtry).into_vec();
    features.sort_unstable();

    let parent_impurity = gini(&counts, n);
    let mut best: Option<(f64, usize, f64)> = None; // (gain, feature, threshold)

    let mut sorted: Vec<(f64, usize)> = Vec::with_capacity(n);
    for &feature in &features {
        sorted.clear();
        sorted.extend(indices.iter().map(|&i| (ctx.x.get(i, feature), i)));
        sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());

        let mut left_counts = vec![0usize; ctx.class_count];
        for s in 1..n {
            left_counts[ctx.y_local[sorted[s - 1].1]] += 1;
            if sorted[s - 1].0 == sorted[s].0 {
                continue;
            }
            if s < ctx.min_leaf || n - s < ctx.min_leaf {
                continue;
            }
            let right_counts: Vec<usize> = counts
                .iter()
                .zip(left_counts.iter())
                .map(|(t, l)| t - l)
                .collect();
            let weighted = (s as f64 * gini(&left_counts, s)
                + (n - s) as f64 * gini(&right_counts, n - s))
                / n as f64;
            let gain = parent_impurity - weighted;
            // Strict improvement keeps the earliest (lowest feature, lowest
            // threshold) among ties.
            if gain > best.map_or(1e-12, |(g, _, _)| g + 1e-12) {
                let threshold = 0.5 * (sorted[s - 1].0 + sorted[s].0);
                best = Some((gain, feature, threshold));
            }
        }
    }

    let Some((_, feature, threshold)) = best else {
        return make_leaf(nodes, next_leaf, &counts);
    };

    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
        .into_iter()
        .partition(|&i| ctx.x.get(i, feature) <= threshold);
    if left_idx.is_empty() || right_idx.is_empty() {
        return make_leaf(nodes, next_leaf, &counts);
    }

    let id = nodes.len() as u32;
    nodes.push(Node::Split {
        feature,
        threshold,
        left: 0,
        right: 0,
    });
    let left = grow(ctx, left_idx, depth + 1, rng, nodes, next_leaf);
    let right = grow(ctx, right_idx, depth + 1, rng, nodes, next_leaf);
    if let Node::Split {
        left: l, right: r, ..
    } = &mut nodes[id as usize]
    {
        *l = left;
        *r = right;
    }
    id
}

pub fn fit_forest(
    x: &Matrix,
    y: &[u32],
    n_trees: usize,
    max_depth: usize,
    min_leaf: usize,
    seed: u64,
) -> Result<ForestModel> {
    let n = x.rows();
    if n == 0 || n != y.len() {
        return Err(Error::Fit(format!(
            "forest fit needs matching non-empty rows and labels, got {n} rows, {} labels",
            y.len()
        )));
    }
    if n_trees == 0 || max_depth == 0 || min_leaf == 0 {
        return Err(Error::Fit(
            "forest hyperparameters must all be at least 1".into(),
        ));
    }

    let mut classes: Vec<u32> = y.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let y_local: Vec<usize> = y
        .iter()
        .map(|v| classes.binary_search(v).expect("label in class set"))
        .collect();

    let d = x.cols();
    let mtry = ((d as f64).sqrt().floor() as usize).clamp(1, d);
    let ctx = GrowContext {
        x,
        y_local: &y_local,
        class_count: classes.len(),
        max_depth,
        min_leaf,
        mtry,
    };

    let trees: Vec<Tree> = (0..n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng_from(seed, &["tree", &t.to_string()]);
            let bootstrap: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let mut nodes = Vec::new();
            let mut next_leaf = 0u32;
            grow(&ctx, bootstrap, 0, &mut rng, &mut nodes, &mut next_leaf);
            Tree {
                nodes,
                leaf_count: next_leaf as usize,
            }
        })
        .collect();

    let mut leaf_offsets = Vec::with_capacity(trees.len());
    let mut total = 0usize;
    for tree in &trees {
        leaf_offsets.push(total);
        total += tree.leaf_count;
    }

    let fingerprint = super::training_fingerprint(x, y);
    Ok(ForestModel {
        classes,
        trees,
        input_dim: d,
        leaf_offsets,
        total_leaves: total,
        fingerprint,
    })
}

impl ForestModel {
    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn tree_count(&self) -> usize {
        self.trees.len()
    }

    pub fn total_leaves(&self) -> usize {
        self.total_leaves
    }

    fn leaf_of<'t>(&self, tree: &'t Tree, row: &[f64]) -> (&'t Vec<f64>, u32) {
        let mut node = &tree.nodes[0];
        loop {
            match node {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    let next = if row[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                    node = &tree.nodes[next as usize];
                }
                Node::Leaf { probs, leaf } => return (probs, *leaf),
            }
        }
    }

    fn check_dim(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.input_dim {
            return Err(Error::Dimension {
                expected: self.input_dim,
                got: x.cols(),
            });
        }
        Ok(())
    }

    pub fn predict_proba(&self, x: &Matrix) -> Result<Matrix> {
        self.check_dim(x)?;
        let c = self.classes.len();
        let mut out = Matrix::zeros(x.rows(), c);
        let scale = 1.0 / self.trees.len() as f64;
        for i in 0..x.rows() {
            let row = x.row(i);
            let acc = out.row_mut(i);
            for tree in &self.trees {
                let (probs, _) = self.leaf_of(tree, row);
                for (a, p) in acc.iter_mut().zip(probs.iter()) {
                    *a += p * scale;
                }
            }
        }
        Ok(out)
    }

    /// Global leaf id (offset by tree) each row lands in, per tree.
    pub fn leaf_activations(&self, x: &Matrix) -> Result<Vec<Vec<u32>>> {
        self.check_dim(x)?;
        let mut out = Vec::with_capacity(x.rows());
        for i in 0..x.rows() {
            let row = x.row(i);
            let mut acts = Vec::with_capacity(self.trees.len());
            for (tree, offset) in self.trees.iter().zip(self.leaf_offsets.iter()) {
                let (_, leaf) = self.leaf_of(tree, row);
                acts.push((offset + leaf as usize) as u32);
            }
            out.push(acts);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xor_data() -> (Matrix, Vec<u32>) {
        // Four tight clusters at (+/-1, +/-1); label is the sign parity.
        let mut rows = Vec::new();
        let mut y = Vec::new();
        let offsets = [-0.1, -0.05, 0.0, 0.05, 0.1];
        for &sx in &[-1.0f64, 1.0] {
            for &sy in &[-1.0f64, 1.0] {
                for &ox in &offsets {
                    for &oy in &offsets {
                        rows.push(vec![sx + ox, sy + oy]);
                        y.push(if (sx > 0.0) == (sy > 0.0) { 1 } else { 0 });
                    }
                }
            }
        }
        (Matrix::from_rows(rows).unwrap(), y)
    }

    #[test]
    fn learns_xor_pattern() {
        let (x, y) = xor_data();
        let model = fit_forest(&x, &y, 25, 8, 1, 7).unwrap();
        let probs = model.predict_proba(&x).unwrap();
        let mut correct = 0;
        for (i, &label) in y.iter().enumerate() {
            let p = probs.row(i);
            let pred = if p[1] > p[0] { 1 } else { 0 };
            if pred == label as usize {
                correct += 1;
            }
        }
        assert!(correct as f64 / y.len() as f64 >= 0.95);
    }

    #[test]
    fn fit_is_deterministic_in_the_seed() {
        let (x, y) = xor_data();
        let a = fit_forest(&x, &y, 20, 6, 1, 3).unwrap();
        let b = fit_forest(&x, &y, 20, 6, 1, 3).unwrap();
        let c = fit_forest(&x, &y, 20, 6, 1, 4).unwrap();
        let query = x.select_rows(&[0, 7, 42, 99]);
        assert_eq!(
            a.predict_proba(&query).unwrap(),
            b.predict_proba(&query).unwrap()
        );
        assert_eq!(
            a.leaf_activations(&query).unwrap(),
            b.leaf_activations(&query).unwrap()
        );
        assert_ne!(
            a.predict_proba(&x).unwrap(),
            c.predict_proba(&x).unwrap(),
            "different seeds should grow different forests"
        );
    }

    #[test]
    fn probabilities_are_normalized() {
        let (x, y) = xor_data();
        let model = fit_forest(&x, &y, 10, 5, 2, 1).unwrap();
        let probs = model.predict_proba(&x).unwrap();
        for i in 0..probs.rows() {
            let sum: f64 = probs.row(i).iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn leaf_ids_are_dense_and_within_bounds() {
        let (x, y) = xor_data();
        let model = fit_forest(&x, &y, 12, 6, 1, 2).unwrap();
        let acts = model.leaf_activations(&x).unwrap();
        for row in &acts {
            assert_eq!(row.len(), model.tree_count());
            for &leaf in row {
                assert!((leaf as usize) < model.total_leaves());
            }
        }
    }

    #[test]
    fn depth_one_gives_a_stump() {
        let (x, y) = xor_data();
        let model = fit_forest(&x, &y, 5, 1, 1, 9).unwrap();
        // A depth-1 tree has at most 2 leaves.
        assert!(model.total_leaves() <= 2 * model.tree_count());
    }

    #[test]
    fn rejects_bad_inputs() {
        let (x, y) = xor_data();
        assert!(fit_forest(&x, &y[..5], 10, 5, 1, 0).is_err());
        assert!(fit_forest(&x, &y, 0, 5, 1, 0).is_err());
        let model = fit_forest(&x, &y, 5, 5, 1, 0).unwrap();
        let bad = Matrix::from_rows(vec![vec![1.0, 2.0, 3.0]]).unwrap();
        assert!(model.predict_proba(&bad).is_err());
    }
}
