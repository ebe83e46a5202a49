//! Inductive models and embeddings.
//!
//! Two families are supported: multinomial logistic regression and random
//! forests. Both expose calibrated-enough class probabilities for the
//! uncertainty samplers; the forest additionally yields a tree-leaf PCA
//! embedding used by the clustering samplers (for logistic models the
//! preprocessed features serve as the embedding directly).

pub mod embedding;
pub mod forest;
pub mod knn;
pub mod logistic;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::dataset::Dataset;
use crate::data::preprocess::preprocess;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::rng_from;

pub use embedding::{fit_leaf_pca, LeafPcaModel};
pub use forest::{fit_forest, ForestModel};
pub use knn::{nearest_reference, predict_1nn};
pub use logistic::{fit_logistic, loss_and_gradient, LogisticModel};

/// Maximum embedding dimensionality for the tree-leaf PCA.
pub const MAX_EMBEDDING_DIM: usize = 50;

/// Hyperparameters for one model family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelSpec {
    Logistic {
        l2: f64,
        learning_rate: f64,
        max_epochs: usize,
        tolerance: f64,
    },
    Forest {
        trees: usize,
        max_depth: usize,
        min_leaf: usize,
        seed: u64,
    },
}

impl ModelSpec {
    pub fn logistic_default() -> Self {
        ModelSpec::Logistic {
            l2: 1e-4,
            learning_rate: 1.0,
            max_epochs: 200,
            tolerance: 1e-6,
        }
    }

    pub fn forest_default(seed: u64) -> Self {
        ModelSpec::Forest {
            trees: 100,
            max_depth: 12,
            min_leaf: 2,
            seed,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            ModelSpec::Logistic { .. } => "logistic",
            ModelSpec::Forest { .. } => "forest",
        }
    }

    /// Same spec with the fit seed replaced (no effect on logistic, which is
    /// deterministic from zero initialization).
    pub fn with_seed(&self, seed: u64) -> Self {
        match self {
            ModelSpec::Logistic { .. } => self.clone(),
            ModelSpec::Forest {
                trees,
                max_depth,
                min_leaf,
                ..
            } => ModelSpec::Forest {
                trees: *trees,
                max_depth: *max_depth,
                min_leaf: *min_leaf,
                seed,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::Logistic {
                l2,
                learning_rate,
                max_epochs,
                tolerance,
            } => {
                if !(*l2 >= 0.0) || !(*learning_rate > 0.0) || *max_epochs == 0 || !(*tolerance >= 0.0)
                {
                    return Err(Error::Config(
                        "logistic spec needs l2 >= 0, learning_rate > 0, max_epochs >= 1, \
                         tolerance >= 0"
                            .into(),
                    ));
                }
            }
            ModelSpec::Forest {
                trees,
                max_depth,
                min_leaf,
                ..
            } => {
                if *trees == 0 || *max_depth == 0 || *min_leaf == 0 {
                    return Err(Error::Config(
                        "forest spec needs trees, max_depth, min_leaf all >= 1".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// A fitted model of either family.
#[derive(Clone, Debug)]
pub enum FittedModel {
    Logistic(LogisticModel),
    Forest(ForestModel),
}

/// Fit `spec` on encoded rows `x` with labels `y`.
pub fn fit(spec: &ModelSpec, x: &Matrix, y: &[u32]) -> Result<FittedModel> {
    spec.validate()?;
    match spec {
        ModelSpec::Logistic {
            l2,
            learning_rate,
            max_epochs,
            tolerance,
        } => Ok(FittedModel::Logistic(fit_logistic(
            x,
            y,
            *l2,
            *learning_rate,
            *max_epochs,
            *tolerance,
        )?)),
        ModelSpec::Forest {
            trees,
            max_depth,
            min_leaf,
            seed,
        } => Ok(FittedModel::Forest(fit_forest(
            x, y, *trees, *max_depth, *min_leaf, *seed,
        )?)),
    }
}

impl FittedModel {
    pub fn classes(&self) -> &[u32] {
        match self {
            FittedModel::Logistic(m) => &m.classes,
            FittedModel::Forest(m) => &m.classes,
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            FittedModel::Logistic(m) => m.input_dim(),
            FittedModel::Forest(m) => m.input_dim(),
        }
    }

    pub fn fingerprint(&self) -> &str {
        match self {
            FittedModel::Logistic(m) => &m.fingerprint,
            FittedModel::Forest(m) => &m.fingerprint,
        }
    }

    /// Class probabilities, one row per query row, columns in `classes()`
    /// order.
    pub fn predict_proba(&self, x: &Matrix) -> Result<Matrix> {
        match self {
            FittedModel::Logistic(m) => m.predict_proba(x),
            FittedModel::Forest(m) => m.predict_proba(x),
        }
    }

    /// Hard predictions: argmax probability, ties to the lowest class id.
    pub fn predict(&self, x: &Matrix) -> Result<Vec<u32>> {
        let probs = self.predict_proba(x)?;
        let classes = self.classes();
        Ok((0..probs.rows())
            .map(|i| {
                let row = probs.row(i);
                let mut best = 0usize;
                for (k, p) in row.iter().enumerate() {
                    if *p > row[best] {
                        best = k;
                    }
                }
                classes[best]
            })
            .collect())
    }
}

/// Embeddings for the clustering samplers: labeled (fit) rows and query rows
/// mapped into the same space.
pub struct EmbeddingPair {
    pub z_fit: Matrix,
    pub z_query: Matrix,
}

/// Produce the sampler embedding for a fitted model.
///
/// Logistic models use the preprocessed features unchanged. Forests fit a
/// tree-leaf PCA on the labeled rows (capped at [`MAX_EMBEDDING_DIM`]
/// components) and project both row sets through it.
pub fn embedding_for(model: &FittedModel, x_fit: &Matrix, x_query: &Matrix) -> Result<EmbeddingPair> {
    match model {
        FittedModel::Logistic(_) => Ok(EmbeddingPair {
            z_fit: x_fit.clone(),
            z_query: x_query.clone(),
        }),
        FittedModel::Forest(forest) => {
            let pca = fit_leaf_pca(forest, x_fit, MAX_EMBEDDING_DIM)?;
            Ok(EmbeddingPair {
                z_fit: pca.project(forest, x_fit)?,
                z_query: pca.project(forest, x_query)?,
            })
        }
    }
}

/// Pick the best of `specs` by mean validation accuracy over a stratified
/// k-fold cross-validation on the full dataset. Preprocessing is refit on
/// each fold's train rows. Returns the winning spec (ties to the earlier
/// spec) together with all mean scores.
pub fn select_model(
    specs: &[ModelSpec],
    ds: &Dataset,
    k: usize,
    seed: u64,
) -> Result<(ModelSpec, Vec<f64>)> {
    if specs.is_empty() {
        return Err(Error::Config("select_model needs at least one spec".into()));
    }
    if k < 2 {
        return Err(Error::Config("cross-validation needs at least 2 folds".into()));
    }
    for spec in specs {
        spec.validate()?;
    }

    let buckets = stratified_buckets(&ds.labels, ds.class_count(), k, seed);
    let mut scores = vec![0.0; specs.len()];
    let mut folds_used = 0usize;
    for fold in 0..k {
        let val: Vec<usize> = buckets[fold].clone();
        if val.is_empty() {
            continue;
        }
        let fit_rows: Vec<usize> = (0..k)
            .filter(|f| *f != fold)
            .flat_map(|f| buckets[f].iter().copied())
            .collect();
        let mut fit_rows = fit_rows;
        fit_rows.sort_unstable();
        let fm = preprocess(ds, &fit_rows)?;
        let x_fit = fm.x.select_rows(&fit_rows);
        let y_fit: Vec<u32> = fit_rows.iter().map(|&i| ds.labels[i]).collect();
        let x_val = fm.x.select_rows(&val);
        let y_val: Vec<u32> = val.iter().map(|&i| ds.labels[i]).collect();
        for (s, spec) in specs.iter().enumerate() {
            let model = fit(spec, &x_fit, &y_fit)?;
            let pred = model.predict(&x_val)?;
            let correct = pred
                .iter()
                .zip(y_val.iter())
                .filter(|(a, b)| a == b)
                .count();
            scores[s] += correct as f64 / y_val.len() as f64;
        }
        folds_used += 1;
    }
    if folds_used == 0 {
        return Err(Error::Config("no usable validation folds".into()));
    }
    for s in &mut scores {
        *s /= folds_used as f64;
    }
    let mut best = 0usize;
    for (s, score) in scores.iter().enumerate() {
        if *score > scores[best] {
            best = s;
        }
    }
    log::info!(
        "model selection: {:?} -> winner {}",
        scores,
        specs[best].kind_name()
    );
    Ok((specs[best].clone(), scores))
}

/// Shuffle each class and deal it round-robin into `k` buckets, so every
/// bucket mirrors the class balance as closely as possible. Buckets are
/// sorted for determinism downstream.
fn stratified_buckets(labels: &[u32], class_count: usize, k: usize, seed: u64) -> Vec<Vec<usize>> {
    use rand::seq::SliceRandom;
    let mut rng = rng_from(seed, &["model-select"]);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); class_count];
    for (i, &y) in labels.iter().enumerate() {
        by_class[y as usize].push(i);
    }
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); k];
    for members in by_class.iter_mut() {
        members.shuffle(&mut rng);
        for (j, &i) in members.iter().enumerate() {
            buckets[j % k].push(i);
        }
    }
    for b in &mut buckets {
        b.sort_unstable();
    }
    buckets
}

/// Short hash of the training inputs, recorded for provenance.
pub(crate) fn training_fingerprint(x: &Matrix, y: &[u32]) -> String {
    let mut hasher = Sha256::new();
    hasher.update((x.rows() as u64).to_le_bytes());
    hasher.update((x.cols() as u64).to_le_bytes());
    for v in x.data() {
        hasher.update(v.to_le_bytes());
    }
    for label in y {
        hasher.update(label.to_le_bytes());
    }
    let digest = hasher.finalize();
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}
