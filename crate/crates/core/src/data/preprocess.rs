//! Feature encoding: standardization for continuous columns, one-hot for
//! categorical columns. Statistics and vocabularies are computed on the fit
//! rows only, then applied to every row, so nothing leaks from test rows
//! into the encoding.

use std::collections::BTreeSet;

use crate::data::dataset::{Dataset, RawColumn};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Where an encoded column came from.
#[derive(Clone, Debug, PartialEq)]
pub struct ColumnProvenance {
    /// Source column name in the schema.
    pub source: String,
    /// `None` for a standardized continuous column, `Some(value)` for the
    /// one-hot indicator of a categorical value.
    pub category: Option<String>,
}

/// Encoded design matrix over all dataset rows plus per-column provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    pub x: Matrix,
    pub provenance: Vec<ColumnProvenance>,
}

impl FeatureMatrix {
    /// Number of distinct source columns that produced encoded columns.
    pub fn source_count(&self) -> usize {
        let mut seen = BTreeSet::new();
        for p in &self.provenance {
            seen.insert(p.source.as_str());
        }
        seen.len()
    }
}

/// Encode the dataset using statistics from `fit_idx` rows.
///
/// Continuous columns are standardized with the fit-row mean and population
/// standard deviation; a column constant on the fit rows encodes to all
/// zeros. Categorical columns are one-hot encoded over the sorted fit-row
/// vocabulary; a value unseen at fit time encodes to all zeros.
pub fn preprocess(ds: &Dataset, fit_idx: &[usize]) -> Result<FeatureMatrix> {
    if fit_idx.is_empty() {
        return Err(Error::Preprocess("empty fit index set".into()));
    }
    let n = ds.n();
    for &i in fit_idx {
        if i >= n {
            return Err(Error::Preprocess(format!(
                "fit index {i} out of range for {n} rows"
            )));
        }
    }

    let mut encoded: Vec<Vec<f64>> = Vec::new();
    let mut provenance: Vec<ColumnProvenance> = Vec::new();

    for (feature, col) in ds.schema.features.iter().zip(ds.columns.iter()) {
        match col {
            RawColumn::Continuous(values) => {
                let m = fit_idx.len() as f64;
                let mean = fit_idx.iter().map(|&i| values[i]).sum::<f64>() / m;
                let var = fit_idx
                    .iter()
                    .map(|&i| (values[i] - mean).powi(2))
                    .sum::<f64>()
                    / m;
                let std = var.sqrt();
                let column = if std == 0.0 {
                    vec![0.0; n]
                } else {
                    values.iter().map(|v| (v - mean) / std).collect()
                };
                encoded.push(column);
                provenance.push(ColumnProvenance {
                    source: feature.name.clone(),
                    category: None,
                });
            }
            RawColumn::Categorical(values) => {
                let vocab: BTreeSet<&str> = fit_idx.iter().map(|&i| values[i].as_str()).collect();
                for value in &vocab {
                    let column: Vec<f64> = values
                        .iter()
                        .map(|v| if v == value { 1.0 } else { 0.0 })
                        .collect();
                    encoded.push(column);
                    provenance.push(ColumnProvenance {
                        source: feature.name.clone(),
                        category: Some(value.to_string()),
                    });
                }
            }
        }
    }

    // A feature set that is constant on the fit rows gives the models
    // nothing to learn from; fail loudly instead of fitting on zeros.
    let all_constant = encoded.iter().all(|col| {
        let first = col[fit_idx[0]];
        fit_idx.iter().all(|&i| col[i] == first)
    });
    if all_constant {
        return Err(Error::Preprocess(
            "no usable features: every encoded column is constant on the fit rows".into(),
        ));
    }

    let d = encoded.len();
    let mut x = Matrix::zeros(n, d);
    for (j, col) in encoded.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            x.set(i, j, *v);
        }
    }
    Ok(FeatureMatrix { x, provenance })
}
