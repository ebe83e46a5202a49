//! Dataset schema: which CSV column holds the label, which columns are
//! features, and how each feature is typed.
//!
//! Schemas live next to their CSV as a JSON sidecar:
//!
//! ```json
//! {
//!   "label": "class",
//!   "features": [
//!     {"name": "age", "kind": "continuous"},
//!     {"name": "job", "kind": "categorical"}
//!   ],
//!   "dataset_id": "bank",
//!   "classes": ["no", "yes"]
//! }
//! ```
//!
//! The optional `classes` array declares the complete label vocabulary; when
//! present, loading fails if any declared class has no rows in the file.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Continuous,
    Categorical,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureColumn {
    pub name: String,
    pub kind: FeatureKind,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSchema {
    /// Name of the label column in the CSV.
    pub label: String,
    /// Feature columns in the order they should be encoded.
    pub features: Vec<FeatureColumn>,
    /// Identifier the dataset is registered under.
    pub dataset_id: String,
    /// Optional declared label vocabulary; every declared class must occur.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classes: Option<Vec<String>>,
}

impl DatasetSchema {
    pub fn new(
        label: impl Into<String>,
        features: Vec<FeatureColumn>,
        dataset_id: impl Into<String>,
    ) -> Result<Self> {
        let schema = DatasetSchema {
            label: label.into(),
            features,
            dataset_id: dataset_id.into(),
            classes: None,
        };
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        if self.features.is_empty() {
            return Err(Error::Schema("schema declares no feature columns".into()));
        }
        let mut seen = HashSet::new();
        for f in &self.features {
            if f.name == self.label {
                return Err(Error::Schema(format!(
                    "label column '{}' also listed as a feature",
                    self.label
                )));
            }
            if !seen.insert(f.name.as_str()) {
                return Err(Error::Schema(format!(
                    "feature column '{}' listed twice",
                    f.name
                )));
            }
        }
        if let Some(classes) = &self.classes {
            if classes.len() < 2 {
                return Err(Error::Schema(
                    "declared class list must contain at least 2 classes".into(),
                ));
            }
            let mut seen = HashSet::new();
            for c in classes {
                if !seen.insert(c.as_str()) {
                    return Err(Error::Schema(format!("class '{c}' declared twice")));
                }
            }
        }
        Ok(())
    }

    /// Read and validate a schema sidecar file.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let schema: DatasetSchema = serde_json::from_str(&text)
            .map_err(|e| Error::Schema(format!("invalid schema file {}: {e}", path.display())))?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn continuous_count(&self) -> usize {
        self.features
            .iter()
            .filter(|f| f.kind == FeatureKind::Continuous)
            .count()
    }

    pub fn categorical_count(&self) -> usize {
        self.features
            .iter()
            .filter(|f| f.kind == FeatureKind::Categorical)
            .count()
    }
}
