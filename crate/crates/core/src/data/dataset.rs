//! In-memory dataset: raw typed columns plus integer class labels.

use std::collections::BTreeMap;
use std::path::Path;

use crate::data::schema::{DatasetSchema, FeatureKind};
use crate::error::{Error, Result};

/// One raw feature column, parallel to `schema.features`.
#[derive(Clone, Debug, PartialEq)]
pub enum RawColumn {
    Continuous(Vec<f64>),
    Categorical(Vec<String>),
}

/// A loaded dataset. Labels are stored as dense class ids indexing
/// `class_names`, which is the sorted distinct label vocabulary.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub schema: DatasetSchema,
    pub columns: Vec<RawColumn>,
    pub labels: Vec<u32>,
    pub class_names: Vec<String>,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    /// Rows per class, indexed by class id.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.class_count()];
        for &y in &self.labels {
            counts[y as usize] += 1;
        }
        counts
    }

    /// Class shares in descending order, e.g. `[0.88, 0.12]`.
    pub fn class_balance(&self) -> Vec<f64> {
        let n = self.n() as f64;
        let mut shares: Vec<f64> = self
            .class_counts()
            .into_iter()
            .map(|c| c as f64 / n)
            .collect();
        shares.sort_by(|a, b| b.partial_cmp(a).unwrap());
        shares
    }

    /// Validate the structural invariants every loaded dataset must satisfy.
    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if n < 2 {
            return Err(Error::Dataset(format!(
                "dataset '{}' has {n} rows; at least 2 are required",
                self.schema.dataset_id
            )));
        }
        if self.class_count() < 2 {
            return Err(Error::Dataset(format!(
                "dataset '{}' has {} class(es); at least 2 are required",
                self.schema.dataset_id,
                self.class_count()
            )));
        }
        if self.columns.len() != self.schema.features.len() {
            return Err(Error::Dataset(format!(
                "dataset '{}' has {} columns but schema declares {}",
                self.schema.dataset_id,
                self.columns.len(),
                self.schema.features.len()
            )));
        }
        for col in &self.columns {
            let len = match col {
                RawColumn::Continuous(v) => v.len(),
                RawColumn::Categorical(v) => v.len(),
            };
            if len != n {
                return Err(Error::Dataset(format!(
                    "column length {len} does not match row count {n}"
                )));
            }
        }
        let counts = self.class_counts();
        for (id, c) in counts.iter().enumerate() {
            if *c == 0 {
                return Err(Error::Dataset(format!(
                    "class '{}' has no rows",
                    self.class_names[id]
                )));
            }
        }
        Ok(())
    }
}

/// Outcome of the dataset-size plausibility check. Small datasets are not an
/// error, but batch-mode experiments assume roughly ten thousand rows or
/// more, so anything smaller must be explicitly overridden.
#[derive(Clone, Debug, PartialEq)]
pub struct PlausibilityReport {
    pub n: usize,
    pub threshold: usize,
    pub passed: bool,
    pub overridden: bool,
    pub warning: Option<String>,
}

pub const PLAUSIBILITY_THRESHOLD: usize = 10_000;

pub fn check_plausibility(ds: &Dataset, override_small: bool) -> PlausibilityReport {
    let n = ds.n();
    let big_enough = n >= PLAUSIBILITY_THRESHOLD;
    let warning = if big_enough {
        None
    } else {
        Some(format!(
            "dataset '{}' has {n} rows, below the plausibility threshold of {}; \
             fraction-derived batch sizes will be very small",
            ds.schema.dataset_id, PLAUSIBILITY_THRESHOLD
        ))
    };
    PlausibilityReport {
        n,
        threshold: PLAUSIBILITY_THRESHOLD,
        passed: big_enough || override_small,
        overridden: !big_enough && override_small,
        warning,
    }
}

/// Load a CSV (RFC 4180, with a header row) against a schema.
pub fn load_dataset(csv_path: &Path, schema: &DatasetSchema) -> Result<Dataset> {
    schema.validate()?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(csv_path)?;

    let headers = reader.headers()?.clone();
    let position = |name: &str| headers.iter().position(|h| h == name);

    let label_pos = position(&schema.label).ok_or_else(|| {
        Error::Schema(format!(
            "label column '{}' not found in {}",
            schema.label,
            csv_path.display()
        ))
    })?;
    let mut feature_pos = Vec::with_capacity(schema.features.len());
    let mut missing = Vec::new();
    for f in &schema.features {
        match position(&f.name) {
            Some(p) => feature_pos.push(p),
            None => missing.push(f.name.clone()),
        }
    }
    if !missing.is_empty() {
        return Err(Error::Schema(format!(
            "feature column(s) {missing:?} not found in {}",
            csv_path.display()
        )));
    }

    let mut columns: Vec<RawColumn> = schema
        .features
        .iter()
        .map(|f| match f.kind {
            FeatureKind::Continuous => RawColumn::Continuous(Vec::new()),
            FeatureKind::Categorical => RawColumn::Categorical(Vec::new()),
        })
        .collect();
    let mut raw_labels: Vec<String> = Vec::new();

    for (row_idx, record) in reader.records().enumerate() {
        let record = record?;
        let row = row_idx + 1; // 1-based data row for error messages
        let label = record.get(label_pos).unwrap_or("").to_string();
        if label.is_empty() {
            return Err(Error::Parse {
                row,
                column: schema.label.clone(),
                message: "empty label".into(),
            });
        }
        raw_labels.push(label);
        for (f, (&pos, col)) in schema
            .features
            .iter()
            .zip(feature_pos.iter().zip(columns.iter_mut()))
        {
            let cell = record.get(pos).unwrap_or("");
            match col {
                RawColumn::Continuous(values) => {
                    let v: f64 = cell.trim().parse().map_err(|_| Error::Parse {
                        row,
                        column: f.name.clone(),
                        message: format!("cannot parse '{cell}' as a number"),
                    })?;
                    if !v.is_finite() {
                        return Err(Error::Parse {
                            row,
                            column: f.name.clone(),
                            message: format!("non-finite value '{cell}'"),
                        });
                    }
                    values.push(v);
                }
                // Empty categorical cells become their own category.
                RawColumn::Categorical(values) => values.push(cell.to_string()),
            }
        }
    }

    if raw_labels.is_empty() {
        return Err(Error::Format(format!(
            "{} contains no data rows",
            csv_path.display()
        )));
    }

    let dataset = finish_dataset(schema.clone(), columns, raw_labels)?;
    Ok(dataset)
}

/// Resolve string labels into sorted class ids and run final validation.
pub fn finish_dataset(
    schema: DatasetSchema,
    columns: Vec<RawColumn>,
    raw_labels: Vec<String>,
) -> Result<Dataset> {
    let mut observed: BTreeMap<&str, usize> = BTreeMap::new();
    for l in &raw_labels {
        *observed.entry(l.as_str()).or_insert(0) += 1;
    }

    let class_names: Vec<String> = match &schema.classes {
        Some(declared) => {
            let absent: Vec<&String> = declared
                .iter()
                .filter(|c| !observed.contains_key(c.as_str()))
                .collect();
            if !absent.is_empty() {
                return Err(Error::Dataset(format!(
                    "declared class(es) {absent:?} have no rows in dataset '{}'",
                    schema.dataset_id
                )));
            }
            let unknown: Vec<&&str> = observed
                .keys()
                .filter(|k| !declared.iter().any(|c| c == **k))
                .collect();
            if !unknown.is_empty() {
                return Err(Error::Dataset(format!(
                    "label(s) {unknown:?} not in the declared class list of '{}'",
                    schema.dataset_id
                )));
            }
            let mut sorted = declared.clone();
            sorted.sort();
            sorted
        }
        None => observed.keys().map(|k| k.to_string()).collect(),
    };

    let labels: Vec<u32> = raw_labels
        .iter()
        .map(|l| {
            class_names
                .binary_search_by(|c| c.as_str().cmp(l.as_str()))
                .expect("label resolved against class vocabulary") as u32
        })
        .collect();

    let ds = Dataset {
        schema,
        columns,
        labels,
        class_names,
    };
    ds.validate()?;
    Ok(ds)
}
