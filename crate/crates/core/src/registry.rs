//! Dataset registry: bundled synthetic generators plus any (csv, schema
//! json) pairs found in a data directory.
//!
//! Synthetic datasets are generated from fixed internal seeds, so their
//! content is identical on every machine and independent of the experiment
//! master seed. A directory dataset is a `<id>.csv` file with a sibling
//! `<id>.json` schema.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::dataset::finish_dataset;
use crate::data::{
    load_dataset, Dataset, DatasetSchema, FeatureColumn, FeatureKind, RawColumn,
};
use crate::error::{Error, Result};
use crate::rng::rng_from;

/// Ids of the bundled synthetic datasets.
pub const BUILTIN_DATASETS: [&str; 3] = ["synth-blobs", "synth-rgb", "synth-xor"];

/// Where a registered dataset comes from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DatasetSource {
    /// Bundled generator, keyed by id.
    Builtin,
    /// CSV file plus JSON schema sidecar on disk.
    Files { csv: PathBuf, schema: PathBuf },
}

/// Registered datasets, sorted by id.
#[derive(Clone, Debug, Default)]
pub struct Registry {
    entries: BTreeMap<String, DatasetSource>,
}

impl Registry {
    /// Builtin generators plus, when `data_dir` is given, every
    /// `<id>.csv` / `<id>.json` pair found directly inside it. A file
    /// dataset may shadow a builtin id.
    pub fn discover(data_dir: Option<&Path>) -> Result<Registry> {
        let mut entries = BTreeMap::new();
        for id in BUILTIN_DATASETS {
            entries.insert(id.to_string(), DatasetSource::Builtin);
        }
        if let Some(dir) = data_dir {
            if !dir.is_dir() {
                return Err(Error::Config(format!(
                    "data directory {} does not exist",
                    dir.display()
                )));
            }
            for entry in std::fs::read_dir(dir)? {
                let path = entry?.path();
                if path.extension().and_then(|e| e.to_str()) != Some("csv") {
                    continue;
                }
                let schema = path.with_extension("json");
                if !schema.is_file() {
                    log::warn!(
                        "ignoring {}: no schema sidecar at {}",
                        path.display(),
                        schema.display()
                    );
                    continue;
                }
                let id = path
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .unwrap_or_default()
                    .to_string();
                if id.is_empty() {
                    continue;
                }
                entries.insert(id, DatasetSource::Files { csv: path, schema });
            }
        }
        Ok(Registry { entries })
    }

    /// Registered ids, sorted.
    pub fn ids(&self) -> Vec<String> {
        self.entries.keys().cloned().collect()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.entries.contains_key(id)
    }

    /// Load a registered dataset. Unknown ids list what is registered.
    pub fn load(&self, id: &str) -> Result<Dataset> {
        match self.entries.get(id) {
            None => Err(Error::UnknownDataset {
                id: id.to_string(),
                known: self.ids(),
            }),
            Some(DatasetSource::Builtin) => generate_builtin(id),
            Some(DatasetSource::Files { csv, schema }) => {
                let schema = DatasetSchema::from_path(schema)?;
                if schema.dataset_id != id {
                    return Err(Error::Schema(format!(
                        "schema at {} names dataset '{}' but is registered as '{id}'",
                        csv.display(),
                        schema.dataset_id
                    )));
                }
                load_dataset(csv, &schema)
            }
        }
    }
}

/// Table row for dataset listings: "n, classes, continuous/categorical,
/// balance" — e.g. "45221, 2, 7/9, 0.88/0.12".
pub fn format_dataset_row(ds: &Dataset) -> String {
    let balance = ds
        .class_balance()
        .iter()
        .map(|b| format!("{b:.2}"))
        .collect::<Vec<_>>()
        .join("/");
    format!(
        "{}, {}, {}/{}, {}",
        ds.n(),
        ds.class_count(),
        ds.schema.continuous_count(),
        ds.schema.categorical_count(),
        balance
    )
}

fn generate_builtin(id: &str) -> Result<Dataset> {
    match id {
        "synth-blobs" => generate_blobs(),
        "synth-rgb" => generate_rgb(),
        "synth-xor" => generate_xor(),
        other => Err(Error::UnknownDataset {
            id: other.to_string(),
            known: BUILTIN_DATASETS.iter().map(|s| s.to_string()).collect(),
        }),
    }
}

fn continuous_schema(id: &str, names: &[&str]) -> Result<DatasetSchema> {
    DatasetSchema::new(
        "class",
        names
            .iter()
            .map(|n| FeatureColumn {
                name: n.to_string(),
                kind: FeatureKind::Continuous,
            })
            .collect(),
        id,
    )
}

/// Two balanced, well-separated 2-D Gaussian blobs (n = 10_000).
fn generate_blobs() -> Result<Dataset> {
    let n = 10_000;
    let mut rng = rng_from(11, &["synth", "synth-blobs"]);
    let mut x0 = Vec::with_capacity(n);
    let mut x1 = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let left = i % 2 == 0;
        let center = if left { -2.0 } else { 2.0 };
        let e0: f64 = StandardNormal.sample(&mut rng);
        let e1: f64 = StandardNormal.sample(&mut rng);
        x0.push(center + e0);
        x1.push(e1);
        labels.push(if left { "left".into() } else { "right".into() });
    }
    finish_dataset(
        continuous_schema("synth-blobs", &["x0", "x1"])?,
        vec![RawColumn::Continuous(x0), RawColumn::Continuous(x1)],
        labels,
    )
}

/// Four tight corner blobs labeled by sign parity (n = 2_000): linearly
/// inseparable, a natural fit for the forest model.
fn generate_xor() -> Result<Dataset> {
    let n = 2_000;
    let mut rng = rng_from(22, &["synth", "synth-xor"]);
    let mut x0 = Vec::with_capacity(n);
    let mut x1 = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let sx = if i % 2 == 0 { 1.0 } else { -1.0 };
        let sy = if (i / 2) % 2 == 0 { 1.0 } else { -1.0 };
        let e0: f64 = StandardNormal.sample(&mut rng);
        let e1: f64 = StandardNormal.sample(&mut rng);
        x0.push(sx + 0.3 * e0);
        x1.push(sy + 0.3 * e1);
        labels.push(if sx * sy > 0.0 { "even".into() } else { "odd".into() });
    }
    finish_dataset(
        continuous_schema("synth-xor", &["x0", "x1"])?,
        vec![RawColumn::Continuous(x0), RawColumn::Continuous(x1)],
        labels,
    )
}

/// Imbalanced two-class color dataset (n = 10_000): three channels, classes
/// split by total brightness with a thin margin around r + g + b = 1.5 and
/// most variance parallel to the class boundary. Random labeling estimates
/// that boundary poorly at small budgets, which is exactly the regime where
/// uncertainty-driven samplers pull ahead.
fn generate_rgb() -> Result<Dataset> {
    let n = 10_000;
    let dark = 7_500;
    let mut rng = rng_from(33, &["synth", "synth-rgb"]);
    // Orthonormal frame: e is the boundary normal (brightness direction),
    // u/v span the boundary plane.
    let s3 = 3.0f64.sqrt();
    let s2 = 2.0f64.sqrt();
    let s6 = 6.0f64.sqrt();
    let e = [1.0 / s3, 1.0 / s3, 1.0 / s3];
    let u = [1.0 / s2, -1.0 / s2, 0.0];
    let v = [1.0 / s6, 1.0 / s6, -2.0 / s6];
    let gap = 0.02;

    let mut r = Vec::with_capacity(n);
    let mut g = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let is_dark = i < dark;
        // Signed brightness offset from the boundary, kept off the gap.
        let a = loop {
            let e0: f64 = StandardNormal.sample(&mut rng);
            let a = if is_dark { -0.29 + 0.15 * e0 } else { 0.29 + 0.15 * e0 };
            if is_dark && a <= -gap {
                break a;
            }
            if !is_dark && a >= gap {
                break a;
            }
        };
        let t1: f64 = 0.45 * rng.sample::<f64, _>(StandardNormal);
        let t2: f64 = 0.45 * rng.sample::<f64, _>(StandardNormal);
        let point = [
            0.5 + a * e[0] + t1 * u[0] + t2 * v[0],
            0.5 + a * e[1] + t1 * u[1] + t2 * v[1],
            0.5 + a * e[2] + t1 * u[2] + t2 * v[2],
        ];
        r.push(point[0]);
        g.push(point[1]);
        b.push(point[2]);
        labels.push(if is_dark { "dark".into() } else { "bright".into() });
    }
    finish_dataset(
        continuous_schema("synth-rgb", &["red", "green", "blue"])?,
        vec![
            RawColumn::Continuous(r),
            RawColumn::Continuous(g),
            RawColumn::Continuous(b),
        ],
        labels,
    )
}
