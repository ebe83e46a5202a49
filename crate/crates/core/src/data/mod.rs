//! Dataset handling: schemas, CSV loading, preprocessing, stratified
//! splits, initial labeled pools, and index persistence.

pub mod dataset;
pub mod persist;
pub mod preprocess;
pub mod schema;
pub mod split;

pub use dataset::{check_plausibility, load_dataset, Dataset, PlausibilityReport, RawColumn};
pub use persist::{load_indices, persist_indices, FoldIndices, InitialConditions};
pub use preprocess::{preprocess, ColumnProvenance, FeatureMatrix};
pub use schema::{DatasetSchema, FeatureColumn, FeatureKind};
pub use split::{init_pool, init_pool_size, stratified_shuffle_split, LabeledPool, Split};
