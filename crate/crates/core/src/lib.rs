//! Core engine for reproducible pool-based active-learning benchmarks.
//!
//! The crate is organized around a small pipeline:
//!
//! 1. [`data`] loads CSV datasets against JSON schemas, encodes features,
//!    generates stratified shuffle splits and initial labeled pools, and
//!    persists those indices with integrity checksums.
//! 2. [`models`] fits the inductive learners (multinomial logistic
//!    regression, random forest), a 1-nearest-neighbor reference model, and
//!    produces embeddings for clustering-based samplers.
//! 3. [`samplers`] implements the query strategies: random, uncertainty
//!    (confidence / margin / entropy), k-means variants, and k-center.
//! 4. [`metrics`] scores each iteration: accuracy, macro F-score, model
//!    agreement, contradictions, exploration measures, and conformance
//!    violations.
//! 5. [`runner`] orchestrates folds x iterations x samplers with
//!    content-addressed caching, and aggregates results across folds.
//!
//! Everything is deterministic: each random decision draws from a ChaCha8
//! stream whose seed is derived from the master seed and the decision site
//! (see [`rng`]), so reruns are byte-identical.

pub mod data;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod models;
pub mod registry;
pub mod report;
pub mod rng;
pub mod runner;
pub mod samplers;

pub use error::{Error, Result};

/// Version string recorded in run manifests and cache keys; bump to
/// invalidate caches when result-affecting behavior changes.
pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");
