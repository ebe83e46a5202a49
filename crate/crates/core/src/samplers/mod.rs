//! Query strategies: given the current model's probabilities and embeddings
//! over the unlabeled pool, pick the next batch to label.

pub mod clustering;
pub mod kcenter;
pub mod uncertainty;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub use clustering::{
    representatives, select_iwkmeans, select_kmeans, select_wkmeans, weighted_kmeans,
    weighted_kmeans_frozen, KMeansOutcome, KMeansParams,
};
pub use kcenter::select_kcenter;
pub use uncertainty::{
    rank_top, select_random, select_uncertainty, uncertainty_scores, validate_probabilities,
};

/// The three uncertainty scores.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UncertaintyKind {
    Confidence,
    Margin,
    Entropy,
}

/// Every sampler the engine knows, by its canonical name.
pub const SAMPLER_KINDS: [&str; 8] = [
    "random",
    "confidence",
    "margin",
    "entropy",
    "kmeans",
    "wkmeans",
    "iwkmeans",
    "kcenter",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SamplerKind {
    #[serde(rename = "random")]
    Random,
    #[serde(rename = "confidence")]
    Confidence,
    #[serde(rename = "margin")]
    Margin,
    #[serde(rename = "entropy")]
    Entropy,
    #[serde(rename = "kmeans")]
    KMeans,
    #[serde(rename = "wkmeans")]
    WKMeans,
    #[serde(rename = "iwkmeans")]
    IWKMeans,
    #[serde(rename = "kcenter")]
    KCenter,
}

impl SamplerKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SamplerKind::Random => "random",
            SamplerKind::Confidence => "confidence",
            SamplerKind::Margin => "margin",
            SamplerKind::Entropy => "entropy",
            SamplerKind::KMeans => "kmeans",
            SamplerKind::WKMeans => "wkmeans",
            SamplerKind::IWKMeans => "iwkmeans",
            SamplerKind::KCenter => "kcenter",
        }
    }

    pub fn all() -> Vec<SamplerKind> {
        SAMPLER_KINDS
            .iter()
            .map(|s| s.parse().expect("canonical name"))
            .collect()
    }
}

impl std::str::FromStr for SamplerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "random" => SamplerKind::Random,
            "confidence" => SamplerKind::Confidence,
            "margin" => SamplerKind::Margin,
            "entropy" => SamplerKind::Entropy,
            "kmeans" => SamplerKind::KMeans,
            "wkmeans" => SamplerKind::WKMeans,
            "iwkmeans" => SamplerKind::IWKMeans,
            "kcenter" => SamplerKind::KCenter,
            other => {
                return Err(Error::Sampler(format!(
                    "unknown sampler '{other}'; valid: {SAMPLER_KINDS:?}"
                )))
            }
        })
    }
}

impl std::fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Fully parameterized sampler instance for one (fold, iteration) query.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerSpec {
    pub kind: SamplerKind,
    /// Prefilter multiplier for the weighted k-means variants.
    pub beta: f64,
    pub kmeans: KMeansParams,
    pub seed: u64,
}

impl SamplerSpec {
    pub fn new(kind: SamplerKind, seed: u64) -> Self {
        SamplerSpec {
            kind,
            beta: 10.0,
            kmeans: KMeansParams::default(),
            seed,
        }
    }
}

/// Everything a sampler may look at when choosing a batch.
pub struct QueryContext<'a> {
    /// Dataset indices of the unlabeled candidates, ascending.
    pub unlabeled: &'a [usize],
    /// Model probabilities for the candidates, one row each.
    pub probs: &'a Matrix,
    /// Candidate embeddings, one row each (same order).
    pub z_unlabeled: &'a Matrix,
    /// Labeled-pool embeddings (in labeled-pool order).
    pub z_labeled: &'a Matrix,
    /// Number of indices to select.
    pub batch: usize,
}

/// Dispatch a selection. Returns `batch` distinct dataset indices drawn from
/// `ctx.unlabeled`.
pub fn select(spec: &SamplerSpec, ctx: &QueryContext) -> Result<Vec<usize>> {
    let n = ctx.unlabeled.len();
    if ctx.batch == 0 {
        return Err(Error::Sampler("batch size must be at least 1".into()));
    }
    if ctx.batch > n {
        return Err(Error::Sampler(format!(
            "batch of {} exceeds the {n} unlabeled candidates",
            ctx.batch
        )));
    }
    if ctx.probs.rows() != n || ctx.z_unlabeled.rows() != n {
        return Err(Error::Sampler(format!(
            "context rows disagree: {n} candidates, {} probability rows, {} embedding rows",
            ctx.probs.rows(),
            ctx.z_unlabeled.rows()
        )));
    }
    if ctx.z_labeled.rows() > 0 && ctx.z_labeled.cols() != ctx.z_unlabeled.cols() {
        return Err(Error::Dimension {
            expected: ctx.z_unlabeled.cols(),
            got: ctx.z_labeled.cols(),
        });
    }

    match spec.kind {
        SamplerKind::Random => select_random(ctx, spec.seed),
        SamplerKind::Confidence => select_uncertainty(ctx, UncertaintyKind::Confidence),
        SamplerKind::Margin => select_uncertainty(ctx, UncertaintyKind::Margin),
        SamplerKind::Entropy => select_uncertainty(ctx, UncertaintyKind::Entropy),
        SamplerKind::KMeans => select_kmeans(ctx, &spec.kmeans, spec.seed),
        SamplerKind::WKMeans => select_wkmeans(ctx, spec.beta, &spec.kmeans, spec.seed),
        SamplerKind::IWKMeans => select_iwkmeans(ctx, spec.beta, &spec.kmeans, spec.seed),
        SamplerKind::KCenter => select_kcenter(ctx),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    struct Fixture {
        unlabeled: Vec<usize>,
        probs: Matrix,
        z_unlabeled: Matrix,
        z_labeled: Matrix,
    }

    impl Fixture {
        fn ctx(&self, batch: usize) -> QueryContext<'_> {
            QueryContext {
                unlabeled: &self.unlabeled,
                probs: &self.probs,
                z_unlabeled: &self.z_unlabeled,
                z_labeled: &self.z_labeled,
                batch,
            }
        }
    }

    fn fixture(n: usize) -> Fixture {
        let unlabeled: Vec<usize> = (0..n).map(|i| i * 3 + 1).collect();
        let probs = Matrix::from_rows(
            (0..n)
                .map(|i| {
                    let p = 0.5 + 0.45 * ((i as f64 * 0.37).sin());
                    vec![p, 1.0 - p]
                })
                .collect(),
        )
        .unwrap();
        let z_unlabeled = Matrix::from_rows(
            (0..n)
                .map(|i| {
                    let t = i as f64;
                    vec![(t * 0.9).cos() * 4.0, (t * 0.31).sin() * 4.0]
                })
                .collect(),
        )
        .unwrap();
        let z_labeled = Matrix::from_rows(vec![vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap();
        Fixture {
            unlabeled,
            probs,
            z_unlabeled,
            z_labeled,
        }
    }

    #[test]
    fn every_sampler_returns_distinct_candidates_of_the_right_size() {
        let fx = fixture(40);
        for kind in SamplerKind::all() {
            let spec = SamplerSpec::new(kind, 99);
            let picks = select(&spec, &fx.ctx(6)).unwrap();
            assert_eq!(picks.len(), 6, "{kind}");
            let set: BTreeSet<usize> = picks.iter().copied().collect();
            assert_eq!(set.len(), 6, "{kind} returned duplicates");
            for p in &picks {
                assert!(fx.unlabeled.contains(p), "{kind} picked a non-candidate");
            }
        }
    }

    #[test]
    fn every_sampler_is_deterministic() {
        let fx = fixture(30);
        for kind in SamplerKind::all() {
            let spec = SamplerSpec::new(kind, 7);
            let a = select(&spec, &fx.ctx(5)).unwrap();
            let b = select(&spec, &fx.ctx(5)).unwrap();
            assert_eq!(a, b, "{kind}");
        }
    }

    #[test]
    fn batch_equal_to_pool_returns_everything() {
        let fx = fixture(8);
        for kind in SamplerKind::all() {
            let spec = SamplerSpec::new(kind, 3);
            let picks = select(&spec, &fx.ctx(8)).unwrap();
            let set: BTreeSet<usize> = picks.iter().copied().collect();
            let expect: BTreeSet<usize> = fx.unlabeled.iter().copied().collect();
            assert_eq!(set, expect, "{kind}");
        }
    }

    #[test]
    fn oversized_batch_is_an_error() {
        let fx = fixture(5);
        let spec = SamplerSpec::new(SamplerKind::Random, 1);
        assert!(select(&spec, &fx.ctx(6)).is_err());
        assert!(select(&spec, &fx.ctx(0)).is_err());
    }

    #[test]
    fn kmeans_equals_wkmeans_under_uniform_scores() {
        // With fully uniform probability rows every margin score is exactly
        // 1 and a huge beta disables the prefilter, so the weighted pipeline
        // degenerates to plain k-means bit for bit.
        let fx = fixture(25);
        let uniform = Matrix::from_rows(vec![vec![0.5, 0.5]; 25]).unwrap();
        let ctx_uniform = QueryContext {
            unlabeled: &fx.unlabeled,
            probs: &uniform,
            z_unlabeled: &fx.z_unlabeled,
            z_labeled: &fx.z_labeled,
            batch: 4,
        };
        let kmeans_spec = SamplerSpec::new(SamplerKind::KMeans, 55);
        let mut wkmeans_spec = SamplerSpec::new(SamplerKind::WKMeans, 55);
        wkmeans_spec.beta = 1e9;
        let a = select(&kmeans_spec, &ctx_uniform).unwrap();
        let b = select(&wkmeans_spec, &ctx_uniform).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn iwkmeans_with_empty_labeled_pool_matches_wkmeans() {
        let fx = fixture(20);
        let empty = Matrix::zeros(0, 2);
        let ctx = QueryContext {
            unlabeled: &fx.unlabeled,
            probs: &fx.probs,
            z_unlabeled: &fx.z_unlabeled,
            z_labeled: &empty,
            batch: 4,
        };
        let w = select(&SamplerSpec::new(SamplerKind::WKMeans, 13), &ctx).unwrap();
        let iw = select(&SamplerSpec::new(SamplerKind::IWKMeans, 13), &ctx).unwrap();
        assert_eq!(w, iw);
    }

    #[test]
    fn iwkmeans_avoids_labeled_regions() {
        // Two well-separated candidate blobs; the labeled pool sits on top
        // of the first. The frozen centroid absorbs that blob, so a single
        // free centroid lands in the other one.
        let mut rows = Vec::new();
        for i in 0..6 {
            rows.push(vec![0.0 + 0.01 * i as f64, 0.0]);
        }
        for i in 0..6 {
            rows.push(vec![20.0 + 0.01 * i as f64, 0.0]);
        }
        let z = Matrix::from_rows(rows).unwrap();
        let unlabeled: Vec<usize> = (0..12).collect();
        let probs = Matrix::from_rows(vec![vec![0.5, 0.5]; 12]).unwrap();
        let z_labeled = Matrix::from_rows(vec![vec![0.02, 0.0]]).unwrap();
        let ctx = QueryContext {
            unlabeled: &unlabeled,
            probs: &probs,
            z_unlabeled: &z,
            z_labeled: &z_labeled,
            batch: 1,
        };
        let picks = select(&SamplerSpec::new(SamplerKind::IWKMeans, 3), &ctx).unwrap();
        assert!(picks[0] >= 6, "pick {picks:?} should come from the far blob");
    }

    #[test]
    fn wkmeans_falls_back_to_margin_when_scores_vanish()
    {
        // All rows are certain: margin scores are all zero, so clustering
        // has nothing to weight and the sampler degrades to margin ranking.
        let n = 10;
        let unlabeled: Vec<usize> = (0..n).collect();
        let probs = Matrix::from_rows(vec![vec![1.0, 0.0]; n]).unwrap();
        let z = Matrix::from_rows((0..n).map(|i| vec![i as f64]).collect()).unwrap();
        let z_labeled = Matrix::zeros(0, 1);
        let ctx = QueryContext {
            unlabeled: &unlabeled,
            probs: &probs,
            z_unlabeled: &z,
            z_labeled: &z_labeled,
            batch: 3,
        };
        let picks = select(&SamplerSpec::new(SamplerKind::WKMeans, 1), &ctx).unwrap();
        // Margin ranking with all-equal scores keeps the lowest positions.
        assert_eq!(picks, vec![0, 1, 2]);
    }

    #[test]
    fn kind_names_round_trip() {
        for name in SAMPLER_KINDS {
            let kind: SamplerKind = name.parse().unwrap();
            assert_eq!(kind.as_str(), name);
            let json = serde_json::to_string(&kind).unwrap();
            assert_eq!(json, format!("\"{name}\""));
        }
        assert!("banditron".parse::<SamplerKind>().is_err());
    }
}
