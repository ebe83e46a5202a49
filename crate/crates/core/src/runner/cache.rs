//! Content-addressed result cache.
//!
//! The cache key is a digest of the canonical config JSON plus the engine
//! version; cells live at `<root>/<hash>/cells/<sampler>-f<fold>.jsonl`, one
//! JSON record per line. Any config change produces a different hash, so a
//! stale cell can never be silently reused. Writes are atomic
//! (temp file + rename), so concurrent cells and interrupted runs never
//! leave a torn file behind.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{CellStatus, ExperimentConfig, IterationRecord, ResultSet};
use crate::data::persist::atomic_write;
use crate::error::{Error, Result};
use crate::samplers::SamplerKind;

/// Digest of the canonical config JSON and the engine version: 16 hex
/// characters, used as the run-directory name.
pub fn config_hash(config: &ExperimentConfig) -> Result<String> {
    config.validate()?;
    let body = serde_json::to_string(config)?;
    let mut hasher = Sha256::new();
    hasher.update(body.as_bytes());
    hasher.update(b"\n");
    hasher.update(crate::ENGINE_VERSION.as_bytes());
    let digest = hasher.finalize();
    Ok(digest[..8].iter().map(|b| format!("{b:02x}")).collect())
}

/// Directory holding every artifact of one config: cells, manifest, reports.
pub fn run_dir(root: &Path, hash: &str) -> PathBuf {
    root.join(hash)
}

/// Path of one (sampler, fold) cell file inside a run directory.
pub fn cell_path(dir: &Path, kind: SamplerKind, fold: usize) -> PathBuf {
    dir.join("cells").join(format!("{kind}-f{fold}.jsonl"))
}

/// Serialize records as JSON lines and write them atomically.
pub fn write_cell(path: &Path, records: &[IterationRecord]) -> Result<()> {
    let mut bytes = Vec::new();
    for r in records {
        bytes.extend_from_slice(serde_json::to_string(r)?.as_bytes());
        bytes.push(b'\n');
    }
    atomic_write(path, &bytes)
}

/// Load a cached cell if it is present and internally consistent: one record
/// per line, `iterations + 1` lines, and every line carrying the expected
/// sampler, fold, and line-ordered iteration. Anything else (missing,
/// truncated, corrupt) is a cache miss.
pub fn load_cell(
    path: &Path,
    kind: SamplerKind,
    fold: usize,
    iterations: usize,
) -> Option<Vec<IterationRecord>> {
    let text = std::fs::read_to_string(path).ok()?;
    let mut records = Vec::with_capacity(iterations + 1);
    for (i, line) in text.lines().enumerate() {
        let r: IterationRecord = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(e) => {
                log::warn!("discarding corrupt cache cell {}: {e}", path.display());
                return None;
            }
        };
        if r.sampler != kind || r.fold != fold || r.iteration != i {
            log::warn!(
                "discarding inconsistent cache cell {} (line {i} says {} fold {} iteration {})",
                path.display(),
                r.sampler,
                r.fold,
                r.iteration
            );
            return None;
        }
        records.push(r);
    }
    if records.len() != iterations + 1 {
        log::warn!(
            "discarding truncated cache cell {} ({} of {} records)",
            path.display(),
            records.len(),
            iterations + 1
        );
        return None;
    }
    Some(records)
}

/// Persisted run summary: the config echo, its hash, and per-cell statuses.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub engine_version: String,
    pub cells: Vec<CellStatus>,
}

/// Write `manifest.json` into the run directory (atomically, pretty-printed
/// for humans, deterministic for diffing).
pub fn write_manifest(dir: &Path, rs: &ResultSet) -> Result<()> {
    let manifest = Manifest {
        config: rs.config.clone(),
        config_hash: rs.config_hash.clone(),
        engine_version: rs.engine_version.clone(),
        cells: rs.cells.clone(),
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest)?;
    bytes.push(b'\n');
    atomic_write(&dir.join("manifest.json"), &bytes)
}

/// Read `manifest.json` from a run directory.
pub fn load_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join("manifest.json");
    let text = std::fs::read_to_string(&path).map_err(|e| {
        Error::Config(format!(
            "no manifest at {} (was the run executed?): {e}",
            path.display()
        ))
    })?;
    Ok(serde_json::from_str(&text)?)
}

/// Rebuild a [`ResultSet`] from cached cells for the requested samplers.
/// Cells that are missing or unreadable are listed as failed; an entirely
/// empty result is an error.
pub fn load_result_set(
    root: &Path,
    config: &ExperimentConfig,
    kinds: &[SamplerKind],
) -> Result<ResultSet> {
    if kinds.is_empty() {
        return Err(Error::Config("at least one sampler required".into()));
    }
    let hash = config_hash(config)?;
    let dir = run_dir(root, &hash);
    let mut records = Vec::new();
    let mut cells = Vec::new();
    for &kind in kinds {
        for fold in 0..config.folds {
            let path = cell_path(&dir, kind, fold);
            let rel = format!("cells/{}", path.file_name().unwrap().to_string_lossy());
            match load_cell(&path, kind, fold, config.iterations) {
                Some(rs) => {
                    records.extend(rs);
                    cells.push(CellStatus {
                        sampler: kind,
                        fold,
                        status: "ok".into(),
                        path: rel,
                    });
                }
                None => cells.push(CellStatus {
                    sampler: kind,
                    fold,
                    status: "failed".into(),
                    path: rel,
                }),
            }
        }
    }
    if records.is_empty() {
        return Err(Error::Config(format!(
            "no cached results under {} for this configuration; run the experiment first",
            dir.display()
        )));
    }
    Ok(ResultSet {
        config: config.clone(),
        config_hash: hash,
        engine_version: crate::ENGINE_VERSION.to_string(),
        samplers: kinds.to_vec(),
        records,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::MetricRecord;

    fn record(fold: usize, iteration: usize) -> IterationRecord {
        IterationRecord {
            fold,
            iteration,
            sampler: SamplerKind::Margin,
            metrics: MetricRecord {
                accuracy: 0.5,
                f_score: 0.5,
                agreement: 1.0,
                contradictions: 0.0,
                hard_exploration: 0.0,
                top_exploration: 0.0,
                violations: 0.0,
            },
            selected: vec![1, 2],
            pool_size: 4 + 2 * iteration,
            duration_s: 0.0,
        }
    }

    #[test]
    fn cell_round_trip_and_rejection_of_damage() {
        let dir = tempfile::tempdir().unwrap();
        let path = cell_path(dir.path(), SamplerKind::Margin, 3);
        let records = vec![record(3, 0), record(3, 1), record(3, 2)];
        write_cell(&path, &records).unwrap();
        assert_eq!(
            load_cell(&path, SamplerKind::Margin, 3, 2).unwrap(),
            records
        );
        // Wrong expectations are misses, not panics.
        assert!(load_cell(&path, SamplerKind::Margin, 2, 2).is_none());
        assert!(load_cell(&path, SamplerKind::Random, 3, 2).is_none());
        assert!(load_cell(&path, SamplerKind::Margin, 3, 5).is_none());
        // Truncation is a miss.
        let text = std::fs::read_to_string(&path).unwrap();
        let cut = text.lines().next().unwrap();
        std::fs::write(&path, format!("{cut}\n")).unwrap();
        assert!(load_cell(&path, SamplerKind::Margin, 3, 2).is_none());
        // Corruption is a miss.
        std::fs::write(&path, "not json\n").unwrap();
        assert!(load_cell(&path, SamplerKind::Margin, 3, 2).is_none());
    }

    #[test]
    fn record_lines_use_the_contract_field_names() {
        let json = serde_json::to_string(&record(1, 2)).unwrap();
        for key in [
            "\"fold\"",
            "\"iteration\"",
            "\"sampler\"",
            "\"metrics\"",
            "\"selected\"",
            "\"pool_size\"",
            "\"duration_s\"",
        ] {
            assert!(json.contains(key), "{key} missing from {json}");
        }
        assert!(json.contains("\"margin\""));
    }
}
