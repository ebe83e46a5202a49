//! Persistence of split and initial-pool indices.
//!
//! Index files are JSON with a SHA-256 checksum over the canonical body, so
//! that silently truncated or edited files are rejected instead of feeding a
//! run with wrong indices. Writes go through a temp file plus rename, so a
//! crash never leaves a half-written file at the target path.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::split::{LabeledPool, Split};
use crate::error::{Error, Result};

/// Indices of one fold: train/test partition plus the initial labeled pool
/// (in draw order).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldIndices {
    pub fold: usize,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub init: Vec<usize>,
}

/// Everything needed to reproduce a run's splits: the dataset, the master
/// seed, and per-fold indices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InitialConditions {
    pub dataset_id: String,
    pub seed: u64,
    pub folds: Vec<FoldIndices>,
}

#[derive(Serialize, Deserialize)]
struct IndexFile {
    dataset_id: String,
    seed: u64,
    folds: Vec<FoldIndices>,
    checksum: String,
}

impl InitialConditions {
    pub fn new(
        dataset_id: impl Into<String>,
        seed: u64,
        splits: Vec<Split>,
        pools: Vec<LabeledPool>,
    ) -> Result<Self> {
        if splits.len() != pools.len() {
            return Err(Error::Config(format!(
                "{} splits but {} initial pools",
                splits.len(),
                pools.len()
            )));
        }
        let folds = splits
            .into_iter()
            .zip(pools)
            .map(|(s, p)| {
                if s.fold != p.fold {
                    return Err(Error::Config(format!(
                        "split fold {} paired with pool fold {}",
                        s.fold, p.fold
                    )));
                }
                Ok(FoldIndices {
                    fold: s.fold,
                    train: s.train,
                    test: s.test,
                    init: p.indices,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(InitialConditions {
            dataset_id: dataset_id.into(),
            seed,
            folds,
        })
    }

    fn checksum(&self) -> Result<String> {
        let body = serde_json::to_vec(self)?;
        let mut hasher = Sha256::new();
        hasher.update(&body);
        Ok(hex(&hasher.finalize()))
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Write `data` to `path` atomically: temp file in the same directory, then
/// rename over the target.
pub fn atomic_write(path: &Path, data: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    std::io::Write::write_all(&mut tmp, data)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    Ok(())
}

/// Persist initial conditions as a checksummed JSON index file.
pub fn persist_indices(ic: &InitialConditions, path: &Path) -> Result<()> {
    let file = IndexFile {
        dataset_id: ic.dataset_id.clone(),
        seed: ic.seed,
        folds: ic.folds.clone(),
        checksum: ic.checksum()?,
    };
    let bytes = serde_json::to_vec(&file)?;
    atomic_write(path, &bytes)
}

/// Load and verify an index file. A parse failure or checksum mismatch is an
/// integrity error.
pub fn load_indices(path: &Path) -> Result<InitialConditions> {
    let text = std::fs::read_to_string(path)?;
    let file: IndexFile = serde_json::from_str(&text).map_err(|e| {
        Error::Integrity(format!("corrupt index file {}: {e}", path.display()))
    })?;
    let ic = InitialConditions {
        dataset_id: file.dataset_id,
        seed: file.seed,
        folds: file.folds,
    };
    let expect = ic.checksum()?;
    if expect != file.checksum {
        return Err(Error::Integrity(format!(
            "checksum mismatch in {}: file says {}, body hashes to {expect}",
            path.display(),
            file.checksum
        )));
    }
    Ok(ic)
}
