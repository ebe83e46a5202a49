//! Stratified shuffle splits and initial labeled pools.
//!
//! Each fold is an independent stratified shuffle: every class contributes
//! test rows in proportion to its share (within one sample, via largest
//! remainder allocation), and the rest of the rows form the train pool. The
//! initial labeled pool is a uniform draw from the train pool, repaired so
//! that every class is represented at least once.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{rng_from, round_size};

/// One fold of a stratified shuffle split. `train` and `test` are sorted,
/// disjoint, and together cover every dataset row.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub fold: usize,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Initial labeled pool for one fold, in draw order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledPool {
    pub fold: usize,
    pub indices: Vec<usize>,
}

/// Generate `folds` independent stratified shuffle splits over class labels.
///
/// The total test size is `round(test_frac * n)` (half away from zero) and
/// per-class test counts follow largest-remainder allocation, so each class
/// ends within one sample of its proportional share. A class too small to
/// appear on both sides of the split is an error.
pub fn stratified_shuffle_split(
    labels: &[u32],
    class_count: usize,
    folds: usize,
    test_frac: f64,
    seed: u64,
) -> Result<Vec<Split>> {
    if folds == 0 {
        return Err(Error::Config("folds must be at least 1".into()));
    }
    if !(test_frac > 0.0 && test_frac < 1.0) {
        return Err(Error::Config(format!(
            "test fraction must be in (0, 1), got {test_frac}"
        )));
    }
    let n = labels.len();
    if n < 2 {
        return Err(Error::Dataset(format!(
            "cannot split {n} rows into train and test"
        )));
    }

    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); class_count];
    for (i, &y) in labels.iter().enumerate() {
        let c = y as usize;
        if c >= class_count {
            return Err(Error::Dataset(format!(
                "label id {c} out of range for {class_count} classes"
            )));
        }
        by_class[c].push(i);
    }

    let test_counts = allocate_test_counts(&by_class, test_frac, n)?;

    let mut splits = Vec::with_capacity(folds);
    for fold in 0..folds {
        let mut rng = rng_from(seed, &["split", &fold.to_string()]);
        let mut train = Vec::with_capacity(n - test_counts.iter().sum::<usize>());
        let mut test = Vec::with_capacity(test_counts.iter().sum::<usize>());
        for (class, members) in by_class.iter().enumerate() {
            let mut shuffled = members.clone();
            shuffled.shuffle(&mut rng);
            let (t, tr) = shuffled.split_at(test_counts[class]);
            test.extend_from_slice(t);
            train.extend_from_slice(tr);
        }
        train.sort_unstable();
        test.sort_unstable();
        splits.push(Split { fold, train, test });
    }
    Ok(splits)
}

/// Largest-remainder allocation of per-class test counts summing to
/// `round(test_frac * n)`. Ties in remainder go to the lower class id.
fn allocate_test_counts(
    by_class: &[Vec<usize>],
    test_frac: f64,
    n: usize,
) -> Result<Vec<usize>> {
    let total_test = round_size(test_frac * n as f64);
    if total_test == 0 || total_test >= n {
        return Err(Error::Stratification(format!(
            "test fraction {test_frac} of {n} rows leaves an empty train or test side"
        )));
    }

    let targets: Vec<f64> = by_class
        .iter()
        .map(|m| m.len() as f64 * test_frac)
        .collect();
    let mut counts: Vec<usize> = targets.iter().map(|t| t.floor() as usize).collect();
    let mut extras = total_test - counts.iter().sum::<usize>();

    let mut order: Vec<usize> = (0..by_class.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = targets[a] - targets[a].floor();
        let rb = targets[b] - targets[b].floor();
        rb.partial_cmp(&ra)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    for &class in &order {
        if extras == 0 {
            break;
        }
        if counts[class] + 1 <= by_class[class].len() {
            counts[class] += 1;
            extras -= 1;
        }
    }
    if extras > 0 {
        return Err(Error::Stratification(
            "could not allocate the requested test size across classes".into(),
        ));
    }

    for (class, members) in by_class.iter().enumerate() {
        let count = members.len();
        let test = counts[class];
        if count == 0 {
            continue;
        }
        if test == 0 || test >= count {
            return Err(Error::Stratification(format!(
                "class id {class} has {count} row(s): too few to place at least one row in \
                 both train and test at test fraction {test_frac}"
            )));
        }
    }
    Ok(counts)
}

/// Initial pool size: `max(class_count, round(init_frac * n))`.
pub fn init_pool_size(n: usize, class_count: usize, init_frac: f64) -> usize {
    round_size(init_frac * n as f64).max(class_count)
}

/// Draw the initial labeled pool for one fold: a uniform sample without
/// replacement from the train pool, repaired so every class appears at least
/// once. Repair replaces, latest-drawn first, picks whose class occurs more
/// than once with a uniformly drawn row of each missing class.
pub fn init_pool(
    labels: &[u32],
    class_count: usize,
    split: &Split,
    init_size: usize,
    seed: u64,
) -> Result<LabeledPool> {
    let train = &split.train;
    if init_size < class_count {
        return Err(Error::Dataset(format!(
            "initial pool of {init_size} cannot cover {class_count} classes"
        )));
    }
    if init_size > train.len() {
        return Err(Error::Dataset(format!(
            "initial pool of {init_size} exceeds the train pool of {}",
            train.len()
        )));
    }
    let mut present_in_train = vec![false; class_count];
    for &i in train {
        present_in_train[labels[i] as usize] = true;
    }
    if let Some(missing) = present_in_train.iter().position(|p| !p) {
        return Err(Error::Dataset(format!(
            "class id {missing} has no rows in the train pool of fold {}",
            split.fold
        )));
    }

    let mut rng = rng_from(seed, &["init", &split.fold.to_string()]);
    let mut selected: Vec<usize> = rand::seq::index::sample(&mut rng, train.len(), init_size)
        .iter()
        .map(|p| train[p])
        .collect();

    let mut class_multiplicity = vec![0usize; class_count];
    for &i in &selected {
        class_multiplicity[labels[i] as usize] += 1;
    }

    for missing in 0..class_count {
        if class_multiplicity[missing] > 0 {
            continue;
        }
        let candidates: Vec<usize> = train
            .iter()
            .copied()
            .filter(|i| labels[*i] as usize == missing && !selected.contains(i))
            .collect();
        debug_assert!(!candidates.is_empty());
        let pick = candidates[rng.random_range(0..candidates.len())];
        let evict = selected
            .iter()
            .rposition(|&i| class_multiplicity[labels[i] as usize] > 1)
            .ok_or_else(|| {
                Error::Dataset(format!(
                    "cannot repair initial pool of fold {}: every selected class is a singleton",
                    split.fold
                ))
            })?;
        class_multiplicity[labels[selected[evict]] as usize] -= 1;
        class_multiplicity[missing] += 1;
        selected[evict] = pick;
    }

    Ok(LabeledPool {
        fold: split.fold,
        indices: selected,
    })
}
