//! 1-nearest-neighbor reference model. Kept brute-force and tie-stable: the
//! earliest reference row wins ties, so incremental maintenance of nearest
//! distances (as the labeled pool grows) agrees exactly with recomputation.

use crate::error::{Error, Result};
use crate::linalg::{squared_distance, Matrix};

/// For each query row, the position (row index into `reference`) of its
/// nearest reference row and the Euclidean distance to it. Ties keep the
/// earliest reference position.
pub fn nearest_reference(reference: &Matrix, query: &Matrix) -> Result<(Vec<usize>, Vec<f64>)> {
    if reference.rows() == 0 {
        return Err(Error::Fit("1-NN needs a non-empty reference set".into()));
    }
    if reference.cols() != query.cols() {
        return Err(Error::Dimension {
            expected: reference.cols(),
            got: query.cols(),
        });
    }
    let mut positions = Vec::with_capacity(query.rows());
    let mut distances = Vec::with_capacity(query.rows());
    for qi in 0..query.rows() {
        let q = query.row(qi);
        let mut best = 0usize;
        let mut best_d = squared_distance(q, reference.row(0));
        for ri in 1..reference.rows() {
            let d = squared_distance(q, reference.row(ri));
            if d < best_d {
                best_d = d;
                best = ri;
            }
        }
        positions.push(best);
        distances.push(best_d.sqrt());
    }
    Ok((positions, distances))
}

/// Predict query labels as the label of the nearest reference row.
pub fn predict_1nn(reference: &Matrix, labels: &[u32], query: &Matrix) -> Result<Vec<u32>> {
    if labels.len() != reference.rows() {
        return Err(Error::Fit(format!(
            "1-NN reference has {} rows but {} labels",
            reference.rows(),
            labels.len()
        )));
    }
    let (positions, _) = nearest_reference(reference, query)?;
    Ok(positions.into_iter().map(|p| labels[p]).collect())
}
