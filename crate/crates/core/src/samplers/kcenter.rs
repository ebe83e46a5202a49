//! Greedy k-center selection: repeatedly pick the candidate farthest from
//! everything labeled or already picked. Minimum distances are maintained
//! incrementally, which is algebraically identical to recomputing them
//! (each step only takes a min with the new center's distances).

use crate::error::{Error, Result};
use crate::linalg::squared_distance;
use crate::samplers::QueryContext;

/// Greedy farthest-point selection of `batch` candidates, seeded by the
/// labeled embeddings. Ties go to the lowest candidate position.
pub fn select_kcenter(ctx: &QueryContext) -> Result<Vec<usize>> {
    if ctx.z_labeled.rows() == 0 {
        return Err(Error::Sampler(
            "k-center needs at least one labeled embedding".into(),
        ));
    }
    let z = ctx.z_unlabeled;
    let n = z.rows();

    let mut min_d2: Vec<f64> = (0..n)
        .map(|i| {
            (0..ctx.z_labeled.rows())
                .map(|c| squared_distance(z.row(i), ctx.z_labeled.row(c)))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();

    let mut picks = Vec::with_capacity(ctx.batch);
    let mut taken = vec![false; n];
    for _ in 0..ctx.batch {
        let mut best: Option<usize> = None;
        for i in 0..n {
            if taken[i] {
                continue;
            }
            let better = match best {
                None => true,
                Some(b) => min_d2[i] > min_d2[b],
            };
            if better {
                best = Some(i);
            }
        }
        let pick = best.expect("batch <= candidate count");
        taken[pick] = true;
        picks.push(pick);
        for i in 0..n {
            let d = squared_distance(z.row(i), z.row(pick));
            if d < min_d2[i] {
                min_d2[i] = d;
            }
        }
    }
    Ok(picks.into_iter().map(|p| ctx.unlabeled[p]).collect())
}
