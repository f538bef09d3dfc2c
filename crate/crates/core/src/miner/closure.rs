use super::{variable_pairs, VarId, VoxelId};
use crate::data::VariableVoxelMatrix;

struct PairRange {
    u: usize,
    v: usize,
    min: f64,
    max: f64,
}

fn pair_ranges(voxels: &[VoxelId], variables: &[VarId], matrix: &VariableVoxelMatrix) -> Vec<PairRange> {
    variable_pairs(variables)
        .map(|(u, v)| {
            let (u, v) = (u as usize, v as usize);
            let (min, max) = voxels.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                let d = matrix.diff(i as usize, u, v);
                (lo.min(d), hi.max(d))
            });
            PairRange { u, v, min, max }
        })
        .collect()
}

/// Adds every addable voxel from `pool` (ascending id) to `voxels`.
///
/// Adding a voxel can only narrow each pair's admissible interval, so a voxel
/// rejected once can never become addable later and one pass reaches the
/// fixpoint.
fn absorb(
    voxels: &[VoxelId],
    pool: impl Iterator<Item = VoxelId>,
    variables: &[VarId],
    matrix: &VariableVoxelMatrix,
    delta: f64,
) -> Option<Vec<VoxelId>> {
    let mut ranges = pair_ranges(voxels, variables, matrix);
    let mut added = Vec::new();
    for w in pool {
        if voxels.binary_search(&w).is_ok() {
            continue;
        }
        let i = w as usize;
        let fits = ranges.iter().all(|r| {
            let d = matrix.diff(i, r.u, r.v);
            r.max.max(d) - r.min.min(d) <= delta
        });
        if fits {
            for r in &mut ranges {
                let d = matrix.diff(i, r.u, r.v);
                r.min = r.min.min(d);
                r.max = r.max.max(d);
            }
            added.push(w);
        }
    }
    if added.is_empty() {
        return None;
    }
    let mut closed = voxels.to_vec();
    closed.extend(added);
    closed.sort_unstable();
    Some(closed)
}

/// Tests whether any voxel outside `candidate` can join it without breaking the
/// δ-condition on `variables`.
///
/// Returns `(true, candidate)` when closed; otherwise `(false, closure)` where
/// the closure is built by admitting voxels in ascending id order until none
/// fits. `candidate` must be sorted and already δ-coherent.
pub fn is_closed(
    candidate: &[VoxelId],
    variables: &[VarId],
    matrix: &VariableVoxelMatrix,
    delta: f64,
) -> (bool, Vec<VoxelId>) {
    let pool = 0..matrix.n_voxels() as VoxelId;
    match absorb(candidate, pool, variables, matrix, delta) {
        None => (true, candidate.to_vec()),
        Some(closure) => (false, closure),
    }
}

/// Voxels sorted by the difference along the first variable pair of a search
/// subtree. Every variable set below that root contains the pair, so any voxel
/// that could join a candidate lies in a contiguous slice of this order.
pub(crate) struct RootIndex {
    pub u: usize,
    pub v: usize,
    pub sorted: Vec<(f64, VoxelId)>,
}

impl RootIndex {
    /// Same result as [`is_closed`], scanning only voxels whose root-pair
    /// difference is compatible with the candidate.
    pub fn close(
        &self,
        candidate: &[VoxelId],
        variables: &[VarId],
        matrix: &VariableVoxelMatrix,
        delta: f64,
    ) -> Vec<VoxelId> {
        debug_assert!(variables.contains(&(self.u as VarId)) && variables.contains(&(self.v as VarId)));
        let (min, max) = candidate
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                let d = matrix.diff(i as usize, self.u, self.v);
                (lo.min(d), hi.max(d))
            });
        let lo = max - delta;
        let hi = min + delta;
        let start = self.sorted.partition_point(|&(d, _)| d < lo);
        let end = self.sorted.partition_point(|&(d, _)| d <= hi);
        if end.saturating_sub(start) <= candidate.len() {
            return candidate.to_vec();
        }
        let mut pool: Vec<VoxelId> = self.sorted[start..end].iter().map(|&(_, i)| i).collect();
        pool.sort_unstable();
        absorb(candidate, pool.into_iter(), variables, matrix, delta).unwrap_or_else(|| candidate.to_vec())
    }
}
