use std::ops::Range;

use super::VoxelId;

/// Index ranges of the maximal δ-windows of `sorted` (ascending by value).
///
/// A window is a run `[lo, hi]` with `value[hi] − value[lo] ≤ delta` that
/// cannot be extended on either side. Equal values always share a window.
/// Windows shorter than `min_len` are dropped, but still count when deciding
/// maximality of later windows.
pub(crate) fn maximal_windows(sorted: &[(f64, VoxelId)], delta: f64, min_len: usize) -> Vec<Range<usize>> {
    let n = sorted.len();
    let mut out = Vec::new();
    let mut hi = 0usize;
    let mut last_hi: Option<usize> = None;
    let mut lo = 0usize;
    while lo < n {
        let start = sorted[lo].0;
        hi = hi.max(lo);
        while hi + 1 < n && sorted[hi + 1].0 - start <= delta {
            hi += 1;
        }
        if last_hi.is_none_or(|h| hi > h) {
            if hi + 1 - lo >= min_len {
                out.push(lo..hi + 1);
            }
            last_hi = Some(hi);
        }
        while lo < n && sorted[lo].0 == start {
            lo += 1;
        }
    }
    out
}

pub(crate) fn sort_by_value(pairs: &mut [(f64, VoxelId)]) {
    pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
}

/// Splits `voxels` into its maximal δ-windows along `key`, keeping windows of
/// at least `min_len` voxels. Each returned set is sorted by voxel id.
pub(crate) fn split_windows(
    voxels: &[VoxelId],
    key: impl Fn(VoxelId) -> f64,
    delta: f64,
    min_len: usize,
) -> Vec<Vec<VoxelId>> {
    let mut pairs: Vec<(f64, VoxelId)> = voxels.iter().map(|&i| (key(i), i)).collect();
    sort_by_value(&mut pairs);
    maximal_windows(&pairs, delta, min_len)
        .into_iter()
        .map(|r| {
            let mut set: Vec<VoxelId> = pairs[r].iter().map(|&(_, i)| i).collect();
            set.sort_unstable();
            set
        })
        .collect()
}

/// True when sorted `a` is a subset of sorted `b`.
pub(crate) fn is_subset(a: &[VoxelId], b: &[VoxelId]) -> bool {
    if a.len() > b.len() {
        return false;
    }
    let mut bi = b.iter();
    'outer: for x in a {
        for y in bi.by_ref() {
            if y == x {
                continue 'outer;
            }
            if y > x {
                return false;
            }
        }
        return false;
    }
    true
}

/// Drops duplicates and every set strictly contained in another.
pub(crate) fn remove_contained(mut sets: Vec<Vec<VoxelId>>) -> Vec<Vec<VoxelId>> {
    sets.sort_unstable();
    sets.dedup();
    if sets.len() < 2 {
        return sets;
    }
    // Larger sets first so each candidate only has to look at kept ones.
    let mut order: Vec<usize> = (0..sets.len()).collect();
    order.sort_by(|&a, &b| sets[b].len().cmp(&sets[a].len()).then(a.cmp(&b)));
    let mut kept: Vec<usize> = Vec::with_capacity(sets.len());
    for idx in order {
        if !kept.iter().any(|&k| is_subset(&sets[idx], &sets[k])) {
            kept.push(idx);
        }
    }
    kept.sort_unstable();
    let mut sets: Vec<Option<Vec<VoxelId>>> = sets.into_iter().map(Some).collect();
    kept.into_iter().map(|k| sets[k].take().unwrap()).collect()
}
