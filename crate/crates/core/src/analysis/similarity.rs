use nalgebra::DMatrix;

use crate::miner::VoxelId;

/// Size of the intersection of two sorted id lists.
pub fn intersection_len(a: &[VoxelId], b: &[VoxelId]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// `|A ∩ B| / |A ∪ B|` for sorted voxel lists. Two empty sets count as identical.
pub fn jaccard(a: &[VoxelId], b: &[VoxelId]) -> f64 {
    let inter = intersection_len(a, b);
    let union = a.len() + b.len() - inter;
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

pub fn jaccard_distance(a: &[VoxelId], b: &[VoxelId]) -> f64 {
    1.0 - jaccard(a, b)
}

/// Pairwise Jaccard distances between voxel sets.
pub fn distance_matrix(sets: &[&[VoxelId]]) -> DMatrix<f64> {
    let n = sets.len();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let v = jaccard_distance(sets[i], sets[j]);
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    d
}

/// Sorted union of several sorted voxel lists.
pub fn union_of<'a>(sets: impl IntoIterator<Item = &'a [VoxelId]>) -> Vec<VoxelId> {
    let mut all: Vec<VoxelId> = sets.into_iter().flatten().copied().collect();
    all.sort_unstable();
    all.dedup();
    all
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(jaccard(&[1, 2, 3], &[1, 2, 3]), 1.0);
        assert_eq!(jaccard(&[1, 2], &[3, 4]), 0.0);
        assert!((jaccard(&[1, 2, 3, 4], &[3, 4, 5, 6]) - 2.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn union_merges_sorted() {
        assert_eq!(union_of([&[1u32, 4, 9][..], &[2, 4, 10][..]]), vec![1, 2, 4, 9, 10]);
    }
}
