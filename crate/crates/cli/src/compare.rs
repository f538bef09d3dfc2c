//! Set-level diff between two catalogs.

use std::cmp::Ordering;

use bivox::miner::VoxelId;
use bivox::{Bicluster, BiclusterCatalog};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Containment {
    pub checked: usize,
    pub contained: usize,
    /// `contained / checked`, or 1 when nothing was checked.
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    /// Same biclusters; parameters and provenance are reported separately.
    pub identical: bool,
    pub params_match: bool,
    pub provenance_match: bool,
    pub biclusters_a: usize,
    pub biclusters_b: usize,
    pub only_in_a: usize,
    pub only_in_b: usize,
    pub common: usize,
    /// Biclusters of `a` whose voxels lie inside some `b` bicluster on the same variable set.
    pub a_in_b: Containment,
    pub b_in_a: Containment,
    /// As `a_in_b`, restricted to two-variable biclusters.
    pub pairs_a_in_b: Containment,
    pub pairs_b_in_a: Containment,
}

fn is_subset(small: &[VoxelId], big: &[VoxelId]) -> bool {
    if small.len() > big.len() {
        return false;
    }
    let mut it = big.iter();
    small.iter().all(|x| it.by_ref().any(|y| y == x))
}

fn containment(a: &BiclusterCatalog, b: &BiclusterCatalog, keep: impl Fn(&Bicluster) -> bool) -> Containment {
    let (mut checked, mut contained) = (0, 0);
    for x in a.biclusters.iter().filter(|x| keep(x)) {
        checked += 1;
        let hit = b
            .biclusters_of(&x.variables)
            .iter()
            .any(|&id| is_subset(&x.voxels, &b.biclusters[id].voxels));
        contained += hit as usize;
    }
    let fraction = if checked == 0 {
        1.0
    } else {
        contained as f64 / checked as f64
    };
    Containment {
        checked,
        contained,
        fraction,
    }
}

pub fn compare(a: &BiclusterCatalog, b: &BiclusterCatalog) -> Report {
    // Both lists are in canonical order.
    let (mut i, mut j, mut common) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a.biclusters[i].cmp(&b.biclusters[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                common += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let pairs = |x: &Bicluster| x.variables.len() == 2;
    Report {
        identical: common == a.len() && common == b.len(),
        params_match: a.params == b.params,
        provenance_match: a.provenance == b.provenance,
        biclusters_a: a.len(),
        biclusters_b: b.len(),
        only_in_a: a.len() - common,
        only_in_b: b.len() - common,
        common,
        a_in_b: containment(a, b, |_| true),
        b_in_a: containment(b, a, |_| true),
        pairs_a_in_b: containment(a, b, pairs),
        pairs_b_in_a: containment(b, a, pairs),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use bivox::{MiningParams, Provenance};

    fn catalog(items: &[(&[u16], &[u32])]) -> BiclusterCatalog {
        let bs = items
            .iter()
            .map(|(v, x)| Bicluster::new(v.to_vec(), x.to_vec()))
            .collect();
        BiclusterCatalog::new(bs, MiningParams::default(), Provenance::default())
    }

    #[test]
    fn subset_walk() {
        assert!(is_subset(&[2, 5], &[1, 2, 3, 5]));
        assert!(!is_subset(&[2, 4], &[1, 2, 3, 5]));
        assert!(is_subset(&[], &[1]));
        assert!(!is_subset(&[1, 2], &[2]));
    }

    #[test]
    fn counts_and_containment() {
        let a = catalog(&[(&[0, 1], &[1, 2]), (&[0, 1], &[7, 8]), (&[0, 1, 2], &[1, 2])]);
        let b = catalog(&[(&[0, 1], &[1, 2, 3]), (&[0, 1, 2], &[1, 2]), (&[1, 2], &[4, 5])]);
        let r = compare(&a, &b);
        assert!(!r.identical);
        assert_eq!((r.common, r.only_in_a, r.only_in_b), (1, 2, 2));
        assert_eq!((r.a_in_b.checked, r.a_in_b.contained), (3, 2));
        assert_eq!((r.pairs_a_in_b.checked, r.pairs_a_in_b.contained), (2, 1));
        assert_eq!((r.pairs_b_in_a.checked, r.pairs_b_in_a.contained), (2, 0));
        assert!(compare(&a, &a).identical);
    }
}
