//! Agglomerative clustering of one variable set's biclusters.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Linkage {
    /// WPGMA: `d(A ∪ B, C) = (d(A, C) + d(B, C)) / 2`.
    #[default]
    Weighted,
    /// UPGMA: size-weighted mean of `d(A, C)` and `d(B, C)`.
    Average,
}

/// One agglomeration step. Leaves are nodes `0..n`; merge `k` creates node `n + k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    /// Bicluster id of each leaf node.
    pub leaves: Vec<usize>,
    pub merges: Vec<Merge>,
    pub linkage: Linkage,
}

impl Dendrogram {
    /// Clusters `n` items given their pairwise distance matrix. Among equal
    /// distances the pair with the smallest `(lower id, higher id)` merges first.
    pub fn build(leaves: Vec<usize>, dist: &DMatrix<f64>, linkage: Linkage) -> Self {
        let n = leaves.len();
        assert_eq!(dist.nrows(), n, "distance matrix does not match leaf count");
        let mut d = dist.clone();
        // Slot s holds cluster node_of[s]; merged clusters reuse the lower slot.
        let mut node_of: Vec<usize> = (0..n).collect();
        let mut size = vec![1usize; n];
        let mut alive = vec![true; n];
        let mut nearest: Vec<Option<(f64, usize)>> = (0..n).map(|s| nearest_above(s, &d, &node_of, &alive)).collect();
        let mut merges = Vec::with_capacity(n.saturating_sub(1));

        for k in 0..n.saturating_sub(1) {
            let (a, (height, b)) = (0..n)
                .filter(|&s| alive[s])
                .filter_map(|s| nearest[s].map(|nn| (s, nn)))
                .min_by(|(s1, (d1, t1)), (s2, (d2, t2))| {
                    d1.total_cmp(d2)
                        .then(node_of[*s1].cmp(&node_of[*s2]))
                        .then(node_of[*t1].cmp(&node_of[*t2]))
                })
                .expect("at least two live clusters");
            let (na, nb) = (size[a] as f64, size[b] as f64);
            for c in (0..n).filter(|&c| alive[c] && c != a && c != b) {
                let v = match linkage {
                    Linkage::Weighted => (d[(a, c)] + d[(b, c)]) / 2.0,
                    Linkage::Average => (na * d[(a, c)] + nb * d[(b, c)]) / (na + nb),
                };
                d[(a, c)] = v;
                d[(c, a)] = v;
            }
            merges.push(Merge {
                left: node_of[a].min(node_of[b]),
                right: node_of[a].max(node_of[b]),
                height,
                size: size[a] + size[b],
            });
            alive[b] = false;
            size[a] += size[b];
            node_of[a] = n + k;
            nearest[b] = None;

            // The new node has the largest id, so nothing lies above it; every
            // other slot may now prefer it, and slots that pointed at a or b rescan.
            nearest[a] = None;
            for s in (0..n).filter(|&s| alive[s] && s != a) {
                match nearest[s] {
                    Some((_, t)) if t == a || t == b => nearest[s] = nearest_above(s, &d, &node_of, &alive),
                    Some((best, _)) if d[(s, a)] < best => nearest[s] = Some((d[(s, a)], a)),
                    None if node_of[s] < node_of[a] => nearest[s] = Some((d[(s, a)], a)),
                    _ => {}
                }
            }
        }
        Dendrogram {
            leaves,
            merges,
            linkage,
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.leaves.len()
    }

    pub fn root(&self) -> usize {
        if self.merges.is_empty() {
            0
        } else {
            self.n_leaves() + self.merges.len() - 1
        }
    }

    pub fn is_leaf(&self, node: usize) -> bool {
        node < self.n_leaves()
    }

    /// Merge creating `node`, `None` for leaves.
    pub fn merge_of(&self, node: usize) -> Option<&Merge> {
        node.checked_sub(self.n_leaves()).and_then(|k| self.merges.get(k))
    }

    /// Height at which `node` formed; 0 for leaves.
    pub fn height(&self, node: usize) -> f64 {
        self.merge_of(node).map_or(0.0, |m| m.height)
    }

    pub fn children(&self, node: usize) -> Option<(usize, usize)> {
        self.merge_of(node).map(|m| (m.left, m.right))
    }

    /// Leaf positions under `node`, ascending.
    pub fn leaves_under(&self, node: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![node];
        while let Some(x) = stack.pop() {
            match self.children(x) {
                Some((l, r)) => {
                    stack.push(l);
                    stack.push(r);
                }
                None => out.push(x),
            }
        }
        out.sort_unstable();
        out
    }

    /// Parent of every node; the root maps to itself.
    pub fn parents(&self) -> Vec<usize> {
        let total = self.n_leaves() + self.merges.len();
        let mut parent: Vec<usize> = (0..total).collect();
        for (k, m) in self.merges.iter().enumerate() {
            parent[m.left] = self.n_leaves() + k;
            parent[m.right] = self.n_leaves() + k;
        }
        parent
    }

    /// Lowest common ancestor of a non-empty node list.
    pub fn lca(&self, nodes: &[usize]) -> usize {
        let parent = self.parents();
        let path = |mut x: usize| {
            let mut p = vec![x];
            while parent[x] != x {
                x = parent[x];
                p.push(x);
            }
            p
        };
        let mut common = path(nodes[0]);
        for &x in &nodes[1..] {
            let other = path(x);
            common.retain(|a| other.contains(a));
        }
        // Ancestor lists run bottom-up, so the first shared entry is the lowest.
        common[0]
    }

    /// Merges whose height is below one of their children's heights.
    pub fn monotonicity_violations(&self) -> Vec<usize> {
        self.merges
            .iter()
            .enumerate()
            .filter(|(_, m)| m.height < self.height(m.left).max(self.height(m.right)))
            .map(|(k, _)| k)
            .collect()
    }
}

/// Closest live slot whose cluster id is larger than `s`'s.
fn nearest_above(s: usize, d: &DMatrix<f64>, node_of: &[usize], alive: &[bool]) -> Option<(f64, usize)> {
    (0..node_of.len())
        .filter(|&t| alive[t] && node_of[t] > node_of[s])
        .map(|t| (d[(s, t)], t))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(node_of[a.1].cmp(&node_of[b.1])))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(n: usize, entries: &[(usize, usize, f64)]) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(n, n);
        for &(i, j, v) in entries {
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
        d
    }

    #[test]
    fn three_leaves() {
        let d = dist(3, &[(0, 1, 0.2), (0, 2, 0.8), (1, 2, 0.8)]);
        let t = Dendrogram::build(vec![10, 11, 12], &d, Linkage::Weighted);
        assert_eq!(
            t.merges[0],
            Merge {
                left: 0,
                right: 1,
                height: 0.2,
                size: 2
            }
        );
        assert_eq!(
            t.merges[1],
            Merge {
                left: 2,
                right: 3,
                height: 0.8,
                size: 3
            }
        );
    }

    #[test]
    fn identical_items_merge_at_zero() {
        let t = Dendrogram::build(vec![0, 1, 2, 3], &DMatrix::zeros(4, 4), Linkage::Weighted);
        assert!(t.merges.iter().all(|m| m.height == 0.0));
        // Ties resolve to the smallest id pair each time.
        assert_eq!((t.merges[0].left, t.merges[0].right), (0, 1));
        assert_eq!((t.merges[1].left, t.merges[1].right), (2, 3));
        assert_eq!((t.merges[2].left, t.merges[2].right), (4, 5));
    }

    #[test]
    fn single_leaf() {
        let t = Dendrogram::build(vec![7], &DMatrix::zeros(1, 1), Linkage::Weighted);
        assert!(t.merges.is_empty());
        assert_eq!(t.root(), 0);
        assert_eq!(t.leaves_under(0), vec![0]);
    }

    #[test]
    fn lca_and_parents() {
        let d = dist(3, &[(0, 1, 0.2), (0, 2, 0.8), (1, 2, 0.8)]);
        let t = Dendrogram::build(vec![0, 1, 2], &d, Linkage::Weighted);
        assert_eq!(t.lca(&[0, 1]), 3);
        assert_eq!(t.lca(&[0, 2]), 4);
        assert_eq!(t.lca(&[3]), 3);
    }
}
