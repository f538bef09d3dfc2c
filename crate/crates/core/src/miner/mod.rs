//! Closed δ-bicluster mining.
//!
//! A bicluster `(D', V')` over variables `D'` and voxels `V'` is δ-coherent
//! when every 2×2 submatrix has pScore ≤ δ. For a fixed variable pair `(u, v)`
//! the pScore of voxels `x, y` is `|d(x) − d(y)|` with `d(i) = s(i,u) − s(i,v)`,
//! so the condition over `V'` is exactly "the spread of `d` over `V'` is at
//! most δ", and a voxel set is coherent on `D'` iff it fits inside a δ-window
//! along every pairwise difference. Mining therefore reduces to window sweeps
//! over sorted differences plus a closure step against the full volume.

mod closure;
mod oracle;
mod search;
mod window;

use serde::{Deserialize, Serialize};

use crate::data::VariableVoxelMatrix;
use crate::error::{Error, Result};

pub use closure::is_closed;
pub use oracle::{brute_force_oracle, ORACLE_MAX_VARIABLES, ORACLE_MAX_VOXELS};
pub use search::{extend_bicluster, mine_all, mine_all_with_workers, pair_biclusters, EnumerationRegistry};

pub type VarId = u16;
pub type VoxelId = u32;

/// pScore of the 2×2 submatrix `[[a11, a12], [a21, a22]]`.
#[inline]
pub fn pscore(a11: f64, a12: f64, a21: f64, a22: f64) -> f64 {
    ((a11 - a12) - (a21 - a22)).abs()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MiningParams {
    /// Maximum pScore, in normalized scalar units.
    pub delta: f64,
    /// Minimum bicluster size as a fraction of all voxels.
    pub minv_frac: f64,
    /// Biclusters larger than this fraction of all voxels are dropped as
    /// background after the search. `1.0` disables the filter.
    pub max_voxel_frac: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variable_subset: Option<Vec<VarId>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_cardinality: Option<usize>,
}

impl Default for MiningParams {
    fn default() -> Self {
        MiningParams {
            delta: 20.0,
            minv_frac: 0.002,
            max_voxel_frac: 0.10,
            variable_subset: None,
            max_cardinality: None,
        }
    }
}

// Guards `ceil`/`floor` against fractions like 2/12 that land a hair off an integer.
const COUNT_SLACK: f64 = 1e-9;

impl MiningParams {
    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    /// Parameters with an absolute minimum voxel count and no background filter.
    pub fn exact(delta: f64, min_voxels: usize, n_voxels: usize) -> Self {
        MiningParams {
            delta,
            minv_frac: min_voxels as f64 / n_voxels as f64,
            max_voxel_frac: 1.0,
            variable_subset: None,
            max_cardinality: None,
        }
    }

    /// `minv`: smallest admissible voxel count (at least 1).
    pub fn min_voxels(&self, n_voxels: usize) -> usize {
        ((self.minv_frac * n_voxels as f64 - COUNT_SLACK).ceil() as usize).max(1)
    }

    /// Largest voxel count that survives the background filter.
    pub fn max_voxels(&self, n_voxels: usize) -> usize {
        if self.max_voxel_frac >= 1.0 {
            return n_voxels;
        }
        (self.max_voxel_frac * n_voxels as f64 + COUNT_SLACK).floor() as usize
    }

    pub fn validate(&self, n_vars: usize) -> Result<()> {
        if !(self.delta.is_finite() && self.delta >= 0.0) {
            return Err(Error::Params(format!(
                "delta must be finite and >= 0, got {}",
                self.delta
            )));
        }
        if !(self.minv_frac > 0.0 && self.minv_frac <= self.max_voxel_frac && self.max_voxel_frac <= 1.0) {
            return Err(Error::Params(format!(
                "need 0 < minv_frac <= max_voxel_frac <= 1, got minv_frac={} max_voxel_frac={}",
                self.minv_frac, self.max_voxel_frac
            )));
        }
        if let Some(subset) = &self.variable_subset {
            if let Some(&bad) = subset.iter().find(|&&v| v as usize >= n_vars) {
                return Err(Error::Params(format!("variable id {bad} out of range (M = {n_vars})")));
            }
            let mut sorted = subset.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() < 2 {
                return Err(Error::Params(
                    "variable subset needs at least two distinct variables".into(),
                ));
            }
        } else if n_vars < 2 {
            return Err(Error::Params("mining needs at least two variables".into()));
        }
        if let Some(cap) = self.max_cardinality {
            if cap < 2 {
                return Err(Error::Params(format!("max_cardinality must be >= 2, got {cap}")));
            }
        }
        Ok(())
    }

    /// Variables the search may use, ascending.
    pub fn active_variables(&self, n_vars: usize) -> Vec<VarId> {
        match &self.variable_subset {
            Some(subset) => {
                let mut vars = subset.clone();
                vars.sort_unstable();
                vars.dedup();
                vars
            }
            None => (0..n_vars as VarId).collect(),
        }
    }

    pub fn cardinality_cap(&self) -> usize {
        self.max_cardinality.unwrap_or(usize::MAX)
    }
}

/// A variable set together with a voxel set that is δ-coherent on it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Bicluster {
    /// Sorted, at least two entries.
    pub variables: Vec<VarId>,
    /// Sorted voxel ids.
    pub voxels: Vec<VoxelId>,
}

/// Observed `(min, max)` of `s(·,u) − s(·,v)` over a bicluster's voxels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffRange {
    pub u: VarId,
    pub v: VarId,
    pub min: f64,
    pub max: f64,
}

impl DiffRange {
    pub fn spread(&self) -> f64 {
        self.max - self.min
    }
}

impl Bicluster {
    pub fn new(mut variables: Vec<VarId>, mut voxels: Vec<VoxelId>) -> Self {
        variables.sort_unstable();
        variables.dedup();
        voxels.sort_unstable();
        voxels.dedup();
        Bicluster { variables, voxels }
    }

    pub fn len(&self) -> usize {
        self.voxels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.voxels.is_empty()
    }

    pub fn contains_voxel(&self, voxel: VoxelId) -> bool {
        self.voxels.binary_search(&voxel).is_ok()
    }

    /// Per-pair difference ranges over the bicluster's voxels.
    pub fn diff_ranges(&self, matrix: &VariableVoxelMatrix) -> Vec<DiffRange> {
        variable_pairs(&self.variables)
            .map(|(u, v)| {
                let (min, max) = self
                    .voxels
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                        let d = matrix.diff(i as usize, u as usize, v as usize);
                        (lo.min(d), hi.max(d))
                    });
                DiffRange { u, v, min, max }
            })
            .collect()
    }

    /// The δ-condition: every pairwise difference spread is at most `delta`.
    pub fn is_coherent(&self, matrix: &VariableVoxelMatrix, delta: f64) -> bool {
        self.diff_ranges(matrix).iter().all(|r| r.spread() <= delta)
    }
}

/// All `(u, v)` with `u < v` drawn from a sorted variable list.
pub fn variable_pairs(vars: &[VarId]) -> impl Iterator<Item = (VarId, VarId)> + '_ {
    vars.iter()
        .enumerate()
        .flat_map(move |(a, &u)| vars[a + 1..].iter().map(move |&v| (u, v)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pscore_examples() {
        assert_eq!(pscore(5.0, 5.0, 3.0, 3.0), 0.0);
        assert_eq!(pscore(1.0, 2.0, 3.0, 5.0), 1.0);
    }

    #[test]
    fn params_bounds() {
        let p = MiningParams::default();
        assert_eq!(p.min_voxels(32 * 32 * 32), 66);
        assert_eq!(p.max_voxels(32 * 32 * 32), 3276);
        let exact = MiningParams::exact(1.0, 2, 12);
        assert_eq!(exact.min_voxels(12), 2);
        assert_eq!(exact.max_voxels(12), 12);
        assert!(p.validate(3).is_ok());
        assert!(p.clone().with_delta(-1.0).validate(3).is_err());
        assert!(MiningParams {
            minv_frac: 0.5,
            max_voxel_frac: 0.1,
            ..p.clone()
        }
        .validate(3)
        .is_err());
        assert!(MiningParams {
            variable_subset: Some(vec![0, 7]),
            ..p.clone()
        }
        .validate(3)
        .is_err());
        assert!(MiningParams {
            variable_subset: Some(vec![1, 1]),
            ..p.clone()
        }
        .validate(3)
        .is_err());
        assert!(MiningParams {
            max_cardinality: Some(1),
            ..p
        }
        .validate(3)
        .is_err());
    }

    #[test]
    fn pairs_enumerate_in_order() {
        let pairs: Vec<_> = variable_pairs(&[0, 2, 5]).collect();
        assert_eq!(pairs, vec![(0, 2), (0, 5), (2, 5)]);
    }

    proptest! {
        #[test]
        fn pscore_is_symmetric(a in -1e3f64..1e3, b in -1e3f64..1e3, c in -1e3f64..1e3, d in -1e3f64..1e3) {
            prop_assert_eq!(pscore(a, b, c, d), pscore(c, d, a, b));
            prop_assert!(pscore(a, b, c, d) >= 0.0);
        }
    }
}
