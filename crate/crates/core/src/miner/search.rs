use std::collections::HashSet;
use std::sync::Mutex;

use rayon::prelude::*;

use super::closure::{is_closed, RootIndex};
use super::window::{maximal_windows, remove_contained, sort_by_value, split_windows};
use super::{Bicluster, MiningParams, VarId, VoxelId};
use crate::catalog::{BiclusterCatalog, Provenance};
use crate::data::VariableVoxelMatrix;
use crate::error::{Error, Result};

/// Variable sets whose subtree has already been claimed by a search worker.
#[derive(Debug, Default)]
pub struct EnumerationRegistry {
    seen: Mutex<HashSet<Vec<VarId>>>,
}

impl EnumerationRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Atomically records `variables`; returns `false` if it was already present.
    pub fn insert(&self, variables: &[VarId]) -> bool {
        self.seen.lock().unwrap().insert(variables.to_vec())
    }

    pub fn contains(&self, variables: &[VarId]) -> bool {
        self.seen.lock().unwrap().contains(variables)
    }

    pub fn len(&self) -> usize {
        self.seen.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn sorted_pair_diffs(matrix: &VariableVoxelMatrix, u: usize, v: usize) -> Result<Vec<(f64, VoxelId)>> {
    let n = matrix.n_voxels();
    let mut sorted = Vec::new();
    sorted.try_reserve_exact(n).map_err(|_| Error::OutOfMemory {
        variables: vec![u as VarId, v as VarId],
    })?;
    let (su, sv) = (matrix.variable(u), matrix.variable(v));
    sorted.extend((0..n).map(|i| (su[i] as f64 - sv[i] as f64, i as VoxelId)));
    sort_by_value(&mut sorted);
    Ok(sorted)
}

fn window_sets(sorted: &[(f64, VoxelId)], delta: f64, minv: usize) -> Vec<Vec<VoxelId>> {
    maximal_windows(sorted, delta, minv)
        .into_iter()
        .map(|r| {
            let mut set: Vec<VoxelId> = sorted[r].iter().map(|&(_, i)| i).collect();
            set.sort_unstable();
            set
        })
        .collect()
}

/// All closed biclusters on the variable pair `{u, v}` with at least `minv`
/// voxels, ordered by the lowest difference value in each window.
pub fn pair_biclusters(matrix: &VariableVoxelMatrix, u: VarId, v: VarId, params: &MiningParams) -> Vec<Bicluster> {
    assert_ne!(u, v, "pair_biclusters needs two distinct variables");
    let (u, v) = (u.min(v), u.max(v));
    let minv = params.min_voxels(matrix.n_voxels());
    let n = matrix.n_voxels();
    let mut sorted: Vec<(f64, VoxelId)> = (0..n)
        .map(|i| (matrix.diff(i, u as usize, v as usize), i as VoxelId))
        .collect();
    sort_by_value(&mut sorted);
    window_sets(&sorted, params.delta, minv)
        .into_iter()
        .map(|voxels| Bicluster {
            variables: vec![u, v],
            voxels,
        })
        .collect()
}

/// Candidate voxel sets over `variables ∪ {new_var}` inside `parent`, each
/// maximal within `parent` and passed through `close` before being returned.
fn extend_set(
    parent: &[VoxelId],
    variables: &[VarId],
    new_var: VarId,
    matrix: &VariableVoxelMatrix,
    delta: f64,
    minv: usize,
    close: impl Fn(&[VoxelId], &[VarId]) -> Vec<VoxelId>,
) -> Vec<Vec<VoxelId>> {
    if parent.len() < minv {
        return Vec::new();
    }
    let x = new_var as usize;
    let mut candidates = vec![parent.to_vec()];
    // Ascending variable id; the closure below makes the order irrelevant.
    for &dp in variables {
        let dp = dp as usize;
        let next: Vec<Vec<VoxelId>> = candidates
            .iter()
            .flat_map(|c| split_windows(c, |i| matrix.diff(i as usize, dp, x), delta, minv))
            .collect();
        candidates = remove_contained(next);
        if candidates.is_empty() {
            return candidates;
        }
    }
    let mut child_vars = variables.to_vec();
    child_vars.push(new_var);
    child_vars.sort_unstable();
    candidates.into_iter().map(|c| close(&c, &child_vars)).collect()
}

/// All closed biclusters over `b.variables ∪ {new_var}` whose voxels are drawn
/// from `b.voxels` (before closure), each with at least `minv` voxels.
///
/// Closure runs against the full volume, so a result may include voxels
/// outside `b`.
pub fn extend_bicluster(
    b: &Bicluster,
    new_var: VarId,
    matrix: &VariableVoxelMatrix,
    params: &MiningParams,
) -> Vec<Bicluster> {
    assert!(
        !b.variables.contains(&new_var),
        "variable {new_var} already in bicluster"
    );
    let minv = params.min_voxels(matrix.n_voxels());
    let mut child_vars = b.variables.clone();
    child_vars.push(new_var);
    child_vars.sort_unstable();
    let mut sets = extend_set(
        &b.voxels,
        &b.variables,
        new_var,
        matrix,
        params.delta,
        minv,
        |c, vars| is_closed(c, vars, matrix, params.delta).1,
    );
    sets.sort_unstable();
    sets.dedup();
    sets.into_iter()
        .map(|voxels| Bicluster {
            variables: child_vars.clone(),
            voxels,
        })
        .collect()
}

struct Search<'a> {
    matrix: &'a VariableVoxelMatrix,
    delta: f64,
    minv: usize,
    cap: usize,
    variables: Vec<VarId>,
    registry: EnumerationRegistry,
}

impl Search<'_> {
    fn explore_root(&self, u: VarId, v: VarId) -> Result<Vec<Bicluster>> {
        let mut out = Vec::new();
        if !self.registry.insert(&[u, v]) {
            return Ok(out);
        }
        let sorted = sorted_pair_diffs(self.matrix, u as usize, v as usize)?;
        let sets = window_sets(&sorted, self.delta, self.minv);
        let index = RootIndex {
            u: u as usize,
            v: v as usize,
            sorted,
        };
        self.descend(&[u, v], sets, &index, &mut out);
        Ok(out)
    }

    fn descend(&self, variables: &[VarId], sets: Vec<Vec<VoxelId>>, index: &RootIndex, out: &mut Vec<Bicluster>) {
        if variables.len() < self.cap {
            let last = *variables.last().unwrap();
            for &x in self.variables.iter().filter(|&&x| x > last) {
                let mut child = variables.to_vec();
                child.push(x);
                if !self.registry.insert(&child) {
                    continue;
                }
                let mut child_sets: Vec<Vec<VoxelId>> = sets
                    .par_iter()
                    .flat_map_iter(|s| {
                        extend_set(s, variables, x, self.matrix, self.delta, self.minv, |c, vars| {
                            index.close(c, vars, self.matrix, self.delta)
                        })
                    })
                    .collect();
                child_sets.par_sort_unstable();
                child_sets.dedup();
                if !child_sets.is_empty() {
                    self.descend(&child, child_sets, index, out);
                }
            }
        }
        out.extend(sets.into_iter().map(|voxels| Bicluster {
            variables: variables.to_vec(),
            voxels,
        }));
    }
}

/// Mines every closed δ-bicluster with at least `minv` voxels, using the
/// global rayon pool.
pub fn mine_all(matrix: &VariableVoxelMatrix, params: &MiningParams) -> Result<BiclusterCatalog> {
    params.validate(matrix.n_vars())?;
    let biclusters = run_search(matrix, params)?;
    Ok(BiclusterCatalog::new(biclusters, params.clone(), Provenance::default()))
}

/// [`mine_all`] on a dedicated pool of `workers` threads (0 = rayon default).
/// The catalog is identical for every worker count.
pub fn mine_all_with_workers(
    matrix: &VariableVoxelMatrix,
    params: &MiningParams,
    workers: usize,
) -> Result<BiclusterCatalog> {
    params.validate(matrix.n_vars())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Invalid(format!("cannot start worker pool: {e}")))?;
    let biclusters = pool.install(|| run_search(matrix, params))?;
    Ok(BiclusterCatalog::new(biclusters, params.clone(), Provenance::default()))
}

fn run_search(matrix: &VariableVoxelMatrix, params: &MiningParams) -> Result<Vec<Bicluster>> {
    let n = matrix.n_voxels();
    let search = Search {
        matrix,
        delta: params.delta,
        minv: params.min_voxels(n),
        cap: params.cardinality_cap(),
        variables: params.active_variables(matrix.n_vars()),
        registry: EnumerationRegistry::new(),
    };
    let roots: Vec<(VarId, VarId)> = super::variable_pairs(&search.variables).collect();
    let per_root: Vec<Vec<Bicluster>> = roots
        .par_iter()
        .map(|&(u, v)| search.explore_root(u, v))
        .collect::<Result<_>>()?;

    let max_voxels = params.max_voxels(n);
    let mut all: Vec<Bicluster> = per_root
        .into_iter()
        .flatten()
        .filter(|b| b.voxels.len() <= max_voxels)
        .collect();
    all.par_sort_unstable();
    all.dedup();
    Ok(all)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Dims;

    fn matrix(cols: Vec<Vec<f32>>) -> VariableVoxelMatrix {
        let n = cols[0].len();
        let names = (0..cols.len()).map(|j| format!("v{j}")).collect();
        VariableVoxelMatrix::from_columns(Dims::new(n, 1, 1), names, cols).unwrap()
    }

    fn sets(bs: &[Bicluster]) -> Vec<Vec<VoxelId>> {
        bs.iter().map(|b| b.voxels.clone()).collect()
    }

    #[test]
    fn pair_examples() {
        let p = MiningParams::exact(1.0, 2, 4);
        let m = matrix(vec![vec![0.0; 4], vec![0.0; 4]]);
        assert_eq!(sets(&pair_biclusters(&m, 0, 1, &p)), vec![vec![0, 1, 2, 3]]);

        // d = s0 - s1 = {0, 1, 5, 6}
        let m = matrix(vec![vec![10.0, 11.0, 15.0, 16.0], vec![10.0; 4]]);
        assert_eq!(sets(&pair_biclusters(&m, 0, 1, &p)), vec![vec![0, 1], vec![2, 3]]);

        let m = matrix(vec![vec![10.0, 11.0, 12.0], vec![10.0; 3]]);
        let p3 = MiningParams::exact(1.0, 2, 3);
        assert_eq!(sets(&pair_biclusters(&m, 0, 1, &p3)), vec![vec![0, 1], vec![1, 2]]);
    }

    #[test]
    fn pair_outputs_are_closed() {
        let m = matrix(vec![
            vec![3.0, 8.0, 1.0, 4.0, 9.0, 2.0],
            vec![0.0, 4.0, 1.0, 0.0, 2.0, 1.0],
        ]);
        let p = MiningParams::exact(2.0, 1, 6);
        for b in pair_biclusters(&m, 0, 1, &p) {
            assert!(is_closed(&b.voxels, &b.variables, &m, p.delta).0);
        }
    }

    #[test]
    fn coherent_extension_keeps_everything() {
        // C is offset from both A and B by constants on the four voxels.
        let m = matrix(vec![
            vec![1.0, 2.0, 3.0, 4.0],
            vec![1.0, 2.0, 3.0, 4.0],
            vec![11.0, 12.0, 13.0, 14.0],
        ]);
        let p = MiningParams::exact(0.0, 2, 4);
        let b = Bicluster::new(vec![0, 1], vec![0, 1, 2, 3]);
        let ext = extend_bicluster(&b, 2, &m, &p);
        assert_eq!(ext, vec![Bicluster::new(vec![0, 1, 2], vec![0, 1, 2, 3])]);
    }

    #[test]
    fn extension_splits_on_new_dimension() {
        // A == B everywhere; C - A differences are {0, 0, 10, 10}.
        let a = vec![5.0, 6.0, 7.0, 8.0];
        let c = vec![5.0, 6.0, 17.0, 18.0];
        let m = matrix(vec![a.clone(), a, c]);
        let p = MiningParams::exact(1.0, 2, 4);
        let b = Bicluster::new(vec![0, 1], vec![0, 1, 2, 3]);
        assert_eq!(sets(&extend_bicluster(&b, 2, &m, &p)), vec![vec![0, 1], vec![2, 3]]);
    }

    #[test]
    fn identical_variables_yield_full_volume() {
        let base = vec![3.0, 9.0, 27.0, 81.0, 243.0];
        let m = matrix(vec![base.clone(), base.clone(), base]);
        let p = MiningParams::exact(0.0, 1, 5);
        let cat = mine_all(&m, &p).unwrap();
        let varsets: Vec<Vec<VarId>> = cat.biclusters.iter().map(|b| b.variables.clone()).collect();
        assert_eq!(varsets, vec![vec![0, 1], vec![0, 1, 2], vec![0, 2], vec![1, 2]]);
        assert!(cat.biclusters.iter().all(|b| b.voxels.len() == 5));

        let filtered = mine_all(
            &m,
            &MiningParams {
                max_voxel_frac: 0.5,
                minv_frac: 0.2,
                ..p
            },
        )
        .unwrap();
        assert!(filtered.biclusters.is_empty());
    }

    #[test]
    fn registry_is_exact() {
        let r = EnumerationRegistry::new();
        assert!(r.insert(&[0, 1, 2]));
        assert!(!r.insert(&[0, 1, 2]));
        assert!(r.contains(&[0, 1, 2]));
        assert!(!r.contains(&[0, 1]));
        assert_eq!(r.len(), 1);
    }

    #[test]
    fn subset_and_cardinality_limits() {
        let base = vec![1.0, 2.0, 3.0, 4.0];
        let m = matrix(vec![base.clone(), base.clone(), base.clone(), base]);
        let p = MiningParams {
            variable_subset: Some(vec![3, 1]),
            ..MiningParams::exact(0.0, 1, 4)
        };
        let cat = mine_all(&m, &p).unwrap();
        assert!(cat.biclusters.iter().all(|b| b.variables == vec![1, 3]));
        let p = MiningParams {
            max_cardinality: Some(2),
            ..MiningParams::exact(0.0, 1, 4)
        };
        assert!(mine_all(&m, &p)
            .unwrap()
            .biclusters
            .iter()
            .all(|b| b.variables.len() == 2));
    }

    #[test]
    fn worker_count_does_not_change_output() {
        let cols: Vec<Vec<f32>> = (0..4)
            .map(|j| (0..60).map(|i| ((i * (j + 3) * 7919) % 23) as f32).collect())
            .collect();
        let m = matrix(cols);
        let p = MiningParams::exact(3.0, 3, 60);
        let one = mine_all_with_workers(&m, &p, 1).unwrap();
        let four = mine_all_with_workers(&m, &p, 4).unwrap();
        assert_eq!(one.biclusters, four.biclusters);
    }
}
