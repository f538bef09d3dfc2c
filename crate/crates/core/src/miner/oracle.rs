use super::{pscore, variable_pairs, Bicluster, MiningParams, VarId, VoxelId};
use crate::catalog::{BiclusterCatalog, Provenance};
use crate::data::VariableVoxelMatrix;
use crate::error::{Error, Result};

pub const ORACLE_MAX_VOXELS: usize = 16;
pub const ORACLE_MAX_VARIABLES: usize = 5;

/// Exhaustive reference miner for tiny instances.
///
/// Visits every variable subset of size ≥ 2 and every voxel subset, keeps the
/// subsets in which every 2×2 submatrix has pScore ≤ δ, and reports those to
/// which no single voxel can be added. Shares no code with the window-based
/// search.
pub fn brute_force_oracle(matrix: &VariableVoxelMatrix, params: &MiningParams) -> Result<BiclusterCatalog> {
    let n = matrix.n_voxels();
    let m = matrix.n_vars();
    if n > ORACLE_MAX_VOXELS || m > ORACLE_MAX_VARIABLES {
        return Err(Error::TooLarge(format!(
            "{n} voxels x {m} variables (limit {ORACLE_MAX_VOXELS} x {ORACLE_MAX_VARIABLES})"
        )));
    }
    params.validate(m)?;
    let minv = params.min_voxels(n);
    let maxv = params.max_voxels(n);
    let active = params.active_variables(m);
    let cap = params.cardinality_cap();

    let mut out = Vec::new();
    for var_mask in 1u32..(1 << active.len()) {
        if var_mask.count_ones() < 2 || var_mask.count_ones() as usize > cap {
            continue;
        }
        let vars: Vec<VarId> = (0..active.len())
            .filter(|&k| var_mask & (1 << k) != 0)
            .map(|k| active[k])
            .collect();
        let pairs: Vec<(usize, usize)> = variable_pairs(&vars).map(|(u, v)| (u as usize, v as usize)).collect();

        // compatible[x] has bit y set when voxels x and y agree on every pair.
        let compatible: Vec<u32> = (0..n)
            .map(|x| {
                (0..n).fold(0u32, |acc, y| {
                    let ok = pairs.iter().all(|&(u, v)| {
                        let s = |i: usize, j: usize| matrix.value(i, j) as f64;
                        pscore(s(x, u), s(x, v), s(y, u), s(y, v)) <= params.delta
                    });
                    if ok {
                        acc | (1 << y)
                    } else {
                        acc
                    }
                })
            })
            .collect();

        let full = 1usize << n;
        let mut coherent = vec![false; full];
        coherent[0] = true;
        for mask in 1..full {
            let top = usize::BITS - 1 - mask.leading_zeros();
            let rest = mask & !(1 << top);
            coherent[mask] = coherent[rest] && (rest as u32 & !compatible[top as usize]) == 0;
        }
        for mask in 1..full {
            let size = mask.count_ones() as usize;
            if !coherent[mask] || size < minv || size > maxv {
                continue;
            }
            let closed = (0..n).all(|w| mask & (1 << w) != 0 || !coherent[mask | (1 << w)]);
            if closed {
                let voxels: Vec<VoxelId> = (0..n).filter(|&i| mask & (1 << i) != 0).map(|i| i as VoxelId).collect();
                out.push(Bicluster {
                    variables: vars.clone(),
                    voxels,
                });
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    Ok(BiclusterCatalog::new(out, params.clone(), Provenance::default()))
}
