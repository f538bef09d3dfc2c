//! Whole-volume entropy and mutual information of binned variables.

use serde::{Deserialize, Serialize};

use super::views::bin_of;
use crate::data::VariableVoxelMatrix;
use crate::error::{Error, Result};
use crate::miner::VarId;

pub const DEFAULT_INFO_BINS: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableStats {
    pub id: VarId,
    pub name: String,
    /// Shannon entropy in bits.
    pub entropy: f64,
    pub raw_min: f64,
    pub raw_max: f64,
}

/// Entropy in bits of a count histogram.
pub fn entropy_of_counts(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    let h = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum::<f64>();
    h.max(0.0)
}

fn histogram(values: &[f32], bins: usize) -> Vec<u64> {
    let mut h = vec![0u64; bins];
    for &v in values {
        h[bin_of(v, bins)] += 1;
    }
    h
}

fn check(matrix: &VariableVoxelMatrix, var: VarId, bins: usize) -> Result<()> {
    if bins == 0 {
        return Err(Error::Invalid("bin count must be positive".into()));
    }
    if var as usize >= matrix.n_vars() {
        return Err(Error::not_found("variable", var));
    }
    Ok(())
}

pub fn entropy(matrix: &VariableVoxelMatrix, var: VarId, bins: usize) -> Result<f64> {
    check(matrix, var, bins)?;
    Ok(entropy_of_counts(&histogram(matrix.variable(var as usize), bins)))
}

pub fn variable_stats(matrix: &VariableVoxelMatrix, bins: usize) -> Result<Vec<VariableStats>> {
    (0..matrix.n_vars())
        .map(|j| {
            let (raw_min, raw_max) = matrix.raw_ranges()[j];
            Ok(VariableStats {
                id: j as VarId,
                name: matrix.names()[j].clone(),
                entropy: entropy(matrix, j as VarId, bins)?,
                raw_min,
                raw_max,
            })
        })
        .collect()
}

/// `I(u; v) = H(u) + H(v) − H(u, v)` over all voxels; round-off below zero is clamped.
pub fn mutual_information(matrix: &VariableVoxelMatrix, u: VarId, v: VarId, bins: usize) -> Result<f64> {
    check(matrix, u, bins)?;
    check(matrix, v, bins)?;
    // Fixed orientation keeps the result bit-identical under swapping.
    let (u, v) = (u.min(v), u.max(v));
    let (a, b) = (matrix.variable(u as usize), matrix.variable(v as usize));
    let mut joint = vec![0u64; bins * bins];
    for (&x, &y) in a.iter().zip(b) {
        joint[bin_of(x, bins) * bins + bin_of(y, bins)] += 1;
    }
    let hu = entropy_of_counts(&histogram(a, bins));
    let hv = entropy_of_counts(&histogram(b, bins));
    if u == v {
        return Ok(hu);
    }
    let mi = hu + hv - entropy_of_counts(&joint);
    Ok(mi.max(0.0))
}

/// MI of `var` against every variable, in id order.
pub fn mutual_information_row(matrix: &VariableVoxelMatrix, var: VarId, bins: usize) -> Result<Vec<f64>> {
    (0..matrix.n_vars() as VarId)
        .map(|other| mutual_information(matrix, var, other, bins))
        .collect()
}
