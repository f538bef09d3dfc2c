//! Gradient-alignment correlation field, the baseline the biclusters are
//! compared against.

use crate::data::{Dims, VariableVoxelMatrix};
use crate::error::{Error, Result};
use crate::miner::{variable_pairs, VarId};

/// Central differences in the interior, one-sided at the faces.
pub fn gradient(values: &[f32], dims: Dims) -> Vec<[f64; 3]> {
    let ext = [dims.nx, dims.ny, dims.nz];
    let stride = [1, dims.nx, dims.nx * dims.ny];
    let mut out = vec![[0.0; 3]; dims.len()];
    for (i, g) in out.iter_mut().enumerate() {
        let pos = [i % dims.nx, (i / dims.nx) % dims.ny, i / (dims.nx * dims.ny)];
        for axis in 0..3 {
            if ext[axis] < 2 {
                continue;
            }
            let p = pos[axis];
            let s = stride[axis];
            let at = |k: usize| values[k] as f64;
            g[axis] = if p == 0 {
                at(i + s) - at(i)
            } else if p == ext[axis] - 1 {
                at(i) - at(i - s)
            } else {
                (at(i + s) - at(i - s)) / 2.0
            };
        }
    }
    out
}

/// Per voxel, `|∇a · ∇b| / (|∇a| |∇b|)`, minimized over all variable pairs
/// of the set. Voxels where any gradient vanishes get 0.
pub fn gradient_correlation_field(matrix: &VariableVoxelMatrix, variables: &[VarId]) -> Result<Vec<f32>> {
    let dims = matrix.dims();
    if dims.nx < 2 || dims.ny < 2 || dims.nz < 2 {
        return Err(Error::Invalid(format!(
            "gradient field needs at least 2 voxels per axis, grid is {dims}"
        )));
    }
    let mut vars = variables.to_vec();
    vars.sort_unstable();
    vars.dedup();
    if vars.len() < 2 {
        return Err(Error::Invalid("gradient field needs at least two variables".into()));
    }
    if let Some(&bad) = vars.iter().find(|&&v| v as usize >= matrix.n_vars()) {
        return Err(Error::not_found("variable", bad));
    }
    let grads: Vec<Vec<[f64; 3]>> = vars
        .iter()
        .map(|&v| gradient(matrix.variable(v as usize), dims))
        .collect();
    let index = |v: VarId| vars.binary_search(&v).unwrap();
    let mut field = vec![f64::INFINITY; dims.len()];
    for (u, v) in variable_pairs(&vars) {
        let (gu, gv) = (&grads[index(u)], &grads[index(v)]);
        for (i, f) in field.iter_mut().enumerate() {
            let (a, b) = (gu[i], gv[i]);
            let na = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
            let nb = (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt();
            let c = if na == 0.0 || nb == 0.0 {
                0.0
            } else {
                ((a[0] * b[0] + a[1] * b[1] + a[2] * b[2]) / (na * nb)).abs().min(1.0)
            };
            *f = f.min(c);
        }
    }
    Ok(field.into_iter().map(|v| v as f32).collect())
}
