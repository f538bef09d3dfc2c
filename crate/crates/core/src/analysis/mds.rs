//! Classical multidimensional scaling and the bicluster scatter layout.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::groups::GroupSet;
use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-9;

/// Eigenvalues at or below this fraction of the largest magnitude count as zero.
const EIGEN_TOL: f64 = 1e-12;

/// Double-centered Gram matrix `B = −½ J D² J`.
pub fn double_center(dist: &DMatrix<f64>) -> DMatrix<f64> {
    let n = dist.nrows();
    let sq = dist.map(|d| d * d);
    let row_means: Vec<f64> = (0..n).map(|i| sq.row(i).sum() / n as f64).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    DMatrix::from_fn(n, n, |i, j| -0.5 * (sq[(i, j)] - row_means[i] - row_means[j] + grand))
}

/// Embeds points in two dimensions from a symmetric, zero-diagonal distance
/// matrix. Axes whose eigenvalue is not positive collapse to zero. Each
/// axis is oriented so its first nonzero coordinate is positive.
pub fn mds_project(dist: &DMatrix<f64>) -> Result<Vec<[f64; 2]>> {
    let n = dist.nrows();
    if dist.ncols() != n {
        return Err(Error::Invalid(format!("distance matrix is {}x{}", n, dist.ncols())));
    }
    for i in 0..n {
        if dist[(i, i)] != 0.0 {
            return Err(Error::Invalid(format!("distance matrix diagonal entry {i} is nonzero")));
        }
        for j in 0..n {
            let (a, b) = (dist[(i, j)], dist[(j, i)]);
            if !a.is_finite() || (a - b).abs() > SYMMETRY_TOL {
                return Err(Error::Invalid(format!("distance matrix not symmetric at ({i}, {j})")));
            }
        }
    }
    if n <= 1 {
        return Ok(vec![[0.0, 0.0]; n]);
    }

    let eigen = SymmetricEigen::new(double_center(dist));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eigen.eigenvalues[b].total_cmp(&eigen.eigenvalues[a]).then(a.cmp(&b)));
    let scale = eigen.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));

    let mut coords = vec![[0.0; 2]; n];
    for (axis, &k) in order.iter().take(2).enumerate() {
        let lambda = eigen.eigenvalues[k];
        if lambda <= EIGEN_TOL * scale.max(f64::MIN_POSITIVE) {
            continue;
        }
        let col = eigen.eigenvectors.column(k);
        let flip = col.iter().find(|v| v.abs() > 1e-12).is_some_and(|&v| v < 0.0);
        let s = lambda.sqrt() * if flip { -1.0 } else { 1.0 };
        for i in 0..n {
            coords[i][axis] = col[i] * s;
        }
    }
    Ok(coords)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutPoint {
    pub bicluster: usize,
    pub x: f64,
    pub y: f64,
    /// Voxel count relative to the largest bicluster in the layout.
    pub radius: f64,
    pub voxels: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hull {
    pub group: usize,
    /// Counter-clockwise hull vertices.
    pub points: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionLayout {
    pub points: Vec<LayoutPoint>,
    pub hulls: Vec<Hull>,
}

impl ProjectionLayout {
    /// `biclusters[k]` has voxel count `sizes[k]` and position `coords[k]`.
    pub fn new(biclusters: &[usize], sizes: &[usize], coords: &[[f64; 2]], groups: &GroupSet) -> Self {
        let largest = sizes.iter().copied().max().unwrap_or(1).max(1) as f64;
        let points: Vec<LayoutPoint> = biclusters
            .iter()
            .zip(sizes)
            .zip(coords)
            .map(|((&bicluster, &voxels), c)| LayoutPoint {
                bicluster,
                x: c[0],
                y: c[1],
                radius: voxels as f64 / largest,
                voxels,
            })
            .collect();
        let hulls = groups
            .groups
            .iter()
            .enumerate()
            .map(|(group, g)| {
                let pts: Vec<[f64; 2]> = points
                    .iter()
                    .filter(|p| g.members.binary_search(&p.bicluster).is_ok())
                    .map(|p| [p.x, p.y])
                    .collect();
                Hull {
                    group,
                    points: convex_hull(pts),
                }
            })
            .collect();
        ProjectionLayout { points, hulls }
    }
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Andrew's monotone chain. Collinear points are dropped; degenerate inputs
/// return their distinct points.
pub fn convex_hull(mut pts: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}
