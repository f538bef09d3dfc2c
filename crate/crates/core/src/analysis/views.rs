//! Data behind the parallel-coordinate and spatial views.

use serde::{Deserialize, Serialize};

use super::similarity::union_of;
use crate::catalog::BiclusterCatalog;
use crate::data::{Dims, VariableVoxelMatrix, NORMALIZED_MAX};
use crate::error::{Error, Result};
use crate::miner::{VarId, VoxelId};

pub const DEFAULT_PC_BINS: usize = 64;

/// Bin of a normalized value among `bins` equal bins over `[0, 255]`.
#[inline]
pub fn bin_of(value: f32, bins: usize) -> usize {
    let b = (value.max(0.0) as f64 * bins as f64 / NORMALIZED_MAX).floor() as usize;
    b.min(bins - 1)
}

/// One or more biclusters of the same variable set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Selection {
    pub variables: Vec<VarId>,
    pub members: Vec<usize>,
}

impl Selection {
    pub fn bicluster(catalog: &BiclusterCatalog, id: usize) -> Result<Self> {
        let b = catalog.get(id)?;
        Ok(Selection {
            variables: b.variables.clone(),
            members: vec![id],
        })
    }

    pub fn group(catalog: &BiclusterCatalog, members: &[usize]) -> Result<Self> {
        let first = *members
            .first()
            .ok_or_else(|| Error::Invalid("empty selection".into()))?;
        let variables = catalog.get(first)?.variables.clone();
        for &id in members {
            if catalog.get(id)?.variables != variables {
                return Err(Error::Invalid(format!("bicluster {id} is not over {variables:?}")));
            }
        }
        let mut members = members.to_vec();
        members.sort_unstable();
        members.dedup();
        Ok(Selection { variables, members })
    }

    /// Union of member voxels.
    pub fn voxels(&self, catalog: &BiclusterCatalog) -> Vec<VoxelId> {
        union_of(self.members.iter().map(|&id| catalog.biclusters[id].voxels.as_slice()))
    }
}

/// Per-voxel fraction of the selection's biclusters containing the voxel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityVolume {
    pub dims: Dims,
    pub values: Vec<f32>,
}

pub fn probability_volume(selection: &Selection, catalog: &BiclusterCatalog, dims: Dims) -> ProbabilityVolume {
    let mut counts = vec![0u32; dims.len()];
    for &id in &selection.members {
        for &v in &catalog.biclusters[id].voxels {
            counts[v as usize] += 1;
        }
    }
    let k = selection.members.len().max(1) as f64;
    ProbabilityVolume {
        dims,
        values: counts.iter().map(|&c| (c as f64 / k) as f32).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairDensity {
    pub u: VarId,
    pub v: VarId,
    /// Row-major `bins × bins`, indexed by `(bin of u, bin of v)`.
    pub counts: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PcData {
    pub axes: Vec<VarId>,
    pub bins: usize,
    pub voxel_count: usize,
    pub histograms: Vec<Vec<u64>>,
    /// One entry per adjacent axis pair.
    pub pairs: Vec<PairDensity>,
}

/// Axis histograms and adjacent-axis joint counts over `voxels`, axes in
/// ascending variable id.
pub fn pc_data(variables: &[VarId], voxels: &[VoxelId], matrix: &VariableVoxelMatrix, bins: usize) -> Result<PcData> {
    if bins == 0 {
        return Err(Error::Invalid("bin count must be positive".into()));
    }
    let mut axes = variables.to_vec();
    axes.sort_unstable();
    axes.dedup();
    if let Some(&bad) = axes.iter().find(|&&v| v as usize >= matrix.n_vars()) {
        return Err(Error::not_found("variable", bad));
    }
    let binned: Vec<Vec<usize>> = axes
        .iter()
        .map(|&v| {
            let col = matrix.variable(v as usize);
            voxels.iter().map(|&i| bin_of(col[i as usize], bins)).collect()
        })
        .collect();
    let histograms = binned
        .iter()
        .map(|b| {
            let mut h = vec![0u64; bins];
            for &x in b {
                h[x] += 1;
            }
            h
        })
        .collect();
    let pairs = axes
        .windows(2)
        .zip(binned.windows(2))
        .map(|(uv, bb)| {
            let mut counts = vec![0u64; bins * bins];
            for (&a, &b) in bb[0].iter().zip(&bb[1]) {
                counts[a * bins + b] += 1;
            }
            PairDensity {
                u: uv[0],
                v: uv[1],
                counts,
            }
        })
        .collect();
    Ok(PcData {
        axes,
        bins,
        voxel_count: voxels.len(),
        histograms,
        pairs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl std::str::FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            other => Err(Error::Invalid(format!("unknown axis '{other}'"))),
        }
    }
}

impl Axis {
    fn index(self) -> usize {
        self as usize
    }
}

/// Row-major 2D float grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid2 {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f32>,
}

/// Plane coordinates for `axis`: columns run along the faster remaining
/// axis, rows along the slower one.
fn plane(dims: Dims, axis: Axis) -> (usize, usize) {
    match axis {
        Axis::X => (dims.ny, dims.nz),
        Axis::Y => (dims.nx, dims.nz),
        Axis::Z => (dims.nx, dims.ny),
    }
}

fn voxel_at(dims: Dims, axis: Axis, k: usize, col: usize, row: usize) -> usize {
    let (x, y, z) = match axis {
        Axis::X => (k, col, row),
        Axis::Y => (col, k, row),
        Axis::Z => (col, row, k),
    };
    x + dims.nx * (y + dims.ny * z)
}

/// The single-voxel-thick plane `axis = index`.
pub fn slice(volume: &ProbabilityVolume, axis: Axis, index: usize) -> Result<Grid2> {
    let dims = volume.dims;
    let extent = dims.extent(axis.index());
    if index >= extent {
        return Err(Error::Invalid(format!("slice index {index} out of range 0..{extent}")));
    }
    let (width, height) = plane(dims, axis);
    let mut values = Vec::with_capacity(width * height);
    for row in 0..height {
        for col in 0..width {
            values.push(volume.values[voxel_at(dims, axis, index, col, row)]);
        }
    }
    Ok(Grid2 { width, height, values })
}

/// Maximum along `axis` for every ray.
pub fn mip(volume: &ProbabilityVolume, axis: Axis) -> Grid2 {
    let dims = volume.dims;
    let (width, height) = plane(dims, axis);
    let mut values = vec![f32::NEG_INFINITY; width * height];
    for k in 0..dims.extent(axis.index()) {
        for row in 0..height {
            for col in 0..width {
                let v = volume.values[voxel_at(dims, axis, k, col, row)];
                let cell = &mut values[row * width + col];
                *cell = cell.max(v);
            }
        }
    }
    Grid2 { width, height, values }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::miner::{Bicluster, MiningParams};
    use crate::Provenance;

    fn catalog() -> BiclusterCatalog {
        BiclusterCatalog::new(
            vec![
                Bicluster::new(vec![0, 1], vec![0, 1, 2]),
                Bicluster::new(vec![0, 1], vec![1, 2, 3]),
                Bicluster::new(vec![0, 1], vec![2, 5]),
                Bicluster::new(vec![0, 1], vec![2, 6]),
                Bicluster::new(vec![0, 1], vec![1, 7]),
            ],
            MiningParams::default(),
            Provenance::default(),
        )
    }

    #[test]
    fn probability_fractions() {
        let cat = catalog();
        let dims = Dims::new(2, 2, 2);
        let single = probability_volume(&Selection::bicluster(&cat, 0).unwrap(), &cat, dims);
        assert!(single.values.iter().all(|&v| v == 0.0 || v == 1.0));
        let all = Selection::group(&cat, &[0, 1, 2, 3, 4]).unwrap();
        let p = probability_volume(&all, &cat, dims);
        // Bicluster order is canonical, so count memberships directly.
        let in_voxel_1 = cat.biclusters.iter().filter(|b| b.contains_voxel(1)).count();
        assert_eq!(in_voxel_1, 3);
        assert_eq!(p.values[1], (3.0f64 / 5.0) as f32);
        assert_eq!(p.values[4], 0.0);
    }

    #[test]
    fn single_voxel_pc_data() {
        let cols = vec![vec![0.0, 128.0, 255.0], vec![10.0, 20.0, 30.0], vec![1.0, 2.0, 3.0]];
        let names = (0..3).map(|j| format!("v{j}")).collect();
        let m = VariableVoxelMatrix::from_columns(Dims::new(3, 1, 1), names, cols).unwrap();
        let pc = pc_data(&[2, 0, 1], &[1], &m, 64).unwrap();
        assert_eq!(pc.axes, vec![0, 1, 2]);
        for h in &pc.histograms {
            assert_eq!(h.iter().filter(|&&c| c > 0).count(), 1);
            assert_eq!(h.iter().sum::<u64>(), 1);
        }
        assert_eq!(pc.pairs.len(), 2);
        assert_eq!(bin_of(255.0, 64), 63);
        assert_eq!(bin_of(0.0, 64), 0);
    }

    #[test]
    fn slice_and_mip_shapes() {
        let dims = Dims::new(3, 2, 2);
        let vol = ProbabilityVolume {
            dims,
            values: (0..12).map(|i| i as f32).collect(),
        };
        let s = slice(&vol, Axis::Z, 1).unwrap();
        assert_eq!((s.width, s.height), (3, 2));
        assert_eq!(s.values, vec![6.0, 7.0, 8.0, 9.0, 10.0, 11.0]);
        let m = mip(&vol, Axis::X);
        assert_eq!((m.width, m.height), (2, 2));
        assert_eq!(m.values, vec![2.0, 5.0, 8.0, 11.0]);
        assert!(slice(&vol, Axis::Y, 2).is_err());
    }
}
