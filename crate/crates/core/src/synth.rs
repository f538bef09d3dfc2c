//! Seeded synthetic multivariate volumes with planted coherent regions.
//!
//! Ambient values are piecewise constant over Voronoi cells (one random level
//! per cell and variable, like material regions in a simulation) plus small
//! uniform noise, rescaled to `[0, 255]` and rounded to integers. Each
//! planted region overrides a compact blob of voxels on a few variables with
//! values `offset_j + t(i) + e_j(i)`, where `t` is a shared ramp and the jitter
//! `e_j` is bounded so every pairwise difference spread stays within
//! `4 · jitter`.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{write_f32_raw, DatasetManifest, Dims, ScalarKind, VariableEntry, VariableVoxelMatrix};
use crate::error::{Error, Result};
use crate::miner::{VarId, VoxelId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantSpec {
    pub variables: Vec<VarId>,
    /// Fraction of all voxels in the region.
    pub voxel_frac: f64,
    /// Region center in unit coordinates.
    pub center: [f64; 3],
    /// Per-variable jitter bound, in integer value steps.
    pub jitter: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub name: String,
    pub dims: Dims,
    pub n_vars: usize,
    pub seed: u64,
    /// Number of ambient Voronoi cells.
    pub cells: usize,
    /// Half-width of the uniform ambient noise, in value units.
    pub noise: f64,
    pub planted: Vec<PlantSpec>,
}

impl SyntheticConfig {
    /// 32³ grid, five variables, one region covering 5% of the voxels on
    /// variables {0, 2, 3} with pair spread at most `delta / 2`.
    pub fn planted_default(seed: u64, delta: f64) -> Self {
        SyntheticConfig {
            name: "synthetic-32".into(),
            dims: Dims::new(32, 32, 32),
            n_vars: 5,
            seed,
            cells: 48,
            noise: 2.0,
            planted: vec![PlantSpec {
                variables: vec![0, 2, 3],
                voxel_frac: 0.05,
                center: [0.3, 0.6, 0.45],
                jitter: (delta / 8.0).floor() as u32,
            }],
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlantedRegion {
    pub variables: Vec<VarId>,
    /// Sorted voxel ids.
    pub voxels: Vec<VoxelId>,
}

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub config: SyntheticConfig,
    pub matrix: VariableVoxelMatrix,
    pub planted: Vec<PlantedRegion>,
}

fn unit_coords(dims: Dims, i: usize) -> [f64; 3] {
    let (x, y, z) = dims.coords(i).unwrap();
    [
        (x as f64 + 0.5) / dims.nx as f64,
        (y as f64 + 0.5) / dims.ny as f64,
        (z as f64 + 0.5) / dims.nz as f64,
    ]
}

/// Index of the nearest of `seeds` for every voxel.
fn voronoi(dims: Dims, seeds: &[[f64; 3]]) -> Vec<usize> {
    (0..dims.len())
        .map(|i| {
            let p = unit_coords(dims, i);
            let dist = |s: &[f64; 3]| (0..3).map(|k| (p[k] - s[k]).powi(2)).sum::<f64>();
            (0..seeds.len())
                .min_by(|&a, &b| dist(&seeds[a]).total_cmp(&dist(&seeds[b])).then(a.cmp(&b)))
                .unwrap()
        })
        .collect()
}

/// The `count` voxels closest to `center` (unit coordinates), ties by id.
fn blob(dims: Dims, center: [f64; 3], count: usize) -> Vec<VoxelId> {
    let mut dist: Vec<(f64, VoxelId)> = (0..dims.len())
        .map(|i| {
            let p = unit_coords(dims, i);
            let d: f64 = (0..3).map(|k| (p[k] - center[k]).powi(2)).sum();
            (d, i as VoxelId)
        })
        .collect();
    dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut voxels: Vec<VoxelId> = dist.into_iter().take(count).map(|(_, i)| i).collect();
    voxels.sort_unstable();
    voxels
}

pub fn generate(config: &SyntheticConfig) -> Result<SyntheticDataset> {
    let dims = config.dims;
    let n = dims.len();
    if n == 0 || config.n_vars < 2 {
        return Err(Error::Invalid(
            "synthetic data needs a non-empty grid and two variables".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut planted = Vec::new();
    let mut in_plant = vec![false; n];
    for spec in &config.planted {
        if spec.variables.iter().any(|&v| v as usize >= config.n_vars) {
            return Err(Error::Invalid(format!(
                "planted variables {:?} out of range",
                spec.variables
            )));
        }
        let count = ((spec.voxel_frac * n as f64).round() as usize).clamp(1, n);
        let voxels = blob(dims, spec.center, count);
        for &v in &voxels {
            in_plant[v as usize] = true;
        }
        let mut variables = spec.variables.clone();
        variables.sort_unstable();
        planted.push(PlantedRegion { variables, voxels });
    }

    let cells = config.cells.max(1);
    let seeds: Vec<[f64; 3]> = (0..cells)
        .map(|_| [rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()])
        .collect();
    let cell_of = voronoi(dims, &seeds);

    let mut columns: Vec<Vec<f32>> = Vec::with_capacity(config.n_vars);
    for _ in 0..config.n_vars {
        let levels: Vec<f64> = (0..cells).map(|_| rng.random::<f64>() * 255.0).collect();
        let noisy: Vec<f64> = cell_of
            .iter()
            .map(|&c| levels[c] + config.noise * (2.0 * rng.random::<f64>() - 1.0))
            .collect();
        // Rescale using ambient voxels only so each variable spans exactly [0, 255].
        let (lo, hi) = noisy
            .iter()
            .zip(&in_plant)
            .filter(|(_, &p)| !p)
            .fold((f64::MAX, f64::MIN), |(a, b), (&v, _)| (a.min(v), b.max(v)));
        let span = (hi - lo).max(1e-12);
        columns.push(
            noisy
                .iter()
                .map(|&v| ((v - lo) / span * 255.0).round().clamp(0.0, 255.0) as f32)
                .collect(),
        );
    }

    for (region, spec) in planted.iter().zip(&config.planted) {
        let jitter = spec.jitter as i64;
        let offsets: Vec<f64> = region
            .variables
            .iter()
            .map(|_| rng.random_range(60..150) as f64)
            .collect();
        let xs: Vec<usize> = region
            .voxels
            .iter()
            .map(|&i| dims.coords(i as usize).unwrap().0)
            .collect();
        let (xmin, xmax) = xs.iter().fold((usize::MAX, 0), |(a, b), &x| (a.min(x), b.max(x)));
        for (k, &voxel) in region.voxels.iter().enumerate() {
            let ramp = if xmax > xmin {
                (12.0 * (xs[k] - xmin) as f64 / (xmax - xmin) as f64).round()
            } else {
                0.0
            };
            for (&var, &offset) in region.variables.iter().zip(&offsets) {
                let e = rng.random_range(-jitter..=jitter) as f64;
                columns[var as usize][voxel as usize] = (offset + ramp + e) as f32;
            }
        }
    }

    let names = (0..config.n_vars).map(|j| format!("var{j}")).collect();
    let matrix = VariableVoxelMatrix::from_columns(dims, names, columns)?;
    Ok(SyntheticDataset {
        config: config.clone(),
        matrix,
        planted,
    })
}

impl SyntheticDataset {
    /// Writes one float32 raw file per variable plus `manifest.json` into
    /// `dir`; returns the manifest path.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut variables = Vec::new();
        for (j, name) in self.matrix.names().iter().enumerate() {
            let file = PathBuf::from(format!("{name}.raw"));
            write_f32_raw(&dir.join(&file), self.matrix.variable(j))?;
            variables.push(VariableEntry {
                id: j as VarId,
                name: name.clone(),
                file,
                scalar_kind: ScalarKind::Float32,
                range: None,
            });
        }
        let manifest = DatasetManifest {
            name: self.config.name.clone(),
            dims: self.matrix.dims(),
            variables,
            byte_order: Default::default(),
            voxel_order: Default::default(),
            base_dir: dir.to_path_buf(),
        };
        let path = dir.join("manifest.json");
        std::fs::write(&path, manifest.to_json()).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}
