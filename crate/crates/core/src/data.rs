//! Dataset manifests, raw volume ingestion and the variable-voxel matrix.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Grid extent along x, y and z. Serialized as `[nx, ny, nz]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "[usize; 3]", into = "[usize; 3]")]
pub struct Dims {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

impl From<[usize; 3]> for Dims {
    fn from([nx, ny, nz]: [usize; 3]) -> Self {
        Dims { nx, ny, nz }
    }
}

impl From<Dims> for [usize; 3] {
    fn from(d: Dims) -> Self {
        [d.nx, d.ny, d.nz]
    }
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.nx, self.ny, self.nz)
    }
}

impl Dims {
    pub fn new(nx: usize, ny: usize, nz: usize) -> Self {
        Dims { nx, ny, nz }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Extent along `axis` (0 = x, 1 = y, 2 = z).
    pub fn extent(&self, axis: usize) -> usize {
        match axis {
            0 => self.nx,
            1 => self.ny,
            _ => self.nz,
        }
    }

    /// Voxel id → `(x, y, z)` with x varying fastest.
    pub fn coords(&self, index: usize) -> Result<(usize, usize, usize)> {
        if index >= self.len() {
            return Err(Error::VoxelOutOfRange { index, len: self.len() });
        }
        let x = index % self.nx;
        let rest = index / self.nx;
        Ok((x, rest % self.ny, rest / self.ny))
    }

    /// Inverse of [`Dims::coords`]: `x + nx * (y + ny * z)`.
    pub fn index(&self, x: usize, y: usize, z: usize) -> Result<usize> {
        if x >= self.nx || y >= self.ny || z >= self.nz {
            return Err(Error::Invalid(format!(
                "coordinate ({x}, {y}, {z}) outside grid {self}"
            )));
        }
        Ok(x + self.nx * (y + self.ny * z))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScalarKind {
    #[serde(rename = "float32")]
    Float32,
    #[serde(rename = "float64")]
    Float64,
}

impl ScalarKind {
    pub fn width(self) -> usize {
        match self {
            ScalarKind::Float32 => 4,
            ScalarKind::Float64 => 8,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum ByteOrder {
    #[default]
    #[serde(rename = "little-endian")]
    LittleEndian,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum VoxelOrder {
    #[default]
    #[serde(rename = "x-fastest")]
    XFastest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableEntry {
    pub id: u16,
    pub name: String,
    /// Raw volume file, relative to the manifest's directory unless absolute.
    pub file: PathBuf,
    pub scalar_kind: ScalarKind,
    /// Optional `[min, max]` used for normalization instead of the data range.
    /// Values outside the range are clamped.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub name: String,
    pub dims: Dims,
    pub variables: Vec<VariableEntry>,
    #[serde(default)]
    pub byte_order: ByteOrder,
    #[serde(default)]
    pub voxel_order: VoxelOrder,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl DatasetManifest {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut manifest = Self::from_json(&text)?;
        manifest.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(manifest)
    }

    /// Parses and validates a manifest; relative files resolve against the
    /// current directory until `base_dir` is set.
    pub fn from_json(text: &str) -> Result<Self> {
        let manifest: DatasetManifest = serde_json::from_str(text).map_err(|e| Error::Manifest(e.to_string()))?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let Dims { nx, ny, nz } = self.dims;
        if nx == 0 || ny == 0 || nz == 0 {
            return Err(Error::Manifest(format!("dims must be positive, got {}", self.dims)));
        }
        if self.variables.is_empty() {
            return Err(Error::Manifest("no variables listed".into()));
        }
        if self.variables.len() > u16::MAX as usize {
            return Err(Error::Manifest("too many variables".into()));
        }
        let mut names = HashSet::new();
        for (pos, var) in self.variables.iter().enumerate() {
            if var.id as usize != pos {
                return Err(Error::Manifest(format!(
                    "variable '{}' has id {} but is listed at position {pos}",
                    var.name, var.id
                )));
            }
            if !names.insert(var.name.as_str()) {
                return Err(Error::Manifest(format!("duplicate variable name '{}'", var.name)));
            }
            if let Some([lo, hi]) = var.range {
                if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                    return Err(Error::Manifest(format!(
                        "variable '{}' has invalid range [{lo}, {hi}]",
                        var.name
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn variable_path(&self, var: &VariableEntry) -> PathBuf {
        if var.file.is_absolute() {
            var.file.clone()
        } else {
            self.base_dir.join(&var.file)
        }
    }

    pub fn variable_names(&self) -> Vec<String> {
        self.variables.iter().map(|v| v.name.clone()).collect()
    }

    /// Hex SHA-256 of the canonical (compact JSON) manifest.
    pub fn content_hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("manifest serializes");
        hex_digest(&canonical)
    }

    /// Per-variable normalization overrides from the manifest.
    pub fn range_overrides(&self) -> Vec<Option<(f64, f64)>> {
        self.variables
            .iter()
            .map(|v| v.range.map(|[lo, hi]| (lo, hi)))
            .collect()
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Dense `M × N` scalar matrix: `value(i, j)` is variable `j` at voxel `i`.
///
/// Storage is variable-major so a whole variable is one contiguous slice.
#[derive(Debug, Clone, PartialEq)]
pub struct VariableVoxelMatrix {
    dims: Dims,
    names: Vec<String>,
    values: Vec<f32>,
    raw_ranges: Vec<(f64, f64)>,
}

impl VariableVoxelMatrix {
    /// Builds a matrix from one value column per variable. Raw ranges are
    /// computed from the columns.
    pub fn from_columns(dims: Dims, names: Vec<String>, columns: Vec<Vec<f32>>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::Invalid(format!(
                "{} names for {} columns",
                names.len(),
                columns.len()
            )));
        }
        let n = dims.len();
        let mut values = Vec::with_capacity(n * columns.len());
        let mut raw_ranges = Vec::with_capacity(columns.len());
        for (name, col) in names.iter().zip(&columns) {
            if col.len() != n {
                return Err(Error::Invalid(format!(
                    "variable '{name}' has {} values, grid {dims} needs {n}",
                    col.len()
                )));
            }
            if let Some(voxel) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    variable: name.clone(),
                    voxel,
                });
            }
            raw_ranges.push(min_max(col.iter().map(|&v| v as f64)));
            values.extend_from_slice(col);
        }
        Ok(VariableVoxelMatrix {
            dims,
            names,
            values,
            raw_ranges,
        })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn n_vars(&self) -> usize {
        self.names.len()
    }

    pub fn n_voxels(&self) -> usize {
        self.dims.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Per-variable `(min, max)` of the values as loaded, before normalization.
    pub fn raw_ranges(&self) -> &[(f64, f64)] {
        &self.raw_ranges
    }

    /// All voxel values of variable `j`.
    pub fn variable(&self, j: usize) -> &[f32] {
        let n = self.n_voxels();
        &self.values[j * n..(j + 1) * n]
    }

    #[inline]
    pub fn value(&self, voxel: usize, var: usize) -> f32 {
        self.values[var * self.n_voxels() + voxel]
    }

    /// `s(i, u) − s(i, v)` evaluated exactly in f64.
    #[inline]
    pub fn diff(&self, voxel: usize, u: usize, v: usize) -> f64 {
        self.value(voxel, u) as f64 - self.value(voxel, v) as f64
    }
}

fn min_max(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Reads every variable file listed in the manifest. No normalization is applied.
pub fn load_dataset(manifest: &DatasetManifest) -> Result<VariableVoxelMatrix> {
    manifest.validate()?;
    let n = manifest.dims.len();
    let loaded: Vec<(Vec<f32>, (f64, f64))> = manifest
        .variables
        .par_iter()
        .map(|var| read_variable(manifest, var, n))
        .collect::<Result<_>>()?;

    let mut values = Vec::with_capacity(n * loaded.len());
    let mut raw_ranges = Vec::with_capacity(loaded.len());
    for (col, range) in loaded {
        values.extend_from_slice(&col);
        raw_ranges.push(range);
    }
    Ok(VariableVoxelMatrix {
        dims: manifest.dims,
        names: manifest.variable_names(),
        values,
        raw_ranges,
    })
}

fn read_variable(manifest: &DatasetManifest, var: &VariableEntry, n: usize) -> Result<(Vec<f32>, (f64, f64))> {
    let path = manifest.variable_path(var);
    let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
    let width = var.scalar_kind.width();
    let expected = (n * width) as u64;
    if bytes.len() as u64 != expected {
        return Err(Error::SizeMismatch {
            variable: var.name.clone(),
            path,
            expected,
            actual: bytes.len() as u64,
        });
    }
    let raw: Vec<f64> = match var.scalar_kind {
        ScalarKind::Float32 => bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect(),
        ScalarKind::Float64 => bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect(),
    };
    if let Some(voxel) = raw.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            variable: var.name.clone(),
            voxel,
        });
    }
    let range = min_max(raw.iter().copied());
    Ok((raw.into_iter().map(|v| v as f32).collect(), range))
}

/// Min-max scaling parameters applied per variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationSpec {
    /// `(min, max)` per variable that maps to `[0, 255]`.
    pub ranges: Vec<(f64, f64)>,
}

pub const NORMALIZED_MAX: f64 = 255.0;

impl NormalizationSpec {
    /// Maps a normalized value of variable `var` back to raw units.
    /// Constant variables map back to their single value.
    pub fn denormalize(&self, var: usize, value: f64) -> f64 {
        let (lo, hi) = self.ranges[var];
        if hi > lo {
            lo + value / NORMALIZED_MAX * (hi - lo)
        } else {
            lo
        }
    }

    pub fn normalize_value(&self, var: usize, raw: f64) -> f64 {
        let (lo, hi) = self.ranges[var];
        if hi > lo {
            ((raw - lo) / (hi - lo) * NORMALIZED_MAX).clamp(0.0, NORMALIZED_MAX)
        } else {
            0.0
        }
    }
}

/// Scales each variable independently to `[0, 255]` using its raw range.
/// Constant variables become all zero.
pub fn normalize(matrix: &VariableVoxelMatrix) -> (VariableVoxelMatrix, NormalizationSpec) {
    normalize_with(matrix, &[])
}

/// Like [`normalize`], but `overrides[j]` (when present) replaces the raw range
/// of variable `j`.
pub fn normalize_with(
    matrix: &VariableVoxelMatrix,
    overrides: &[Option<(f64, f64)>],
) -> (VariableVoxelMatrix, NormalizationSpec) {
    let ranges: Vec<(f64, f64)> = (0..matrix.n_vars())
        .map(|j| overrides.get(j).copied().flatten().unwrap_or(matrix.raw_ranges[j]))
        .collect();
    let spec = NormalizationSpec { ranges };
    let n = matrix.n_voxels();
    let mut values = Vec::with_capacity(matrix.values.len());
    for j in 0..matrix.n_vars() {
        values.extend(
            matrix.values[j * n..(j + 1) * n]
                .iter()
                .map(|&v| spec.normalize_value(j, v as f64) as f32),
        );
    }
    let normalized = VariableVoxelMatrix {
        dims: matrix.dims,
        names: matrix.names.clone(),
        values,
        raw_ranges: matrix.raw_ranges.clone(),
    };
    (normalized, spec)
}

/// Loads and normalizes in one step, honoring manifest range overrides.
pub fn load_normalized(manifest: &DatasetManifest) -> Result<(VariableVoxelMatrix, NormalizationSpec)> {
    let raw = load_dataset(manifest)?;
    Ok(normalize_with(&raw, &manifest.range_overrides()))
}

/// Writes `values` as raw little-endian float32, the volume file format.
pub fn write_f32_raw(path: &Path, values: &[f32]) -> Result<()> {
    let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
