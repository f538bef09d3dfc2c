//! Co-analysis of a mined catalog.
//!
//! Everything here is a pure function of the catalog and the normalized
//! matrix. [`VarsetAnalysis`] bundles the per-variable-set products
//! (dendrogram, default grouping, MDS coordinates) that the group edits and
//! the scatter layout are built from.

pub mod dendrogram;
pub mod gradient;
pub mod groups;
pub mod hierarchy;
pub mod info;
pub mod mds;
pub mod similarity;
pub mod views;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use dendrogram::{Dendrogram, Linkage, Merge};
pub use gradient::gradient_correlation_field;
pub use groups::{Edit, Group, GroupSet, DEFAULT_COHERENCE, DEFAULT_TARGET_GROUPS};
pub use hierarchy::{build_hierarchy, correlation, list_varsets, SortKey, SortOrder, VariableSetRecord, VarsetQuery};
pub use info::{entropy, mutual_information, variable_stats, VariableStats, DEFAULT_INFO_BINS};
pub use mds::{mds_project, ProjectionLayout};
pub use similarity::{jaccard, jaccard_distance};
pub use views::{
    mip, pc_data, probability_volume, slice, Axis, Grid2, PcData, ProbabilityVolume, Selection, DEFAULT_PC_BINS,
};

use crate::catalog::{BiclusterCatalog, Provenance};
use crate::data::{Dims, VariableVoxelMatrix};
use crate::error::Result;
use crate::miner::MiningParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    pub linkage: Linkage,
    pub target_groups: usize,
    pub coherence: f64,
    pub pc_bins: usize,
    pub info_bins: usize,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            linkage: Linkage::Weighted,
            target_groups: DEFAULT_TARGET_GROUPS,
            coherence: DEFAULT_COHERENCE,
            pc_bins: DEFAULT_PC_BINS,
            info_bins: DEFAULT_INFO_BINS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarsetAnalysis {
    pub varset: usize,
    /// Bicluster ids, ascending; leaf `k` of the dendrogram is `biclusters[k]`.
    pub biclusters: Vec<usize>,
    pub sizes: Vec<usize>,
    pub dendrogram: Dendrogram,
    pub coords: Vec<[f64; 2]>,
    pub default_groups: GroupSet,
}

impl VarsetAnalysis {
    pub fn compute(record: &VariableSetRecord, catalog: &BiclusterCatalog, options: &AnalysisOptions) -> Result<Self> {
        let biclusters = record.biclusters.clone();
        let sets: Vec<&[u32]> = biclusters
            .iter()
            .map(|&id| catalog.get(id).map(|b| b.voxels.as_slice()))
            .collect::<Result<_>>()?;
        let sizes: Vec<usize> = sets.iter().map(|s| s.len()).collect();
        let dist = similarity::distance_matrix(&sets);
        let dendrogram = Dendrogram::build(biclusters.clone(), &dist, options.linkage);
        let coords = mds_project(&dist)?;
        let default_groups =
            GroupSet::default_cut(record.id, &dendrogram, &sizes, options.target_groups, options.coherence);
        Ok(VarsetAnalysis {
            varset: record.id,
            biclusters,
            sizes,
            dendrogram,
            coords,
            default_groups,
        })
    }

    pub fn projection(&self, groups: &GroupSet) -> ProjectionLayout {
        ProjectionLayout::new(&self.biclusters, &self.sizes, &self.coords, groups)
    }

    pub fn merge(&self, groups: &GroupSet, ids: &[usize]) -> Result<GroupSet> {
        groups.merge(ids, &self.dendrogram, &self.sizes)
    }

    pub fn split(&self, groups: &GroupSet, id: usize) -> Result<GroupSet> {
        groups.split(id, &self.dendrogram, &self.sizes)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub name: String,
    pub dims: Dims,
    pub n_voxels: usize,
    pub variables: Vec<String>,
    pub params: MiningParams,
    pub provenance: Provenance,
    pub bicluster_count: usize,
    pub catalog_hash: String,
}

impl DatasetSummary {
    pub fn new(catalog: &BiclusterCatalog, matrix: &VariableVoxelMatrix) -> Self {
        DatasetSummary {
            name: catalog.provenance.dataset.clone(),
            dims: matrix.dims(),
            n_voxels: matrix.n_voxels(),
            variables: matrix.names().to_vec(),
            params: catalog.params.clone(),
            provenance: catalog.provenance.clone(),
            bicluster_count: catalog.len(),
            catalog_hash: catalog.content_hash(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarsetBundle {
    pub varset: usize,
    pub dendrogram: Dendrogram,
    pub monotonicity_violations: Vec<usize>,
    pub groups: GroupSet,
    pub projection: ProjectionLayout,
}

/// Everything `analyze` writes: the variable-set table, per-variable
/// statistics, and the dendrogram, default grouping and projection of every
/// variable set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisBundle {
    pub dataset: DatasetSummary,
    pub options: AnalysisOptions,
    pub variables: Vec<VariableStats>,
    pub varsets: Vec<VariableSetRecord>,
    pub details: Vec<VarsetBundle>,
}

impl AnalysisBundle {
    pub fn compute(
        catalog: &BiclusterCatalog,
        matrix: &VariableVoxelMatrix,
        options: &AnalysisOptions,
    ) -> Result<Self> {
        let varsets = build_hierarchy(catalog, matrix);
        let details = varsets
            .par_iter()
            .map(|record| {
                let a = VarsetAnalysis::compute(record, catalog, options)?;
                Ok(VarsetBundle {
                    varset: record.id,
                    monotonicity_violations: a.dendrogram.monotonicity_violations(),
                    projection: a.projection(&a.default_groups),
                    groups: a.default_groups,
                    dendrogram: a.dendrogram,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(AnalysisBundle {
            dataset: DatasetSummary::new(catalog, matrix),
            options: *options,
            variables: variable_stats(matrix, options.info_bins)?,
            varsets,
            details,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("bundle serializes")
    }
}
