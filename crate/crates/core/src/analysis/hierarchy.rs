//! Variable-set organization of a catalog and the local correlation measure.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::similarity::union_of;
use crate::catalog::BiclusterCatalog;
use crate::data::VariableVoxelMatrix;
use crate::error::{Error, Result};
use crate::miner::{variable_pairs, VarId, VoxelId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableSetRecord {
    pub id: usize,
    pub variables: Vec<VarId>,
    pub biclusters: Vec<usize>,
    /// Minimum absolute Pearson coefficient over variable pairs; `None` when
    /// some variable has zero variance on the voxel base.
    pub correlation: Option<f64>,
    pub cardinality: usize,
    pub bicluster_count: usize,
    /// Records whose variable set adds exactly one variable.
    pub children: Vec<usize>,
}

/// Pearson correlation of two equally long samples, `None` if either is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    if n == 0 || n != y.len() {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Local correlation of a variable set on the given voxels: the smallest
/// `|r(u, v)|` over all variable pairs.
pub fn correlation_on(variables: &[VarId], voxels: &[VoxelId], matrix: &VariableVoxelMatrix) -> Option<f64> {
    let columns: HashMap<VarId, Vec<f64>> = variables
        .iter()
        .map(|&v| {
            let col = matrix.variable(v as usize);
            (v, voxels.iter().map(|&i| col[i as usize] as f64).collect())
        })
        .collect();
    let mut best: Option<f64> = None;
    for (u, v) in variable_pairs(variables) {
        let r = pearson(&columns[&u], &columns[&v])?.abs();
        best = Some(best.map_or(r, |b: f64| b.min(r)));
    }
    best
}

/// Correlation of a variable set using the union of its biclusters' voxels.
pub fn correlation(variables: &[VarId], catalog: &BiclusterCatalog, matrix: &VariableVoxelMatrix) -> Option<f64> {
    let ids = catalog.biclusters_of(variables);
    let voxels = union_of(ids.iter().map(|&id| catalog.biclusters[id].voxels.as_slice()));
    if voxels.is_empty() {
        return None;
    }
    correlation_on(variables, &voxels, matrix)
}

/// The per-bicluster alternative: one value per bicluster of the variable set.
pub fn correlation_per_bicluster(
    variables: &[VarId],
    catalog: &BiclusterCatalog,
    matrix: &VariableVoxelMatrix,
) -> Vec<Option<f64>> {
    catalog
        .biclusters_of(variables)
        .iter()
        .map(|&id| correlation_on(variables, &catalog.biclusters[id].voxels, matrix))
        .collect()
}

/// One record per distinct variable set, in lexicographic variable-set order.
pub fn build_hierarchy(catalog: &BiclusterCatalog, matrix: &VariableVoxelMatrix) -> Vec<VariableSetRecord> {
    let mut records: Vec<VariableSetRecord> = catalog
        .varsets()
        .enumerate()
        .map(|(id, (vars, ids))| VariableSetRecord {
            id,
            variables: vars.clone(),
            biclusters: ids.clone(),
            correlation: correlation(vars, catalog, matrix),
            cardinality: vars.len(),
            bicluster_count: ids.len(),
            children: Vec::new(),
        })
        .collect();
    let by_vars: HashMap<Vec<VarId>, usize> = records.iter().map(|r| (r.variables.clone(), r.id)).collect();
    for r in &mut records {
        let mut children = Vec::new();
        for extra in 0..matrix.n_vars() as VarId {
            if r.variables.contains(&extra) {
                continue;
            }
            let mut vars = r.variables.clone();
            vars.push(extra);
            vars.sort_unstable();
            if let Some(&child) = by_vars.get(&vars) {
                children.push(child);
            }
        }
        children.sort_unstable();
        r.children = children;
    }
    records
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SortKey {
    Cardinality,
    Correlation,
    BiclusterCount,
}

impl FromStr for SortKey {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cardinality" => Ok(SortKey::Cardinality),
            "correlation" => Ok(SortKey::Correlation),
            "bicluster_count" | "count" => Ok(SortKey::BiclusterCount),
            other => Err(Error::Invalid(format!("unknown sort key '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SortOrder {
    Asc,
    #[default]
    Desc,
}

impl FromStr for SortOrder {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "asc" => Ok(SortOrder::Asc),
            "desc" => Ok(SortOrder::Desc),
            other => Err(Error::Invalid(format!("unknown sort order '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VarsetQuery {
    pub min_card: Option<usize>,
    pub max_card: Option<usize>,
    /// Keep only variable sets containing this variable.
    pub start: Option<VarId>,
    pub sort: Option<SortKey>,
    #[serde(default)]
    pub order: SortOrder,
}

impl VarsetQuery {
    pub fn matches(&self, r: &VariableSetRecord) -> bool {
        self.min_card.is_none_or(|m| r.cardinality >= m)
            && self.max_card.is_none_or(|m| r.cardinality <= m)
            && self.start.is_none_or(|v| r.variables.contains(&v))
    }
}

/// Filters and stably sorts records. Ties keep lexicographic variable-set
/// order and undefined correlations always come last.
pub fn list_varsets<'a>(records: &'a [VariableSetRecord], query: &VarsetQuery) -> Vec<&'a VariableSetRecord> {
    let mut rows: Vec<&VariableSetRecord> = records.iter().filter(|r| query.matches(r)).collect();
    rows.sort_by(|a, b| a.variables.cmp(&b.variables));
    let Some(key) = query.sort else {
        return rows;
    };
    let directed = |o: Ordering| match query.order {
        SortOrder::Asc => o,
        SortOrder::Desc => o.reverse(),
    };
    rows.sort_by(|a, b| match key {
        SortKey::Cardinality => directed(a.cardinality.cmp(&b.cardinality)),
        SortKey::BiclusterCount => directed(a.bicluster_count.cmp(&b.bicluster_count)),
        SortKey::Correlation => match (a.correlation, b.correlation) {
            (Some(x), Some(y)) => directed(x.total_cmp(&y)),
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => Ordering::Equal,
        },
    });
    rows
}
