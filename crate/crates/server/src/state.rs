//! Loaded dataset, lazily computed analysis products and per-session group edits.
//!
//! Every method here is synchronous and returns typed values; the HTTP layer
//! only serializes them.

use std::collections::HashMap;
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use bivox::analysis::hierarchy::VarsetQuery;
use bivox::analysis::info::mutual_information_row;
use bivox::analysis::{
    build_hierarchy, list_varsets, mip, pc_data, probability_volume, slice, variable_stats, AnalysisOptions, Axis,
    DatasetSummary, Grid2, GroupSet, PcData, ProbabilityVolume, ProjectionLayout, Selection, VariableSetRecord,
    VariableStats, VarsetAnalysis,
};
use bivox::data::load_normalized;
use bivox::miner::VarId;
use bivox::{BiclusterCatalog, DatasetManifest, Error, Result, VariableVoxelMatrix};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    /// Seconds since the Unix epoch.
    pub created: u64,
    /// Group edits keyed by variable-set id.
    pub groups: HashMap<usize, GroupSet>,
}

/// What a request refers to in the spatial and parallel-coordinate views.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionRef {
    Bicluster(usize),
    Group { varset: usize, group: usize },
}

impl std::str::FromStr for SelectionRef {
    type Err = Error;
    /// `bicluster:ID` or `group:VARSET-GROUP`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Invalid(format!("bad selection '{s}'"));
        match s.split_once(':') {
            Some(("bicluster", id)) => Ok(SelectionRef::Bicluster(id.parse().map_err(|_| bad())?)),
            Some(("group", id)) => parse_group_id(id),
            _ => Err(bad()),
        }
    }
}

/// Parses the `VARSET-GROUP` form used in group URLs.
pub fn parse_group_id(s: &str) -> Result<SelectionRef> {
    let bad = || Error::Invalid(format!("bad group id '{s}', expected VARSET-GROUP"));
    let (v, g) = s.split_once('-').ok_or_else(bad)?;
    Ok(SelectionRef::Group {
        varset: v.parse().map_err(|_| bad())?,
        group: g.parse().map_err(|_| bad())?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Drilldown {
    pub variable: VarId,
    /// Mutual information against every variable, in id order.
    pub mutual_information: Vec<f64>,
    pub varsets: Vec<VariableSetRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub varset: usize,
    pub layout: ProjectionLayout,
    pub groups: GroupSet,
}

pub struct AppState {
    pub catalog: BiclusterCatalog,
    pub matrix: VariableVoxelMatrix,
    pub options: AnalysisOptions,
    pub records: Vec<VariableSetRecord>,
    pub summary: DatasetSummary,
    pub stats: Vec<VariableStats>,
    /// Required bearer token, if any.
    pub token: Option<String>,
    analyses: Mutex<HashMap<usize, Arc<VarsetAnalysis>>>,
    mi_rows: Mutex<HashMap<VarId, Arc<Vec<f64>>>>,
    sessions: Mutex<HashMap<String, Arc<Mutex<Session>>>>,
}

impl AppState {
    pub fn new(catalog: BiclusterCatalog, matrix: VariableVoxelMatrix, options: AnalysisOptions) -> Result<Self> {
        let records = build_hierarchy(&catalog, &matrix);
        let summary = DatasetSummary::new(&catalog, &matrix);
        let stats = variable_stats(&matrix, options.info_bins)?;
        Ok(AppState {
            catalog,
            matrix,
            options,
            records,
            summary,
            stats,
            token: None,
            analyses: Mutex::new(HashMap::new()),
            mi_rows: Mutex::new(HashMap::new()),
            sessions: Mutex::new(HashMap::new()),
        })
    }

    /// Loads and normalizes the dataset, loads the catalog and checks that
    /// the catalog was mined from this manifest.
    pub fn load(manifest: &Path, catalog: &Path, options: AnalysisOptions) -> Result<Self> {
        let manifest = DatasetManifest::from_path(manifest)?;
        let catalog = BiclusterCatalog::load(catalog)?;
        catalog.check_provenance(&manifest)?;
        let (matrix, _) = load_normalized(&manifest)?;
        AppState::new(catalog, matrix, options)
    }

    pub fn with_token(mut self, token: Option<String>) -> Self {
        self.token = token;
        self
    }

    pub fn record(&self, id: usize) -> Result<&VariableSetRecord> {
        self.records.get(id).ok_or_else(|| Error::not_found("variable set", id))
    }

    pub fn varsets(&self, query: &VarsetQuery) -> Vec<VariableSetRecord> {
        list_varsets(&self.records, query).into_iter().cloned().collect()
    }

    pub fn mi_row(&self, var: VarId) -> Result<Arc<Vec<f64>>> {
        if let Some(row) = self.mi_rows.lock().unwrap().get(&var) {
            return Ok(row.clone());
        }
        let row = Arc::new(mutual_information_row(&self.matrix, var, self.options.info_bins)?);
        Ok(self.mi_rows.lock().unwrap().entry(var).or_insert(row).clone())
    }

    pub fn drilldown(&self, var: VarId) -> Result<Drilldown> {
        let query = VarsetQuery {
            start: Some(var),
            ..Default::default()
        };
        Ok(Drilldown {
            variable: var,
            mutual_information: self.mi_row(var)?.to_vec(),
            varsets: self.varsets(&query),
        })
    }

    /// Dendrogram, coordinates and default grouping; computed once per variable set.
    pub fn analysis(&self, varset: usize) -> Result<Arc<VarsetAnalysis>> {
        if let Some(a) = self.analyses.lock().unwrap().get(&varset) {
            return Ok(a.clone());
        }
        // Computed outside the lock; a racing duplicate is identical and dropped.
        let a = Arc::new(VarsetAnalysis::compute(
            self.record(varset)?,
            &self.catalog,
            &self.options,
        )?);
        Ok(self.analyses.lock().unwrap().entry(varset).or_insert(a).clone())
    }

    pub fn create_session(&self) -> Session {
        let session = Session {
            id: uuid::Uuid::new_v4().to_string(),
            created: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            groups: HashMap::new(),
        };
        self.sessions
            .lock()
            .unwrap()
            .insert(session.id.clone(), Arc::new(Mutex::new(session.clone())));
        session
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>> {
        self.sessions
            .lock()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| Error::not_found("session", id))
    }

    /// The session's grouping of a variable set, or the default cut.
    pub fn groups(&self, varset: usize, session: Option<&str>) -> Result<GroupSet> {
        let analysis = self.analysis(varset)?;
        if let Some(id) = session {
            if let Some(g) = self.session(id)?.lock().unwrap().groups.get(&varset) {
                return Ok(g.clone());
            }
        }
        Ok(analysis.default_groups.clone())
    }

    fn edit(
        &self,
        varset: usize,
        session: &str,
        f: impl FnOnce(&VarsetAnalysis, &GroupSet) -> Result<GroupSet>,
    ) -> Result<GroupSet> {
        let analysis = self.analysis(varset)?;
        let handle = self.session(session)?;
        // Holding the session lock serializes edits within a session.
        let mut s = handle.lock().unwrap();
        let current = s
            .groups
            .get(&varset)
            .cloned()
            .unwrap_or_else(|| analysis.default_groups.clone());
        let next = f(&analysis, &current)?;
        s.groups.insert(varset, next.clone());
        Ok(next)
    }

    pub fn merge(&self, varset: usize, session: &str, groups: &[usize]) -> Result<GroupSet> {
        self.edit(varset, session, |a, g| a.merge(g, groups))
    }

    pub fn split(&self, varset: usize, session: &str, group: usize) -> Result<GroupSet> {
        self.edit(varset, session, |a, g| a.split(g, group))
    }

    pub fn reset(&self, varset: usize, session: &str) -> Result<GroupSet> {
        let analysis = self.analysis(varset)?;
        self.session(session)?.lock().unwrap().groups.remove(&varset);
        Ok(analysis.default_groups.clone())
    }

    pub fn projection(&self, varset: usize, session: Option<&str>) -> Result<Projection> {
        let groups = self.groups(varset, session)?;
        Ok(Projection {
            varset,
            layout: self.analysis(varset)?.projection(&groups),
            groups,
        })
    }

    pub fn selection(&self, sel: SelectionRef, session: Option<&str>) -> Result<Selection> {
        match sel {
            SelectionRef::Bicluster(id) => Selection::bicluster(&self.catalog, id),
            SelectionRef::Group { varset, group } => {
                let groups = self.groups(varset, session)?;
                Selection::group(&self.catalog, &groups.group(group)?.members)
            }
        }
    }

    pub fn pcdata(&self, sel: SelectionRef, session: Option<&str>, bins: Option<usize>) -> Result<PcData> {
        let s = self.selection(sel, session)?;
        pc_data(
            &s.variables,
            &s.voxels(&self.catalog),
            &self.matrix,
            bins.unwrap_or(self.options.pc_bins),
        )
    }

    pub fn volume(&self, sel: SelectionRef, session: Option<&str>) -> Result<ProbabilityVolume> {
        let s = self.selection(sel, session)?;
        Ok(probability_volume(&s, &self.catalog, self.matrix.dims()))
    }

    pub fn slice(&self, sel: SelectionRef, session: Option<&str>, axis: Axis, index: usize) -> Result<Grid2> {
        slice(&self.volume(sel, session)?, axis, index)
    }

    pub fn mip(&self, sel: SelectionRef, session: Option<&str>, axis: Axis) -> Result<Grid2> {
        Ok(mip(&self.volume(sel, session)?, axis))
    }
}
