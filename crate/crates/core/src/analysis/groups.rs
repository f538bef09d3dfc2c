//! Editable partitions of a variable set's biclusters into groups.

use serde::{Deserialize, Serialize};

use super::dendrogram::Dendrogram;
use crate::error::{Error, Result};

pub const DEFAULT_TARGET_GROUPS: usize = 10;
pub const DEFAULT_COHERENCE: f64 = 0.99;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Group {
    /// Member bicluster ids, ascending.
    pub members: Vec<usize>,
    pub representative: usize,
    /// Dendrogram nodes whose leaves make up the group, ascending.
    pub nodes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Edit {
    Merge { groups: Vec<usize> },
    Split { group: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSet {
    pub varset: usize,
    /// Ordered by smallest member id.
    pub groups: Vec<Group>,
    pub history: Vec<Edit>,
    pub revision: u64,
}

impl GroupSet {
    /// Cuts the dendrogram at the smallest merge height that leaves at most
    /// `target` groups, then splits any group whose top merge is higher than
    /// `coherence` until none is.
    pub fn default_cut(varset: usize, tree: &Dendrogram, sizes: &[usize], target: usize, coherence: f64) -> GroupSet {
        let n = tree.n_leaves();
        if n == 0 {
            return GroupSet {
                varset,
                groups: Vec::new(),
                history: Vec::new(),
                revision: 0,
            };
        }
        let mut heights: Vec<f64> = tree.merges.iter().map(|m| m.height).collect();
        heights.sort_by(f64::total_cmp);
        heights.dedup();
        let h = heights
            .iter()
            .copied()
            .find(|&h| n - tree.merges.iter().filter(|m| m.height <= h).count() <= target.max(1))
            .unwrap_or(f64::INFINITY);

        let mut roots = Vec::new();
        let mut stack = vec![tree.root()];
        while let Some(node) = stack.pop() {
            match tree.children(node) {
                Some((l, r)) if tree.height(node) > h || tree.height(node) > coherence => {
                    stack.push(l);
                    stack.push(r);
                }
                _ => roots.push(node),
            }
        }
        let groups = roots
            .into_iter()
            .map(|node| make_group(tree, sizes, vec![node]))
            .collect();
        let mut set = GroupSet {
            varset,
            groups,
            history: Vec::new(),
            revision: 0,
        };
        set.sort_groups();
        set
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn group(&self, id: usize) -> Result<&Group> {
        self.groups.get(id).ok_or_else(|| Error::not_found("group", id))
    }

    /// Group id holding bicluster `bicluster`.
    pub fn group_of(&self, bicluster: usize) -> Option<usize> {
        self.groups
            .iter()
            .position(|g| g.members.binary_search(&bicluster).is_ok())
    }

    /// Unions the listed groups into one.
    pub fn merge(&self, ids: &[usize], tree: &Dendrogram, sizes: &[usize]) -> Result<GroupSet> {
        let mut ids = ids.to_vec();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() < 2 {
            return Err(Error::Invalid("merge needs at least two distinct groups".into()));
        }
        for &id in &ids {
            self.group(id)?;
        }
        let nodes: Vec<usize> = ids
            .iter()
            .flat_map(|&id| self.groups[id].nodes.iter().copied())
            .collect();
        let mut groups: Vec<Group> = self
            .groups
            .iter()
            .enumerate()
            .filter(|(i, _)| ids.binary_search(i).is_err())
            .map(|(_, g)| g.clone())
            .collect();
        groups.push(make_group(tree, sizes, nodes));
        Ok(self.next(groups, Edit::Merge { groups: ids }))
    }

    /// Splits a group one level below its top merge: at the lowest common
    /// ancestor of its nodes, members fall to that ancestor's two children.
    pub fn split(&self, id: usize, tree: &Dendrogram, sizes: &[usize]) -> Result<GroupSet> {
        let g = self.group(id)?;
        if g.members.len() < 2 {
            return Err(Error::SingletonSplit(id));
        }
        let top = tree.lca(&g.nodes);
        let (l, r) = tree.children(top).expect("a group with two members spans a merge");
        let (left, right): (Vec<usize>, Vec<usize>) = if g.nodes == [top] {
            (vec![l], vec![r])
        } else {
            let under_left = tree.leaves_under(l);
            g.nodes
                .iter()
                .partition(|&&node| under_left.binary_search(&tree.leaves_under(node)[0]).is_ok())
        };
        let mut groups: Vec<Group> = self
            .groups
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != id)
            .map(|(_, g)| g.clone())
            .collect();
        groups.push(make_group(tree, sizes, left));
        groups.push(make_group(tree, sizes, right));
        Ok(self.next(groups, Edit::Split { group: id }))
    }

    fn next(&self, groups: Vec<Group>, edit: Edit) -> GroupSet {
        let mut history = self.history.clone();
        history.push(edit);
        let mut set = GroupSet {
            varset: self.varset,
            groups,
            history,
            revision: self.revision + 1,
        };
        set.sort_groups();
        set
    }

    fn sort_groups(&mut self) {
        self.groups.sort_by_key(|g| g.members[0]);
    }

    /// Canonical partition as sorted member lists.
    pub fn partition(&self) -> Vec<Vec<usize>> {
        self.groups.iter().map(|g| g.members.clone()).collect()
    }
}

/// Largest voxel count wins; ties go to the smallest bicluster id.
pub fn representative(members: &[usize], voxel_count: impl Fn(usize) -> usize) -> usize {
    *members
        .iter()
        .min_by(|&&a, &&b| voxel_count(b).cmp(&voxel_count(a)).then(a.cmp(&b)))
        .expect("groups are non-empty")
}

/// `sizes[leaf]` is the voxel count of the leaf's bicluster.
fn make_group(tree: &Dendrogram, sizes: &[usize], mut nodes: Vec<usize>) -> Group {
    nodes.sort_unstable();
    let leaves: Vec<usize> = nodes.iter().flat_map(|&node| tree.leaves_under(node)).collect();
    let mut members: Vec<usize> = leaves.iter().map(|&leaf| tree.leaves[leaf]).collect();
    members.sort_unstable();
    let size_of = |id: usize| sizes[tree.leaves.iter().position(|&b| b == id).unwrap()];
    Group {
        representative: representative(&members, size_of),
        members,
        nodes,
    }
}
