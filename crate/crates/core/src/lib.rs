//! Closed pattern-based bicluster mining for multivariate volume data.
//!
//! The crate is organized the way data flows through it:
//!
//! * [`data`] loads raw volumes described by a JSON manifest into a
//!   [`VariableVoxelMatrix`] and normalizes every variable to `[0, 255]`.
//! * [`miner`] enumerates every closed δ-coherent bicluster (a variable subset
//!   together with a maximal voxel subset whose per-pair value differences stay
//!   within δ) using a depth-first walk over the variable enumeration tree.
//! * [`catalog`] stores mined biclusters and reads/writes them as JSON or a
//!   compact binary form.
//! * [`analysis`] organizes a catalog by variable set and derives the data
//!   behind each exploration view: local correlation, Jaccard grouping,
//!   MDS layouts, probability volumes, parallel-coordinate densities,
//!   entropy and mutual information.
//! * [`synth`] builds seeded synthetic datasets with planted coherent regions.

pub mod analysis;
pub mod catalog;
pub mod data;
pub mod error;
pub mod miner;
pub mod synth;

pub use catalog::{BiclusterCatalog, Provenance};
pub use data::{DatasetManifest, Dims, NormalizationSpec, VariableVoxelMatrix};
pub use error::{Error, Result};
pub use miner::{mine_all, Bicluster, MiningParams};
