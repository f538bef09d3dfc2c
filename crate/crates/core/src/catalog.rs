//! The mined bicluster catalog and its on-disk forms.
//!
//! JSON: `{"params": …, "provenance": …, "biclusters": [{"variables": […], "voxels": […]}]}`.
//!
//! Binary: the magic `BVXC`, a format version byte, a little-endian `u32`
//! length followed by the JSON header (`params` and `provenance`), then a
//! LEB128 bicluster count and, per bicluster, the variable count, the variable
//! ids, the voxel count and the voxel ids delta-encoded against their
//! predecessor (all LEB128). Both forms carry the same logical content.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{hex_digest, DatasetManifest};
use crate::error::{Error, Result};
use crate::miner::{Bicluster, MiningParams, VarId, VoxelId};

const MAGIC: &[u8; 4] = b"BVXC";
const BINARY_VERSION: u8 = 1;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub dataset: String,
    pub manifest_hash: String,
}

impl Provenance {
    pub fn of(manifest: &DatasetManifest) -> Self {
        Provenance {
            dataset: manifest.name.clone(),
            manifest_hash: manifest.content_hash(),
        }
    }
}

/// Every mined bicluster, in canonical order (variable set, then voxel list).
#[derive(Debug, Clone, PartialEq)]
pub struct BiclusterCatalog {
    pub biclusters: Vec<Bicluster>,
    pub params: MiningParams,
    pub provenance: Provenance,
    varset_index: BTreeMap<Vec<VarId>, Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogFile {
    params: MiningParams,
    provenance: Provenance,
    biclusters: Vec<Bicluster>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BinaryHeader {
    params: MiningParams,
    provenance: Provenance,
}

impl BiclusterCatalog {
    /// Sorts canonically and drops exact duplicates.
    pub fn new(mut biclusters: Vec<Bicluster>, params: MiningParams, provenance: Provenance) -> Self {
        biclusters.sort_unstable();
        biclusters.dedup();
        let mut varset_index: BTreeMap<Vec<VarId>, Vec<usize>> = BTreeMap::new();
        for (id, b) in biclusters.iter().enumerate() {
            varset_index.entry(b.variables.clone()).or_default().push(id);
        }
        BiclusterCatalog {
            biclusters,
            params,
            provenance,
            varset_index,
        }
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn len(&self) -> usize {
        self.biclusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.biclusters.is_empty()
    }

    pub fn get(&self, id: usize) -> Result<&Bicluster> {
        self.biclusters.get(id).ok_or_else(|| Error::not_found("bicluster", id))
    }

    /// Distinct variable sets with the ids of their biclusters, lexicographic.
    pub fn varsets(&self) -> impl Iterator<Item = (&Vec<VarId>, &Vec<usize>)> {
        self.varset_index.iter()
    }

    pub fn biclusters_of(&self, variables: &[VarId]) -> &[usize] {
        self.varset_index.get(variables).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Fails unless the catalog was mined from `manifest`.
    pub fn check_provenance(&self, manifest: &DatasetManifest) -> Result<()> {
        let hash = manifest.content_hash();
        if self.provenance.manifest_hash != hash {
            return Err(Error::ProvenanceMismatch {
                catalog: format!("'{}' ({})", self.provenance.dataset, self.provenance.manifest_hash),
                manifest: hash,
            });
        }
        Ok(())
    }

    fn validate(&self, original_len: usize) -> Result<()> {
        if self.biclusters.len() != original_len {
            return Err(Error::Catalog("duplicate biclusters".into()));
        }
        for (id, b) in self.biclusters.iter().enumerate() {
            if b.variables.len() < 2 || !b.variables.windows(2).all(|w| w[0] < w[1]) {
                return Err(Error::Catalog(format!(
                    "bicluster {id}: variables must be >= 2 strictly increasing ids"
                )));
            }
            if b.voxels.is_empty() || !b.voxels.windows(2).all(|w| w[0] < w[1]) {
                return Err(Error::Catalog(format!(
                    "bicluster {id}: voxels must be non-empty and strictly increasing"
                )));
            }
        }
        Ok(())
    }

    fn from_parts(biclusters: Vec<Bicluster>, params: MiningParams, provenance: Provenance) -> Result<Self> {
        let n = biclusters.len();
        let catalog = Self::new(biclusters, params, provenance);
        catalog.validate(n)?;
        Ok(catalog)
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct View<'a> {
            params: &'a MiningParams,
            provenance: &'a Provenance,
            biclusters: &'a [Bicluster],
        }
        serde_json::to_string(&View {
            params: &self.params,
            provenance: &self.provenance,
            biclusters: &self.biclusters,
        })
        .expect("catalog serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: CatalogFile = serde_json::from_str(text).map_err(|e| Error::Catalog(e.to_string()))?;
        Self::from_parts(file.biclusters, file.params, file.provenance)
    }

    /// Hex SHA-256 of the JSON form; stable for equal catalogs.
    pub fn content_hash(&self) -> String {
        hex_digest(self.to_json().as_bytes())
    }

    pub fn to_binary(&self) -> Vec<u8> {
        let header = serde_json::to_vec(&BinaryHeader {
            params: self.params.clone(),
            provenance: self.provenance.clone(),
        })
        .expect("header serializes");
        let mut out = Vec::with_capacity(16 + header.len() + self.biclusters.len() * 16);
        out.extend_from_slice(MAGIC);
        out.push(BINARY_VERSION);
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(&header);
        write_varint(&mut out, self.biclusters.len() as u64);
        for b in &self.biclusters {
            write_varint(&mut out, b.variables.len() as u64);
            for &v in &b.variables {
                write_varint(&mut out, v as u64);
            }
            write_varint(&mut out, b.voxels.len() as u64);
            let mut prev = 0u64;
            for &voxel in &b.voxels {
                write_varint(&mut out, voxel as u64 - prev);
                prev = voxel as u64;
            }
        }
        out
    }

    pub fn from_binary(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Catalog("missing BVXC magic".into()));
        }
        let version = r.take(1)?[0];
        if version != BINARY_VERSION {
            return Err(Error::Catalog(format!("unsupported binary version {version}")));
        }
        let header_len = u32::from_le_bytes(r.take(4)?.try_into().unwrap()) as usize;
        let header: BinaryHeader =
            serde_json::from_slice(r.take(header_len)?).map_err(|e| Error::Catalog(e.to_string()))?;
        let count = r.varint()? as usize;
        let mut biclusters = Vec::with_capacity(count.min(1 << 20));
        for _ in 0..count {
            let n_vars = r.varint()? as usize;
            let variables = (0..n_vars)
                .map(|_| r.varint().and_then(|v| narrow::<VarId>(v, "variable id")))
                .collect::<Result<Vec<_>>>()?;
            let n_voxels = r.varint()? as usize;
            let mut voxels = Vec::with_capacity(n_voxels.min(1 << 24));
            let mut prev = 0u64;
            for _ in 0..n_voxels {
                prev = prev
                    .checked_add(r.varint()?)
                    .ok_or_else(|| Error::Catalog("voxel id overflow".into()))?;
                voxels.push(narrow::<VoxelId>(prev, "voxel id")?);
            }
            biclusters.push(Bicluster { variables, voxels });
        }
        if r.pos != bytes.len() {
            return Err(Error::Catalog(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        Self::from_parts(biclusters, header.params, header.provenance)
    }

    /// Reads either form, telling them apart by the binary magic.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        if bytes.starts_with(MAGIC) {
            Self::from_binary(&bytes)
        } else {
            let text = std::str::from_utf8(&bytes).map_err(|e| Error::Catalog(e.to_string()))?;
            Self::from_json(text)
        }
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn save_binary(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_binary()).map_err(|e| Error::io(path, e))
    }
}

fn narrow<T: TryFrom<u64>>(v: u64, what: &str) -> Result<T> {
    T::try_from(v).map_err(|_| Error::Catalog(format!("{what} {v} out of range")))
}

fn write_varint(out: &mut Vec<u8>, mut v: u64) {
    while v >= 0x80 {
        out.push((v as u8) | 0x80);
        v >>= 7;
    }
    out.push(v as u8);
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Catalog("truncated binary catalog".into()))?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn varint(&mut self) -> Result<u64> {
        let mut value = 0u64;
        for shift in (0..64).step_by(7) {
            let byte = self.take(1)?[0];
            value |= ((byte & 0x7f) as u64) << shift;
            if byte & 0x80 == 0 {
                return Ok(value);
            }
        }
        Err(Error::Catalog("varint too long".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> BiclusterCatalog {
        BiclusterCatalog::new(
            vec![
                Bicluster::new(vec![0, 2], vec![5, 9, 300]),
                Bicluster::new(vec![0, 1], vec![1, 2]),
                Bicluster::new(vec![0, 1, 2], vec![0, 70_000]),
                Bicluster::new(vec![0, 1], vec![1, 2]),
            ],
            MiningParams::default(),
            Provenance {
                dataset: "demo".into(),
                manifest_hash: "abc".into(),
            },
        )
    }

    #[test]
    fn canonical_order_and_index() {
        let c = sample();
        assert_eq!(c.len(), 3);
        let vars: Vec<_> = c.biclusters.iter().map(|b| b.variables.clone()).collect();
        assert_eq!(vars, vec![vec![0, 1], vec![0, 1, 2], vec![0, 2]]);
        assert_eq!(c.biclusters_of(&[0, 2]), &[2]);
        assert!(c.biclusters_of(&[1, 2]).is_empty());
        assert_eq!(c.varsets().count(), 3);
    }

    #[test]
    fn json_and_binary_round_trip() {
        let c = sample();
        assert_eq!(BiclusterCatalog::from_json(&c.to_json()).unwrap(), c);
        assert_eq!(BiclusterCatalog::from_binary(&c.to_binary()).unwrap(), c);
        let dir = tempfile::TempDir::new().unwrap();
        c.save_binary(dir.path().join("c.bin")).unwrap();
        c.save_json(dir.path().join("c.json")).unwrap();
        assert_eq!(BiclusterCatalog::load(dir.path().join("c.bin")).unwrap(), c);
        assert_eq!(BiclusterCatalog::load(dir.path().join("c.json")).unwrap(), c);
    }

    #[test]
    fn json_layout() {
        let v: serde_json::Value = serde_json::from_str(&sample().to_json()).unwrap();
        assert_eq!(v["biclusters"][0]["variables"], serde_json::json!([0, 1]));
        assert_eq!(v["biclusters"][0]["voxels"], serde_json::json!([1, 2]));
        assert_eq!(v["provenance"]["dataset"], "demo");
        assert_eq!(v["params"]["delta"], 20.0);
    }

    #[test]
    fn rejects_malformed() {
        let dup = r#"{"params":{"delta":1,"minv_frac":0.1,"max_voxel_frac":1},"provenance":{"dataset":"","manifest_hash":""},
            "biclusters":[{"variables":[0,1],"voxels":[1]},{"variables":[0,1],"voxels":[1]}]}"#;
        assert!(BiclusterCatalog::from_json(dup).is_err());
        let unsorted = r#"{"params":{"delta":1,"minv_frac":0.1,"max_voxel_frac":1},"provenance":{"dataset":"","manifest_hash":""},
            "biclusters":[{"variables":[0,1],"voxels":[3,1]}]}"#;
        assert!(BiclusterCatalog::from_json(unsorted).is_err());
        let bytes = sample().to_binary();
        assert!(BiclusterCatalog::from_binary(&bytes[..bytes.len() - 1]).is_err());
        assert!(BiclusterCatalog::from_binary(b"NOPE").is_err());
    }

    proptest! {
        #[test]
        fn binary_matches_json(sets in proptest::collection::vec(
            (proptest::collection::btree_set(0u16..6, 2..4), proptest::collection::btree_set(0u32..5_000_000, 1..30)), 0..20)) {
            let biclusters = sets.into_iter()
                .map(|(v, x)| Bicluster::new(v.into_iter().collect(), x.into_iter().collect()))
                .collect();
            let c = BiclusterCatalog::new(biclusters, MiningParams::default(), Provenance::default());
            let from_bin = BiclusterCatalog::from_binary(&c.to_binary()).unwrap();
            prop_assert_eq!(from_bin.to_json(), c.to_json());
        }
    }
}
