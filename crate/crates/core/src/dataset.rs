//! Identity-labelled embedding datasets: on-disk format, validation and
//! demographic stratification.
//!
//! A dataset is a JSON manifest plus a sibling binary embedding store:
//!
//! ```text
//! "BEV1"                                  4-byte magic
//! repeated per record:
//!   identity index   u32 little-endian    position in the manifest's identities list
//!   variation id     u32 little-endian
//!   D × f32          little-endian IEEE-754
//! ```
//!
//! Records may appear in any order on disk. After loading, identities are
//! sorted by id and records by `(identity_id, variation_id)`, so everything
//! downstream is independent of file order.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"BEV1";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const EMBEDDING_FILE: &str = "embeddings.bev";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("missing file: {0}")]
    MissingFile(PathBuf),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed manifest: {0}")]
    ManifestParse(#[from] serde_json::Error),
    #[error("embedding file does not start with magic \"BEV1\"")]
    BadMagic,
    #[error("embedding file truncated at byte {offset}")]
    Truncated { offset: usize },
    #[error("embedding_dimension must be positive")]
    InvalidDimension,
    #[error("identity_id must be non-empty")]
    EmptyIdentityId,
    #[error("identity {0} declares zero variations")]
    ZeroVariationCount(String),
    #[error("dataset needs at least 2 identities, found {found}")]
    SingleIdentityDataset { found: usize },
    #[error("duplicate identity {0}")]
    DuplicateIdentity(String),
    #[error("duplicate variation {variation_id} for identity {identity_id}")]
    DuplicateVariation {
        identity_id: String,
        variation_id: u32,
    },
    #[error("record ({identity_id}, {variation_id}) has {found} components, expected {expected}")]
    DimensionMismatch {
        identity_id: String,
        variation_id: u32,
        expected: usize,
        found: usize,
    },
    #[error("record ({identity_id}, {variation_id}) has a non-finite component at index {index}")]
    NonFiniteComponent {
        identity_id: String,
        variation_id: u32,
        index: usize,
    },
    #[error("record ({identity_id}, {variation_id}) has zero norm")]
    ZeroNormVector {
        identity_id: String,
        variation_id: u32,
    },
    #[error("identity {identity_id}: unrecognised {field} label {label:?}")]
    UnknownAttributeLabel {
        identity_id: String,
        field: &'static str,
        label: String,
    },
    #[error("record references identity index {0}, which is not in the manifest")]
    UnknownIdentityIndex(u32),
    #[error("record references unknown identity {0}")]
    UnknownIdentity(String),
    #[error("identity {identity_id} declares {declared} variations but {found} are stored")]
    VariationCountMismatch {
        identity_id: String,
        declared: usize,
        found: usize,
    },
}

fn io_err(path: &Path, source: std::io::Error) -> DatasetError {
    if source.kind() == std::io::ErrorKind::NotFound {
        DatasetError::MissingFile(path.to_path_buf())
    } else {
        DatasetError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Ethnicity {
    EastAsian,
    African,
    Caucasian,
    MiddleEastern,
    Hispanic,
    Indian,
    Unknown,
}

impl Ethnicity {
    pub const ALL: [Ethnicity; 7] = [
        Ethnicity::EastAsian,
        Ethnicity::African,
        Ethnicity::Caucasian,
        Ethnicity::MiddleEastern,
        Ethnicity::Hispanic,
        Ethnicity::Indian,
        Ethnicity::Unknown,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Ethnicity::EastAsian => "EastAsian",
            Ethnicity::African => "African",
            Ethnicity::Caucasian => "Caucasian",
            Ethnicity::MiddleEastern => "MiddleEastern",
            Ethnicity::Hispanic => "Hispanic",
            Ethnicity::Indian => "Indian",
            Ethnicity::Unknown => "Unknown",
        }
    }
}

impl FromStr for Ethnicity {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        Ethnicity::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or(())
    }
}

impl fmt::Display for Ethnicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Gender {
    Male,
    Female,
    Unknown,
}

impl Gender {
    pub const ALL: [Gender; 3] = [Gender::Male, Gender::Female, Gender::Unknown];

    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Male => "Male",
            Gender::Female => "Female",
            Gender::Unknown => "Unknown",
        }
    }
}

impl FromStr for Gender {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        Gender::ALL.into_iter().find(|g| g.as_str() == s).ok_or(())
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DemographicAttributes {
    pub ethnicity: Ethnicity,
    pub gender: Gender,
}

impl Default for DemographicAttributes {
    fn default() -> Self {
        Self {
            ethnicity: Ethnicity::Unknown,
            gender: Gender::Unknown,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentityRecord {
    pub identity_id: String,
    pub attributes: DemographicAttributes,
    pub variation_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRecord {
    pub identity_id: String,
    pub variation_id: u32,
    pub vector: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    pub name: String,
    pub embedding_dimension: usize,
    pub identities: Vec<IdentityRecord>,
}

/// `manifest.json` as it appears on disk.
#[derive(Debug, Serialize, Deserialize)]
struct ManifestFile {
    name: String,
    embedding_dimension: usize,
    identities: Vec<ManifestIdentity>,
    embedding_file: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestIdentity {
    identity_id: String,
    ethnicity: String,
    gender: String,
    variation_count: usize,
}

/// A validated, canonically ordered dataset. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    manifest: DatasetManifest,
    records: Vec<EmbeddingRecord>,
    spans: Vec<Range<usize>>,
}

impl Dataset {
    /// Validates and canonicalises a manifest plus its records.
    pub fn new(
        mut manifest: DatasetManifest,
        mut records: Vec<EmbeddingRecord>,
    ) -> Result<Self, DatasetError> {
        let dim = manifest.embedding_dimension;
        if dim == 0 {
            return Err(DatasetError::InvalidDimension);
        }
        let mut seen = HashSet::new();
        for identity in &manifest.identities {
            if identity.identity_id.is_empty() {
                return Err(DatasetError::EmptyIdentityId);
            }
            if identity.variation_count == 0 {
                return Err(DatasetError::ZeroVariationCount(
                    identity.identity_id.clone(),
                ));
            }
            if !seen.insert(identity.identity_id.as_str()) {
                return Err(DatasetError::DuplicateIdentity(
                    identity.identity_id.clone(),
                ));
            }
        }
        if manifest.identities.len() < 2 {
            return Err(DatasetError::SingleIdentityDataset {
                found: manifest.identities.len(),
            });
        }

        for r in &records {
            if !seen.contains(r.identity_id.as_str()) {
                return Err(DatasetError::UnknownIdentity(r.identity_id.clone()));
            }
            validate_vector(r, dim)?;
        }

        manifest
            .identities
            .sort_by(|a, b| a.identity_id.cmp(&b.identity_id));
        records.sort_by(|a, b| {
            a.identity_id
                .cmp(&b.identity_id)
                .then(a.variation_id.cmp(&b.variation_id))
        });
        for w in records.windows(2) {
            if w[0].identity_id == w[1].identity_id && w[0].variation_id == w[1].variation_id {
                return Err(DatasetError::DuplicateVariation {
                    identity_id: w[0].identity_id.clone(),
                    variation_id: w[0].variation_id,
                });
            }
        }

        let mut spans = Vec::with_capacity(manifest.identities.len());
        let mut start = 0;
        for identity in &manifest.identities {
            let len = records[start..]
                .iter()
                .take_while(|r| r.identity_id == identity.identity_id)
                .count();
            if len != identity.variation_count {
                return Err(DatasetError::VariationCountMismatch {
                    identity_id: identity.identity_id.clone(),
                    declared: identity.variation_count,
                    found: len,
                });
            }
            spans.push(start..start + len);
            start += len;
        }

        Ok(Self {
            manifest,
            records,
            spans,
        })
    }

    pub fn name(&self) -> &str {
        &self.manifest.name
    }

    pub fn manifest(&self) -> &DatasetManifest {
        &self.manifest
    }

    pub fn dimension(&self) -> usize {
        self.manifest.embedding_dimension
    }

    /// Identities in canonical (lexicographic) order.
    pub fn identities(&self) -> &[IdentityRecord] {
        &self.manifest.identities
    }

    /// All records in canonical order.
    pub fn records(&self) -> &[EmbeddingRecord] {
        &self.records
    }

    pub fn identity_index(&self, identity_id: &str) -> Option<usize> {
        self.manifest
            .identities
            .binary_search_by(|i| i.identity_id.as_str().cmp(identity_id))
            .ok()
    }

    /// Records of one identity, ascending by variation id.
    pub fn records_of(&self, identity_id: &str) -> Option<&[EmbeddingRecord]> {
        self.identity_index(identity_id)
            .map(|i| &self.records[self.spans[i].clone()])
    }

    pub(crate) fn span_at(&self, identity_index: usize) -> Range<usize> {
        self.spans[identity_index].clone()
    }

    pub(crate) fn records_at(&self, identity_index: usize) -> &[EmbeddingRecord] {
        &self.records[self.spans[identity_index].clone()]
    }

    pub fn record(&self, identity_id: &str, variation_id: u32) -> Option<&EmbeddingRecord> {
        let records = self.records_of(identity_id)?;
        records
            .binary_search_by(|r| r.variation_id.cmp(&variation_id))
            .ok()
            .map(|i| &records[i])
    }

    /// Restricts the dataset to the given identities (used for per-group breakdowns).
    pub fn subset(&self, identity_ids: &[String]) -> Result<Dataset, DatasetError> {
        let keep: HashSet<&str> = identity_ids.iter().map(String::as_str).collect();
        let manifest = DatasetManifest {
            name: self.manifest.name.clone(),
            embedding_dimension: self.manifest.embedding_dimension,
            identities: self
                .manifest
                .identities
                .iter()
                .filter(|i| keep.contains(i.identity_id.as_str()))
                .cloned()
                .collect(),
        };
        let records = self
            .records
            .iter()
            .filter(|r| keep.contains(r.identity_id.as_str()))
            .cloned()
            .collect();
        Dataset::new(manifest, records)
    }

    /// Serialises the embedding store in canonical record order.
    pub fn embedding_bytes(&self) -> Vec<u8> {
        let dim = self.dimension();
        let mut out = Vec::with_capacity(4 + self.records.len() * (8 + 4 * dim));
        out.extend_from_slice(MAGIC);
        for (index, span) in self.spans.iter().enumerate() {
            for r in &self.records[span.clone()] {
                out.extend_from_slice(&(index as u32).to_le_bytes());
                out.extend_from_slice(&r.variation_id.to_le_bytes());
                for x in &r.vector {
                    out.extend_from_slice(&x.to_le_bytes());
                }
            }
        }
        out
    }

    /// The manifest document, pointing at `embedding_file`.
    pub fn manifest_json(&self, embedding_file: &str) -> String {
        let file = ManifestFile {
            name: self.manifest.name.clone(),
            embedding_dimension: self.manifest.embedding_dimension,
            identities: self
                .manifest
                .identities
                .iter()
                .map(|i| ManifestIdentity {
                    identity_id: i.identity_id.clone(),
                    ethnicity: i.attributes.ethnicity.to_string(),
                    gender: i.attributes.gender.to_string(),
                    variation_count: i.variation_count,
                })
                .collect(),
            embedding_file: embedding_file.to_string(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("manifest serialises");
        s.push('\n');
        s
    }

    /// Writes `manifest.json` and `embeddings.bev` into `dir`, creating it if
    /// needed. Returns the manifest path.
    pub fn write_to_dir(&self, dir: &Path) -> Result<PathBuf, DatasetError> {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        let bev = dir.join(EMBEDDING_FILE);
        fs::write(&bev, self.embedding_bytes()).map_err(|e| io_err(&bev, e))?;
        let manifest = dir.join(MANIFEST_FILE);
        fs::write(&manifest, self.manifest_json(EMBEDDING_FILE))
            .map_err(|e| io_err(&manifest, e))?;
        Ok(manifest)
    }
}

fn validate_vector(r: &EmbeddingRecord, dim: usize) -> Result<(), DatasetError> {
    if r.vector.len() != dim {
        return Err(DatasetError::DimensionMismatch {
            identity_id: r.identity_id.clone(),
            variation_id: r.variation_id,
            expected: dim,
            found: r.vector.len(),
        });
    }
    if let Some(index) = r.vector.iter().position(|x| !x.is_finite()) {
        return Err(DatasetError::NonFiniteComponent {
            identity_id: r.identity_id.clone(),
            variation_id: r.variation_id,
            index,
        });
    }
    if r.vector.iter().all(|&x| x == 0.0) {
        return Err(DatasetError::ZeroNormVector {
            identity_id: r.identity_id.clone(),
            variation_id: r.variation_id,
        });
    }
    Ok(())
}

/// Loads and validates a dataset from its manifest path. Accepts either the
/// manifest file itself or a directory containing `manifest.json`.
pub fn load_dataset(manifest_path: &Path) -> Result<Dataset, DatasetError> {
    let manifest_path = if manifest_path.is_dir() {
        manifest_path.join(MANIFEST_FILE)
    } else {
        manifest_path.to_path_buf()
    };
    let text = fs::read_to_string(&manifest_path).map_err(|e| io_err(&manifest_path, e))?;
    let file: ManifestFile = serde_json::from_str(&text)?;

    let mut identities = Vec::with_capacity(file.identities.len());
    for raw in &file.identities {
        let ethnicity = raw.ethnicity.parse::<Ethnicity>().map_err(|_| {
            DatasetError::UnknownAttributeLabel {
                identity_id: raw.identity_id.clone(),
                field: "ethnicity",
                label: raw.ethnicity.clone(),
            }
        })?;
        let gender =
            raw.gender
                .parse::<Gender>()
                .map_err(|_| DatasetError::UnknownAttributeLabel {
                    identity_id: raw.identity_id.clone(),
                    field: "gender",
                    label: raw.gender.clone(),
                })?;
        identities.push(IdentityRecord {
            identity_id: raw.identity_id.clone(),
            attributes: DemographicAttributes { ethnicity, gender },
            variation_count: raw.variation_count,
        });
    }

    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let bev_path = base.join(&file.embedding_file);
    let bytes = fs::read(&bev_path).map_err(|e| io_err(&bev_path, e))?;
    let id_by_index: Vec<&str> = identities.iter().map(|i| i.identity_id.as_str()).collect();
    let records = parse_embeddings(&bytes, file.embedding_dimension, &id_by_index)?;

    let manifest = DatasetManifest {
        name: file.name,
        embedding_dimension: file.embedding_dimension,
        identities,
    };
    Dataset::new(manifest, records)
}

/// Parses a `BEV1` embedding store. `identity_ids[i]` names manifest index `i`.
pub fn parse_embeddings(
    bytes: &[u8],
    dim: usize,
    identity_ids: &[&str],
) -> Result<Vec<EmbeddingRecord>, DatasetError> {
    if dim == 0 {
        return Err(DatasetError::InvalidDimension);
    }
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(DatasetError::BadMagic);
    }
    let read_u32 = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
    let mut records = Vec::new();
    let mut offset = 4;
    while offset < bytes.len() {
        if bytes.len() - offset < 8 {
            return Err(DatasetError::Truncated { offset });
        }
        let index = read_u32(offset);
        let variation_id = read_u32(offset + 4);
        let identity_id = *identity_ids
            .get(index as usize)
            .ok_or(DatasetError::UnknownIdentityIndex(index))?;
        offset += 8;
        let available = (bytes.len() - offset) / 4;
        if available < dim {
            return Err(DatasetError::DimensionMismatch {
                identity_id: identity_id.to_string(),
                variation_id,
                expected: dim,
                found: available,
            });
        }
        let vector = (0..dim)
            .map(|k| {
                f32::from_le_bytes(
                    bytes[offset + 4 * k..offset + 4 * k + 4]
                        .try_into()
                        .unwrap(),
                )
            })
            .collect();
        offset += 4 * dim;
        records.push(EmbeddingRecord {
            identity_id: identity_id.to_string(),
            variation_id,
            vector,
        });
    }
    Ok(records)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupKey {
    Ethnicity,
    Gender,
    EthnicityGender,
}

impl GroupKey {
    pub fn label(self, attributes: &DemographicAttributes) -> String {
        match self {
            GroupKey::Ethnicity => attributes.ethnicity.to_string(),
            GroupKey::Gender => attributes.gender.to_string(),
            GroupKey::EthnicityGender => format!("{}/{}", attributes.ethnicity, attributes.gender),
        }
    }
}

/// Partitions identities by demographic key. Empty groups are omitted;
/// members keep canonical order.
pub fn stratify(dataset: &Dataset, key: GroupKey) -> BTreeMap<String, Vec<String>> {
    let mut groups: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for identity in dataset.identities() {
        groups
            .entry(key.label(&identity.attributes))
            .or_default()
            .push(identity.identity_id.clone());
    }
    groups
}
