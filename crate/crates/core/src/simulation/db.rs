//! The DTG database: a content-addressed on-disk store of trained G2G
//! models and entity-graph templates, enabling the lazy-training strategy.
//!
//! Layout: a root directory holding `manifest.json` (format version plus a
//! signature -> {file, checksum, kind} index) and one record file per
//! object. A record file is a single-line JSON header, a newline, and a
//! base64 block of little-endian f64 matrices in layer order.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::SimulationError;
use crate::entity_graph::{CorrelationMethod, EntityGraph, FeatureSeries};
use crate::g2g::{AdaptationRecord, G2GModel};
use crate::{Mat, Real};

pub const FORMAT_VERSION: u32 = 1;
const MANIFEST_FILE: &str = "manifest.json";

fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Identity of a model record: hash over everything that determines what
/// was trained. Same signature means the cached model is the same object.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Signature(pub String);

impl Signature {
    /// Signature of a G2G model record.
    pub fn g2g(
        source_type: &str,
        target_type: &str,
        order: usize,
        window: usize,
        hidden_dims: &[usize],
        delta: Real,
        lambda: Real,
    ) -> Self {
        let hidden = hidden_dims
            .iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join(",");
        let canonical = format!(
            "g2g|src={source_type}|tgt={target_type}|n={order}|t={window}|hidden={hidden}|delta={delta:?}|lambda={lambda:?}"
        );
        Signature(sha256_hex(canonical.as_bytes()))
    }

    /// Signature of an entity-graph template record.
    pub fn entity_template(entity_type: &str, series_len: usize) -> Self {
        let canonical = format!("entity|type={entity_type}|len={series_len}");
        Signature(sha256_hex(canonical.as_bytes()))
    }
}

impl std::fmt::Display for Signature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecordKind {
    G2gModel,
    EntityTemplate,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub sha256: String,
    pub kind: RecordKind,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Manifest {
    format_version: u32,
    records: BTreeMap<String, ManifestEntry>,
}

impl Default for Manifest {
    fn default() -> Self {
        Self {
            format_version: FORMAT_VERSION,
            records: BTreeMap::new(),
        }
    }
}

/// Record payloads. Matrices ride in the base64 block; everything else in
/// the JSON header.
#[derive(Debug, Clone, PartialEq)]
pub enum DbRecord {
    Model(G2GModel),
    EntityTemplate(TemplateWithData),
}

/// A reusable entity-graph description keyed by entity type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityTemplate {
    pub entity_type: String,
    pub feature_ids: Vec<String>,
    pub units: Vec<String>,
    pub correlation_method: CorrelationMethod,
    pub series_len: usize,
}

impl EntityTemplate {
    pub fn from_graph(graph: &EntityGraph) -> (Self, Vec<Mat>) {
        let template = Self {
            entity_type: graph.entity_type.clone(),
            feature_ids: graph.nodes.iter().map(|n| n.feature_id.clone()).collect(),
            units: graph.nodes.iter().map(|n| n.unit.clone()).collect(),
            correlation_method: graph.correlation_method,
            series_len: graph.series_len(),
        };
        let matrices = vec![graph.arc_weights.clone(), graph.feature_matrix()];
        (template, matrices)
    }

    pub fn into_graph(
        self,
        matrices: &[Mat],
        entity_id: &str,
    ) -> Result<EntityGraph, SimulationError> {
        if matrices.len() != 2 {
            return Err(SimulationError::CorruptRecord {
                signature: Signature::entity_template(&self.entity_type, self.series_len).0,
                reason: "entity template needs 2 matrices".to_string(),
            });
        }
        let features = &matrices[1];
        let nodes = self
            .feature_ids
            .iter()
            .zip(&self.units)
            .enumerate()
            .map(|(i, (id, unit))| {
                FeatureSeries::new(id.clone(), features.row(i).to_vec())
                    .map(|s| s.with_unit(unit.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(EntityGraph {
            entity_id: entity_id.to_string(),
            entity_type: self.entity_type,
            nodes,
            arc_weights: matrices[0].clone(),
            correlation_method: self.correlation_method,
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "kebab-case")]
enum RecordHeader {
    G2gModel {
        source_type: String,
        target_type: String,
        layer_dims: Vec<usize>,
        delta: Real,
        adaptation: AdaptationRecord,
        /// Shapes of the payload matrices: weights in layer order, then
        /// the frozen adjacency.
        matrix_shapes: Vec<(usize, usize)>,
    },
    EntityTemplate {
        template: EntityTemplate,
        matrix_shapes: Vec<(usize, usize)>,
    },
}

fn encode_matrices(matrices: &[&Mat]) -> String {
    let mut bytes = Vec::new();
    for m in matrices {
        for v in m.values() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    BASE64.encode(bytes)
}

fn decode_matrices(
    payload: &str,
    shapes: &[(usize, usize)],
    signature: &str,
) -> Result<Vec<Mat>, SimulationError> {
    let bytes = BASE64
        .decode(payload.trim_end())
        .map_err(|e| SimulationError::CorruptRecord {
            signature: signature.to_string(),
            reason: format!("bad base64: {e}"),
        })?;
    let expected: usize = shapes.iter().map(|(r, c)| r * c * 8).sum();
    if bytes.len() != expected {
        return Err(SimulationError::CorruptRecord {
            signature: signature.to_string(),
            reason: format!("payload is {} bytes, expected {expected}", bytes.len()),
        });
    }
    let mut matrices = Vec::with_capacity(shapes.len());
    let mut offset = 0;
    for &(rows, cols) in shapes {
        let mut values = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            let mut buf = [0u8; 8];
            buf.copy_from_slice(&bytes[offset..offset + 8]);
            values.push(Real::from_le_bytes(buf));
            offset += 8;
        }
        matrices.push(Mat::from_vec(rows, cols, values).map_err(|e| {
            SimulationError::CorruptRecord {
                signature: signature.to_string(),
                reason: e.to_string(),
            }
        })?);
    }
    Ok(matrices)
}

fn serialize_with_header(header: &RecordHeader, matrices: &[&Mat]) -> Vec<u8> {
    let mut out = serde_json::to_vec(header).expect("serializable header");
    out.push(b'\n');
    out.extend_from_slice(encode_matrices(matrices).as_bytes());
    out.push(b'\n');
    out
}

fn serialize_model(model: &G2GModel) -> Vec<u8> {
    let mut mats: Vec<&Mat> = model.weights.iter().collect();
    mats.push(&model.adjacency);
    let header = RecordHeader::G2gModel {
        source_type: model.source_type.clone(),
        target_type: model.target_type.clone(),
        layer_dims: model.layer_dims.clone(),
        delta: model.delta,
        adaptation: model.adaptation.clone(),
        matrix_shapes: mats.iter().map(|m| m.shape()).collect(),
    };
    serialize_with_header(&header, &mats)
}

fn serialize_template(template: &EntityTemplate, matrices: &[Mat]) -> Vec<u8> {
    let refs: Vec<&Mat> = matrices.iter().collect();
    let header = RecordHeader::EntityTemplate {
        template: template.clone(),
        matrix_shapes: refs.iter().map(|m| m.shape()).collect(),
    };
    serialize_with_header(&header, &refs)
}

fn parse_record(bytes: &[u8], signature: &str) -> Result<DbRecord, SimulationError> {
    let text = std::str::from_utf8(bytes).map_err(|_| SimulationError::CorruptRecord {
        signature: signature.to_string(),
        reason: "record is not utf-8".to_string(),
    })?;
    let (header_line, payload) =
        text.split_once('\n')
            .ok_or_else(|| SimulationError::CorruptRecord {
                signature: signature.to_string(),
                reason: "missing payload line".to_string(),
            })?;
    let header: RecordHeader =
        serde_json::from_str(header_line).map_err(|e| SimulationError::CorruptRecord {
            signature: signature.to_string(),
            reason: format!("bad header: {e}"),
        })?;
    match header {
        RecordHeader::G2gModel {
            source_type,
            target_type,
            layer_dims,
            delta,
            adaptation,
            matrix_shapes,
        } => {
            let mut matrices = decode_matrices(payload, &matrix_shapes, signature)?;
            let adjacency = matrices
                .pop()
                .ok_or_else(|| SimulationError::CorruptRecord {
                    signature: signature.to_string(),
                    reason: "missing adjacency matrix".to_string(),
                })?;
            Ok(DbRecord::Model(G2GModel {
                source_type,
                target_type,
                layer_dims,
                weights: matrices,
                delta,
                adjacency,
                adaptation,
            }))
        }
        RecordHeader::EntityTemplate {
            template,
            matrix_shapes,
        } => {
            let matrices = decode_matrices(payload, &matrix_shapes, signature)?;
            Ok(DbRecord::EntityTemplate(TemplateWithData {
                template,
                matrices,
            }))
        }
    }
}

/// Template plus its matrix payload (arc weights, feature history).
#[derive(Debug, Clone, PartialEq)]
pub struct TemplateWithData {
    pub template: EntityTemplate,
    pub matrices: Vec<Mat>,
}

/// On-disk content-addressed store. Writes are atomic (temp file +
/// rename); every read verifies the manifest checksum.
#[derive(Debug, Clone)]
pub struct DtgDatabase {
    root: PathBuf,
}

impl DtgDatabase {
    /// Opens (creating if needed) a database rooted at `root`.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, SimulationError> {
        let root = root.into();
        std::fs::create_dir_all(&root).map_err(|e| SimulationError::Io {
            path: root.display().to_string(),
            message: e.to_string(),
        })?;
        let db = Self { root };
        if !db.manifest_path().exists() {
            db.write_manifest(&Manifest::default())?;
        }
        Ok(db)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn manifest_path(&self) -> PathBuf {
        self.root.join(MANIFEST_FILE)
    }

    fn read_manifest(&self) -> Result<Manifest, SimulationError> {
        let path = self.manifest_path();
        let bytes = std::fs::read(&path).map_err(|e| SimulationError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        serde_json::from_slice(&bytes).map_err(|e| SimulationError::CorruptRecord {
            signature: "manifest".to_string(),
            reason: e.to_string(),
        })
    }

    fn write_manifest(&self, manifest: &Manifest) -> Result<(), SimulationError> {
        let bytes = serde_json::to_vec_pretty(manifest).expect("serializable manifest");
        self.atomic_write(&self.manifest_path(), &bytes)
    }

    fn atomic_write(&self, path: &Path, bytes: &[u8]) -> Result<(), SimulationError> {
        let tmp = path.with_extension("tmp");
        let io_err = |e: std::io::Error| SimulationError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        };
        let mut file = std::fs::File::create(&tmp).map_err(io_err)?;
        file.write_all(bytes).map_err(io_err)?;
        file.sync_all().map_err(io_err)?;
        drop(file);
        std::fs::rename(&tmp, path).map_err(io_err)
    }

    fn put_bytes(
        &self,
        signature: &Signature,
        kind: RecordKind,
        bytes: &[u8],
    ) -> Result<(), SimulationError> {
        let file_name = format!("{signature}.rec");
        self.atomic_write(&self.root.join(&file_name), bytes)?;
        let mut manifest = self.read_manifest()?;
        manifest.records.insert(
            signature.0.clone(),
            ManifestEntry {
                file: file_name,
                sha256: sha256_hex(bytes),
                kind,
            },
        );
        self.write_manifest(&manifest)
    }

    /// Stores a trained model under its signature. Last writer wins.
    pub fn put_model(
        &self,
        signature: &Signature,
        model: &G2GModel,
    ) -> Result<(), SimulationError> {
        let bytes = serialize_model(model);
        self.put_bytes(signature, RecordKind::G2gModel, &bytes)
    }

    /// Stores an entity-graph template keyed by its type signature.
    pub fn put_entity_template(&self, graph: &EntityGraph) -> Result<Signature, SimulationError> {
        let (template, matrices) = EntityTemplate::from_graph(graph);
        let signature = Signature::entity_template(&template.entity_type, template.series_len);
        let bytes = serialize_template(&template, &matrices);
        self.put_bytes(&signature, RecordKind::EntityTemplate, &bytes)?;
        Ok(signature)
    }

    fn get_bytes(
        &self,
        signature: &Signature,
    ) -> Result<Option<(RecordKind, Vec<u8>)>, SimulationError> {
        let manifest = self.read_manifest()?;
        let Some(entry) = manifest.records.get(&signature.0) else {
            return Ok(None);
        };
        let path = self.root.join(&entry.file);
        let bytes = std::fs::read(&path).map_err(|e| SimulationError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let actual = sha256_hex(&bytes);
        if actual != entry.sha256 {
            return Err(SimulationError::ChecksumMismatch {
                signature: signature.0.clone(),
                file: entry.file.clone(),
            });
        }
        Ok(Some((entry.kind, bytes)))
    }

    /// Fetches and verifies a record; absent signatures return None.
    pub fn get(&self, signature: &Signature) -> Result<Option<DbRecord>, SimulationError> {
        match self.get_bytes(signature)? {
            None => Ok(None),
            Some((_, bytes)) => Ok(Some(parse_record(&bytes, &signature.0)?)),
        }
    }

    pub fn get_model(&self, signature: &Signature) -> Result<Option<G2GModel>, SimulationError> {
        match self.get(signature)? {
            Some(DbRecord::Model(m)) => Ok(Some(m)),
            Some(DbRecord::EntityTemplate(_)) => Err(SimulationError::CorruptRecord {
                signature: signature.0.clone(),
                reason: "expected a model record".to_string(),
            }),
            None => Ok(None),
        }
    }

    /// Raw serialized record bytes, for byte-identity checks.
    pub fn get_raw(&self, signature: &Signature) -> Result<Option<Vec<u8>>, SimulationError> {
        Ok(self.get_bytes(signature)?.map(|(_, b)| b))
    }

    /// Inventory in deterministic (signature-sorted) order.
    pub fn list(&self) -> Result<Vec<(Signature, ManifestEntry)>, SimulationError> {
        Ok(self
            .read_manifest()?
            .records
            .into_iter()
            .map(|(s, e)| (Signature(s), e))
            .collect())
    }

    /// Verifies every record's checksum; returns the failing records.
    pub fn verify(&self) -> Result<Vec<(Signature, String)>, SimulationError> {
        let manifest = self.read_manifest()?;
        let mut failures = Vec::new();
        for (sig, entry) in &manifest.records {
            let path = self.root.join(&entry.file);
            match std::fs::read(&path) {
                Err(e) => failures.push((Signature(sig.clone()), e.to_string())),
                Ok(bytes) => {
                    if sha256_hex(&bytes) != entry.sha256 {
                        failures.push((
                            Signature(sig.clone()),
                            format!("checksum mismatch in {}", entry.file),
                        ));
                    }
                }
            }
        }
        Ok(failures)
    }
}
