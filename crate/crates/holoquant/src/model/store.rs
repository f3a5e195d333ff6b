//! Weight container: a JSON manifest plus one contiguous little-endian
//! payload blob, persisted as `[u64 LE manifest length][manifest][payload]`.
//!
//! The manifest names every tensor with its element kind, shape, byte span,
//! and (for quantized stores) quantization parameters, and records one CRC32
//! over the payload and one over the manifest itself (computed with the
//! `manifest_crc32` field zeroed, then written back). Scales serialize as
//! decimal strings so they roundtrip the FP32 value exactly.

use crate::metrics::SizeReport;
use crate::quant::{QuantParams, Scheme};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

pub const FORMAT_ID: &str = "holow/1";

/// How a store is meant to be executed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StoreKind {
    /// FP32 weights, unfolded batch norms, no quantization parameters.
    #[serde(rename = "fp32")]
    Fp32,
    /// Folded INT8 weights, INT32 biases, and a full activation-site table.
    #[serde(rename = "int8-static")]
    Int8Static,
    /// Folded INT8 weights with FP32 biases; activation parameters are
    /// derived per call from the data itself.
    #[serde(rename = "int8-dynamic")]
    Int8Dynamic,
}

impl StoreKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            StoreKind::Fp32 => "fp32",
            StoreKind::Int8Static => "int8-static",
            StoreKind::Int8Dynamic => "int8-dynamic",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ElemKind {
    F32,
    I8,
    I32,
}

impl ElemKind {
    pub fn byte_size(&self) -> usize {
        match self {
            ElemKind::F32 | ElemKind::I32 => 4,
            ElemKind::I8 => 1,
        }
    }
}

/// Serialized form of `QuantParams`; the scale travels as a decimal string
/// that parses back to the identical FP32 value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantParamsRecord {
    pub scale: String,
    pub zero_point: i32,
    pub bits: u32,
    pub scheme: String,
    pub range: [f32; 2],
}

impl QuantParamsRecord {
    pub fn from_params(qp: &QuantParams) -> Self {
        QuantParamsRecord {
            scale: format!("{:?}", qp.scale),
            zero_point: qp.zero_point,
            bits: qp.bits,
            scheme: qp.scheme.as_str().to_string(),
            range: [qp.range.0, qp.range.1],
        }
    }

    pub fn to_params(&self) -> Result<QuantParams, StoreError> {
        let scale: f32 = self
            .scale
            .parse()
            .map_err(|_| StoreError::BadScale(self.scale.clone()))?;
        let scheme = match self.scheme.as_str() {
            "symmetric" => Scheme::Symmetric,
            "asymmetric" => Scheme::Asymmetric,
            other => return Err(StoreError::BadScheme(other.to_string())),
        };
        if !(scale.is_finite() && scale > 0.0) {
            return Err(StoreError::BadScale(self.scale.clone()));
        }
        Ok(QuantParams {
            scale,
            zero_point: self.zero_point,
            bits: self.bits,
            scheme,
            range: (self.range[0], self.range[1]),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorRecord {
    pub name: String,
    pub elem_kind: ElemKind,
    pub shape: Vec<usize>,
    pub offset: usize,
    pub length: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub qparams: Option<QuantParamsRecord>,
}

/// Quantization parameters of one recorded activation site.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SiteRecord {
    pub name: String,
    pub qparams: QuantParamsRecord,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub kind: StoreKind,
    pub architecture: String,
    pub tensors: Vec<TensorRecord>,
    pub activation_sites: Vec<SiteRecord>,
    pub payload_crc32: u32,
    pub manifest_crc32: u32,
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("manifest is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown format id {0:?} (expected {FORMAT_ID:?})")]
    UnknownFormat(String),
    #[error("file truncated: {context}")]
    Truncated { context: String },
    #[error("payload checksum mismatch: manifest says {expected:#010x}, payload hashes to {got:#010x}")]
    PayloadChecksum { expected: u32, got: u32 },
    #[error("manifest checksum mismatch: stored {expected:#010x}, recomputed {got:#010x}")]
    ManifestChecksum { expected: u32, got: u32 },
    #[error("tensor {name:?} spans bytes {offset}..{end} outside the {payload} byte payload")]
    TensorBounds {
        name: String,
        offset: usize,
        end: usize,
        payload: usize,
    },
    #[error("tensor {name:?} length {length} does not match shape {shape:?} ({expected} bytes)")]
    LengthMismatch {
        name: String,
        length: usize,
        shape: Vec<usize>,
        expected: usize,
    },
    #[error("tensors {a:?} and {b:?} overlap in the payload")]
    Overlap { a: String, b: String },
    #[error("store has no tensor named {0:?}")]
    MissingTensor(String),
    #[error("tensor {name:?} holds {kind:?} elements, expected {expected:?}")]
    WrongElemKind {
        name: String,
        kind: ElemKind,
        expected: ElemKind,
    },
    #[error("unparseable scale {0:?}")]
    BadScale(String),
    #[error("unknown quantization scheme {0:?}")]
    BadScheme(String),
    #[error("duplicate tensor name {0:?}")]
    DuplicateTensor(String),
}

/// An in-memory weight container. Bit-for-bit reproducible: save → load
/// returns an equal value.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightStore {
    manifest: Manifest,
    payload: Vec<u8>,
}

impl WeightStore {
    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn kind(&self) -> StoreKind {
        self.manifest.kind
    }

    pub fn architecture(&self) -> &str {
        &self.manifest.architecture
    }

    pub fn payload(&self) -> &[u8] {
        &self.payload
    }

    pub fn record(&self, name: &str) -> Result<&TensorRecord, StoreError> {
        self.manifest
            .tensors
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| StoreError::MissingTensor(name.to_string()))
    }

    pub fn has_tensor(&self, name: &str) -> bool {
        self.manifest.tensors.iter().any(|t| t.name == name)
    }

    fn bytes_of(&self, rec: &TensorRecord) -> &[u8] {
        &self.payload[rec.offset..rec.offset + rec.length]
    }

    pub fn f32_data(&self, name: &str) -> Result<Vec<f32>, StoreError> {
        let rec = self.record(name)?;
        if rec.elem_kind != ElemKind::F32 {
            return Err(StoreError::WrongElemKind {
                name: name.to_string(),
                kind: rec.elem_kind,
                expected: ElemKind::F32,
            });
        }
        Ok(self
            .bytes_of(rec)
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect())
    }

    pub fn i8_data(&self, name: &str) -> Result<Vec<i8>, StoreError> {
        let rec = self.record(name)?;
        if rec.elem_kind != ElemKind::I8 {
            return Err(StoreError::WrongElemKind {
                name: name.to_string(),
                kind: rec.elem_kind,
                expected: ElemKind::I8,
            });
        }
        Ok(self.bytes_of(rec).iter().map(|&b| b as i8).collect())
    }

    pub fn i32_data(&self, name: &str) -> Result<Vec<i32>, StoreError> {
        let rec = self.record(name)?;
        if rec.elem_kind != ElemKind::I32 {
            return Err(StoreError::WrongElemKind {
                name: name.to_string(),
                kind: rec.elem_kind,
                expected: ElemKind::I32,
            });
        }
        Ok(self
            .bytes_of(rec)
            .chunks_exact(4)
            .map(|b| i32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect())
    }

    /// Quantization parameters attached to a tensor record.
    pub fn tensor_qparams(&self, name: &str) -> Result<Option<QuantParams>, StoreError> {
        self.record(name)?
            .qparams
            .as_ref()
            .map(|q| q.to_params())
            .transpose()
    }

    /// Quantization parameters of one activation site.
    pub fn site_qparams(&self, name: &str) -> Result<QuantParams, StoreError> {
        self.manifest
            .activation_sites
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| StoreError::MissingTensor(name.to_string()))
            .and_then(|s| s.qparams.to_params())
    }

    /// Exact byte accounting: payload, serialized manifest, file total.
    pub fn size_report(&self) -> SizeReport {
        let manifest_bytes = serde_json::to_vec(&self.manifest)
            .expect("manifest serialization cannot fail")
            .len();
        SizeReport {
            payload_bytes: self.payload.len(),
            manifest_bytes,
            total_bytes: 8 + manifest_bytes + self.payload.len(),
            per_tensor: self
                .manifest
                .tensors
                .iter()
                .map(|t| (t.name.clone(), t.length))
                .collect(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), StoreError> {
        let manifest_bytes = serde_json::to_vec(&self.manifest)?;
        let mut f = std::fs::File::create(path)?;
        f.write_all(&(manifest_bytes.len() as u64).to_le_bytes())?;
        f.write_all(&manifest_bytes)?;
        f.write_all(&self.payload)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, StoreError> {
        let mut f = std::fs::File::open(path)?;
        let mut bytes = Vec::new();
        f.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, StoreError> {
        if bytes.len() < 8 {
            return Err(StoreError::Truncated {
                context: "missing manifest length header".to_string(),
            });
        }
        let mlen = u64::from_le_bytes(bytes[..8].try_into().unwrap()) as usize;
        if bytes.len() < 8 + mlen {
            return Err(StoreError::Truncated {
                context: format!(
                    "manifest claims {mlen} bytes, file holds {}",
                    bytes.len() - 8
                ),
            });
        }
        let manifest: Manifest = serde_json::from_slice(&bytes[8..8 + mlen])?;
        if manifest.format != FORMAT_ID {
            return Err(StoreError::UnknownFormat(manifest.format));
        }
        let payload = bytes[8 + mlen..].to_vec();

        // The manifest checksum covers the canonical serialization with the
        // checksum field itself zeroed, so flipped manifest bytes that still
        // parse are caught too.
        let stored = manifest.manifest_crc32;
        let mut unsigned = manifest.clone();
        unsigned.manifest_crc32 = 0;
        let got = crc32fast::hash(&serde_json::to_vec(&unsigned)?);
        if got != stored {
            return Err(StoreError::ManifestChecksum {
                expected: stored,
                got,
            });
        }

        let got = crc32fast::hash(&payload);
        if got != manifest.payload_crc32 {
            return Err(StoreError::PayloadChecksum {
                expected: manifest.payload_crc32,
                got,
            });
        }

        let store = WeightStore { manifest, payload };
        store.validate_layout()?;
        Ok(store)
    }

    fn validate_layout(&self) -> Result<(), StoreError> {
        let mut spans: Vec<(usize, usize, &str)> = Vec::new();
        for rec in &self.manifest.tensors {
            let expected = rec.shape.iter().product::<usize>() * rec.elem_kind.byte_size();
            if rec.length != expected {
                return Err(StoreError::LengthMismatch {
                    name: rec.name.clone(),
                    length: rec.length,
                    shape: rec.shape.clone(),
                    expected,
                });
            }
            let end = rec.offset + rec.length;
            if end > self.payload.len() {
                return Err(StoreError::TensorBounds {
                    name: rec.name.clone(),
                    offset: rec.offset,
                    end,
                    payload: self.payload.len(),
                });
            }
            spans.push((rec.offset, end, &rec.name));
        }
        spans.sort();
        for pair in spans.windows(2) {
            if pair[1].0 < pair[0].1 {
                return Err(StoreError::Overlap {
                    a: pair[0].2.to_string(),
                    b: pair[1].2.to_string(),
                });
            }
        }
        Ok(())
    }
}

/// Assembles a store tensor by tensor; offsets are assigned contiguously in
/// push order.
pub struct WeightStoreBuilder {
    kind: StoreKind,
    architecture: String,
    tensors: Vec<TensorRecord>,
    sites: Vec<SiteRecord>,
    payload: Vec<u8>,
}

impl WeightStoreBuilder {
    pub fn new(kind: StoreKind, architecture: &str) -> Self {
        WeightStoreBuilder {
            kind,
            architecture: architecture.to_string(),
            tensors: Vec::new(),
            sites: Vec::new(),
            payload: Vec::new(),
        }
    }

    fn push(
        &mut self,
        name: &str,
        elem_kind: ElemKind,
        shape: &[usize],
        bytes: Vec<u8>,
        qparams: Option<QuantParams>,
    ) -> Result<(), StoreError> {
        if self.tensors.iter().any(|t| t.name == name) {
            return Err(StoreError::DuplicateTensor(name.to_string()));
        }
        let expected = shape.iter().product::<usize>() * elem_kind.byte_size();
        if bytes.len() != expected {
            return Err(StoreError::LengthMismatch {
                name: name.to_string(),
                length: bytes.len(),
                shape: shape.to_vec(),
                expected,
            });
        }
        self.tensors.push(TensorRecord {
            name: name.to_string(),
            elem_kind,
            shape: shape.to_vec(),
            offset: self.payload.len(),
            length: bytes.len(),
            qparams: qparams.as_ref().map(QuantParamsRecord::from_params),
        });
        self.payload.extend_from_slice(&bytes);
        Ok(())
    }

    pub fn push_f32(&mut self, name: &str, shape: &[usize], data: &[f32]) -> Result<(), StoreError> {
        let bytes = data.iter().flat_map(|v| v.to_le_bytes()).collect();
        self.push(name, ElemKind::F32, shape, bytes, None)
    }

    pub fn push_i8(
        &mut self,
        name: &str,
        shape: &[usize],
        data: &[i8],
        qparams: QuantParams,
    ) -> Result<(), StoreError> {
        let bytes = data.iter().map(|&v| v as u8).collect();
        self.push(name, ElemKind::I8, shape, bytes, Some(qparams))
    }

    pub fn push_i32(&mut self, name: &str, shape: &[usize], data: &[i32]) -> Result<(), StoreError> {
        let bytes = data.iter().flat_map(|v| v.to_le_bytes()).collect();
        self.push(name, ElemKind::I32, shape, bytes, None)
    }

    pub fn push_site(&mut self, name: &str, qparams: &QuantParams) {
        self.sites.push(SiteRecord {
            name: name.to_string(),
            qparams: QuantParamsRecord::from_params(qparams),
        });
    }

    pub fn finish(self) -> WeightStore {
        let mut manifest = Manifest {
            format: FORMAT_ID.to_string(),
            kind: self.kind,
            architecture: self.architecture,
            tensors: self.tensors,
            activation_sites: self.sites,
            payload_crc32: crc32fast::hash(&self.payload),
            manifest_crc32: 0,
        };
        manifest.manifest_crc32 =
            crc32fast::hash(&serde_json::to_vec(&manifest).expect("manifest serializes"));
        WeightStore {
            manifest,
            payload: self.payload,
        }
    }
}
