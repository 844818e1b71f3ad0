//! On-disk envelope for descriptors and difference matrices: a JSON manifest
//! next to a little-endian `f32` blob.
//!
//! Dense descriptors use `layout: "row-major"` with `count * dim` values.
//! Sparse descriptors use `layout: "csr"`: `count + 1` u64 row offsets, then
//! `nnz` u32 feature ids, then `nnz` f32 values.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::descriptor::{Descriptor, DescriptorKind};
use crate::error::{Error, Result};
use crate::matrix::{DifferenceMatrix, RowStats};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub count: usize,
    pub dim: usize,
    pub dtype: String,
    pub layout: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nnz: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blob: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub row_stats: Option<Vec<[f64; 2]>>,
}

pub const LAYOUT_DENSE: &str = "row-major";
pub const LAYOUT_CSR: &str = "csr";

/// Blob path for a manifest: `foo.json` pairs with `foo.bin`.
pub fn blob_path(manifest: &Path) -> PathBuf {
    manifest.with_extension("bin")
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn write_envelope(path: &Path, mut manifest: Manifest, blob: &[u8]) -> Result<()> {
    let bin = blob_path(path);
    manifest.blob = bin.file_name().map(|n| n.to_string_lossy().into_owned());
    let mut json = serde_json::to_string_pretty(&manifest)?;
    json.push('\n');
    write_file(&bin, blob)?;
    write_file(path, json.as_bytes())
}

fn read_envelope(path: &Path) -> Result<(Manifest, Vec<u8>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let manifest: Manifest = serde_json::from_str(&text)?;
    if manifest.dtype != "f32" {
        return Err(Error::format(format!("unsupported dtype {:?}", manifest.dtype)));
    }
    let bin = match &manifest.blob {
        Some(name) => path.parent().unwrap_or(Path::new("")).join(name),
        None => blob_path(path),
    };
    let blob = fs::read(&bin).map_err(|e| Error::io(&bin, e))?;
    Ok((manifest, blob))
}

fn f32_le(bytes: &[u8]) -> impl Iterator<Item = f64> + '_ {
    bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
}

fn push_f32(out: &mut Vec<u8>, v: f64) -> Result<()> {
    let x = v as f32;
    if !x.is_finite() {
        return Err(Error::invalid(format!("value {v} not representable as f32")));
    }
    out.extend_from_slice(&x.to_le_bytes());
    Ok(())
}

pub fn write_descriptors(path: impl AsRef<Path>, descriptors: &[Descriptor]) -> Result<()> {
    let path = path.as_ref();
    let first = descriptors
        .first()
        .ok_or_else(|| Error::invalid("no descriptors to write"))?;
    let dim = first.dim();
    let kind = first.kind();
    if let Some(d) = descriptors.iter().find(|d| d.dim() != dim || d.kind() != kind) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: d.dim(),
        });
    }
    let count = descriptors.len();
    let mut blob = Vec::new();
    let manifest = match kind {
        DescriptorKind::Dense => {
            blob.reserve(count * dim * 4);
            for d in descriptors {
                for &v in d.as_dense().expect("dense") {
                    push_f32(&mut blob, v)?;
                }
            }
            Manifest {
                count,
                dim,
                dtype: "f32".into(),
                layout: LAYOUT_DENSE.into(),
                nnz: None,
                blob: None,
                kind: None,
                row_stats: None,
            }
        }
        DescriptorKind::Sparse => {
            let mut offset = 0u64;
            blob.extend_from_slice(&offset.to_le_bytes());
            for d in descriptors {
                offset += d.nnz() as u64;
                blob.extend_from_slice(&offset.to_le_bytes());
            }
            for d in descriptors {
                for &(id, _) in d.as_sparse().expect("sparse") {
                    blob.extend_from_slice(&id.to_le_bytes());
                }
            }
            for d in descriptors {
                for &(_, v) in d.as_sparse().expect("sparse") {
                    push_f32(&mut blob, v)?;
                }
            }
            Manifest {
                count,
                dim,
                dtype: "f32".into(),
                layout: LAYOUT_CSR.into(),
                nnz: Some(offset as usize),
                blob: None,
                kind: None,
                row_stats: None,
            }
        }
    };
    write_envelope(path, manifest, &blob)
}

pub fn read_descriptors(path: impl AsRef<Path>) -> Result<Vec<Descriptor>> {
    let path = path.as_ref();
    let (m, blob) = read_envelope(path)?;
    if m.count == 0 || m.dim == 0 {
        return Err(Error::format("descriptor file has zero count or dim"));
    }
    match m.layout.as_str() {
        LAYOUT_DENSE => {
            let expected = m.count * m.dim * 4;
            if blob.len() != expected {
                return Err(Error::format(format!(
                    "blob has {} bytes, manifest implies {expected}",
                    blob.len()
                )));
            }
            let values: Vec<f64> = f32_le(&blob).collect();
            values
                .chunks_exact(m.dim)
                .map(|row| Descriptor::dense(row.to_vec()).map_err(|e| Error::format(e.to_string())))
                .collect()
        }
        LAYOUT_CSR => {
            let nnz = m.nnz.ok_or_else(|| Error::format("csr manifest lacks nnz"))?;
            let off_len = (m.count + 1) * 8;
            let expected = off_len + nnz * 8;
            if blob.len() != expected {
                return Err(Error::format(format!(
                    "blob has {} bytes, manifest implies {expected}",
                    blob.len()
                )));
            }
            let offsets: Vec<usize> = blob[..off_len]
                .chunks_exact(8)
                .map(|c| u64::from_le_bytes(c.try_into().expect("8 bytes")) as usize)
                .collect();
            let ids: Vec<u32> = blob[off_len..off_len + nnz * 4]
                .chunks_exact(4)
                .map(|c| u32::from_le_bytes(c.try_into().expect("4 bytes")))
                .collect();
            let vals: Vec<f64> = f32_le(&blob[off_len + nnz * 4..]).collect();
            if offsets[0] != 0
                || offsets[m.count] != nnz
                || offsets.windows(2).any(|w| w[1] < w[0])
            {
                return Err(Error::format("csr offsets are inconsistent"));
            }
            offsets
                .windows(2)
                .map(|w| {
                    let entries = (w[0]..w[1]).map(|k| (ids[k], vals[k]));
                    Descriptor::sparse(m.dim, entries).map_err(|e| Error::format(e.to_string()))
                })
                .collect()
        }
        other => Err(Error::format(format!("unknown layout {other:?}"))),
    }
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub const MATRIX_KIND: &str = "difference-matrix";

pub fn write_matrix(path: impl AsRef<Path>, m: &DifferenceMatrix) -> Result<()> {
    let mut blob = Vec::with_capacity(m.data().len() * 4);
    for &v in m.data() {
        push_f32(&mut blob, v)?;
    }
    let manifest = Manifest {
        count: m.n_query(),
        dim: m.n_ref(),
        dtype: "f32".into(),
        layout: LAYOUT_DENSE.into(),
        nnz: None,
        blob: None,
        kind: Some(MATRIX_KIND.into()),
        row_stats: Some(m.row_stats().iter().map(|s| [s.mean, s.std]).collect()),
    };
    write_envelope(path.as_ref(), manifest, &blob)
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<DifferenceMatrix> {
    let (m, blob) = read_envelope(path.as_ref())?;
    if m.kind.as_deref() != Some(MATRIX_KIND) || m.layout != LAYOUT_DENSE {
        return Err(Error::format("not a difference-matrix file"));
    }
    if blob.len() != m.count * m.dim * 4 {
        return Err(Error::format("matrix blob size does not match manifest"));
    }
    let stats = m
        .row_stats
        .unwrap_or_else(|| vec![[0.0, 1.0]; m.count])
        .into_iter()
        .map(|[mean, std]| RowStats { mean, std })
        .collect::<Vec<_>>();
    if stats.len() != m.count {
        return Err(Error::format("row_stats length does not match count"));
    }
    DifferenceMatrix::from_parts(m.dim, f32_le(&blob).collect(), stats)
}
