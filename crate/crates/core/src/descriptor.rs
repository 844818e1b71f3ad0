//! Frame descriptors and the raw frame-difference operators.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DescriptorKind {
    Dense,
    Sparse,
}

#[derive(Debug, Clone, PartialEq)]
enum Values {
    Dense(Vec<f64>),
    /// Sorted by feature id, no duplicates, absent ids are zero.
    Sparse(Vec<(u32, f64)>),
}

/// One frame's sensory vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Descriptor {
    dim: usize,
    values: Values,
}

impl Descriptor {
    pub fn dense(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("dense descriptor must have dim >= 1"));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite value at index {k}")));
        }
        Ok(Self {
            dim: values.len(),
            values: Values::Dense(values),
        })
    }

    /// Builds a sparse descriptor. Entries may arrive in any order but ids must be unique.
    pub fn sparse(dim: usize, entries: impl IntoIterator<Item = (u32, f64)>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("sparse descriptor must have dim >= 1"));
        }
        let mut entries: Vec<(u32, f64)> = entries.into_iter().collect();
        entries.sort_by_key(|&(id, _)| id);
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::invalid(format!("duplicate feature id {}", w[0].0)));
            }
        }
        for &(id, v) in &entries {
            if id as usize >= dim {
                return Err(Error::invalid(format!("feature id {id} >= dim {dim}")));
            }
            if !v.is_finite() {
                return Err(Error::invalid(format!("non-finite value for feature {id}")));
            }
        }
        Ok(Self {
            dim,
            values: Values::Sparse(entries),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> DescriptorKind {
        match self.values {
            Values::Dense(_) => DescriptorKind::Dense,
            Values::Sparse(_) => DescriptorKind::Sparse,
        }
    }

    pub fn as_dense(&self) -> Option<&[f64]> {
        match &self.values {
            Values::Dense(v) => Some(v),
            Values::Sparse(_) => None,
        }
    }

    pub fn as_sparse(&self) -> Option<&[(u32, f64)]> {
        match &self.values {
            Values::Dense(_) => None,
            Values::Sparse(e) => Some(e),
        }
    }

    /// Number of stored (dense) or present (sparse) entries.
    pub fn nnz(&self) -> usize {
        match &self.values {
            Values::Dense(v) => v.len(),
            Values::Sparse(e) => e.len(),
        }
    }

    pub fn to_dense_vec(&self) -> Vec<f64> {
        match &self.values {
            Values::Dense(v) => v.clone(),
            Values::Sparse(e) => {
                let mut out = vec![0.0; self.dim];
                for &(id, v) in e {
                    out[id as usize] = v;
                }
                out
            }
        }
    }

    fn norm_sq(&self) -> f64 {
        match &self.values {
            Values::Dense(v) => v.iter().map(|x| x * x).sum(),
            Values::Sparse(e) => e.iter().map(|(_, x)| x * x).sum(),
        }
    }
}

/// Frame difference operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiffOp {
    /// Sum of absolute differences.
    Sad,
    /// One minus cosine similarity, in `[0, 2]`.
    Cosine,
}

impl DiffOp {
    pub fn name(self) -> &'static str {
        match self {
            DiffOp::Sad => "sad",
            DiffOp::Cosine => "cosine",
        }
    }
}

impl fmt::Display for DiffOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DiffOp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sad" => Ok(DiffOp::Sad),
            "cosine" | "cos" => Ok(DiffOp::Cosine),
            other => Err(Error::invalid(format!("unknown difference operator {other:?}"))),
        }
    }
}

static ZERO_COSINE_WARNED: AtomicBool = AtomicBool::new(false);

pub fn raw_difference(a: &Descriptor, b: &Descriptor, op: DiffOp) -> Result<f64> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch {
            expected: a.dim,
            got: b.dim,
        });
    }
    Ok(match op {
        DiffOp::Sad => sad(a, b),
        DiffOp::Cosine => cosine(a, b),
    })
}

fn sad(a: &Descriptor, b: &Descriptor) -> f64 {
    match (&a.values, &b.values) {
        (Values::Dense(x), Values::Dense(y)) => {
            x.iter().zip(y).map(|(p, q)| (p - q).abs()).sum()
        }
        (Values::Sparse(x), Values::Sparse(y)) => {
            let mut total = 0.0;
            merge_sparse(x, y, |p, q| total += (p - q).abs());
            total
        }
        (Values::Dense(x), Values::Sparse(y)) => sad_dense_sparse(x, y),
        (Values::Sparse(x), Values::Dense(y)) => sad_dense_sparse(y, x),
    }
}

fn sad_dense_sparse(dense: &[f64], sparse: &[(u32, f64)]) -> f64 {
    let mut it = sparse.iter().peekable();
    let mut total = 0.0;
    for (k, &d) in dense.iter().enumerate() {
        let s = match it.peek() {
            Some(&&(id, v)) if id as usize == k => {
                it.next();
                v
            }
            _ => 0.0,
        };
        total += (d - s).abs();
    }
    total
}

/// Walks the union of supports in id order, calling `f(a_k, b_k)`.
fn merge_sparse(x: &[(u32, f64)], y: &[(u32, f64)], mut f: impl FnMut(f64, f64)) {
    let (mut i, mut j) = (0, 0);
    while i < x.len() || j < y.len() {
        match (x.get(i), y.get(j)) {
            (Some(&(ia, va)), Some(&(ib, vb))) if ia == ib => {
                f(va, vb);
                i += 1;
                j += 1;
            }
            (Some(&(ia, va)), Some(&(ib, _))) if ia < ib => {
                f(va, 0.0);
                i += 1;
            }
            (Some(_), Some(&(_, vb))) => {
                f(0.0, vb);
                j += 1;
            }
            (Some(&(_, va)), None) => {
                f(va, 0.0);
                i += 1;
            }
            (None, Some(&(_, vb))) => {
                f(0.0, vb);
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }
}

fn dot(a: &Descriptor, b: &Descriptor) -> f64 {
    match (&a.values, &b.values) {
        (Values::Dense(x), Values::Dense(y)) => x.iter().zip(y).map(|(p, q)| p * q).sum(),
        (Values::Sparse(x), Values::Sparse(y)) => {
            let mut total = 0.0;
            merge_sparse(x, y, |p, q| total += p * q);
            total
        }
        (Values::Dense(x), Values::Sparse(y)) | (Values::Sparse(y), Values::Dense(x)) => {
            y.iter().map(|&(id, v)| x[id as usize] * v).sum()
        }
    }
}

fn cosine(a: &Descriptor, b: &Descriptor) -> f64 {
    let na = a.norm_sq();
    let nb = b.norm_sq();
    if na == 0.0 || nb == 0.0 {
        if !ZERO_COSINE_WARNED.swap(true, Ordering::Relaxed) {
            log::warn!("cosine difference against a zero vector; using 1.0 (further occurrences not reported)");
        }
        return 1.0;
    }
    // sqrt(na) * sqrt(nb) is symmetric in (a, b); sqrt(na * nb) would be too but can overflow.
    let sim = dot(a, b) / (na.sqrt() * nb.sqrt());
    (1.0 - sim).clamp(0.0, 2.0)
}
