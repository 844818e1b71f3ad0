//! Diagonal window scores over the difference matrix and the fixed-length localizer.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::DifferenceMatrix;

/// Diagonal prefix sums: `c[i][j] = d[i][j] + c[i-1][j-1]`, out-of-range terms zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PrefixField {
    n_ref: usize,
    c: Vec<f64>,
}

impl PrefixField {
    pub fn new(n_ref: usize) -> Self {
        Self { n_ref, c: Vec::new() }
    }

    pub fn build(m: &DifferenceMatrix) -> Self {
        let mut p = Self::new(m.n_ref());
        p.c.reserve(m.n_query() * m.n_ref());
        for i in 0..m.n_query() {
            p.push_row(m.row(i));
        }
        p
    }

    /// Extends the field by one difference-matrix row.
    pub fn push_row(&mut self, d_row: &[f64]) {
        assert_eq!(d_row.len(), self.n_ref, "row length must equal n_ref");
        let n = self.n_ref;
        let i = self.n_rows();
        self.c.reserve(n);
        for (j, &d) in d_row.iter().enumerate() {
            let prev = if i > 0 && j > 0 { self.c[(i - 1) * n + j - 1] } else { 0.0 };
            self.c.push(d + prev);
        }
    }

    pub fn n_rows(&self) -> usize {
        if self.n_ref == 0 {
            0
        } else {
            self.c.len() / self.n_ref
        }
    }

    pub fn n_ref(&self) -> usize {
        self.n_ref
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.c[i * self.n_ref + j]
    }

    /// Sum of the `len` diagonal entries ending at `(i, j)`; caller guarantees bounds.
    #[inline]
    fn diag_sum(&self, i: usize, j: usize, len: usize) -> f64 {
        let head = self.at(i, j);
        if i >= len && j >= len {
            head - self.at(i - len, j - len)
        } else {
            head
        }
    }

    fn check(&self, i: usize, len: usize) -> Result<()> {
        if len == 0 {
            return Err(Error::invalid("window length must be >= 1"));
        }
        if i >= self.n_rows() {
            return Err(Error::invalid(format!(
                "query index {i} out of range ({} rows)",
                self.n_rows()
            )));
        }
        if i + 1 < len {
            return Err(Error::invalid(format!(
                "query {i} has only {} frames of history, window needs {len}",
                i + 1
            )));
        }
        if len > self.n_ref {
            return Err(Error::invalid(format!(
                "window length {len} exceeds reference length {}",
                self.n_ref
            )));
        }
        Ok(())
    }

    /// Mean of the `len` diagonal differences ending at `(i, j)`.
    pub fn window_score(&self, i: usize, j: usize, len: usize) -> Result<f64> {
        self.check(i, len)?;
        if j >= self.n_ref || j + 1 < len {
            return Err(Error::invalid(format!(
                "reference index {j} not admissible for window {len}"
            )));
        }
        Ok(self.diag_sum(i, j, len) / len as f64)
    }

    /// Window scores for every admissible `j` in `len-1..n_ref`, ascending.
    pub fn score_row(&self, i: usize, len: usize) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        self.score_row_into(i, len, &mut out)?;
        Ok(out)
    }

    /// As [`score_row`](Self::score_row), reusing `out`.
    pub fn score_row_into(&self, i: usize, len: usize, out: &mut Vec<f64>) -> Result<()> {
        self.check(i, len)?;
        out.clear();
        let l = len as f64;
        let n = self.n_ref;
        let row = &self.c[i * n..(i + 1) * n];
        if i >= len {
            let back = &self.c[(i - len) * n..(i - len + 1) * n];
            // j = len-1 reaches back to column -1 which is zero
            out.push(row[len - 1] / l);
            out.extend((len..n).map(|j| (row[j] - back[j - len]) / l));
        } else {
            out.extend(row[len - 1..].iter().map(|&c| c / l));
        }
        Ok(())
    }
}

/// Index of the first minimum.
pub fn argmin(values: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (k, &v) in values.iter().enumerate() {
        match best {
            Some((_, b)) if v >= b => {}
            _ => best = Some((k, v)),
        }
    }
    best.map(|(k, _)| k)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hypothesis {
    pub best_ref: usize,
    /// Window score `s` at `best_ref`.
    pub score: f64,
    /// Probability of a window score this low under the fitted distribution.
    /// Always 1.0 for fixed-length results.
    pub significance: f64,
    /// Natural log of `significance`, kept separately because deep tails underflow.
    pub log_significance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Hypothesis,
    NoHypothesis,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Hypothesis => "hypothesis",
            Status::NoHypothesis => "no_hypothesis",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalizationResult {
    pub query_index: usize,
    /// Window length used; zero when an adaptive frame had no feasible length.
    pub window_len: usize,
    pub hypothesis: Option<Hypothesis>,
}

impl LocalizationResult {
    pub fn none(query_index: usize, window_len: usize) -> Self {
        Self {
            query_index,
            window_len,
            hypothesis: None,
        }
    }

    pub fn status(&self) -> Status {
        if self.hypothesis.is_some() {
            Status::Hypothesis
        } else {
            Status::NoHypothesis
        }
    }

    pub fn best_ref(&self) -> Option<usize> {
        self.hypothesis.map(|h| h.best_ref)
    }
}

/// Fixed window length localization of every query frame.
pub fn fixed_localize(m: &DifferenceMatrix, len: usize) -> Result<Vec<LocalizationResult>> {
    fixed_localize_prefix(&PrefixField::build(m), len)
}

pub fn fixed_localize_prefix(prefix: &PrefixField, len: usize) -> Result<Vec<LocalizationResult>> {
    if len == 0 {
        return Err(Error::invalid("window length must be >= 1"));
    }
    let n_query = prefix.n_rows();
    if len > prefix.n_ref() {
        log::warn!(
            "window length {len} exceeds reference length {}; no frame can be localized",
            prefix.n_ref()
        );
        return Ok((0..n_query).map(|i| LocalizationResult::none(i, len)).collect());
    }
    Ok((0..n_query)
        .into_par_iter()
        .map_init(Vec::new, |buf, i| {
            if i + 1 < len {
                return LocalizationResult::none(i, len);
            }
            prefix.score_row_into(i, len, buf).expect("bounds checked");
            let k = argmin(buf).expect("non-empty score row");
            LocalizationResult {
                query_index: i,
                window_len: len,
                hypothesis: Some(Hypothesis {
                    best_ref: k + len - 1,
                    score: buf[k],
                    significance: 1.0,
                    log_significance: 0.0,
                }),
            }
        })
        .collect())
}

/// The window lengths swept by the fixed-length baseline.
pub const DEFAULT_FIXED_SWEEP: [usize; 7] = [10, 25, 50, 100, 200, 350, 500];
