//! Per-query normalized difference matrix between a query and a reference traverse.

use rayon::prelude::*;

use crate::descriptor::{raw_difference, Descriptor, DiffOp};
use crate::error::{Error, Result};

/// Mean and population standard deviation of one query's raw differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowStats {
    pub mean: f64,
    pub std: f64,
}

/// Row-major `n_query x n_ref` matrix of standardized differences.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceMatrix {
    n_ref: usize,
    d: Vec<f64>,
    row_stats: Vec<RowStats>,
}

/// Raw differences of `q` against every reference, standardized by their own
/// mean and population standard deviation. A row whose raw values are all
/// equal comes back as zeros.
pub fn build_row(q: &Descriptor, refs: &[Descriptor], op: DiffOp) -> Result<(Vec<f64>, RowStats)> {
    if refs.is_empty() {
        return Err(Error::invalid("reference traverse is empty"));
    }
    let mut row = refs
        .iter()
        .map(|r| raw_difference(q, r, op))
        .collect::<Result<Vec<f64>>>()?;
    let stats = standardize(&mut row);
    Ok((row, stats))
}

/// Standardizes in place and returns the statistics used.
pub fn standardize(row: &mut [f64]) -> RowStats {
    let n = row.len() as f64;
    let mean = row.iter().sum::<f64>() / n;
    let var = row.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    let first = row[0];
    if row.iter().all(|&x| x == first) || std == 0.0 {
        row.iter_mut().for_each(|x| *x = 0.0);
        return RowStats { mean, std: 0.0 };
    }
    row.iter_mut().for_each(|x| *x = (*x - mean) / std);
    RowStats { mean, std }
}

impl DifferenceMatrix {
    /// A matrix with no query rows yet, ready for [`append_row`](Self::append_row).
    pub fn empty(n_ref: usize) -> Result<Self> {
        if n_ref == 0 {
            return Err(Error::invalid("reference traverse is empty"));
        }
        Ok(Self {
            n_ref,
            d: Vec::new(),
            row_stats: Vec::new(),
        })
    }

    /// Builds all rows in parallel; each row is reduced in index order so the
    /// result does not depend on scheduling.
    pub fn build(queries: &[Descriptor], refs: &[Descriptor], op: DiffOp) -> Result<Self> {
        if queries.is_empty() {
            return Err(Error::invalid("query traverse is empty"));
        }
        if refs.is_empty() {
            return Err(Error::invalid("reference traverse is empty"));
        }
        let rows = queries
            .par_iter()
            .map(|q| build_row(q, refs, op))
            .collect::<Result<Vec<_>>>()?;
        let mut m = Self::empty(refs.len())?;
        m.d.reserve(queries.len() * refs.len());
        for (row, stats) in rows {
            m.d.extend_from_slice(&row);
            m.row_stats.push(stats);
        }
        Ok(m)
    }

    pub fn append_row(&mut self, q: &Descriptor, refs: &[Descriptor], op: DiffOp) -> Result<()> {
        if refs.len() != self.n_ref {
            return Err(Error::DimensionMismatch {
                expected: self.n_ref,
                got: refs.len(),
            });
        }
        let (row, stats) = build_row(q, refs, op)?;
        self.push_row(&row, stats)
    }

    /// Appends an already standardized row.
    pub fn push_row(&mut self, row: &[f64], stats: RowStats) -> Result<()> {
        if row.len() != self.n_ref {
            return Err(Error::DimensionMismatch {
                expected: self.n_ref,
                got: row.len(),
            });
        }
        if row.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("non-finite difference value"));
        }
        self.d.extend_from_slice(row);
        self.row_stats.push(stats);
        Ok(())
    }

    /// Wraps standardized values, e.g. loaded from a cache file.
    pub fn from_parts(n_ref: usize, d: Vec<f64>, row_stats: Vec<RowStats>) -> Result<Self> {
        if n_ref == 0 || d.len() != n_ref * row_stats.len() {
            return Err(Error::format(format!(
                "matrix data length {} does not match {} rows x {n_ref} columns",
                d.len(),
                row_stats.len()
            )));
        }
        if d.iter().any(|x| !x.is_finite()) {
            return Err(Error::format("non-finite difference value"));
        }
        Ok(Self { n_ref, d, row_stats })
    }

    pub fn n_query(&self) -> usize {
        self.row_stats.len()
    }

    pub fn n_ref(&self) -> usize {
        self.n_ref
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.d[i * self.n_ref..(i + 1) * self.n_ref]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n_ref + j]
    }

    pub fn row_stats(&self) -> &[RowStats] {
        &self.row_stats
    }

    pub fn data(&self) -> &[f64] {
        &self.d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense(v: &[f64]) -> Descriptor {
        Descriptor::dense(v.to_vec()).unwrap()
    }

    fn random_descriptors(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<Descriptor> {
        (0..n)
            .map(|_| dense(&(0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<_>>()))
            .collect()
    }

    #[test]
    fn build_row_hand_example() {
        // raw SAD against q=0 is [2, 4, 6]
        let q = dense(&[0.0]);
        let refs = [dense(&[2.0]), dense(&[-4.0]), dense(&[6.0])];
        let (row, stats) = build_row(&q, &refs, DiffOp::Sad).unwrap();
        assert_eq!(stats.mean, 4.0);
        assert!((stats.std - (8.0f64 / 3.0).sqrt()).abs() < 1e-12);
        let expect = [-1.224744871391589, 0.0, 1.224744871391589];
        for (a, b) in row.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_rows_are_zero() {
        let q = dense(&[1.0, 2.0]);
        let (row, stats) = build_row(&q, &[q.clone(), q.clone(), q.clone()], DiffOp::Sad).unwrap();
        assert_eq!(row, vec![0.0; 3]);
        assert_eq!(stats.std, 0.0);
        let (row, _) = build_row(&q, &[dense(&[5.0, 5.0])], DiffOp::Sad).unwrap();
        assert_eq!(row, vec![0.0]);
        assert!(build_row(&q, &[], DiffOp::Sad).is_err());
    }

    #[test]
    fn build_matches_naive_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let queries = random_descriptors(&mut rng, 50, 16);
        let refs = random_descriptors(&mut rng, 80, 16);
        let m = DifferenceMatrix::build(&queries, &refs, DiffOp::Sad).unwrap();
        assert_eq!((m.n_query(), m.n_ref()), (50, 80));
        for (i, q) in queries.iter().enumerate() {
            let raw: Vec<f64> = refs
                .iter()
                .map(|r| {
                    let (a, b) = (q.as_dense().unwrap(), r.as_dense().unwrap());
                    let mut s = 0.0;
                    for k in 0..a.len() {
                        s += (a[k] - b[k]).abs();
                    }
                    s
                })
                .collect();
            let mu = raw.iter().sum::<f64>() / raw.len() as f64;
            let sd = (raw.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / raw.len() as f64).sqrt();
            for j in 0..refs.len() {
                assert!((m.get(i, j) - (raw[j] - mu) / sd).abs() < 1e-9);
            }
            let row = m.row(i);
            let rm = row.iter().sum::<f64>() / row.len() as f64;
            let rs = (row.iter().map(|x| (x - rm).powi(2)).sum::<f64>() / row.len() as f64).sqrt();
            assert!(rm.abs() < 1e-6 && (rs - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn self_match_diagonal_is_row_minimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let frames = random_descriptors(&mut rng, 20, 8);
        let m = DifferenceMatrix::build(&frames, &frames, DiffOp::Sad).unwrap();
        for i in 0..20 {
            let min = m.row(i).iter().cloned().fold(f64::INFINITY, f64::min);
            assert_eq!(m.get(i, i), min);
        }
    }

    #[test]
    fn single_query_build_equals_build_row() {
        let q = dense(&[0.0, 1.0]);
        let refs = [dense(&[1.0, 1.0]), dense(&[3.0, -2.0]), dense(&[0.5, 0.5])];
        let m = DifferenceMatrix::build(&[q.clone()], &refs, DiffOp::Cosine).unwrap();
        let (row, stats) = build_row(&q, &refs, DiffOp::Cosine).unwrap();
        assert_eq!(m.row(0), row.as_slice());
        assert_eq!(m.row_stats()[0], stats);
    }

    #[test]
    fn append_fold_equals_build() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let queries = random_descriptors(&mut rng, 15, 6);
        let refs = random_descriptors(&mut rng, 25, 6);
        let built = DifferenceMatrix::build(&queries, &refs, DiffOp::Sad).unwrap();
        let mut inc = DifferenceMatrix::empty(refs.len()).unwrap();
        for q in &queries {
            inc.append_row(q, &refs, DiffOp::Sad).unwrap();
        }
        assert_eq!(built, inc);

        inc.append_row(queries.last().unwrap(), &refs, DiffOp::Sad).unwrap();
        assert_eq!(inc.row(15), inc.row(14));
        assert!(inc.append_row(&dense(&[1.0]), &refs, DiffOp::Sad).is_err());
    }

    #[test]
    fn reference_permutation_permutes_row() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let q = random_descriptors(&mut rng, 1, 10).remove(0);
        let refs = random_descriptors(&mut rng, 30, 10);
        let perm: Vec<usize> = (0..30).map(|k| (k * 7) % 30).collect();
        let permuted: Vec<Descriptor> = perm.iter().map(|&k| refs[k].clone()).collect();
        let (a, sa) = build_row(&q, &refs, DiffOp::Sad).unwrap();
        let (b, sb) = build_row(&q, &permuted, DiffOp::Sad).unwrap();
        assert!((sa.mean - sb.mean).abs() < 1e-12 && (sa.std - sb.std).abs() < 1e-12);
        for (k, &p) in perm.iter().enumerate() {
            assert!((b[k] - a[p]).abs() < 1e-12);
        }
    }
}
