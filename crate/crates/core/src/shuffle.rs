//! Out-of-order traverses built by permuting contiguous segments.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::seeded;

pub const SHUFFLE_MANIFEST_HEADER: &str = "new_index,old_index";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShuffleSpec {
    pub min_frac: f64,
    pub max_frac: f64,
    pub seed: u64,
}

impl Default for ShuffleSpec {
    fn default() -> Self {
        Self {
            min_frac: 0.02,
            max_frac: 0.20,
            seed: 0,
        }
    }
}

/// A segment permutation: `order[new_index] == old_index`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shuffle {
    pub order: Vec<usize>,
    /// Segments as `(start, len)` in original indexing, in their new order.
    pub segments: Vec<(usize, usize)>,
}

impl Shuffle {
    pub fn apply<T: Clone>(&self, items: &[T]) -> Vec<T> {
        self.order.iter().map(|&k| items[k].clone()).collect()
    }

    /// `inverse()[old_index] == new_index`.
    pub fn inverse(&self) -> Vec<usize> {
        invert(&self.order)
    }

    pub fn to_csv(&self) -> String {
        manifest_csv(&self.order)
    }
}

pub fn invert(order: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; order.len()];
    for (new, &old) in order.iter().enumerate() {
        inv[old] = new;
    }
    inv
}

/// Restores the original order of items shuffled by `order`.
pub fn unapply<T: Clone>(order: &[usize], shuffled: &[T]) -> Vec<T> {
    invert(order).iter().map(|&k| shuffled[k].clone()).collect()
}

pub fn manifest_csv(order: &[usize]) -> String {
    let mut s = format!("{SHUFFLE_MANIFEST_HEADER}\n");
    for (new, old) in order.iter().enumerate() {
        s.push_str(&format!("{new},{old}\n"));
    }
    s
}

/// Parses a manifest and checks it is a permutation.
pub fn parse_manifest(text: &str) -> Result<Vec<usize>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim_start_matches('\u{feff}').trim_end() == SHUFFLE_MANIFEST_HEADER => {}
        _ => {
            return Err(Error::format(format!(
                "shuffle manifest must start with {SHUFFLE_MANIFEST_HEADER:?}"
            )))
        }
    }
    let mut pairs = Vec::new();
    for line in lines.map(str::trim).filter(|l| !l.is_empty()) {
        let bad = || Error::format(format!("bad manifest row {line:?}"));
        let (a, b) = line.split_once(',').ok_or_else(bad)?;
        pairs.push((
            a.trim().parse::<usize>().map_err(|_| bad())?,
            b.trim().parse::<usize>().map_err(|_| bad())?,
        ));
    }
    let n = pairs.len();
    let mut order = vec![usize::MAX; n];
    let mut seen = vec![false; n];
    for (new, old) in pairs {
        if new >= n || old >= n || order[new] != usize::MAX || seen[old] {
            return Err(Error::format("shuffle manifest is not a permutation"));
        }
        order[new] = old;
        seen[old] = true;
    }
    Ok(order)
}

/// Splits `0..n` into contiguous segments with lengths drawn uniformly from
/// `[ceil(min_frac*n), floor(max_frac*n)]` (the last one may be shorter) and
/// permutes their order.
pub fn shuffle_traverse(n: usize, spec: &ShuffleSpec) -> Result<Shuffle> {
    let ShuffleSpec { min_frac, max_frac, seed } = *spec;
    if !(min_frac > 0.0 && min_frac <= max_frac && max_frac < 1.0) {
        return Err(Error::invalid(format!(
            "shuffle fractions must satisfy 0 < min <= max < 1, got {min_frac}..{max_frac}"
        )));
    }
    let lo = (min_frac * n as f64).ceil() as usize;
    let hi = (max_frac * n as f64).floor() as usize;
    if (n as f64) * min_frac < 1.0 || lo > hi {
        return Err(Error::invalid(format!(
            "traverse of {n} frames too short for segment fractions {min_frac}..{max_frac}"
        )));
    }
    let mut rng: ChaCha8Rng = seeded(seed);
    let mut segments = Vec::new();
    let mut start = 0;
    while start < n {
        let len = rng.gen_range(lo as u64..=hi as u64) as usize;
        let len = len.min(n - start);
        segments.push((start, len));
        start += len;
    }
    segments.shuffle(&mut rng);
    let order = segments.iter().flat_map(|&(s, l)| s..s + l).collect();
    Ok(Shuffle { order, segments })
}
