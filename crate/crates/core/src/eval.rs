//! Ground truth and the two evaluation metrics: maximum time to localization
//! (longest run of frames without a correct match) and area under the
//! precision-recall curve.

use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::window::LocalizationResult;

pub const GROUND_TRUTH_HEADER: &str = "query_index,ref_index";

/// True reference index per query frame, with a correctness radius in frames.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    truth: Vec<Option<usize>>,
    pub tolerance: usize,
}

impl GroundTruth {
    pub fn new(truth: Vec<Option<usize>>, tolerance: usize) -> Self {
        Self { truth, tolerance }
    }

    pub fn identity(n: usize, tolerance: usize) -> Self {
        Self::new((0..n).map(Some).collect(), tolerance)
    }

    pub fn len(&self) -> usize {
        self.truth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.truth.is_empty()
    }

    pub fn get(&self, query_index: usize) -> Option<usize> {
        self.truth.get(query_index).copied().flatten()
    }

    pub fn entries(&self) -> &[Option<usize>] {
        &self.truth
    }

    /// Frames that have a true correspondence.
    pub fn n_with_truth(&self) -> usize {
        self.truth.iter().filter(|t| t.is_some()).count()
    }

    pub fn check_bounds(&self, n_query: usize, n_ref: usize) -> Result<()> {
        if self.truth.len() > n_query {
            return Err(Error::format(format!(
                "ground truth covers {} query frames, traverse has {n_query}",
                self.truth.len()
            )));
        }
        if let Some(r) = self.truth.iter().flatten().find(|&&r| r >= n_ref) {
            return Err(Error::format(format!("ground truth ref index {r} >= {n_ref}")));
        }
        Ok(())
    }

    /// Reads `query_index,ref_index` rows; missing query rows have no truth.
    pub fn read_csv(reader: impl BufRead, n_query: Option<usize>, tolerance: usize) -> Result<Self> {
        let mut lines = reader.lines().enumerate();
        match lines.next() {
            Some((_, Ok(h))) if h.trim_start_matches('\u{feff}').trim_end() == GROUND_TRUTH_HEADER => {}
            Some((_, Ok(h))) => {
                return Err(Error::format(format!(
                    "ground truth header must be {GROUND_TRUTH_HEADER:?}, found {h:?}"
                )))
            }
            Some((_, Err(e))) => return Err(Error::format(e.to_string())),
            None => return Err(Error::format("ground truth file is empty")),
        }
        let mut pairs = Vec::new();
        for (lineno, line) in lines {
            let line = line.map_err(|e| Error::format(e.to_string()))?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let bad = || Error::format(format!("ground truth line {}: {line:?}", lineno + 1));
            let (q, r) = line.split_once(',').ok_or_else(bad)?;
            let q: usize = q.trim().parse().map_err(|_| bad())?;
            let r: usize = r.trim().parse().map_err(|_| bad())?;
            pairs.push((q, r));
        }
        let n = n_query.unwrap_or_else(|| pairs.iter().map(|p| p.0 + 1).max().unwrap_or(0));
        let mut truth = vec![None; n];
        for (q, r) in pairs {
            let slot = truth
                .get_mut(q)
                .ok_or_else(|| Error::format(format!("ground truth query index {q} >= {n}")))?;
            if slot.is_some() {
                return Err(Error::format(format!("duplicate ground truth for query {q}")));
            }
            *slot = Some(r);
        }
        Ok(Self::new(truth, tolerance))
    }

    pub fn load_csv(path: impl AsRef<Path>, n_query: Option<usize>, tolerance: usize) -> Result<Self> {
        let path = path.as_ref();
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(std::io::BufReader::new(f), n_query, tolerance)
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("{GROUND_TRUTH_HEADER}\n");
        for (q, r) in self.truth.iter().enumerate() {
            if let Some(r) = r {
                s.push_str(&format!("{q},{r}\n"));
            }
        }
        s
    }
}

/// A hypothesis is correct when it lies within `tolerance` frames of the truth.
pub fn correctness(result: &LocalizationResult, gt: &GroundTruth) -> bool {
    match (result.best_ref(), gt.get(result.query_index)) {
        (Some(found), Some(truth)) => found.abs_diff(truth) <= gt.tolerance,
        _ => false,
    }
}

/// Longest run of consecutive frames without a correct match. Frames lacking
/// ground truth neither extend nor break a run.
pub fn mtl(results: &[LocalizationResult], gt: &GroundTruth) -> Result<usize> {
    if results.is_empty() {
        return Err(Error::invalid("no localization results"));
    }
    let mut longest = 0;
    let mut run = 0;
    for r in results {
        if gt.get(r.query_index).is_none() {
            continue;
        }
        if correctness(r, gt) {
            run = 0;
        } else {
            run += 1;
            longest = longest.max(run);
        }
    }
    Ok(longest)
}

/// Which per-frame value the acceptance threshold is applied to. Lower is
/// better for both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrMode {
    ThresholdOnScore,
    ThresholdOnSignificance,
}

impl PrMode {
    pub fn name(self) -> &'static str {
        match self {
            PrMode::ThresholdOnScore => "threshold_on_score",
            PrMode::ThresholdOnSignificance => "threshold_on_significance",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
    pub n_accepted: usize,
    pub n_correct: usize,
}

/// Threshold value of a result; significance uses its log so that tails below
/// `f64` range stay ordered.
fn rank_value(r: &LocalizationResult, mode: PrMode) -> Option<f64> {
    r.hypothesis.map(|h| match mode {
        PrMode::ThresholdOnScore => h.score,
        PrMode::ThresholdOnSignificance => h.log_significance,
    })
}

/// One point per distinct threshold value (accepting values `<=` it), in
/// increasing threshold order, preceded by an accept-nothing anchor at
/// precision 1, recall 0.
pub fn pr_curve(results: &[LocalizationResult], gt: &GroundTruth, mode: PrMode) -> Vec<PrPoint> {
    let total = gt.n_with_truth();
    let mut scored: Vec<(f64, bool)> = results
        .iter()
        .filter_map(|r| rank_value(r, mode).map(|v| (v, correctness(r, gt))))
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let recall = |c: usize| if total == 0 { 0.0 } else { c as f64 / total as f64 };
    let first = scored.first().map_or(f64::NEG_INFINITY, |s| s.0);
    let mut points = vec![PrPoint {
        threshold: if first.is_finite() { first - 1.0 } else { f64::NEG_INFINITY },
        precision: 1.0,
        recall: 0.0,
        n_accepted: 0,
        n_correct: 0,
    }];
    let (mut accepted, mut correct) = (0, 0);
    let mut k = 0;
    while k < scored.len() {
        let v = scored[k].0;
        while k < scored.len() && scored[k].0 == v {
            accepted += 1;
            correct += scored[k].1 as usize;
            k += 1;
        }
        points.push(PrPoint {
            threshold: v,
            precision: correct as f64 / accepted as f64,
            recall: recall(correct),
            n_accepted: accepted,
            n_correct: correct,
        });
    }
    points
}

/// Trapezoidal area under `(recall, precision)` points. Points are ordered by
/// recall ascending then precision descending, duplicates dropped; if the
/// lowest recall is positive the curve is extended flat to recall zero.
pub fn auc(points: &[PrPoint]) -> f64 {
    auc_pairs(points.iter().map(|p| (p.recall, p.precision)))
}

pub fn auc_pairs(points: impl IntoIterator<Item = (f64, f64)>) -> f64 {
    let mut pts: Vec<(f64, f64)> = points.into_iter().collect();
    if pts.is_empty() {
        return 0.0;
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    pts.dedup();
    if pts[0].0 > 0.0 {
        pts.insert(0, (0.0, pts[0].1));
    }
    let area: f64 = pts
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) * 0.5)
        .sum();
    area.clamp(0.0, 1.0)
}
