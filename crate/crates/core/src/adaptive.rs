//! Adaptive window length selection: for every query frame, search the window
//! lengths and keep the one whose best hypothesis is the least likely under the
//! fitted score distribution.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::descriptor::DiffOp;
use crate::distribution::{significance_with, Method, SignificanceOptions};
use crate::error::{Error, Result};
use crate::matrix::DifferenceMatrix;
use crate::window::{Hypothesis, LocalizationResult, PrefixField};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveConfig {
    pub l_min: usize,
    pub l_max: usize,
    /// Grid step between `l_min` and `l_max`; both endpoints are always searched.
    pub l_stride: usize,
    pub method: Method,
    pub op: DiffOp,
    #[serde(default)]
    pub significance: SignificanceOptions,
    /// Keep every frame's full p(L) curve.
    #[serde(default)]
    pub keep_curves: bool,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        Self {
            l_min: 10,
            l_max: 500,
            l_stride: 5,
            method: Method::Gaussian,
            op: DiffOp::Sad,
            significance: SignificanceOptions::default(),
            keep_curves: false,
        }
    }
}

impl AdaptiveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.l_min == 0 || self.l_min > self.l_max {
            return Err(Error::invalid(format!(
                "need 1 <= l_min <= l_max, got {}..{}",
                self.l_min, self.l_max
            )));
        }
        if self.l_stride == 0 {
            return Err(Error::invalid("l_stride must be >= 1"));
        }
        Ok(())
    }

    /// `l_min, l_min + stride, ...` below `l_max`, then `l_max`.
    pub fn grid(&self) -> Vec<usize> {
        let mut g: Vec<usize> = (self.l_min..self.l_max).step_by(self.l_stride.max(1)).collect();
        g.push(self.l_max);
        g
    }
}

/// Significance of the best window of length `len` ending at query `i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowSignificance {
    pub window_len: usize,
    pub p: f64,
    pub ln_p: f64,
    pub best_ref: usize,
    pub score: f64,
}

pub fn p_of_l(prefix: &PrefixField, i: usize, len: usize, method: Method) -> Result<WindowSignificance> {
    p_of_l_with(prefix, i, len, method, SignificanceOptions::default(), &mut Vec::new())
}

fn p_of_l_with(
    prefix: &PrefixField,
    i: usize,
    len: usize,
    method: Method,
    opts: SignificanceOptions,
    buf: &mut Vec<f64>,
) -> Result<WindowSignificance> {
    prefix.score_row_into(i, len, buf)?;
    let (p, ln_p, k) = if buf.len() < 2 {
        (1.0, 0.0, 0)
    } else {
        let s = significance_with(buf, method, opts)?;
        (s.p, s.ln_p, s.min_index)
    };
    Ok(WindowSignificance {
        window_len: len,
        p,
        ln_p,
        best_ref: k + len - 1,
        score: buf[k],
    })
}

/// Largest window length usable at query `i`.
pub fn feasible_max(i: usize, n_ref: usize, cfg: &AdaptiveConfig) -> usize {
    cfg.l_max.min(i + 1).min(n_ref)
}

/// One frame's adaptive result, plus the searched curve when requested.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveFrame {
    pub result: LocalizationResult,
    pub curve: Option<Vec<WindowSignificance>>,
}

pub fn adapt_frame(prefix: &PrefixField, i: usize, cfg: &AdaptiveConfig) -> Result<AdaptiveFrame> {
    adapt_frame_with(prefix, i, cfg, &cfg.grid(), &mut Vec::new())
}

fn adapt_frame_with(
    prefix: &PrefixField,
    i: usize,
    cfg: &AdaptiveConfig,
    grid: &[usize],
    buf: &mut Vec<f64>,
) -> Result<AdaptiveFrame> {
    let hi = feasible_max(i, prefix.n_ref(), cfg);
    let mut best: Option<WindowSignificance> = None;
    let mut curve = cfg.keep_curves.then(Vec::new);
    for &len in grid.iter().take_while(|&&l| l <= hi) {
        let w = p_of_l_with(prefix, i, len, cfg.method, cfg.significance, buf)?;
        if best.map_or(true, |b| w.ln_p < b.ln_p) {
            best = Some(w);
        }
        if let Some(c) = curve.as_mut() {
            c.push(w);
        }
    }
    let result = match best {
        None => LocalizationResult::none(i, 0),
        Some(b) => LocalizationResult {
            query_index: i,
            window_len: b.window_len,
            hypothesis: Some(Hypothesis {
                best_ref: b.best_ref,
                score: b.score,
                significance: b.p,
                log_significance: b.ln_p,
            }),
        },
    };
    Ok(AdaptiveFrame { result, curve })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveTrace {
    pub frames: Vec<AdaptiveFrame>,
}

impl AdaptiveTrace {
    pub fn results(&self) -> Vec<LocalizationResult> {
        self.frames.iter().map(|f| f.result).collect()
    }

    /// Chosen window length per frame, `None` before the minimum window fits.
    pub fn chosen_lengths(&self) -> Vec<Option<usize>> {
        self.frames
            .iter()
            .map(|f| f.result.hypothesis.map(|_| f.result.window_len))
            .collect()
    }
}

pub fn run_adaptive(m: &DifferenceMatrix, cfg: &AdaptiveConfig) -> Result<AdaptiveTrace> {
    cfg.validate()?;
    if m.n_query() == 0 {
        return Err(Error::invalid("difference matrix has no query rows"));
    }
    run_adaptive_prefix(&PrefixField::build(m), cfg)
}

pub fn run_adaptive_prefix(prefix: &PrefixField, cfg: &AdaptiveConfig) -> Result<AdaptiveTrace> {
    cfg.validate()?;
    let grid = cfg.grid();
    let frames = (0..prefix.n_rows())
        .into_par_iter()
        .map_init(Vec::new, |buf, i| adapt_frame_with(prefix, i, cfg, &grid, buf))
        .collect::<Result<Vec<_>>>()?;
    Ok(AdaptiveTrace { frames })
}

/// Online localizer: feed one difference-matrix row per new query frame.
#[derive(Debug, Clone)]
pub struct StreamingLocalizer {
    cfg: AdaptiveConfig,
    grid: Vec<usize>,
    prefix: PrefixField,
    buf: Vec<f64>,
}

impl StreamingLocalizer {
    pub fn new(n_ref: usize, cfg: AdaptiveConfig) -> Result<Self> {
        cfg.validate()?;
        if n_ref == 0 {
            return Err(Error::invalid("reference traverse is empty"));
        }
        Ok(Self {
            grid: cfg.grid(),
            cfg,
            prefix: PrefixField::new(n_ref),
            buf: Vec::new(),
        })
    }

    pub fn push_row(&mut self, d_row: &[f64]) -> Result<AdaptiveFrame> {
        if d_row.len() != self.prefix.n_ref() {
            return Err(Error::DimensionMismatch {
                expected: self.prefix.n_ref(),
                got: d_row.len(),
            });
        }
        self.prefix.push_row(d_row);
        let i = self.prefix.n_rows() - 1;
        adapt_frame_with(&self.prefix, i, &self.cfg, &self.grid, &mut self.buf)
    }
}
