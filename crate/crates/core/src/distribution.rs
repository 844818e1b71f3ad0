//! Approximations of the window-score distribution and the significance of the
//! best (lowest) score under them.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normal::{std_normal_cdf, std_normal_ln_cdf};

/// Scale factor making the MAD a consistent estimator of sigma for normal data.
pub const MAD_SCALE: f64 = 1.4826;

/// Expectation-maximization iterations per mixture fit.
pub const EM_ITERATIONS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Gaussian,
    RobustGaussian,
    Gmm2,
    Gmm3,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Gaussian,
        Method::RobustGaussian,
        Method::Gmm2,
        Method::Gmm3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Gaussian => "gaussian",
            Method::RobustGaussian => "robust",
            Method::Gmm2 => "gmm2",
            Method::Gmm3 => "gmm3",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(Method::Gaussian),
            "robust" | "robust_gaussian" | "robust-gaussian" => Ok(Method::RobustGaussian),
            "gmm2" => Ok(Method::Gmm2),
            "gmm3" => Ok(Method::Gmm3),
            other => Err(Error::invalid(format!("unknown approximation method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Component {
    pub weight: f64,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistributionFit {
    pub method: Method,
    pub components: Vec<Component>,
    /// The scale estimate collapsed below the floor; the fit carries no evidence.
    pub degenerate: bool,
}

/// Smallest admissible component scale at location `mean`.
pub fn sigma_floor(mean: f64) -> f64 {
    1e-9 * mean.abs().max(1.0)
}

fn single(method: Method, mean: f64, raw_std: f64) -> DistributionFit {
    let floor = sigma_floor(mean);
    DistributionFit {
        method,
        components: vec![Component {
            weight: 1.0,
            mean,
            std: raw_std.max(floor),
        }],
        degenerate: !(raw_std >= floor),
    }
}

fn require(scores: &[f64], n: usize) -> Result<()> {
    if scores.len() < n {
        return Err(Error::invalid(format!(
            "need at least {n} scores, got {}",
            scores.len()
        )));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::invalid("non-finite score"));
    }
    Ok(())
}

fn mean_and_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn fit_gaussian(scores: &[f64]) -> Result<DistributionFit> {
    require(scores, 2)?;
    let (mean, std) = mean_and_std(scores);
    Ok(single(Method::Gaussian, mean, std))
}

/// Median of `buf`, reordering it. Even lengths average the two middle values.
fn median_in_place(buf: &mut [f64]) -> f64 {
    let n = buf.len();
    let mid = n / 2;
    let (lower, m, _) = buf.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *m;
    if n % 2 == 1 {
        upper
    } else {
        let below = lower.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (below + upper)
    }
}

pub fn median(xs: &[f64]) -> f64 {
    median_in_place(&mut xs.to_vec())
}

/// Median and the (unscaled) median absolute deviation.
pub fn median_mad(xs: &[f64]) -> (f64, f64) {
    let mut buf = xs.to_vec();
    let med = median_in_place(&mut buf);
    buf.iter_mut().for_each(|x| *x = (*x - med).abs());
    (med, median_in_place(&mut buf))
}

pub fn fit_robust_gaussian(scores: &[f64]) -> Result<DistributionFit> {
    require(scores, 2)?;
    let (med, mad) = median_mad(scores);
    Ok(single(Method::RobustGaussian, med, MAD_SCALE * mad))
}

/// Linear-interpolation quantile of sorted data.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Log-likelihood of the data under the mixture before each EM iteration
/// and after the last one (`EM_ITERATIONS + 1` values).
#[derive(Debug, Clone, PartialEq)]
pub struct EmTrace {
    pub log_likelihood: Vec<f64>,
}

pub fn fit_gmm(scores: &[f64], k: usize) -> Result<DistributionFit> {
    gmm(scores, k, false).map(|(fit, _)| fit)
}

/// One-dimensional EM with a fixed number of iterations. Means start at the
/// quartiles (25/75, or 25/50/75 for three components), every scale at the
/// global standard deviation, weights uniform. With fewer than `k + 1`
/// distinct values the fit falls back to a single Gaussian.
pub fn fit_gmm_traced(scores: &[f64], k: usize) -> Result<(DistributionFit, Option<EmTrace>)> {
    gmm(scores, k, true)
}

fn gmm(scores: &[f64], k: usize, traced: bool) -> Result<(DistributionFit, Option<EmTrace>)> {
    let method = match k {
        2 => Method::Gmm2,
        3 => Method::Gmm3,
        _ => return Err(Error::invalid(format!("mixture size must be 2 or 3, got {k}"))),
    };
    require(scores, 2)?;
    let mut sorted = scores.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let distinct = 1 + sorted.windows(2).filter(|w| w[0] != w[1]).count();
    let (mean, std) = mean_and_std(scores);
    if distinct < k + 1 {
        log::debug!("{distinct} distinct scores, too few for a {k}-component mixture; using a single Gaussian");
        let mut fit = single(method, mean, std);
        fit.method = method;
        return Ok((fit, None));
    }
    let quantiles: &[f64] = if k == 2 { &[0.25, 0.75] } else { &[0.25, 0.5, 0.75] };
    let mut comps: Vec<Component> = quantiles
        .iter()
        .map(|&q| {
            let m = quantile_sorted(&sorted, q);
            Component {
                weight: 1.0 / k as f64,
                mean: m,
                std: std.max(sigma_floor(m)),
            }
        })
        .collect();

    // centered data keeps the second moments well conditioned
    let xs: Vec<f64> = scores.iter().map(|x| x - mean).collect();
    comps.iter_mut().for_each(|c| c.mean -= mean);
    let mut trace = Vec::with_capacity(EM_ITERATIONS + 1);
    for _ in 0..EM_ITERATIONS {
        let (stats, ll) = em_pass(&xs, &comps, traced);
        if traced {
            trace.push(ll);
        }
        m_step(&mut comps, &stats, xs.len() as f64, mean);
    }
    if traced {
        trace.push(em_pass(&xs, &comps, true).1);
    }
    comps.iter_mut().for_each(|c| c.mean += mean);
    Ok((
        DistributionFit {
            method,
            components: comps,
            degenerate: false,
        },
        traced.then_some(EmTrace {
            log_likelihood: trace,
        }),
    ))
}

const LN_SQRT_2PI: f64 = 0.918938533204672741780329736406;

/// Responsibility-weighted count, sum and sum of squares per component.
#[derive(Clone, Copy, Default)]
struct Moments {
    n: f64,
    sx: f64,
    sxx: f64,
}

const MAX_K: usize = 3;

/// One E-step folded into the sufficient statistics of the next M-step.
/// Returns the statistics and, when asked, the data log-likelihood under
/// `comps`.
fn em_pass(xs: &[f64], comps: &[Component], want_ll: bool) -> ([Moments; MAX_K], f64) {
    let k = comps.len();
    let mut consts = [0.0; MAX_K];
    let mut inv = [0.0; MAX_K];
    let mut mu = [0.0; MAX_K];
    for (c, comp) in comps.iter().enumerate() {
        consts[c] = comp.weight.ln() - comp.std.ln() - LN_SQRT_2PI;
        inv[c] = 1.0 / comp.std;
        mu[c] = comp.mean;
    }
    let mut stats = [Moments::default(); MAX_K];
    let mut ll = 0.0;
    let mut r = [0.0; MAX_K];
    for &x in xs {
        let mut max = f64::NEG_INFINITY;
        for c in 0..k {
            let z = (x - mu[c]) * inv[c];
            r[c] = consts[c] - 0.5 * z * z;
            max = max.max(r[c]);
        }
        let mut total = 0.0;
        for v in r[..k].iter_mut() {
            *v = (*v - max).exp();
            total += *v;
        }
        let scale = 1.0 / total;
        for c in 0..k {
            let w = r[c] * scale;
            stats[c].n += w;
            stats[c].sx += w * x;
            stats[c].sxx += w * x * x;
        }
        if want_ll {
            ll += max + total.ln();
        }
    }
    (stats, ll)
}

/// `offset` is what was subtracted from the data; it only feeds the scale floor.
fn m_step(comps: &mut [Component], stats: &[Moments; MAX_K], n: f64, offset: f64) {
    for (comp, st) in comps.iter_mut().zip(stats) {
        comp.weight = st.n / n;
        if st.n <= 0.0 {
            // empty component keeps its location and scale at zero weight
            continue;
        }
        let mean = st.sx / st.n;
        let var = (st.sxx / st.n - mean * mean).max(0.0);
        comp.mean = mean;
        comp.std = var.sqrt().max(sigma_floor(mean + offset));
    }
    let total: f64 = comps.iter().map(|c| c.weight).sum();
    comps.iter_mut().for_each(|c| c.weight /= total);
}

pub fn fit(scores: &[f64], method: Method) -> Result<DistributionFit> {
    match method {
        Method::Gaussian => fit_gaussian(scores),
        Method::RobustGaussian => fit_robust_gaussian(scores),
        Method::Gmm2 => fit_gmm(scores, 2),
        Method::Gmm3 => fit_gmm(scores, 3),
    }
}

/// `Phi((x - mean) / std)`.
pub fn normal_cdf(x: f64, mean: f64, std: f64) -> Result<f64> {
    if !(std > 0.0) {
        return Err(Error::invalid(format!("scale must be positive, got {std}")));
    }
    Ok(std_normal_cdf((x - mean) / std))
}

impl DistributionFit {
    pub fn cdf(&self, x: f64) -> f64 {
        self.components
            .iter()
            .map(|c| c.weight * std_normal_cdf((x - c.mean) / c.std))
            .sum::<f64>()
            .clamp(0.0, 1.0)
    }

    /// Natural log of [`cdf`](Self::cdf), without underflow in the lower tail.
    pub fn ln_cdf(&self, x: f64) -> f64 {
        let terms: Vec<f64> = self
            .components
            .iter()
            .filter(|c| c.weight > 0.0)
            .map(|c| c.weight.ln() + std_normal_ln_cdf((x - c.mean) / c.std))
            .collect();
        let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return max;
        }
        (max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()).min(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Significance {
    pub p: f64,
    pub ln_p: f64,
    /// Index of the first minimum score.
    pub min_index: usize,
    pub min_score: f64,
}

impl Significance {
    fn none(min_index: usize, min_score: f64) -> Self {
        Self {
            p: 1.0,
            ln_p: 0.0,
            min_index,
            min_score,
        }
    }
}

/// How the fit treats the best score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SignificanceOptions {
    /// Fit the distribution without the minimum score itself.
    pub exclude_best: bool,
}

pub fn significance(scores: &[f64], method: Method) -> Result<Significance> {
    significance_with(scores, method, SignificanceOptions::default())
}

/// Probability of drawing a score at or below the minimum from the fitted
/// approximation. Degenerate fits report `p = 1`.
pub fn significance_with(
    scores: &[f64],
    method: Method,
    opts: SignificanceOptions,
) -> Result<Significance> {
    require(scores, 2)?;
    let (min_index, min_score) = scores
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal).then(a.0.cmp(&b.0)))
        .expect("non-empty");
    let fit = if opts.exclude_best {
        if scores.len() < 3 {
            return Ok(Significance::none(min_index, min_score));
        }
        let rest: Vec<f64> = scores
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != min_index)
            .map(|(_, &s)| s)
            .collect();
        fit_checked(&rest, method)?
    } else {
        fit_checked(scores, method)?
    };
    if fit.degenerate {
        return Ok(Significance::none(min_index, min_score));
    }
    let ln_p = fit.ln_cdf(min_score);
    Ok(Significance {
        p: ln_p.exp(),
        ln_p,
        min_index,
        min_score,
    })
}

fn fit_checked(scores: &[f64], method: Method) -> Result<DistributionFit> {
    let f = fit(scores, method)?;
    debug_assert!((f.components.iter().map(|c| c.weight).sum::<f64>() - 1.0).abs() < 1e-9);
    Ok(f)
}
