//! Seeded synthetic traverses standing in for recorded datasets.
//!
//! The reference traverse is a temporally correlated walk through descriptor
//! space whose amplitude wanders slowly, so some stretches of route are bland
//! and others distinctive, on top of a slower scene component shared by
//! neighbouring places. The query revisits the same route at a varying speed (so frame
//! separation drifts), with independent sensor noise, and optionally in a
//! segment-shuffled order.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::descriptor::Descriptor;
use crate::error::{Error, Result};
use crate::eval::GroundTruth;
use crate::rng::substream;
use crate::shuffle::{shuffle_traverse, Shuffle, ShuffleSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    /// Dense, patch-normalized-image-like vectors.
    Image,
    /// Sparse access-point signal strengths.
    Wifi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_ref: usize,
    /// Dense dimension for images, access point count for Wi-Fi.
    pub descriptor_dim: usize,
    pub modality: Modality,
    /// Query noise standard deviation (descriptor units; dBm for Wi-Fi).
    pub noise_sigma: f64,
    /// Relative variation of the query's frame-to-frame advance along the route.
    pub speed_drift: f64,
    /// Reference frames over which appearance decorrelates.
    pub correlation_len: f64,
    /// Standard deviation of the log amplitude of place appearance. Zero
    /// makes every stretch of route equally distinctive.
    pub salience_spread: f64,
    /// Frames over which distinctiveness varies.
    pub salience_len: f64,
    /// Scale of the slowly varying scene appearance shared by nearby places.
    pub scene_spread: f64,
    /// Frames over which the scene appearance changes.
    pub scene_len: f64,
    /// Mean access points visible per frame (Wi-Fi only).
    pub wifi_mean_visible: f64,
    pub shuffle: Option<ShuffleSpec>,
    pub seed: u64,
}

impl SynthSpec {
    pub fn image(n_ref: usize, seed: u64) -> Self {
        Self {
            n_ref,
            descriptor_dim: 64,
            modality: Modality::Image,
            noise_sigma: 4.33,
            speed_drift: 0.04,
            correlation_len: 0.8,
            salience_spread: 0.3,
            salience_len: 1000.0,
            scene_spread: 0.0,
            scene_len: 300.0,
            wifi_mean_visible: 12.6,
            shuffle: None,
            seed,
        }
    }

    pub fn wifi(n_ref: usize, seed: u64) -> Self {
        Self {
            descriptor_dim: 709,
            modality: Modality::Wifi,
            noise_sigma: 6.0,
            ..Self::image(n_ref, seed)
        }
    }

    pub fn shuffled(mut self) -> Self {
        self.shuffle = Some(ShuffleSpec {
            seed: self.seed,
            ..ShuffleSpec::default()
        });
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_ref < 2 {
            return Err(Error::invalid("n_ref must be >= 2"));
        }
        if self.descriptor_dim == 0 {
            return Err(Error::invalid("descriptor_dim must be >= 1"));
        }
        if !(self.noise_sigma >= 0.0) || !(self.speed_drift >= 0.0) || !(self.speed_drift < 1.0) {
            return Err(Error::invalid(
                "noise_sigma must be >= 0 and speed_drift in [0, 1)",
            ));
        }
        if !(self.correlation_len > 0.0) || !(self.salience_len > 0.0) || !(self.scene_len > 0.0) {
            return Err(Error::invalid(
                "correlation_len, salience_len and scene_len must be positive",
            ));
        }
        for (name, v) in [("salience_spread", self.salience_spread), ("scene_spread", self.scene_spread)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be finite and >= 0")));
            }
        }
        if self.modality == Modality::Wifi
            && !(self.wifi_mean_visible > 0.0 && self.wifi_mean_visible < self.descriptor_dim as f64)
        {
            return Err(Error::invalid("wifi_mean_visible must lie in (0, descriptor_dim)"));
        }
        if let Some(s) = &self.shuffle {
            if !(s.min_frac > 0.0 && s.min_frac <= s.max_frac && s.max_frac < 1.0) {
                return Err(Error::invalid("shuffle fractions must satisfy 0 < min <= max < 1"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub reference: Vec<Descriptor>,
    pub query: Vec<Descriptor>,
    pub ground_truth: GroundTruth,
    pub shuffle: Option<Shuffle>,
}

pub const DEFAULT_TOLERANCE: usize = 5;

// substream ids
const S_ROUTE: u64 = 1;
const S_SPEED: u64 = 2;
const S_NOISE: u64 = 3;

fn normal(rng: &mut impl Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Query positions along the reference route, `0 ..= n_ref-1`, one per query
/// frame. Frame advance is `1 + drift * u` with `u` a smooth unit-variance
/// process, rescaled so the query spans the whole route.
fn query_positions(spec: &SynthSpec) -> Vec<f64> {
    let n = spec.n_ref;
    let mut rng = substream(spec.seed, S_SPEED);
    let rho: f64 = (-1.0f64 / 25.0).exp();
    let innov = (1.0 - rho * rho).sqrt();
    let mut u = normal(&mut rng);
    let mut pos = Vec::with_capacity(n);
    let mut t = 0.0;
    for _ in 0..n {
        pos.push(t);
        u = rho * u + innov * normal(&mut rng);
        t += (1.0 + spec.speed_drift * u.clamp(-2.5, 2.5)).max(0.05);
    }
    let span = pos[n - 1];
    let scale = if span > 0.0 { (n - 1) as f64 / span } else { 0.0 };
    pos.iter_mut().for_each(|p| *p = (*p * scale).min((n - 1) as f64));
    pos
}

/// Unit-variance AR(1) with correlation time `len` frames.
struct Ar1 {
    rho: f64,
    innov: f64,
}

impl Ar1 {
    fn new(len: f64) -> Self {
        let rho = (-1.0 / len).exp();
        Self { rho, innov: (1.0 - rho * rho).sqrt() }
    }

    fn step(&self, x: f64, rng: &mut impl Rng) -> f64 {
        self.rho * x + self.innov * normal(rng)
    }
}

fn round_f32(x: f64) -> f64 {
    x as f32 as f64
}

pub fn synth_generate(spec: &SynthSpec) -> Result<SynthDataset> {
    spec.validate()?;
    let positions = query_positions(spec);
    let (reference, query) = match spec.modality {
        Modality::Image => image_like(spec, &positions)?,
        Modality::Wifi => wifi_like(spec, &positions)?,
    };
    let truth: Vec<Option<usize>> = positions.iter().map(|&p| Some(p.round() as usize)).collect();
    let mut ground_truth = GroundTruth::new(truth, DEFAULT_TOLERANCE);
    let mut query = query;
    let shuffle = match &spec.shuffle {
        Some(s) => {
            let sh = shuffle_traverse(query.len(), s)?;
            query = sh.apply(&query);
            ground_truth = GroundTruth::new(sh.apply(ground_truth.entries()), DEFAULT_TOLERANCE);
            Some(sh)
        }
        None => None,
    };
    Ok(SynthDataset {
        reference,
        query,
        ground_truth,
        shuffle,
    })
}

fn image_like(spec: &SynthSpec, positions: &[f64]) -> Result<(Vec<Descriptor>, Vec<Descriptor>)> {
    let (n, dim) = (spec.n_ref, spec.descriptor_dim);
    let mut rng = substream(spec.seed, S_ROUTE);
    let walk = Ar1::new(spec.correlation_len);
    let salience = Ar1::new(spec.salience_len);
    let drift = Ar1::new(spec.scene_len);
    let mut state: Vec<f64> = (0..dim).map(|_| normal(&mut rng)).collect();
    let mut scene: Vec<f64> = (0..dim).map(|_| normal(&mut rng)).collect();
    let mut level = normal(&mut rng);
    let mut route: Vec<Vec<f64>> = Vec::with_capacity(n);
    for _ in 0..n {
        let amp = (spec.salience_spread * level).exp();
        route.push(
            state
                .iter()
                .zip(&scene)
                .map(|(&x, &g)| round_f32(amp * x + spec.scene_spread * g))
                .collect(),
        );
        state.iter_mut().for_each(|x| *x = walk.step(*x, &mut rng));
        scene.iter_mut().for_each(|g| *g = drift.step(*g, &mut rng));
        level = salience.step(level, &mut rng);
    }
    let mut noise = substream(spec.seed, S_NOISE);
    let query = positions
        .iter()
        .map(|&p| {
            let lo = p.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            let w = p - lo as f64;
            let v = (0..dim)
                .map(|k| {
                    let x = route[lo][k] * (1.0 - w) + route[hi][k] * w;
                    round_f32(x + spec.noise_sigma * normal(&mut noise))
                })
                .collect();
            Descriptor::dense(v)
        })
        .collect::<Result<Vec<_>>>()?;
    let reference = route
        .into_iter()
        .map(Descriptor::dense)
        .collect::<Result<Vec<_>>>()?;
    Ok((reference, query))
}

/// One access point's coverage along the route: visible within `half_width`
/// frames of `center`, strongest at the center.
struct AccessPoint {
    center: f64,
    half_width: f64,
    peak: f64,
}

const WIFI_FLOOR_DBM: f64 = -95.0;

impl AccessPoint {
    fn rssi(&self, pos: f64) -> Option<f64> {
        let r = (pos - self.center).abs() / self.half_width;
        (r < 1.0).then(|| self.peak + (WIFI_FLOOR_DBM - self.peak) * r)
    }
}

fn wifi_like(spec: &SynthSpec, positions: &[f64]) -> Result<(Vec<Descriptor>, Vec<Descriptor>)> {
    let (n, aps) = (spec.n_ref, spec.descriptor_dim);
    let mut rng = substream(spec.seed, S_ROUTE);
    // mean visible = aps * 2h / (n + 2h)
    let h = spec.wifi_mean_visible * n as f64 / (2.0 * (aps as f64 - spec.wifi_mean_visible));
    let points: Vec<AccessPoint> = (0..aps)
        .map(|_| AccessPoint {
            center: rng.gen_range(-h..n as f64 + h),
            half_width: h * rng.gen_range(0.5..1.5),
            peak: rng.gen_range(-55.0..-30.0),
        })
        .collect();
    let frame = |pos: f64, mut jitter: Option<&mut dyn FnMut() -> f64>| {
        let entries = points.iter().enumerate().filter_map(|(k, ap)| {
            ap.rssi(pos).map(|r| {
                let noisy = match jitter.as_mut() {
                    Some(f) => r + f(),
                    None => r,
                };
                (k as u32, round_f32(noisy.min(-1.0)))
            })
        });
        Descriptor::sparse(aps, entries.collect::<Vec<_>>())
    };
    let reference = (0..n)
        .map(|j| frame(j as f64, None))
        .collect::<Result<Vec<_>>>()?;
    let mut noise = substream(spec.seed, S_NOISE);
    let sigma = spec.noise_sigma;
    let query = positions
        .iter()
        .map(|&p| {
            let mut jitter = || sigma * normal(&mut noise);
            frame(p, Some(&mut jitter))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((reference, query))
}
