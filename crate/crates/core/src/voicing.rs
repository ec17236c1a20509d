//! Per-utterance voiced/unvoiced classification without a training phase.
//!
//! Frames below a power threshold are marked silent. Every other frame gets
//! five features, each mapped to `[-1, 1]` with voiced frames leaning
//! towards `+1`. Two-class k-means seeded at the `-1` and `+1` corners
//! labels the utterance; a Fisher discriminant fitted to those labels gives
//! the final linear decision `w^T v > 0`.

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::acf::{normalized_correlation, LagBounds};
use crate::error::{Error, Result};
use crate::signal::Frame;
use crate::spectrum::SpectrumAnalyzer;

/// Number of voicing features.
pub const D: usize = 5;

type Vector = SVector<f64, D>;
type Matrix = SMatrix<f64, D, D>;

const KMEANS_MAX_ITER: usize = 100;
const SCATTER_REGULARIZATION: f64 = 1e-6;

/// Voicing-related settings from the pipeline configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VoicingConfig {
    /// Silence threshold as a fraction of the mean frame power.
    pub silence_ratio: f64,
    pub preemph: f64,
    pub lowband_cutoff_hz: f64,
}

impl Default for VoicingConfig {
    fn default() -> Self {
        Self {
            silence_ratio: 0.3,
            preemph: 0.97,
            lowband_cutoff_hz: 1000.0,
        }
    }
}

impl VoicingConfig {
    pub fn validate(&self, sample_rate: u32) -> Result<()> {
        if !(self.silence_ratio.is_finite() && self.silence_ratio >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "silence_ratio must be non-negative, got {}",
                self.silence_ratio
            )));
        }
        if !self.preemph.is_finite() {
            return Err(Error::InvalidConfig("preemph must be finite".into()));
        }
        let nyquist = f64::from(sample_rate) / 2.0;
        if !(self.lowband_cutoff_hz > 0.0 && self.lowband_cutoff_hz < nyquist) {
            return Err(Error::InvalidConfig(format!(
                "lowband_cutoff_hz must lie in (0, {nyquist}), got {}",
                self.lowband_cutoff_hz
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VoicingLabel {
    Silent,
    Unvoiced,
    Voiced,
}

impl VoicingLabel {
    pub fn is_voiced(self) -> bool {
        self == VoicingLabel::Voiced
    }
}

/// Feature order: periodic similarity, zero-crossing score, spectrum tilt,
/// pre-emphasized energy ratio, low-band ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector {
    pub v: [f64; D],
    pub is_silent: bool,
}

impl FeatureVector {
    pub const SILENT: FeatureVector = FeatureVector {
        v: [-1.0; D],
        is_silent: true,
    };

    fn vector(&self) -> Vector {
        Vector::from(self.v)
    }
}

/// Result of two-class k-means.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    /// Class means; index 0 is the unvoiced class, 1 the voiced class.
    pub means: [[f64; D]; 2],
    pub labels: Vec<usize>,
    /// Within-class scatter of the final assignment.
    pub scatter: [[f64; D]; D],
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VoicingTrack {
    pub labels: Vec<VoicingLabel>,
    /// Discriminant score `w^T v(k)` per frame.
    pub scores: Vec<f64>,
}

impl VoicingTrack {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn voiced_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_voiced()).count()
    }
}

/// Flags frames whose power is below `ratio` times the mean frame power.
/// Frames with exactly zero power are always silent.
pub fn power_gate(frames: &[Frame], ratio: f64) -> Vec<bool> {
    if frames.is_empty() {
        return Vec::new();
    }
    let mean = frames.iter().map(|f| f.power).sum::<f64>() / frames.len() as f64;
    let threshold = ratio * mean;
    frames.iter().map(|f| f.power < threshold || f.power == 0.0).collect()
}

/// Everything the feature extractor needs besides the frame.
#[derive(Debug, Clone)]
pub struct FeatureExtractor {
    pub sample_rate: u32,
    pub bounds: LagBounds,
    pub preemph: f64,
    pub lowband_cutoff_hz: f64,
    analyzer: SpectrumAnalyzer,
}

impl FeatureExtractor {
    pub fn new(sample_rate: u32, bounds: LagBounds, cfg: &VoicingConfig, analyzer: SpectrumAnalyzer) -> Self {
        Self {
            sample_rate,
            bounds,
            preemph: cfg.preemph,
            lowband_cutoff_hz: cfg.lowband_cutoff_hz,
            analyzer,
        }
    }

    pub fn extract(&self, frame: &Frame, silent: bool) -> FeatureVector {
        let x = &frame.samples;
        if silent || x.iter().all(|&s| s == 0.0) {
            return FeatureVector {
                v: [-1.0; D],
                is_silent: silent,
            };
        }
        let v = [
            periodic_similarity(x, &self.bounds),
            zcr_score(x),
            spectrum_tilt(x),
            preemph_energy_ratio(x, self.preemph),
            self.lowband_ratio(x),
        ];
        FeatureVector {
            v: v.map(|c| if c.is_finite() { c.clamp(-1.0, 1.0) } else { -1.0 }),
            is_silent: false,
        }
    }

    /// `2 * E_low / E_total - 1` from the windowed power spectrum.
    pub fn lowband_ratio(&self, x: &[f64]) -> f64 {
        let power = self.analyzer.power(x);
        let bin_hz = f64::from(self.sample_rate) / self.analyzer.fft_size() as f64;
        let total: f64 = power.iter().sum();
        if total <= 0.0 {
            return -1.0;
        }
        let low: f64 = power
            .iter()
            .enumerate()
            .filter(|(m, _)| (*m as f64) * bin_hz < self.lowband_cutoff_hz)
            .map(|(_, p)| p)
            .sum();
        (2.0 * low / total - 1.0).clamp(-1.0, 1.0)
    }
}

/// `2 * r_max - 1`, where `r_max` is the peak normalized ACF of the
/// mean-removed frame over the lag range.
pub fn periodic_similarity(x: &[f64], bounds: &LagBounds) -> f64 {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let centered: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let r_max = bounds
        .lags()
        .filter(|&l| l < centered.len())
        .map(|l| normalized_correlation(&centered[..centered.len() - l], &centered[l..]))
        .fold(-1.0, f64::max);
    (2.0 * r_max - 1.0).clamp(-1.0, 1.0)
}

/// `1 - 2 * crossings / (N - 1)`.
pub fn zcr_score(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return -1.0;
    }
    let crossings = x.windows(2).filter(|w| w[0] * w[1] < 0.0).count();
    1.0 - 2.0 * crossings as f64 / (x.len() - 1) as f64
}

/// Lag-1 normalized autocorrelation `r(1) / r(0)`.
pub fn spectrum_tilt(x: &[f64]) -> f64 {
    let r0: f64 = x.iter().map(|v| v * v).sum();
    if r0 <= 0.0 {
        return -1.0;
    }
    let r1: f64 = x.windows(2).map(|w| w[0] * w[1]).sum();
    (r1 / r0).clamp(-1.0, 1.0)
}

/// `1 - 2 * E[x(n) - c x(n-1)] / E[x(n)]`.
pub fn preemph_energy_ratio(x: &[f64], coeff: f64) -> f64 {
    let energy: f64 = x.iter().map(|v| v * v).sum();
    if energy <= 0.0 {
        return -1.0;
    }
    let emphasized: f64 = x[0] * x[0] + x.windows(2).map(|w| (w[1] - coeff * w[0]).powi(2)).sum::<f64>();
    (1.0 - 2.0 * emphasized / energy).clamp(-1.0, 1.0)
}

/// Lloyd's algorithm with the class-0 mean seeded at `[-1; D]` and class 1
/// at `[1; D]`. Stops when no label changes or after 100 iterations. A class
/// that loses all members keeps its previous mean; a class that is empty at
/// the end is an error.
pub fn kmeans_two_class(features: &[FeatureVector]) -> Result<ClusterModel> {
    let points: Vec<Vector> = features.iter().map(FeatureVector::vector).collect();
    let mut means = [Vector::repeat(-1.0), Vector::repeat(1.0)];
    let mut labels = vec![usize::MAX; points.len()];
    let mut iterations = 0;

    while iterations < KMEANS_MAX_ITER {
        iterations += 1;
        let mut changed = false;
        for (label, p) in labels.iter_mut().zip(&points) {
            let d0 = (p - means[0]).norm_squared();
            let d1 = (p - means[1]).norm_squared();
            let new = usize::from(d1 < d0);
            if *label != new {
                *label = new;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        for (c, mean) in means.iter_mut().enumerate() {
            let (sum, count) = labels
                .iter()
                .zip(&points)
                .filter(|(l, _)| **l == c)
                .fold((Vector::zeros(), 0usize), |(s, n), (_, p)| (s + p, n + 1));
            if count > 0 {
                *mean = sum / count as f64;
            }
        }
    }

    for c in 0..2 {
        if !labels.contains(&c) {
            return Err(Error::DegenerateClassification { empty_class: c });
        }
    }

    let mut scatter = Matrix::zeros();
    for (l, p) in labels.iter().zip(&points) {
        let d = p - means[*l];
        scatter += d * d.transpose();
    }

    Ok(ClusterModel {
        means: [means[0].into(), means[1].into()],
        labels,
        scatter: scatter.transpose().into(),
        iterations,
    })
}

/// Fisher direction `S_w^{-1} (m0 - m1)`, oriented so the voiced mean scores
/// higher and scaled to unit length. `S_w` is regularized by
/// `1e-6 * trace(S_w) / D` on the diagonal before inversion.
pub fn lda_weight(model: &ClusterModel) -> Result<[f64; D]> {
    let scatter = Matrix::from(model.scatter).transpose();
    let reg = SCATTER_REGULARIZATION * scatter.trace() / D as f64;
    let regularized = scatter + Matrix::identity() * reg;
    let m0 = Vector::from(model.means[0]);
    let m1 = Vector::from(model.means[1]);
    let w = regularized
        .lu()
        .solve(&(m0 - m1))
        .filter(|w| w.iter().all(|c| c.is_finite()))
        .ok_or(Error::SingularScatter)?;
    let w = if w.dot(&m1) < w.dot(&m0) { -w } else { w };
    let norm = w.norm();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::SingularScatter);
    }
    Ok((w / norm).into())
}

/// Applies `w^T v > 0` per frame. Silent frames stay silent; a score of
/// exactly zero is unvoiced.
pub fn classify(features: &[FeatureVector], w: &[f64; D]) -> VoicingTrack {
    let (labels, scores) = features
        .iter()
        .map(|f| {
            let score: f64 = f.v.iter().zip(w).map(|(a, b)| a * b).sum();
            let label = if f.is_silent {
                VoicingLabel::Silent
            } else if score > 0.0 {
                VoicingLabel::Voiced
            } else {
                VoicingLabel::Unvoiced
            };
            (label, score)
        })
        .unzip();
    VoicingTrack { labels, scores }
}
