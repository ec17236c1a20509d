//! Spectro-temporal autocorrelation pitch estimation.
//!
//! Each voiced frame gets a normalized time-domain ACF `R_t(l)` and a
//! spectral ACF `R_s(l)` over the same lag range. The spectral ACF
//! correlates the magnitude spectrum with itself shifted by the harmonic
//! spacing that lag `l` implies, `round(fft_size / l)` bins, normalized by
//! the zero-shift spectral energy. The two are blended as
//! `alpha_r * R_t + (1 - alpha_r) * R_s` and the argmax lag is the frame's
//! period observation.

use crate::error::{Error, Result};
use crate::signal::Frame;
use crate::spectrum::SpectrumAnalyzer;
use crate::voicing::{VoicingLabel, VoicingTrack};

/// Inclusive range of candidate pitch periods in samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LagBounds {
    pub n_low: usize,
    pub n_high: usize,
}

impl LagBounds {
    /// `n_low = max(1, floor(fs / f_max))`, `n_high = min(ceil(fs / f_min), frame_length)`.
    pub fn new(sample_rate: u32, f_min: f64, f_max: f64, frame_length: usize) -> Result<Self> {
        if !(f_min.is_finite() && f_max.is_finite() && f_min > 0.0 && f_min < f_max) {
            return Err(Error::InvalidConfig(format!(
                "pitch range must satisfy 0 < f_min < f_max, got [{f_min}, {f_max}]"
            )));
        }
        let fs = f64::from(sample_rate);
        let n_low = ((fs / f_max).floor() as usize).max(1);
        let n_high = ((fs / f_min).ceil() as usize).min(frame_length);
        if n_low >= n_high {
            return Err(Error::InvalidConfig(format!(
                "empty lag range [{n_low}, {n_high}] for fs={fs}, f_min={f_min}, f_max={f_max}, N={frame_length}"
            )));
        }
        Ok(Self { n_low, n_high })
    }

    pub fn len(&self) -> usize {
        self.n_high - self.n_low + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn lags(&self) -> std::ops::RangeInclusive<usize> {
        self.n_low..=self.n_high
    }

    pub fn is_boundary(&self, lag: usize) -> bool {
        lag == self.n_low || lag == self.n_high
    }
}

/// Period estimate for one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PitchObservation {
    pub frame: usize,
    pub lag: usize,
    /// Value of the blended ACF at `lag`.
    pub peak: f64,
}

/// `sum(a*b) / sqrt(sum(a^2) * sum(b^2))`, or 0 when either side has no energy.
pub fn normalized_correlation(a: &[f64], b: &[f64]) -> f64 {
    let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    let denom = (aa * bb).sqrt();
    if denom > 0.0 {
        (ab / denom).clamp(-1.0, 1.0)
    } else {
        0.0
    }
}

/// Normalized time-domain ACF over the overlap region of each lag.
pub fn time_acf(samples: &[f64], bounds: &LagBounds) -> Vec<f64> {
    assert!(samples.len() >= bounds.n_high, "frame shorter than n_high");
    bounds
        .lags()
        .map(|l| {
            let n = samples.len() - l;
            normalized_correlation(&samples[..n], &samples[l..])
        })
        .collect()
}

/// Spectral ACF of a one-sided magnitude spectrum from an `fft_size`-point DFT.
///
/// `R_s(l) = sum_m S(m) S(m + d) / sum_m S(m)^2` with `d = round(fft_size / l)`.
/// Dividing by the full energy rather than by the two overlap segments keeps
/// larger shifts from being rewarded for cutting the fundamental's lobe out
/// of the shifted operand.
pub fn spectral_acf_from_magnitude(magnitude: &[f64], bounds: &LagBounds, fft_size: usize) -> Vec<f64> {
    let half = magnitude.len();
    let energy: f64 = magnitude.iter().map(|s| s * s).sum();
    bounds
        .lags()
        .map(|l| {
            let shift = (fft_size as f64 / l as f64).round() as usize;
            if shift >= half || energy <= 0.0 {
                return 0.0;
            }
            let cross: f64 = magnitude[..half - shift]
                .iter()
                .zip(&magnitude[shift..])
                .map(|(a, b)| a * b)
                .sum();
            (cross / energy).clamp(-1.0, 1.0)
        })
        .collect()
}

pub fn spectral_acf(samples: &[f64], bounds: &LagBounds, analyzer: &SpectrumAnalyzer) -> Vec<f64> {
    spectral_acf_from_magnitude(&analyzer.magnitude(samples), bounds, analyzer.fft_size())
}

/// Values this close to the running maximum count as ties, so rounding noise
/// cannot move an exactly periodic frame's peak to a multiple of its period.
const TIE_TOLERANCE: f64 = 1e-12;

/// Index of the largest value, preferring the earliest among ties.
pub fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] + TIE_TOLERANCE {
            best = i;
        }
    }
    best
}

/// Blends the two ACFs and picks the argmax lag (smallest lag on ties).
pub fn spte_acf(
    time: &[f64],
    spectral: &[f64],
    alpha_r: f64,
    bounds: &LagBounds,
    frame: usize,
) -> (Vec<f64>, PitchObservation) {
    assert_eq!(time.len(), spectral.len(), "ACF supports differ");
    assert_eq!(time.len(), bounds.len(), "ACF support does not match lag bounds");
    let blended: Vec<f64> = time
        .iter()
        .zip(spectral)
        .map(|(t, s)| alpha_r * t + (1.0 - alpha_r) * s)
        .collect();
    let best = argmax_first(&blended);
    let obs = PitchObservation {
        frame,
        lag: bounds.n_low + best,
        peak: blended[best],
    };
    (blended, obs)
}

/// Per-frame estimator bundling the lag range, FFT plan and blend weight.
#[derive(Debug, Clone)]
pub struct AcfEstimator {
    bounds: LagBounds,
    analyzer: SpectrumAnalyzer,
    alpha_r: f64,
}

impl AcfEstimator {
    pub fn new(bounds: LagBounds, analyzer: SpectrumAnalyzer, alpha_r: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha_r) {
            return Err(Error::InvalidConfig(format!(
                "alpha_r must lie in [0, 1], got {alpha_r}"
            )));
        }
        if analyzer.frame_length() < bounds.n_high {
            return Err(Error::InvalidConfig("frame shorter than n_high".into()));
        }
        Ok(Self {
            bounds,
            analyzer,
            alpha_r,
        })
    }

    pub fn bounds(&self) -> &LagBounds {
        &self.bounds
    }

    /// Returns the blended ACF over the lag range and the argmax observation.
    pub fn estimate(&self, frame: &Frame) -> (Vec<f64>, PitchObservation) {
        let rt = time_acf(&frame.samples, &self.bounds);
        let rs = spectral_acf(&frame.samples, &self.bounds, &self.analyzer);
        spte_acf(&rt, &rs, self.alpha_r, &self.bounds, frame.index)
    }
}

/// First post-processing pass, run before estimation: a single non-voiced
/// frame between two voiced frames becomes voiced.
pub fn fill_voicing_gaps(track: &mut VoicingTrack) {
    let before = track.labels.clone();
    for i in 1..before.len().saturating_sub(1) {
        if before[i] != VoicingLabel::Voiced
            && before[i - 1] == VoicingLabel::Voiced
            && before[i + 1] == VoicingLabel::Voiced
        {
            track.labels[i] = VoicingLabel::Voiced;
        }
    }
}

/// Second and third post-processing passes, run after estimation.
///
/// Voiced frames whose lag sits on either end of the search range become
/// unvoiced, then every single voiced frame without a voiced neighbour is
/// dropped. Positions outside the track count as unvoiced.
/// `observations[k]` must be `Some` for every voiced frame `k`.
pub fn postprocess_voicing(track: &mut VoicingTrack, observations: &[Option<PitchObservation>], bounds: &LagBounds) {
    assert_eq!(track.labels.len(), observations.len());
    for (label, obs) in track.labels.iter_mut().zip(observations) {
        if *label == VoicingLabel::Voiced {
            let obs = obs.expect("voiced frame without an observation");
            if bounds.is_boundary(obs.lag) {
                *label = VoicingLabel::Unvoiced;
            }
        }
    }

    let before = track.labels.clone();
    let voiced = |i: Option<usize>| i.and_then(|i| before.get(i)) == Some(&VoicingLabel::Voiced);
    for (i, label) in before.iter().enumerate() {
        if *label == VoicingLabel::Voiced && !voiced(i.checked_sub(1)) && !voiced(Some(i + 1)) {
            track.labels[i] = VoicingLabel::Unvoiced;
        }
    }
}
