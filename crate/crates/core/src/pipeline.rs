//! End-to-end tracking of one utterance.

use log::debug;

use crate::acf::{self, AcfEstimator, LagBounds, PitchObservation};
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::kalman::{self, SmoothedLags};
use crate::signal::{frame_signal, AudioBuffer};
use crate::spectrum::SpectrumAnalyzer;
use crate::track::{FrameDiagnostics, PitchFrame, PitchTrack};
use crate::voicing::{self, FeatureExtractor, FeatureVector, VoicingTrack, D};

/// Discriminant used when every non-silent frame falls in the voiced
/// cluster: the direction between the two k-means seeds.
pub fn prior_weight() -> [f64; D] {
    [1.0 / (D as f64).sqrt(); D]
}

/// `true` when thresholding `w . v` at zero sends the unvoiced mean to the
/// unvoiced side and the voiced mean to the voiced side. A split of a single
/// cloud (an utterance with no unvoiced frames, say) often fails this.
fn separates_means(w: &[f64; D], means: &[[f64; D]; 2]) -> bool {
    let dot = |m: &[f64; D]| w.iter().zip(m).map(|(a, b)| a * b).sum::<f64>();
    dot(&means[0]) <= 0.0 && dot(&means[1]) > 0.0
}

/// How the voicing discriminant was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Discriminant {
    /// Fisher direction fitted to the k-means labels.
    Fitted([f64; D]),
    /// The seed direction, used when the unvoiced cluster came out empty, the
    /// scatter was singular, or the fitted rule put both cluster means on the
    /// same side of zero.
    Prior([f64; D]),
}

impl Discriminant {
    pub fn weight(&self) -> &[f64; D] {
        match self {
            Discriminant::Fitted(w) | Discriminant::Prior(w) => w,
        }
    }
}

/// Everything produced while tracking an utterance.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub track: PitchTrack,
    pub bounds: LagBounds,
    pub features: Vec<FeatureVector>,
    pub discriminant: Discriminant,
    /// Labels straight from the linear classifier.
    pub initial_voicing: VoicingTrack,
    /// Labels after all three post-processing passes.
    pub voicing: VoicingTrack,
    /// Blended ACF and observation for every frame voiced after the first pass.
    pub acf: Vec<Option<(Vec<f64>, PitchObservation)>>,
    /// Kalman outputs over the final voiced frames, in frame order.
    pub smoothed: Option<SmoothedLags>,
}

#[derive(Debug, Clone)]
pub struct PitchTracker {
    cfg: PipelineConfig,
}

impl PitchTracker {
    pub fn new(cfg: PipelineConfig) -> Self {
        Self { cfg }
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    /// Runs classification, estimation and smoothing.
    ///
    /// Fails with [`Error::DegenerateClassification`] when no frame falls in
    /// the voiced cluster.
    pub fn analyze(&self, audio: &AudioBuffer) -> Result<Analysis> {
        let cfg = &self.cfg;
        let fs = audio.sample_rate();
        cfg.validate(fs)?;
        let frames = frame_signal(audio, &cfg.framing)?;
        let bounds = LagBounds::new(fs, cfg.acf.f_min, cfg.acf.f_max, cfg.framing.frame_length)?;
        let analyzer = SpectrumAnalyzer::new(cfg.framing.frame_length, cfg.acf.fft_size, cfg.framing.window)?;

        let silent = voicing::power_gate(&frames, cfg.voicing.silence_ratio);
        let extractor = FeatureExtractor::new(fs, bounds, &cfg.voicing, analyzer.clone());
        let features: Vec<FeatureVector> = frames
            .iter()
            .zip(&silent)
            .map(|(f, &s)| extractor.extract(f, s))
            .collect();

        let discriminant = match voicing::kmeans_two_class(&features) {
            Ok(model) => match voicing::lda_weight(&model) {
                Ok(w) if separates_means(&w, &model.means) => Discriminant::Fitted(w),
                Ok(w) => {
                    debug!("fitted weight {w:?} does not separate the cluster means");
                    Discriminant::Prior(prior_weight())
                }
                Err(Error::SingularScatter) => Discriminant::Prior(prior_weight()),
                Err(e) => return Err(e),
            },
            Err(Error::DegenerateClassification { empty_class: 0 }) => Discriminant::Prior(prior_weight()),
            Err(e) => return Err(e),
        };
        debug!("voicing discriminant: {discriminant:?}");

        let initial_voicing = voicing::classify(&features, discriminant.weight());
        let mut track = initial_voicing.clone();
        acf::fill_voicing_gaps(&mut track);

        let estimator = AcfEstimator::new(bounds, analyzer, cfg.acf.alpha_r)?;
        let acf_out: Vec<Option<(Vec<f64>, PitchObservation)>> = frames
            .iter()
            .zip(&track.labels)
            .map(|(f, l)| l.is_voiced().then(|| estimator.estimate(f)))
            .collect();
        let observations: Vec<Option<PitchObservation>> =
            acf_out.iter().map(|o| o.as_ref().map(|(_, obs)| *obs)).collect();
        acf::postprocess_voicing(&mut track, &observations, &bounds);

        let voiced_idx: Vec<usize> = (0..frames.len()).filter(|&k| track.labels[k].is_voiced()).collect();
        let lags: Vec<f64> = voiced_idx
            .iter()
            .map(|&k| observations[k].expect("voiced frame has an observation").lag as f64)
            .collect();
        let smoothed = if lags.is_empty() {
            None
        } else {
            Some(kalman::smooth(&lags, &cfg.kalman)?)
        };

        let mut out: Vec<PitchFrame> = frames
            .iter()
            .map(|f| {
                let mut pf = PitchFrame::unvoiced(f.index, cfg.framing.frame_time_s(f.index, fs));
                pf.diagnostics = Some(FrameDiagnostics {
                    score: initial_voicing.scores[f.index],
                    observed_lag: observations[f.index].map(|o| o.lag),
                    ..Default::default()
                });
                pf
            })
            .collect();
        if let Some(s) = &smoothed {
            for (i, &k) in voiced_idx.iter().enumerate() {
                let lag = s.fused[i];
                let frame = &mut out[k];
                frame.voiced = true;
                frame.lag = Some(lag);
                frame.f0_hz = Some(kalman::to_frequency(lag, fs, cfg.acf.f_min, cfg.acf.f_max));
                if let Some(d) = frame.diagnostics.as_mut() {
                    d.forward_lag = Some(s.forward.estimates[i]);
                    d.forward_var = Some(s.forward.variances[i]);
                    d.backward_lag = Some(s.backward.estimates[i]);
                    d.backward_var = Some(s.backward.variances[i]);
                }
            }
        }

        Ok(Analysis {
            track: PitchTrack::new(out),
            bounds,
            features,
            discriminant,
            initial_voicing,
            voicing: track,
            acf: acf_out,
            smoothed,
        })
    }

    pub fn track(&self, audio: &AudioBuffer) -> Result<PitchTrack> {
        self.analyze(audio).map(|a| a.track)
    }
}

impl Default for PitchTracker {
    fn default() -> Self {
        Self::new(PipelineConfig::default())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{synthesize, FramingConfig, SynthSpec};
    use crate::voicing::VoicingLabel;

    #[test]
    fn clean_tone_is_voiced_throughout() {
        let (audio, _) = synthesize(&SynthSpec::constant(200.0, 5, 2.0), 16_000, &FramingConfig::default()).unwrap();
        let a = PitchTracker::default().analyze(&audio).unwrap();
        assert!(matches!(a.discriminant, Discriminant::Prior(_)));
        assert_eq!(a.track.len(), 197);
        for f in &a.track.frames {
            assert!(f.voiced);
            let f0 = f.f0_hz.unwrap();
            assert!((f0 - 200.0).abs() < 20.0, "frame {} at {f0}", f.index);
        }
    }

    #[test]
    fn noisy_all_voiced_tone_falls_back_to_prior() {
        use crate::signal::{mix_at_snr, white_noise};
        let (clean, _) = synthesize(&SynthSpec::constant(150.0, 5, 2.0), 16_000, &FramingConfig::default()).unwrap();
        let noise = white_noise(clean.len(), 16_000, 3).unwrap();
        let audio = mix_at_snr(&clean, &noise, 0.0, 0).unwrap().buffer;
        let a = PitchTracker::default().analyze(&audio).unwrap();
        assert!(matches!(a.discriminant, Discriminant::Prior(_)));
        assert!(a.track.voiced_count() > a.track.len() / 2);
    }

    #[test]
    fn separating_means() {
        let w = prior_weight();
        assert!(separates_means(&w, &[[-0.5; D], [0.5; D]]));
        assert!(separates_means(&w, &[[0.0; D], [0.5; D]]));
        assert!(!separates_means(&w, &[[-0.5; D], [-0.1; D]]));
        assert!(!separates_means(&w, &[[0.1; D], [0.5; D]]));
    }

    #[test]
    fn silence_is_degenerate() {
        let audio = AudioBuffer::new(vec![0.0; 16_000], 16_000).unwrap();
        let err = PitchTracker::default().analyze(&audio).unwrap_err();
        assert!(matches!(err, Error::DegenerateClassification { empty_class: 1 }));
    }

    #[test]
    fn silent_gap_between_segments() {
        let fs = 16_000;
        let framing = FramingConfig::default();
        let (a, _) = synthesize(&SynthSpec::constant(150.0, 5, 0.6), fs, &framing).unwrap();
        let (b, _) = synthesize(&SynthSpec::constant(250.0, 5, 0.6), fs, &framing).unwrap();
        let mut samples = a.into_samples();
        samples.extend(std::iter::repeat_n(0.0, 8000));
        samples.extend(b.into_samples());
        let audio = AudioBuffer::new(samples, fs).unwrap();
        let analysis = PitchTracker::default().analyze(&audio).unwrap();
        assert!(matches!(analysis.discriminant, Discriminant::Fitted(_)));
        let mid = (0.6 * 16_000.0 + 4000.0) as usize / 160;
        assert_eq!(analysis.voicing.labels[mid], VoicingLabel::Silent);
        let f0 = |k: usize| analysis.track.frames[k].f0_hz.unwrap();
        assert!((f0(10) - 150.0).abs() < 3.0);
        assert!((f0(analysis.track.len() - 10) - 250.0).abs() < 5.0);
    }
}
