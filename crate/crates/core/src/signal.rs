//! Audio buffers, framing, synthetic test signals and SNR-controlled mixing.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::track::{PitchFrame, PitchTrack};

/// Largest absolute SNR accepted by [`mix_at_snr`].
pub const MAX_ABS_SNR_DB: f64 = 60.0;

/// Mono audio with samples nominally in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidAudio("sample rate must be positive".into()));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::InvalidAudio(format!("non-finite sample at index {i}")));
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }

    /// Mean power over the whole buffer.
    pub fn power(&self) -> f64 {
        mean_power(&self.samples)
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }
}

pub(crate) fn mean_power(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}

/// Reads a PCM WAV file (integer or float samples), averaging channels to mono.
pub fn load_audio(path: impl AsRef<Path>) -> Result<AudioBuffer> {
    let path = path.as_ref();
    let wav_err = |source| Error::Wav {
        path: path.to_path_buf(),
        source,
    };
    let reader = hound::WavReader::open(path).map_err(wav_err)?;
    let spec = reader.spec();
    let channels = usize::from(spec.channels);
    if channels == 0 {
        return Err(Error::UnsupportedEncoding("zero channels".into()));
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<Result<_, _>>()
            .map_err(wav_err)?,
        (hound::SampleFormat::Int, bits @ 8..=32) => {
            let scale = f64::from(1u32 << (bits - 1));
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| f64::from(v) / scale))
                .collect::<Result<_, _>>()
                .map_err(wav_err)?
        }
        (fmt, bits) => {
            return Err(Error::UnsupportedEncoding(format!(
                "{fmt:?} with {bits} bits per sample"
            )))
        }
    };
    if interleaved.len() < channels {
        return Err(Error::EmptyAudio);
    }
    let mono = interleaved
        .chunks_exact(channels)
        .map(|c| c.iter().sum::<f64>() / channels as f64)
        .collect();
    AudioBuffer::new(mono, spec.sample_rate)
}

/// Writes the buffer as mono 32-bit float WAV.
pub fn write_wav(buf: &AudioBuffer, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let wav_err = |source| Error::Wav {
        path: path.to_path_buf(),
        source,
    };
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: buf.sample_rate,
        bits_per_sample: 32,
        sample_format: hound::SampleFormat::Float,
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(wav_err)?;
    for &s in &buf.samples {
        writer.write_sample(s as f32).map_err(wav_err)?;
    }
    writer.finalize().map_err(wav_err)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    Rectangular,
    #[default]
    Hann,
    Hamming,
}

impl Window {
    /// Window coefficients of length `n` (symmetric form).
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        if n <= 1 {
            return vec![1.0; n];
        }
        let m = (n - 1) as f64;
        (0..n)
            .map(|i| {
                let c = (2.0 * PI * i as f64 / m).cos();
                match self {
                    Window::Rectangular => 1.0,
                    Window::Hann => 0.5 - 0.5 * c,
                    Window::Hamming => 0.54 - 0.46 * c,
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FramingConfig {
    pub frame_length: usize,
    pub hop_length: usize,
    /// Analysis window for spectral computations. Frame power and time-domain
    /// correlations always use the raw samples.
    pub window: Window,
}

impl Default for FramingConfig {
    fn default() -> Self {
        Self {
            frame_length: 512,
            hop_length: 160,
            window: Window::Hann,
        }
    }
}

impl FramingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hop_length == 0 || self.hop_length > self.frame_length {
            return Err(Error::InvalidConfig(format!(
                "hop_length must satisfy 0 < hop ({}) <= frame_length ({})",
                self.hop_length, self.frame_length
            )));
        }
        Ok(())
    }

    /// Number of complete frames in a signal of `len` samples.
    pub fn frame_count(&self, len: usize) -> usize {
        if len < self.frame_length || self.hop_length == 0 {
            0
        } else {
            (len - self.frame_length) / self.hop_length + 1
        }
    }

    pub fn frame_time_s(&self, index: usize, sample_rate: u32) -> f64 {
        (index * self.hop_length) as f64 / f64::from(sample_rate)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub index: usize,
    pub samples: Vec<f64>,
    /// Mean power of the unwindowed samples.
    pub power: f64,
}

/// Cuts the buffer into overlapping frames; a trailing partial frame is dropped.
pub fn frame_signal(buf: &AudioBuffer, cfg: &FramingConfig) -> Result<Vec<Frame>> {
    cfg.validate()?;
    if buf.len() < cfg.frame_length {
        return Err(Error::TooShort {
            len: buf.len(),
            frame_length: cfg.frame_length,
        });
    }
    Ok((0..cfg.frame_count(buf.len()))
        .map(|k| {
            let start = k * cfg.hop_length;
            let samples = buf.samples[start..start + cfg.frame_length].to_vec();
            let power = mean_power(&samples);
            Frame {
                index: k,
                samples,
                power,
            }
        })
        .collect())
}

/// Parameters for a harmonic test signal with a known pitch contour.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    /// Base F0 breakpoints in Hz, spread evenly over the duration and
    /// linearly interpolated. A single value gives a constant contour.
    pub f0_contour: Vec<f64>,
    pub num_harmonics: usize,
    /// Attenuation of each successive harmonic in dB.
    pub harmonic_rolloff_db: f64,
    pub duration_s: f64,
    /// Peak sinusoidal deviation of the instantaneous F0, in Hz.
    pub vibrato_depth_hz: f64,
    pub vibrato_rate_hz: f64,
}

impl SynthSpec {
    pub fn constant(f0_hz: f64, num_harmonics: usize, duration_s: f64) -> Self {
        Self {
            f0_contour: vec![f0_hz],
            num_harmonics,
            harmonic_rolloff_db: 6.0,
            duration_s,
            vibrato_depth_hz: 0.0,
            vibrato_rate_hz: 0.0,
        }
    }

    pub fn validate(&self, sample_rate: u32) -> Result<()> {
        let invalid = |m: String| Err(Error::InvalidConfig(m));
        if self.f0_contour.is_empty() {
            return invalid("f0 contour is empty".into());
        }
        if let Some(f) = self.f0_contour.iter().find(|f| !(f.is_finite() && **f > 0.0)) {
            return invalid(format!("f0 must be positive, got {f}"));
        }
        if self.num_harmonics == 0 {
            return invalid("at least one harmonic is required".into());
        }
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return invalid(format!("duration must be positive, got {}", self.duration_s));
        }
        if !self.harmonic_rolloff_db.is_finite() {
            return invalid("harmonic rolloff must be finite".into());
        }
        let min_f0 = self.f0_contour.iter().copied().fold(f64::INFINITY, f64::min);
        if !(self.vibrato_depth_hz >= 0.0 && self.vibrato_depth_hz < min_f0) {
            return invalid(format!(
                "vibrato depth must lie in [0, {min_f0}), got {}",
                self.vibrato_depth_hz
            ));
        }
        if !(self.vibrato_rate_hz.is_finite() && self.vibrato_rate_hz >= 0.0) {
            return invalid(format!(
                "vibrato rate must be non-negative, got {}",
                self.vibrato_rate_hz
            ));
        }
        let max_f0 = self.f0_contour.iter().copied().fold(0.0, f64::max) + self.vibrato_depth_hz;
        let nyquist_hz = f64::from(sample_rate) / 2.0;
        let top = max_f0 * self.num_harmonics as f64;
        if top >= nyquist_hz {
            return Err(Error::AboveNyquist {
                harmonic: self.num_harmonics,
                freq_hz: top,
                nyquist_hz,
            });
        }
        Ok(())
    }

    /// Relative amplitude of harmonic `h` (1-based).
    pub fn harmonic_amplitude(&self, h: usize) -> f64 {
        10f64.powf(-self.harmonic_rolloff_db * (h - 1) as f64 / 20.0)
    }

    fn base_f0(&self, t: f64) -> f64 {
        let c = &self.f0_contour;
        if c.len() == 1 {
            return c[0];
        }
        let pos = (t / self.duration_s).clamp(0.0, 1.0) * (c.len() - 1) as f64;
        let i = (pos.floor() as usize).min(c.len() - 2);
        let frac = pos - i as f64;
        c[i] + (c[i + 1] - c[i]) * frac
    }

    /// Instantaneous F0 at time `t` seconds.
    pub fn f0_at(&self, t: f64) -> f64 {
        self.base_f0(t) + self.vibrato_depth_hz * (2.0 * PI * self.vibrato_rate_hz * t).sin()
    }
}

/// Peak level of synthesized signals.
const SYNTH_PEAK: f64 = 0.9;

/// Renders a harmonic signal and its per-frame reference pitch.
///
/// The reference F0 of a frame is the mean instantaneous F0 over its samples;
/// every frame is voiced.
pub fn synthesize(spec: &SynthSpec, sample_rate: u32, framing: &FramingConfig) -> Result<(AudioBuffer, PitchTrack)> {
    spec.validate(sample_rate)?;
    framing.validate()?;
    let fs = f64::from(sample_rate);
    let len = (spec.duration_s * fs).round() as usize;
    if len == 0 {
        return Err(Error::EmptyAudio);
    }
    let amps: Vec<f64> = (1..=spec.num_harmonics).map(|h| spec.harmonic_amplitude(h)).collect();
    let gain = SYNTH_PEAK / amps.iter().sum::<f64>();

    let inst_f0: Vec<f64> = (0..len).map(|n| spec.f0_at(n as f64 / fs)).collect();
    let mut samples = Vec::with_capacity(len);
    let mut phase = 0.0f64;
    for &f in &inst_f0 {
        let s: f64 = amps
            .iter()
            .enumerate()
            .map(|(i, a)| a * ((i + 1) as f64 * phase).sin())
            .sum();
        samples.push(gain * s);
        phase = (phase + 2.0 * PI * f / fs) % (2.0 * PI);
    }

    let frames = (0..framing.frame_count(len))
        .map(|k| {
            let start = k * framing.hop_length;
            let seg = &inst_f0[start..start + framing.frame_length];
            let f0 = seg.iter().sum::<f64>() / seg.len() as f64;
            PitchFrame::voiced(k, framing.frame_time_s(k, sample_rate), f0)
        })
        .collect();
    Ok((AudioBuffer::new(samples, sample_rate)?, PitchTrack::new(frames)))
}

/// Zero-mean Gaussian noise with unit variance, reproducible from `seed`.
pub fn white_noise(len: usize, sample_rate: u32, seed: u64) -> Result<AudioBuffer> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..len).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    AudioBuffer::new(samples, sample_rate)
}

/// Result of [`mix_at_snr`].
#[derive(Debug, Clone)]
pub struct Mixture {
    pub buffer: AudioBuffer,
    /// Linear gain applied to the noise.
    pub gain: f64,
}

/// Adds `noise` to `clean` scaled to the requested SNR.
///
/// Noise longer than the clean signal is truncated; shorter noise is looped
/// from a circular offset drawn from `seed`.
pub fn mix_at_snr(clean: &AudioBuffer, noise: &AudioBuffer, snr_db: f64, seed: u64) -> Result<Mixture> {
    if !(snr_db.is_finite() && snr_db.abs() <= MAX_ABS_SNR_DB) {
        return Err(Error::SnrOutOfRange(snr_db));
    }
    if clean.sample_rate != noise.sample_rate {
        return Err(Error::SampleRateMismatch(clean.sample_rate, noise.sample_rate));
    }
    if noise.is_empty() {
        return Err(Error::ZeroPower("noise"));
    }
    let n = clean.len();
    let segment: Vec<f64> = if noise.len() >= n {
        noise.samples[..n].to_vec()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let offset = rng.random_range(0..noise.len());
        (0..n).map(|i| noise.samples[(offset + i) % noise.len()]).collect()
    };
    let p_clean = clean.power();
    let p_noise = mean_power(&segment);
    if p_clean <= 0.0 {
        return Err(Error::ZeroPower("clean"));
    }
    if p_noise <= 0.0 {
        return Err(Error::ZeroPower("noise"));
    }
    let gain = (p_clean / (p_noise * 10f64.powf(snr_db / 10.0))).sqrt();
    let samples = clean.samples.iter().zip(&segment).map(|(c, v)| c + gain * v).collect();
    Ok(Mixture {
        buffer: AudioBuffer::new(samples, clean.sample_rate)?,
        gain,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn buf(samples: Vec<f64>) -> AudioBuffer {
        AudioBuffer::new(samples, 16_000).unwrap()
    }

    #[test]
    fn rejects_bad_buffers() {
        assert!(AudioBuffer::new(vec![0.0], 0).is_err());
        assert!(AudioBuffer::new(vec![0.0, f64::NAN], 8000).is_err());
    }

    #[test]
    fn frame_count_and_indexing() {
        let b = buf((0..16_000).map(|i| i as f64).collect());
        let frames = frame_signal(&b, &FramingConfig::default()).unwrap();
        assert_eq!(frames.len(), 97);
        assert_eq!(frames[0].samples, (0..512).map(|i| i as f64).collect::<Vec<_>>());
        assert_eq!(frames[3].samples[0], 480.0);
    }

    #[test]
    fn constant_signal_power() {
        let frames = frame_signal(&buf(vec![0.3; 2000]), &FramingConfig::default()).unwrap();
        for f in frames {
            assert!((f.power - 0.09).abs() < 1e-12);
        }
    }

    #[test]
    fn framing_errors() {
        assert!(matches!(
            frame_signal(&buf(vec![0.0; 100]), &FramingConfig::default()),
            Err(Error::TooShort { .. })
        ));
        let bad = FramingConfig {
            hop_length: 600,
            ..Default::default()
        };
        assert!(frame_signal(&buf(vec![0.0; 1000]), &bad).is_err());
    }

    #[test]
    fn pure_sine_has_period_80() {
        let spec = SynthSpec::constant(200.0, 1, 0.1);
        let (audio, reference) = synthesize(&spec, 16_000, &FramingConfig::default()).unwrap();
        let x = audio.samples();
        for n in 0..(x.len() - 80) {
            assert!((x[n] - x[n + 80]).abs() < 1e-9, "sample {n}");
        }
        assert!(reference.frames.iter().all(|f| f.voiced && f.f0_hz == Some(200.0)));
    }

    #[test]
    fn three_harmonic_amplitudes_by_dft_peaks() {
        // DFT magnitude oracle evaluated at the exact harmonic bins of a 1 s
        // signal (bin spacing 1 Hz), compared with neighbouring bins.
        let spec = SynthSpec::constant(100.0, 3, 1.0);
        let (audio, _) = synthesize(&spec, 16_000, &FramingConfig::default()).unwrap();
        let x = audio.samples();
        let dft = |hz: f64| {
            let (mut re, mut im) = (0.0, 0.0);
            for (n, v) in x.iter().enumerate() {
                let w = 2.0 * PI * hz * n as f64 / 16_000.0;
                re += v * w.cos();
                im -= v * w.sin();
            }
            (re * re + im * im).sqrt()
        };
        let peaks: Vec<f64> = [100.0, 200.0, 300.0].iter().map(|&f| dft(f)).collect();
        for f in [100.0, 200.0, 300.0] {
            assert!(dft(f) > 100.0 * dft(f + 7.0));
        }
        assert!((peaks[1] / peaks[0] - 0.501).abs() < 1e-3);
        assert!((peaks[2] / peaks[0] - 0.251).abs() < 1e-3);
    }

    #[test]
    fn vibrato_reference_tracks_depth() {
        let spec = SynthSpec {
            vibrato_depth_hz: 20.0,
            vibrato_rate_hz: 5.0,
            ..SynthSpec::constant(200.0, 5, 2.0)
        };
        let (_, reference) = synthesize(&spec, 16_000, &FramingConfig::default()).unwrap();
        let f0s: Vec<f64> = reference.frames.iter().filter_map(|f| f.f0_hz).collect();
        let max = f0s.iter().copied().fold(f64::MIN, f64::max);
        let min = f0s.iter().copied().fold(f64::MAX, f64::min);
        // frame averaging over 32 ms shaves a little off the extremes
        assert!(max > 218.0 && max <= 220.0, "{max}");
        assert!((180.0..182.0).contains(&min), "{min}");
    }

    #[test]
    fn synth_rejects_nyquist_violation() {
        let spec = SynthSpec::constant(2000.0, 5, 1.0);
        assert!(matches!(
            synthesize(&spec, 16_000, &FramingConfig::default()),
            Err(Error::AboveNyquist { .. })
        ));
        assert!(synthesize(&SynthSpec::constant(0.0, 1, 1.0), 16_000, &FramingConfig::default()).is_err());
    }

    #[test]
    fn zero_db_gives_equal_powers() {
        let clean = synthesize(&SynthSpec::constant(150.0, 3, 0.5), 16_000, &FramingConfig::default())
            .unwrap()
            .0;
        let noise = white_noise(20_000, 16_000, 7).unwrap();
        let mix = mix_at_snr(&clean, &noise, 0.0, 1).unwrap();
        let scaled: Vec<f64> = noise.samples()[..clean.len()].iter().map(|v| mix.gain * v).collect();
        assert!((clean.power() / mean_power(&scaled) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn snr_gain_formula() {
        // unit-power alternating noise, clean power 0.25
        let clean = buf(vec![0.5; 1000]);
        let noise = buf((0..1000).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect());
        let mix = mix_at_snr(&clean, &noise, 10.0, 0).unwrap();
        assert!((mix.gain * mix.gain - 0.025).abs() < 1e-15);
    }

    #[test]
    fn snr_bounds_and_zero_power() {
        let clean = buf(vec![0.5; 100]);
        let noise = buf(vec![1.0; 100]);
        assert!(matches!(
            mix_at_snr(&clean, &noise, 61.0, 0),
            Err(Error::SnrOutOfRange(_))
        ));
        assert!(mix_at_snr(&clean, &noise, -60.0, 0).is_ok());
        assert!(matches!(
            mix_at_snr(&buf(vec![0.0; 100]), &noise, 0.0, 0),
            Err(Error::ZeroPower("clean"))
        ));
        let other_rate = AudioBuffer::new(vec![1.0; 100], 8000).unwrap();
        assert!(mix_at_snr(&clean, &other_rate, 0.0, 0).is_err());
    }

    #[test]
    fn short_noise_is_looped_deterministically() {
        let clean = buf((0..1000).map(|i| (i as f64 * 0.1).sin()).collect());
        let noise = white_noise(300, 16_000, 3).unwrap();
        let a = mix_at_snr(&clean, &noise, 5.0, 42).unwrap();
        let b = mix_at_snr(&clean, &noise, 5.0, 42).unwrap();
        assert_eq!(a.buffer, b.buffer);
        let c = mix_at_snr(&clean, &noise, 5.0, 43).unwrap();
        assert_ne!(a.buffer, c.buffer);
    }

    #[test]
    fn wav_round_trip_and_scaling() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.wav");
        let spec = hound::WavSpec {
            channels: 2,
            sample_rate: 16_000,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut w = hound::WavWriter::create(&path, spec).unwrap();
        for _ in 0..10 {
            w.write_sample(16384i16).unwrap();
            w.write_sample(-16384i16).unwrap();
        }
        w.write_sample(i16::MAX).unwrap();
        w.write_sample(i16::MAX).unwrap();
        w.finalize().unwrap();
        let b = load_audio(&path).unwrap();
        assert_eq!(b.len(), 11);
        assert!(b.samples()[..10].iter().all(|&s| s == 0.0));
        assert!((b.samples()[10] - 32767.0 / 32768.0).abs() < 1e-12);

        let silent = AudioBuffer::new(vec![0.0; 16_000], 16_000).unwrap();
        let p2 = dir.path().join("z.wav");
        write_wav(&silent, &p2).unwrap();
        let back = load_audio(&p2).unwrap();
        assert_eq!(back.len(), 16_000);
        assert!(back.samples().iter().all(|&s| s == 0.0));
    }

    #[test]
    fn empty_wav_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.wav");
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: 16_000,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        hound::WavWriter::create(&path, spec).unwrap().finalize().unwrap();
        assert!(matches!(load_audio(&path), Err(Error::EmptyAudio)));
        assert!(load_audio(dir.path().join("missing.wav")).is_err());
    }

    proptest! {
        #[test]
        fn framing_round_trip(len in 512usize..4000, hop in 1usize..=512) {
            let b = buf((0..len).map(|i| (i as f64 * 0.37).sin()).collect());
            let cfg = FramingConfig { hop_length: hop, ..Default::default() };
            let frames = frame_signal(&b, &cfg).unwrap();
            prop_assert_eq!(frames.len(), (len - 512) / hop + 1);
            for f in &frames {
                for (j, s) in f.samples.iter().enumerate() {
                    prop_assert_eq!(*s, b.samples()[f.index * hop + j]);
                }
            }
        }

        #[test]
        fn mix_gain_is_linear_in_clean_amplitude(scale in 0.01f64..10.0, snr in -20.0f64..40.0) {
            let clean: Vec<f64> = (0..800).map(|i| scale * (i as f64 * 0.05).sin()).collect();
            let doubled: Vec<f64> = clean.iter().map(|v| 2.0 * v).collect();
            let noise = white_noise(800, 16_000, 11).unwrap();
            let a = mix_at_snr(&buf(clean), &noise, snr, 0).unwrap();
            let b = mix_at_snr(&buf(doubled), &noise, snr, 0).unwrap();
            prop_assert!((b.gain / a.gain - 2.0).abs() < 1e-12);
            for (x, y) in a.buffer.samples().iter().zip(b.buffer.samples()) {
                prop_assert!((y / 2.0 - x).abs() <= 1e-12 * (1.0 + x.abs()));
            }
        }
    }
}
