use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use pitchtrack_core::acf::{time_acf, AcfEstimator};
use pitchtrack_core::kalman::{smooth, KalmanConfig};
use pitchtrack_core::spectrum::SpectrumAnalyzer;
use pitchtrack_core::{
    frame_signal, mix_at_snr, synthesize, white_noise, FramingConfig, LagBounds, PitchTracker, SynthSpec, Window,
};

const FS: u32 = 16_000;

fn noisy_utterance() -> pitchtrack_core::AudioBuffer {
    let spec = SynthSpec {
        f0_contour: vec![120.0, 240.0, 160.0],
        num_harmonics: 5,
        harmonic_rolloff_db: 6.0,
        duration_s: 2.0,
        vibrato_depth_hz: 6.0,
        vibrato_rate_hz: 5.0,
    };
    let (clean, _) = synthesize(&spec, FS, &FramingConfig::default()).unwrap();
    let noise = white_noise(clean.len(), FS, 1).unwrap();
    mix_at_snr(&clean, &noise, 5.0, 0).unwrap().buffer
}

fn criterion_benchmark(c: &mut Criterion) {
    let audio = noisy_utterance();
    let tracker = PitchTracker::default();
    c.bench_function("track 2 s utterance", |b| {
        b.iter(|| tracker.track(black_box(&audio)).unwrap())
    });

    let frames = frame_signal(&audio, &FramingConfig::default()).unwrap();
    let frame = &frames[frames.len() / 2];
    let bounds = LagBounds::new(FS, 60.0, 460.0, 512).unwrap();
    c.bench_function("time acf", |b| b.iter(|| time_acf(black_box(&frame.samples), &bounds)));

    let analyzer = SpectrumAnalyzer::new(512, 2048, Window::Hann).unwrap();
    let estimator = AcfEstimator::new(bounds, analyzer, 0.5).unwrap();
    c.bench_function("blended acf", |b| b.iter(|| estimator.estimate(black_box(frame))));

    let lags: Vec<f64> = (0..200).map(|k| 80.0 + 20.0 * (k as f64 / 15.0).sin()).collect();
    let cfg = KalmanConfig::default();
    c.bench_function("forward-backward kalman 200 frames", |b| {
        b.iter(|| smooth(black_box(&lags), &cfg).unwrap())
    });
}

criterion_group!(benches, criterion_benchmark);
criterion_main!(benches);
